#pragma once

#include "byzlearn/adversary.hpp"
#include "byzlearn/consensus.hpp"
#include "byzlearn/error.hpp"
#include "byzlearn/graph.hpp"
#include "byzlearn/identifiability.hpp"
#include "byzlearn/io.hpp"
#include "byzlearn/learning.hpp"
#include "byzlearn/lp.hpp"
#include "byzlearn/metrics.hpp"
#include "byzlearn/replay.hpp"
#include "byzlearn/rng.hpp"
#include "byzlearn/signals.hpp"
#include "byzlearn/sim.hpp"
#include "byzlearn/trace.hpp"
#include "byzlearn/trace_io.hpp"
