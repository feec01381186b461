#pragma once

// In-memory record of a run: one snapshot per round (round 0 is the initial
// state) for every honest agent.

#include <algorithm>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "byzlearn/consensus.hpp"
#include "byzlearn/error.hpp"
#include "byzlearn/signals.hpp"

namespace byzlearn {

enum class Rule { bfl, ff_bfl, pairwise, consensus };

inline constexpr std::string_view to_string(Rule rule) {
  switch (rule) {
    case Rule::bfl: return "bfl";
    case Rule::ff_bfl: return "ff_bfl";
    case Rule::pairwise: return "pairwise";
    case Rule::consensus: return "consensus";
  }
  return "unknown";
}

inline Rule parse_rule(std::string_view name) {
  for (auto rule : {Rule::bfl, Rule::ff_bfl, Rule::pairwise})
    if (to_string(rule) == name) return rule;
  throw InputError("unknown rule '" + std::string(name) + "' (expected bfl, ff_bfl or pairwise)");
}

struct AgentRecord {
  AgentId agent = 0;
  /// Log-beliefs (m), ratio table (m*m, row-major) or consensus value.
  Vector state;
  /// The consensus-carried part of the state: equal to `state` except for
  /// pairwise learning, where it is the trimmed average before the local
  /// likelihood term.
  Vector consensus;
  /// Signal observed this round (none in round 0).
  std::optional<std::size_t> signal;
  /// Missing messages replaced by the agent's own value this round.
  std::size_t defaults = 0;
  bool clamped = false;
};

struct RoundRecord {
  std::size_t round = 0;
  std::vector<AgentRecord> agents;  // honest agents, ascending id
  double diameter = 0.0;
};

struct RoundTrace {
  Rule rule = Rule::ff_bfl;
  std::vector<std::string> hypotheses;
  std::optional<Hypothesis> theta_star;
  std::vector<AgentId> honest;
  std::vector<AgentId> faulty;
  std::vector<RoundRecord> rounds;

  std::size_t hypothesis_count() const { return hypotheses.size(); }
  /// Last recorded round index (T).
  std::size_t horizon() const { return rounds.empty() ? 0 : rounds.back().round; }

  const AgentRecord& record(std::size_t round, AgentId agent) const {
    if (round >= rounds.size()) throw InputError("round " + std::to_string(round) + " not in trace");
    for (const auto& r : rounds[round].agents)
      if (r.agent == agent) return r;
    throw InputError("agent " + std::to_string(agent + 1) + " is not an honest agent of the trace");
  }

  bool is_honest(AgentId agent) const {
    return std::find(honest.begin(), honest.end(), agent) != honest.end();
  }

  Hypothesis hypothesis_index(std::string_view label) const {
    for (Hypothesis h = 0; h < hypotheses.size(); ++h)
      if (hypotheses[h] == label) return h;
    throw InputError("unknown hypothesis '" + std::string(label) + "'");
  }
};

}  // namespace byzlearn
