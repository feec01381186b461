#pragma once

// Built-in Byzantine strategies. A faulty agent sees a read-only snapshot of
// the start-of-round system and returns one message per outgoing link (or
// nothing, for links it keeps silent on).

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "byzlearn/consensus.hpp"
#include "byzlearn/graph.hpp"
#include "byzlearn/rng.hpp"
#include "byzlearn/signals.hpp"

namespace byzlearn {

enum class StrategyKind { silent, fixed, random, extreme, split_brain, mimic_flipped };

inline constexpr std::string_view to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::silent: return "silent";
    case StrategyKind::fixed: return "fixed";
    case StrategyKind::random: return "random";
    case StrategyKind::extreme: return "extreme";
    case StrategyKind::split_brain: return "split_brain";
    case StrategyKind::mimic_flipped: return "mimic_flipped";
  }
  return "unknown";
}

inline StrategyKind parse_strategy_kind(std::string_view name) {
  for (auto kind : {StrategyKind::silent, StrategyKind::fixed, StrategyKind::random,
                    StrategyKind::extreme, StrategyKind::split_brain, StrategyKind::mimic_flipped})
    if (to_string(kind) == name) return kind;
  throw InputError("unknown adversary strategy '" + std::string(name) + "'");
}

inline constexpr std::array<StrategyKind, 5> kAttackStrategies = {
    StrategyKind::silent, StrategyKind::fixed, StrategyKind::extreme, StrategyKind::split_brain,
    StrategyKind::mimic_flipped};

struct StrategySpec {
  StrategyKind kind = StrategyKind::silent;
  /// fixed: the constant carried on every coordinate.
  double value = 0.0;
  /// random: draws span the honest range widened by `scale` ranges each side.
  double scale = 1.0;
  /// extreme / split_brain: offset in multiples of the honest range.
  double factor = 10.0;
  /// extreme / mimic_flipped: the wrong hypothesis to promote
  /// (default: the first one that is not the true state).
  std::optional<Hypothesis> target;

  void validate(std::size_t hypotheses) const {
    if (!std::isfinite(value)) throw InputError("fixed strategy value must be finite");
    if (!(scale >= 0.0) || !std::isfinite(scale)) throw InputError("random strategy scale must be >= 0");
    if (!(factor > 0.0) || !std::isfinite(factor)) throw InputError("strategy factor must be > 0");
    if (target && *target >= hypotheses) throw InputError("strategy target hypothesis out of range");
  }
};

/// Layout of the state vector carried by messages.
enum class PayloadKind { scalar, log_belief, ratio_table };

struct SystemView {
  std::size_t round = 0;
  const Digraph* graph = nullptr;
  PayloadKind payload = PayloadKind::scalar;
  std::size_t hypotheses = 0;
  std::optional<Hypothesis> theta_star;
  std::span<const AgentId> faulty;
  /// Start-of-round state of every agent; entries of faulty agents are empty.
  std::span<const Vector> states;
  /// Cumulative log-likelihoods of honest agents (may be empty).
  std::span<const CumulativeLogLikelihood> cumulative;
  const SignalModel* model = nullptr;

  bool is_faulty(AgentId v) const { return std::find(faulty.begin(), faulty.end(), v) != faulty.end(); }
};

using MessageMap = std::map<AgentId, Vector>;

/// The hypothesis a strategy promotes.
inline Hypothesis strategy_target(const StrategySpec& spec, const SystemView& view) {
  if (spec.target) return *spec.target;
  const Hypothesis truth = view.theta_star.value_or(0);
  return truth == 0 ? 1 : 0;
}

/// Likelihood tables with the true state's columns exchanged with `target`.
inline SignalModel flipped_model(const SignalModel& model, Hypothesis theta_star, Hypothesis target) {
  return model.with_swapped_hypotheses(theta_star, target);
}

namespace detail {

struct HonestRange {
  Vector lo;
  Vector hi;
};

inline HonestRange honest_range(const SystemView& view) {
  std::size_t width = 0;
  for (const auto& s : view.states) width = std::max(width, s.size());
  HonestRange r{Vector(width, std::numeric_limits<double>::infinity()),
                Vector(width, -std::numeric_limits<double>::infinity())};
  bool any = false;
  for (AgentId v = 0; v < view.states.size(); ++v) {
    const auto& s = view.states[v];
    if (s.empty() || view.is_faulty(v)) continue;
    any = true;
    for (std::size_t d = 0; d < s.size(); ++d) {
      r.lo[d] = std::min(r.lo[d], s[d]);
      r.hi[d] = std::max(r.hi[d], s[d]);
    }
  }
  if (!any) std::fill(r.lo.begin(), r.lo.end(), 0.0), std::fill(r.hi.begin(), r.hi.end(), 0.0);
  return r;
}

inline double spread(const HonestRange& r, std::size_t d) {
  const double w = r.hi[d] - r.lo[d];
  return w > 0.0 ? w : 1.0;
}

/// +1 pushes a coordinate above the honest range, -1 below it; chosen so the
/// push favours the target hypothesis.
inline double push_direction(const SystemView& view, Hypothesis target, std::size_t d) {
  switch (view.payload) {
    case PayloadKind::scalar: return 1.0;
    case PayloadKind::log_belief: return d == target ? 1.0 : -1.0;
    case PayloadKind::ratio_table: {
      const std::size_t m = view.hypotheses;
      const std::size_t a = d / m, b = d % m;
      if (b == target && a != target) return -1.0;
      return 1.0;
    }
  }
  return 1.0;
}

}  // namespace detail

/// Messages of faulty agent `j` for this round. `mimic_state` is the state of
/// the agent's shadow honest run and is required for `mimic_flipped`.
inline MessageMap craft_messages(const StrategySpec& spec, AgentId j, const SystemView& view,
                                 Rng& rng, const Vector* mimic_state = nullptr) {
  MessageMap out;
  if (spec.kind == StrategyKind::silent) return out;
  const auto receivers = view.graph->outgoing(j);
  const auto range = detail::honest_range(view);
  const std::size_t width = range.lo.size();
  const Hypothesis target = strategy_target(spec, view);

  std::size_t position = 0;
  for (AgentId receiver : receivers) {
    Vector msg(width);
    switch (spec.kind) {
      case StrategyKind::silent: break;
      case StrategyKind::fixed:
        std::fill(msg.begin(), msg.end(), spec.value);
        break;
      case StrategyKind::random:
        for (std::size_t d = 0; d < width; ++d) {
          const double pad = spec.scale * detail::spread(range, d);
          msg[d] = uniform_real(rng, range.lo[d] - pad, range.hi[d] + pad);
        }
        break;
      case StrategyKind::extreme:
        for (std::size_t d = 0; d < width; ++d) {
          const double offset = spec.factor * detail::spread(range, d);
          msg[d] = detail::push_direction(view, target, d) > 0 ? range.hi[d] + offset
                                                               : range.lo[d] - offset;
        }
        break;
      case StrategyKind::split_brain:
        for (std::size_t d = 0; d < width; ++d) {
          const double mid = 0.5 * (range.lo[d] + range.hi[d]);
          const double k = spec.factor * detail::spread(range, d);
          msg[d] = position % 2 == 0 ? mid - k : mid + k;
        }
        break;
      case StrategyKind::mimic_flipped:
        if (mimic_state == nullptr)
          throw PreconditionError("mimic_flipped agent " + std::to_string(j + 1) +
                                  " has no shadow state");
        msg = *mimic_state;
        break;
    }
    out.emplace(receiver, std::move(msg));
    ++position;
  }
  return out;
}

}  // namespace byzlearn
