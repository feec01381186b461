#pragma once

// Synchronous round engine. Each round: every agent transmits its state
// from the previous round (faulty agents craft theirs), every agent observes
// a fresh signal drawn under the true hypothesis, honest agents update.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "byzlearn/adversary.hpp"
#include "byzlearn/consensus.hpp"
#include "byzlearn/graph.hpp"
#include "byzlearn/identifiability.hpp"
#include "byzlearn/learning.hpp"
#include "byzlearn/metrics.hpp"
#include "byzlearn/rng.hpp"
#include "byzlearn/signals.hpp"
#include "byzlearn/trace.hpp"

namespace byzlearn {

struct AdversaryConfig {
  /// Explicit faulty agents (0-based).
  std::vector<AgentId> faulty;
  /// "random:k": k agents drawn from the master seed instead.
  std::optional<std::size_t> random_count;
  StrategySpec strategy;
};

struct OutputOptions {
  bool trace = true;
  bool summary = true;
};

struct ScenarioConfig {
  Digraph graph;
  SignalModel model;
  Rule rule = Rule::ff_bfl;
  std::size_t f = 0;
  Hypothesis theta_star = 0;
  AdversaryConfig adversary;
  std::size_t rounds = 100;
  std::uint64_t seed = 1;
  /// Pairwise decision threshold on r(theta, theta').
  double threshold = 10.0;
  /// Belief mass at which the belief rules count an agent as decided.
  double belief_decision = 0.99;
  std::size_t max_inputs = 20;
  std::uint64_t enumeration_cap = 10'000'000;
  /// Random reduced graphs to test instead of enumerating (0 = exhaustive).
  std::uint64_t check_samples = 0;
  OutputOptions output;

  std::size_t hypotheses() const { return model.hypothesis_count(); }
  std::size_t agents() const { return graph.size(); }

  void validate() const {
    const std::size_t n = graph.size();
    if (n == 0) throw InputError("scenario graph has no agents");
    if (model.agent_count() != n)
      throw InputError("model describes " + std::to_string(model.agent_count()) +
                       " agents but the graph has " + std::to_string(n));
    if (theta_star >= hypotheses()) throw InputError("theta_star out of range");
    if (f >= n) throw InputError("f must be smaller than the number of agents");
    if (!(threshold > 0.0) || !std::isfinite(threshold)) throw InputError("threshold must be > 0");
    if (!(belief_decision > 0.0 && belief_decision <= 1.0))
      throw InputError("belief_decision must be in (0, 1]");
    adversary.strategy.validate(hypotheses());
    for (AgentId v : adversary.faulty)
      if (v >= n) throw InputError("faulty agent " + std::to_string(v + 1) + " out of range");
    auto sorted = adversary.faulty;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw InputError("faulty agent listed twice");
    const std::size_t faulty_count =
        adversary.random_count ? *adversary.random_count : adversary.faulty.size();
    if (adversary.random_count && !adversary.faulty.empty())
      throw InputError("give either explicit faulty agents or random:k, not both");
    if (faulty_count > f)
      throw InputError("scenario has " + std::to_string(faulty_count) +
                       " faulty agents but f = " + std::to_string(f));
    if (rule == Rule::ff_bfl && (faulty_count > 0 || f > 0))
      throw InputError("rule ff_bfl requires f = 0 and no faulty agents");
    if (rule == Rule::consensus) throw InputError("use run_consensus for pure consensus runs");
  }
};

/// Faulty agents of a scenario, ascending.
inline std::vector<AgentId> resolve_faulty(const ScenarioConfig& config) {
  std::vector<AgentId> faulty = config.adversary.faulty;
  if (config.adversary.random_count) {
    Rng rng = make_substream(config.seed, 0, 0, StreamPurpose::faulty_selection);
    std::vector<AgentId> pool(config.agents());
    for (AgentId v = 0; v < pool.size(); ++v) pool[v] = v;
    for (std::size_t k = 0; k < *config.adversary.random_count; ++k) {
      const auto pick = k + uniform_index(rng, pool.size() - k);
      std::swap(pool[k], pool[pick]);
    }
    faulty.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(*config.adversary.random_count));
  }
  std::sort(faulty.begin(), faulty.end());
  return faulty;
}

// ---------------------------------------------------------------------------
// Assumption checks

struct AssumptionReport {
  bool passed = true;
  std::vector<std::string> failures;
  /// Dimension of the reduced graphs the rule depends on.
  std::size_t dimension = 0;
  std::optional<TopologyReport> topology;
  std::optional<IdentifiabilityReport> identifiability;
  double c0 = 0.0;
  std::optional<double> c1;
};

struct AssumptionOptions {
  bool compute_c1 = true;
};

inline std::size_t rule_dimension(Rule rule, std::size_t hypotheses) {
  return rule == Rule::pairwise ? 1 : hypotheses;
}

inline AssumptionReport check_assumptions(const ScenarioConfig& config, AssumptionOptions options = {}) {
  config.validate();
  AssumptionReport report;
  const Digraph& g = config.graph;
  const std::size_t f = config.f;
  const std::size_t m = config.hypotheses();
  report.dimension = rule_dimension(config.rule, m);
  report.c0 = c0(config.model);

  auto fail = [&](std::string why) {
    report.passed = false;
    report.failures.push_back(std::move(why));
  };

  for (AgentId i = 0; i < g.size(); ++i) {
    const std::size_t d = g.incoming(i).size();
    if (config.rule == Rule::bfl && d + 1 < (m + 1) * f + 1)
      fail("agent " + std::to_string(i + 1) + " has " + std::to_string(d) +
           " in-neighbors; bfl needs at least (m+1)f = " + std::to_string((m + 1) * f));
    if (config.rule == Rule::bfl && d + 1 > config.max_inputs)
      fail("agent " + std::to_string(i + 1) + " has " + std::to_string(d + 1) +
           " one_iter inputs, above max_inputs = " + std::to_string(config.max_inputs));
    if (config.rule == Rule::pairwise && d < 2 * f + 1)
      fail("agent " + std::to_string(i + 1) + " has " + std::to_string(d) +
           " in-neighbors; pairwise learning needs at least 2f+1 = " + std::to_string(2 * f + 1));
  }

  if (config.rule == Rule::ff_bfl && !is_strongly_connected(g))
    fail("the failure-free rule needs a strongly connected graph");

  const TopologyOptions topology_options{config.enumeration_cap, config.check_samples, config.seed};
  report.topology = check_topology(g, f, report.dimension, topology_options);
  if (!report.topology->assumption_holds) {
    std::string why = "no unique source component in reduced graph " +
                      (report.topology->witness ? describe(*report.topology->witness) : std::string("?"));
    fail(std::move(why));
    return report;
  }
  IdentifiabilityOptions id_options;
  id_options.topology = topology_options;
  report.identifiability =
      check_identifiability(g, f, report.dimension, config.model, config.theta_star, id_options);
  if (!report.identifiability->holds) {
    const auto& id = *report.identifiability;
    fail("hypothesis '" + config.model.hypotheses()[id.worst_theta] +
         "' is indistinguishable from the true state on the source component of " +
         (id.worst_graph ? describe(*id.worst_graph) : std::string("?")));
  }
  if (options.compute_c1) report.c1 = c1(config.model, g, f, report.dimension, topology_options);
  return report;
}

inline std::string describe_failures(const AssumptionReport& report) {
  std::string text;
  for (const auto& f : report.failures) text += (text.empty() ? "" : "; ") + f;
  return text;
}

// ---------------------------------------------------------------------------
// Engine

/// Message-log entry: which agent did what, in which order.
struct EngineEvent {
  enum class Phase { send, observe, read, update };
  std::size_t round = 0;
  Phase phase = Phase::send;
  AgentId agent = 0;
  /// For `read`: the sender whose round message was read.
  std::optional<AgentId> peer;
};

struct RunOptions {
  bool check_assumptions = true;
  /// Override a failed assumption check.
  bool force = false;
  AssumptionOptions assumption;
  std::vector<EngineEvent>* events = nullptr;
};

struct AgentSummary {
  AgentId agent = 0;
  Vector final_state;
  /// Beliefs for the belief rules; empty for pairwise learning.
  Vector final_beliefs;
  std::optional<Hypothesis> decision;
  /// First round from which the decision is the true state through the horizon.
  std::optional<std::size_t> decision_round;
  std::vector<std::pair<Hypothesis, DecayFit>> fits;
};

struct RunSummary {
  Rule rule = Rule::ff_bfl;
  std::uint64_t seed = 0;
  std::size_t rounds = 0;
  std::size_t f = 0;
  Hypothesis theta_star = 0;
  std::vector<std::string> hypotheses;
  std::vector<AgentId> faulty;
  StrategyKind strategy = StrategyKind::silent;
  std::vector<AgentSummary> agents;
  /// Every honest agent decided for the true state at the horizon.
  bool success = false;
  /// Latest per-agent decision round (set when successful).
  std::optional<std::size_t> decision_round;
  std::vector<double> diameters;
  std::optional<AssumptionReport> assumptions;
};

struct RunResult {
  RoundTrace trace;
  RunSummary summary;
};

namespace detail {

template <typename Fn>
auto with_context(std::size_t round, AgentId agent, Fn&& fn) -> decltype(fn()) {
  const auto where = [&] {
    return "round " + std::to_string(round) + ", agent " + std::to_string(agent + 1) + ": ";
  };
  try {
    return fn();
  } catch (const DegenerateInputError& e) {
    throw DegenerateInputError(where() + e.what());
  } catch (const ResourceLimitError& e) {
    throw ResourceLimitError(where() + e.what());
  } catch (const MissingNeighborError& e) {
    throw MissingNeighborError(where() + e.what());
  } catch (const InputError& e) {
    throw InputError(where() + e.what());
  } catch (const PreconditionError& e) {
    throw PreconditionError(where() + e.what());
  } catch (const InternalError& e) {
    throw InternalError(where() + e.what());
  }
}

using LearnerState = std::variant<BeliefState, PairwiseRatios>;

inline const Vector& payload(const LearnerState& s) {
  if (const auto* b = std::get_if<BeliefState>(&s)) return b->log_beliefs;
  return std::get<PairwiseRatios>(s).values;
}

inline Vector consensus_part(const LearnerState& s) {
  if (const auto* b = std::get_if<BeliefState>(&s)) return b->log_beliefs;
  return std::get<PairwiseRatios>(s).consensus;
}

inline PayloadKind payload_kind(Rule rule) {
  switch (rule) {
    case Rule::bfl:
    case Rule::ff_bfl: return PayloadKind::log_belief;
    case Rule::pairwise: return PayloadKind::ratio_table;
    case Rule::consensus: return PayloadKind::scalar;
  }
  return PayloadKind::scalar;
}

inline LearnerState initial_state(Rule rule, std::size_t m) {
  if (rule == Rule::pairwise) return PairwiseRatios::zero(m);
  return BeliefState::uniform(m);
}

/// What agent `i` receives this round: honest senders' previous states,
/// faulty senders' crafted messages, own previous value where a faulty
/// sender stayed silent.
inline std::vector<Received<Vector>> gather(const Digraph& g, AgentId i, std::size_t round,
                                            const std::vector<char>& faulty,
                                            const std::vector<const Vector*>& sent,
                                            const std::vector<MessageMap>& crafted,
                                            const Vector& own, std::size_t& defaults,
                                            std::vector<EngineEvent>* events) {
  std::vector<Received<Vector>> received;
  const auto senders = g.incoming(i);
  received.reserve(senders.size());
  defaults = 0;
  for (AgentId u : senders) {
    if (events) events->push_back({round, EngineEvent::Phase::read, i, u});
    if (!faulty[u]) {
      received.push_back({u, *sent[u], false});
      continue;
    }
    const auto it = crafted[u].find(i);
    if (it != crafted[u].end()) {
      received.push_back({u, it->second, false});
    } else {
      received.push_back({u, own, true});
      ++defaults;
    }
  }
  return received;
}

inline std::optional<Hypothesis> belief_decision(const Vector& log_beliefs, double mass) {
  for (Hypothesis h = 0; h < log_beliefs.size(); ++h)
    if (std::exp(log_beliefs[h]) >= mass) return h;
  return std::nullopt;
}

}  // namespace detail

/// Decision of a recorded agent state under the scenario's rule.
inline std::optional<Hypothesis> decide(Rule rule, const Vector& state, std::size_t hypotheses,
                                        double threshold, double belief_mass) {
  if (rule == Rule::pairwise) {
    PairwiseRatios table = PairwiseRatios::zero(hypotheses);
    table.values = state;
    return pairwise_decide(table, threshold);
  }
  return detail::belief_decision(state, belief_mass);
}

inline RunSummary summarize(const RoundTrace& trace, const ScenarioConfig& config) {
  RunSummary s;
  s.rule = config.rule;
  s.seed = config.seed;
  s.rounds = trace.horizon();
  s.f = config.f;
  s.theta_star = config.theta_star;
  s.hypotheses = trace.hypotheses;
  s.faulty = trace.faulty;
  s.strategy = config.adversary.strategy.kind;
  for (std::size_t t = 0; t < trace.rounds.size(); ++t) s.diameters.push_back(trace.rounds[t].diameter);

  const std::size_t m = trace.hypothesis_count();
  bool all = !trace.honest.empty();
  std::size_t latest = 0;
  for (AgentId i : trace.honest) {
    AgentSummary a;
    a.agent = i;
    const auto& last = trace.record(trace.horizon(), i);
    a.final_state = last.state;
    if (config.rule != Rule::pairwise)
      for (double v : last.state) a.final_beliefs.push_back(std::exp(v));
    a.decision = decide(config.rule, last.state, m, config.threshold, config.belief_decision);
    if (a.decision == config.theta_star) {
      std::size_t from = trace.horizon();
      while (from > 0 && decide(config.rule, trace.record(from - 1, i).state, m, config.threshold,
                                config.belief_decision) == config.theta_star)
        --from;
      a.decision_round = from;
      latest = std::max(latest, from);
    } else {
      all = false;
    }
    if (trace.horizon() >= kMinFitRounds)
      for (Hypothesis h = 0; h < m; ++h)
        if (h != config.theta_star) a.fits.emplace_back(h, fit_quadratic_decay(trace, i, h));
    s.agents.push_back(std::move(a));
  }
  s.success = all;
  if (all) s.decision_round = latest;
  return s;
}

inline RunResult run_scenario(const ScenarioConfig& config, const RunOptions& options = {}) {
  config.validate();
  std::optional<AssumptionReport> assumptions;
  if (options.check_assumptions) {
    assumptions = check_assumptions(config, options.assumption);
    if (!assumptions->passed && !options.force)
      throw AssumptionError("assumption check failed: " + describe_failures(*assumptions));
  }

  const Digraph& g = config.graph;
  const std::size_t n = g.size();
  const std::size_t m = config.hypotheses();
  const std::size_t f = config.f;
  const Rule rule = config.rule;
  const auto faulty_ids = resolve_faulty(config);
  std::vector<char> faulty(n, 0);
  for (AgentId v : faulty_ids) faulty[v] = 1;
  const StrategySpec& strategy = config.adversary.strategy;
  const bool mimic = strategy.kind == StrategyKind::mimic_flipped && !faulty_ids.empty();

  std::vector<detail::LearnerState> states(n, detail::initial_state(rule, m));
  std::vector<CumulativeLogLikelihood> cumulative(n, CumulativeLogLikelihood(m));

  std::optional<SignalModel> shadow_model;
  std::vector<detail::LearnerState> shadow;
  std::vector<CumulativeLogLikelihood> shadow_cumulative;
  if (mimic) {
    SystemView probe;
    probe.theta_star = config.theta_star;
    const Hypothesis target = strategy_target(strategy, probe);
    shadow_model = flipped_model(config.model, config.theta_star, target);
    shadow = states;
    shadow_cumulative = cumulative;
  }

  RoundTrace trace;
  trace.rule = rule;
  trace.hypotheses = config.model.hypotheses();
  trace.theta_star = config.theta_star;
  trace.faulty = faulty_ids;
  for (AgentId v = 0; v < n; ++v)
    if (!faulty[v]) trace.honest.push_back(v);
  trace.rounds.reserve(config.rounds + 1);

  std::vector<std::size_t> defaults(n, 0);
  std::vector<std::optional<std::size_t>> signals(n);
  auto record = [&](std::size_t t) {
    RoundRecord rr;
    rr.round = t;
    std::vector<Vector> parts;
    for (AgentId i : trace.honest) {
      AgentRecord ar;
      ar.agent = i;
      ar.state = detail::payload(states[i]);
      ar.consensus = detail::consensus_part(states[i]);
      ar.signal = signals[i];
      ar.defaults = defaults[i];
      if (const auto* p = std::get_if<PairwiseRatios>(&states[i])) ar.clamped = p->clamped;
      parts.push_back(ar.consensus);
      rr.agents.push_back(std::move(ar));
    }
    rr.diameter = consensus_diameter(parts);
    trace.rounds.push_back(std::move(rr));
  };
  record(0);

  const OneIterOptions one_iter_options{config.max_inputs};
  std::vector<Vector> view_states(n);
  std::vector<MessageMap> crafted(n);
  std::vector<const Vector*> sent(n, nullptr);
  std::vector<std::size_t> shadow_signals(n, 0);

  for (std::size_t t = 1; t <= config.rounds; ++t) {
    // Transmit: states from round t-1.
    for (AgentId v = 0; v < n; ++v) {
      view_states[v] = faulty[v] ? Vector{} : detail::payload(states[v]);
      sent[v] = &detail::payload(states[v]);
    }
    SystemView view;
    view.round = t;
    view.graph = &g;
    view.payload = detail::payload_kind(rule);
    view.hypotheses = m;
    view.theta_star = config.theta_star;
    view.faulty = faulty_ids;
    view.states = view_states;
    view.cumulative = cumulative;
    view.model = &config.model;
    for (AgentId v = 0; v < n; ++v) {
      if (options.events) options.events->push_back({t, EngineEvent::Phase::send, v, std::nullopt});
      if (!faulty[v]) continue;
      Rng rng = make_substream(config.seed, v, t, StreamPurpose::adversary);
      const Vector* mimic_state = mimic ? &detail::payload(shadow[v]) : nullptr;
      crafted[v] = craft_messages(strategy, v, view, rng, mimic_state);
    }

    // Observe.
    for (AgentId v = 0; v < n; ++v) {
      if (faulty[v] && !mimic) continue;
      Rng rng = make_substream(config.seed, v, t, StreamPurpose::signal);
      const std::size_t s = sample_signal(config.model, v, config.theta_star, rng);
      if (faulty[v])
        shadow_signals[v] = s;
      else
        signals[v] = s;
      if (options.events) options.events->push_back({t, EngineEvent::Phase::observe, v, std::nullopt});
    }

    // Update.
    std::vector<detail::LearnerState> next = states;
    for (AgentId i = 0; i < n; ++i) {
      if (faulty[i]) continue;
      const Vector& own = detail::payload(states[i]);
      const auto received = detail::gather(g, i, t, faulty, sent, crafted, own, defaults[i], options.events);
      const AgentContext ctx{&config.model, i};
      next[i] = detail::with_context(t, i, [&]() -> detail::LearnerState {
        switch (rule) {
          case Rule::bfl:
            return bfl_step(ctx, std::get<BeliefState>(states[i]), received, cumulative[i], *signals[i], f,
                            one_iter_options);
          case Rule::ff_bfl:
            return ff_bfl_step(ctx, std::get<BeliefState>(states[i]), received, cumulative[i], *signals[i]);
          case Rule::pairwise:
            return pairwise_step(ctx, std::get<PairwiseRatios>(states[i]), received, cumulative[i],
                                 *signals[i], f);
          case Rule::consensus: break;
        }
        throw InputError("rule has no learning step");
      });
      if (options.events) options.events->push_back({t, EngineEvent::Phase::update, i, std::nullopt});
    }

    if (mimic) {
      // The shadow run hears honest agents and the other faulty agents'
      // crafted messages, exactly like an honest agent in its place.
      std::vector<detail::LearnerState> shadow_next = shadow;
      std::vector<const Vector*> shadow_sent = sent;
      for (AgentId j : faulty_ids) {
        const Vector& own = detail::payload(shadow[j]);
        std::size_t ignored = 0;
        const auto received = detail::gather(g, j, t, faulty, shadow_sent, crafted, own, ignored, nullptr);
        const AgentContext ctx{&*shadow_model, j};
        shadow_next[j] = detail::with_context(t, j, [&]() -> detail::LearnerState {
          if (rule == Rule::pairwise)
            return pairwise_step(ctx, std::get<PairwiseRatios>(shadow[j]), received, shadow_cumulative[j],
                                 shadow_signals[j], f);
          return bfl_step(ctx, std::get<BeliefState>(shadow[j]), received, shadow_cumulative[j],
                          shadow_signals[j], f, one_iter_options);
        });
      }
      shadow = std::move(shadow_next);
    }
    states = std::move(next);
    record(t);
  }

  RunResult result;
  result.trace = std::move(trace);
  result.summary = summarize(result.trace, config);
  result.summary.assumptions = std::move(assumptions);
  return result;
}

// ---------------------------------------------------------------------------
// Pure consensus (no innovations)

enum class ConsensusRule { trimmed, byz_iter };

struct ConsensusConfig {
  Digraph graph;
  std::size_t f = 0;
  ConsensusRule rule = ConsensusRule::trimmed;
  /// Initial value of every agent; entries of faulty agents are ignored.
  std::vector<Vector> initial;
  std::vector<AgentId> faulty;
  StrategySpec strategy;
  std::size_t rounds = 100;
  std::uint64_t seed = 1;
  std::size_t max_inputs = 20;
};

/// Iterates trimmed scalar consensus or Byz-Iter (One-Iter every round).
inline RoundTrace run_consensus(const ConsensusConfig& config) {
  const Digraph& g = config.graph;
  const std::size_t n = g.size();
  if (config.initial.size() != n) throw InputError("need one initial value per agent");
  if (config.faulty.size() > config.f) throw InputError("more faulty agents than f");
  if (config.strategy.kind == StrategyKind::mimic_flipped)
    throw InputError("mimic_flipped needs a learning rule");
  const std::size_t dim = config.initial.empty() ? 0 : config.initial.front().size();
  if (dim == 0) throw InputError("consensus values must have at least one coordinate");
  for (const auto& v : config.initial)
    if (v.size() != dim) throw InputError("initial values differ in dimension");
  if (config.rule == ConsensusRule::trimmed && dim != 1)
    throw InputError("trimmed consensus is scalar; use byz_iter for vectors");

  std::vector<char> faulty(n, 0);
  for (AgentId v : config.faulty) {
    if (v >= n) throw InputError("faulty agent out of range");
    faulty[v] = 1;
  }
  std::vector<AgentId> faulty_ids = config.faulty;
  std::sort(faulty_ids.begin(), faulty_ids.end());

  RoundTrace trace;
  trace.rule = Rule::consensus;
  trace.faulty = faulty_ids;
  for (AgentId v = 0; v < n; ++v)
    if (!faulty[v]) trace.honest.push_back(v);

  std::vector<Vector> states = config.initial;
  std::vector<std::size_t> defaults(n, 0);
  auto record = [&](std::size_t t) {
    RoundRecord rr;
    rr.round = t;
    std::vector<Vector> parts;
    for (AgentId i : trace.honest) {
      AgentRecord ar;
      ar.agent = i;
      ar.state = states[i];
      ar.consensus = states[i];
      ar.defaults = defaults[i];
      parts.push_back(states[i]);
      rr.agents.push_back(std::move(ar));
    }
    rr.diameter = consensus_diameter(parts);
    trace.rounds.push_back(std::move(rr));
  };
  record(0);

  std::vector<Vector> view_states(n);
  std::vector<MessageMap> crafted(n);
  std::vector<const Vector*> sent(n, nullptr);
  const OneIterOptions one_iter_options{config.max_inputs};
  for (std::size_t t = 1; t <= config.rounds; ++t) {
    for (AgentId v = 0; v < n; ++v) {
      view_states[v] = faulty[v] ? Vector{} : states[v];
      sent[v] = &states[v];
    }
    SystemView view;
    view.round = t;
    view.graph = &g;
    view.payload = PayloadKind::scalar;
    view.faulty = faulty_ids;
    view.states = view_states;
    for (AgentId v : faulty_ids) {
      Rng rng = make_substream(config.seed, v, t, StreamPurpose::adversary);
      crafted[v] = craft_messages(config.strategy, v, view, rng);
    }
    std::vector<Vector> next = states;
    for (AgentId i = 0; i < n; ++i) {
      if (faulty[i]) continue;
      const auto received = detail::gather(g, i, t, faulty, sent, crafted, states[i], defaults[i], nullptr);
      next[i] = detail::with_context(t, i, [&]() -> Vector {
        if (config.rule == ConsensusRule::byz_iter) return one_iter(states[i], received, config.f, one_iter_options);
        std::vector<Received<double>> scalars;
        scalars.reserve(received.size());
        for (const auto& r : received) scalars.push_back({r.sender, r.value.at(0), r.defaulted});
        return Vector{trimmed_scalar_round(states[i][0], scalars, config.f)};
      });
    }
    states = std::move(next);
    record(t);
  }
  return trace;
}

}  // namespace byzlearn
