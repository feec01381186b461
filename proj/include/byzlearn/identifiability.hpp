#pragma once

// Source-component identifiability and the detection constant C1.

#include <limits>
#include <optional>
#include <vector>

#include "byzlearn/graph.hpp"
#include "byzlearn/signals.hpp"

namespace byzlearn {

struct IdentifiabilityOptions {
  TopologyOptions topology;
  double zero_tolerance = 1e-12;
  /// Keep one entry per examined reduced graph (memory grows with the count).
  bool record_per_graph = false;
};

struct IdentifiabilityEntry {
  ReducedGraph graph;
  Hypothesis worst_theta = 0;
  double kl_sum = 0.0;
};

struct IdentifiabilityReport {
  bool holds = false;
  Hypothesis theta_star = 0;
  /// Smallest source-component KL sum over reduced graphs and theta != theta_star.
  double min_kl_sum = std::numeric_limits<double>::infinity();
  Hypothesis worst_theta = 0;
  std::optional<ReducedGraph> worst_graph;
  std::uint64_t violations = 0;
  std::uint64_t examined = 0;
  bool exhaustive = true;
  std::vector<IdentifiabilityEntry> per_graph;
};

namespace detail {

/// kl[i][a][b] = D(l_i(.|a) || l_i(.|b)).
inline std::vector<std::vector<std::vector<double>>> kl_tables(const SignalModel& model) {
  const std::size_t m = model.hypothesis_count();
  std::vector<std::vector<std::vector<double>>> kl(
      model.agent_count(), std::vector<std::vector<double>>(m, std::vector<double>(m, 0.0)));
  for (AgentId i = 0; i < model.agent_count(); ++i)
    for (Hypothesis a = 0; a < m; ++a)
      for (Hypothesis b = 0; b < m; ++b) kl[i][a][b] = kl_divergence(model, i, a, b);
  return kl;
}

inline const NodeSet& unique_source_or_throw(const ReducedGraph& h, const SourceAnalysis& a) {
  if (a.sources.size() != 1)
    throw PreconditionError("reduced graph " + describe(h) + " has " +
                            std::to_string(a.sources.size()) +
                            " source components; identifiability needs exactly one");
  return a.source(0);
}

inline void check_model_matches(const Digraph& g, const SignalModel& model) {
  if (model.agent_count() != g.size())
    throw InputError("model describes " + std::to_string(model.agent_count()) +
                     " agents but the graph has " + std::to_string(g.size()));
}

}  // namespace detail

/// For every reduced graph H and theta != theta_star, is the KL sum over
/// H's unique source component strictly positive? Only maximal-removal
/// graphs are visited: a source component can only shrink as links are
/// removed, and KL terms are nonnegative, so they attain the minimum.
inline IdentifiabilityReport check_identifiability(const Digraph& g, std::size_t f,
                                                   std::size_t m, const SignalModel& model,
                                                   Hypothesis theta_star,
                                                   IdentifiabilityOptions options = {}) {
  detail::check_model_matches(g, model);
  if (theta_star >= model.hypothesis_count()) throw InputError("theta_star out of range");
  const auto kl = detail::kl_tables(model);
  const std::size_t hyps = model.hypothesis_count();

  IdentifiabilityReport report;
  report.theta_star = theta_star;
  report.exhaustive = options.topology.samples == 0;
  report.examined =
      for_each_deciding_reduced_graph(g, f, m, options.topology, [&](const ReducedGraph& h) {
        const SourceAnalysis analysis = source_components(h);
        const NodeSet& source = detail::unique_source_or_throw(h, analysis);
        double graph_min = std::numeric_limits<double>::infinity();
        Hypothesis graph_worst = theta_star == 0 ? 1 : 0;
        for (Hypothesis theta = 0; theta < hyps; ++theta) {
          if (theta == theta_star) continue;
          double sum = 0.0;
          for (AgentId j : source) sum += kl[j][theta_star][theta];
          if (sum < graph_min) {
            graph_min = sum;
            graph_worst = theta;
          }
        }
        if (graph_min <= options.zero_tolerance) ++report.violations;
        if (graph_min < report.min_kl_sum) {
          report.min_kl_sum = graph_min;
          report.worst_theta = graph_worst;
          report.worst_graph = h;
        }
        if (options.record_per_graph) report.per_graph.push_back({h, graph_worst, graph_min});
        return true;
      });
  report.holds = report.violations == 0;
  return report;
}

/// C1: minimum over reduced graphs and ordered pairs theta != theta_star of
/// the source-component KL sum D(l(.|theta_star) || l(.|theta)).
inline double c1(const SignalModel& model, const Digraph& g, std::size_t f, std::size_t m,
                 TopologyOptions options = {}) {
  detail::check_model_matches(g, model);
  const auto kl = detail::kl_tables(model);
  const std::size_t hyps = model.hypothesis_count();
  double best = std::numeric_limits<double>::infinity();
  for_each_deciding_reduced_graph(g, f, m, options, [&](const ReducedGraph& h) {
    const SourceAnalysis analysis = source_components(h);
    const NodeSet& source = detail::unique_source_or_throw(h, analysis);
    for (Hypothesis a = 0; a < hyps; ++a)
      for (Hypothesis b = 0; b < hyps; ++b) {
        if (a == b) continue;
        double sum = 0.0;
        for (AgentId j : source) sum += kl[j][a][b];
        best = std::min(best, sum);
      }
    return true;
  });
  return best;
}

}  // namespace byzlearn
