#pragma once

// The three learning rules, all in the log domain:
//   bfl_step       Byzantine-tolerant rule, One-Iter on log-beliefs
//   ff_bfl_step    failure-free rule, fixed geometric averaging
//   pairwise_step  per-pair trimmed consensus on log-likelihood ratios

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "byzlearn/consensus.hpp"
#include "byzlearn/signals.hpp"

namespace byzlearn {

/// log-sum-exp, stable for large negative entries.
inline double log_sum_exp(std::span<const double> values) {
  double peak = -std::numeric_limits<double>::infinity();
  for (double v : values) peak = std::max(peak, v);
  if (!std::isfinite(peak)) return peak;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - peak);
  return peak + std::log(sum);
}

struct BeliefState {
  /// log mu(theta), normalized so that log_sum_exp == 0.
  Vector log_beliefs;
  std::size_t round = 0;

  static BeliefState uniform(std::size_t hypotheses) {
    return {Vector(hypotheses, -std::log(static_cast<double>(hypotheses))), 0};
  }

  double belief(Hypothesis h) const { return std::exp(log_beliefs.at(h)); }

  /// psi(theta1, theta2) = log mu(theta1) - log mu(theta2).
  double log_ratio(Hypothesis a, Hypothesis b) const { return log_beliefs.at(a) - log_beliefs.at(b); }
};

inline Vector normalize_log(Vector values) {
  const double z = log_sum_exp(values);
  for (auto& v : values) v -= z;
  return values;
}

/// r(theta1, theta2) for every ordered pair; the diagonal is unused and kept at 0.
struct PairwiseRatios {
  static constexpr double kClamp = 1e8;

  std::size_t hypotheses = 0;
  Vector values;
  /// Trimmed-average part of the last update, before the local likelihood term.
  Vector consensus;
  std::size_t round = 0;
  bool clamped = false;

  static PairwiseRatios zero(std::size_t m) { return {m, Vector(m * m, 0.0), Vector(m * m, 0.0), 0, false}; }

  double at(Hypothesis a, Hypothesis b) const { return values.at(a * hypotheses + b); }
  double& at(Hypothesis a, Hypothesis b) { return values.at(a * hypotheses + b); }
};

/// Agent-local context shared by the step functions.
struct AgentContext {
  const SignalModel* model = nullptr;
  AgentId agent = 0;
};

/// BFL: eta = One-Iter(log mu_{t-1}); fold the new signal into the cumulative
/// log-likelihood; log mu_t = normalize(cumulative + eta).
inline BeliefState bfl_step(AgentContext ctx, const BeliefState& previous,
                            std::span<const Received<Vector>> received,
                            CumulativeLogLikelihood& cumulative, std::size_t signal, std::size_t f,
                            OneIterOptions options = {}) {
  const Vector eta = one_iter(previous.log_beliefs, received, f, options);
  cumulative.observe(*ctx.model, ctx.agent, signal);
  Vector next(eta.size());
  for (Hypothesis h = 0; h < next.size(); ++h) next[h] = cumulative[h] + eta[h];
  return {normalize_log(std::move(next)), previous.round + 1};
}

/// Failure-free BFL: log mu_t = normalize(cumulative + mean of the log-beliefs
/// of the agent and all its in-neighbors).
inline BeliefState ff_bfl_step(AgentContext ctx, const BeliefState& previous,
                               std::span<const Received<Vector>> received,
                               CumulativeLogLikelihood& cumulative, std::size_t signal) {
  const std::size_t m = previous.log_beliefs.size();
  Vector mean = previous.log_beliefs;
  for (const auto& r : received) {
    if (r.defaulted)
      throw MissingNeighborError("failure-free rule at agent " + std::to_string(ctx.agent + 1) +
                                 " is missing the message of agent " +
                                 std::to_string(r.sender + 1));
    if (r.value.size() != m) throw InputError("received belief has the wrong dimension");
    for (Hypothesis h = 0; h < m; ++h) mean[h] += r.value[h];
  }
  const double weight = 1.0 / static_cast<double>(received.size() + 1);
  cumulative.observe(*ctx.model, ctx.agent, signal);
  Vector next(m);
  for (Hypothesis h = 0; h < m; ++h) next[h] = cumulative[h] + weight * mean[h];
  return {normalize_log(std::move(next)), previous.round + 1};
}

/// Pairwise learning: per ordered pair, trimmed average of the received
/// ratios with the own ratio, plus the cumulative log-likelihood ratio.
/// Received tables may be arbitrary (no antisymmetry is assumed).
inline PairwiseRatios pairwise_step(AgentContext ctx, const PairwiseRatios& previous,
                                    std::span<const Received<Vector>> received,
                                    CumulativeLogLikelihood& cumulative, std::size_t signal,
                                    std::size_t f) {
  const std::size_t m = previous.hypotheses;
  for (const auto& r : received)
    if (r.value.size() != m * m) throw InputError("received ratio table has the wrong size");
  if (received.size() < 2 * f + 1)
    throw DegenerateInputError("pairwise learning at agent " + std::to_string(ctx.agent + 1) +
                               " needs at least 2f+1 = " + std::to_string(2 * f + 1) +
                               " in-neighbors, has " + std::to_string(received.size()));
  cumulative.observe(*ctx.model, ctx.agent, signal);

  PairwiseRatios next = PairwiseRatios::zero(m);
  next.round = previous.round + 1;
  std::vector<std::pair<double, AgentId>> scratch;
  scratch.reserve(received.size());
  for (Hypothesis a = 0; a < m; ++a)
    for (Hypothesis b = 0; b < m; ++b) {
      if (a == b) continue;
      scratch.clear();
      for (const auto& r : received) scratch.emplace_back(r.value[a * m + b], r.sender);
      const double mixed = detail::trimmed_average(previous.at(a, b), scratch, f);
      double value = mixed + cumulative.log_ratio(a, b);
      if (std::abs(value) > PairwiseRatios::kClamp) {
        value = std::copysign(PairwiseRatios::kClamp, value);
        next.clamped = true;
      }
      next.consensus[a * m + b] = mixed;
      next.at(a, b) = value;
    }
  return next;
}

/// The hypothesis whose ratios against every other hypothesis all reach
/// `threshold`; nullopt when no hypothesis qualifies or several tie.
inline std::optional<Hypothesis> pairwise_decide(const PairwiseRatios& ratios, double threshold = 10.0) {
  std::optional<Hypothesis> winner;
  for (Hypothesis a = 0; a < ratios.hypotheses; ++a) {
    bool all = true;
    for (Hypothesis b = 0; b < ratios.hypotheses && all; ++b)
      if (a != b && !(ratios.at(a, b) >= threshold)) all = false;
    if (!all) continue;
    if (winner) return std::nullopt;
    winner = a;
  }
  return winner;
}

}  // namespace byzlearn
