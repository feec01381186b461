#pragma once

// Trace metrics: consensus diameter, quadratic decay fits and smoothing.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "byzlearn/trace.hpp"

namespace byzlearn {

/// Max pairwise L-infinity distance.
inline double consensus_diameter(std::span<const Vector> states) {
  double diameter = 0.0;
  for (std::size_t a = 0; a < states.size(); ++a)
    for (std::size_t b = a + 1; b < states.size(); ++b) {
      if (states[a].size() != states[b].size()) throw InputError("states differ in dimension");
      for (std::size_t d = 0; d < states[a].size(); ++d)
        diameter = std::max(diameter, std::abs(states[a][d] - states[b][d]));
    }
  return diameter;
}

inline double consensus_diameter(const RoundTrace& trace, std::size_t round) {
  if (round >= trace.rounds.size()) throw InputError("round " + std::to_string(round) + " not in trace");
  std::vector<Vector> states;
  for (const auto& r : trace.rounds[round].agents) states.push_back(r.consensus);
  return consensus_diameter(states);
}

struct DecayFit {
  /// y ~ a t^2 + b t + c
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double r_squared = 0.0;
  /// R^2 of the best affine fit on the same window.
  double linear_r_squared = 0.0;
  /// r_squared - linear_r_squared: the share explained by the t^2 term.
  double quadratic_gain = 0.0;
  std::size_t first_round = 0;
  std::size_t last_round = 0;
  std::size_t samples = 0;
};

namespace detail {

inline double r_squared(const Eigen::VectorXd& y, const Eigen::VectorXd& fitted) {
  const double mean = y.mean();
  const double ss_tot = (y.array() - mean).square().sum();
  const double ss_res = (y - fitted).squaredNorm();
  if (ss_tot <= 0.0) return ss_res <= 1e-24 ? 1.0 : 0.0;
  return 1.0 - ss_res / ss_tot;
}

}  // namespace detail

/// Least-squares fit of a t^2 + b t + c. Abscissae are centered and scaled
/// before solving and the coefficients mapped back.
inline DecayFit fit_quadratic(std::span<const double> t, std::span<const double> y) {
  if (t.size() != y.size()) throw InputError("fit needs as many abscissae as values");
  if (t.size() < 3) throw InsufficientDataError("quadratic fit needs at least 3 samples");
  const auto k = static_cast<Eigen::Index>(t.size());
  const auto [lo, hi] = std::minmax_element(t.begin(), t.end());
  const double mid = 0.5 * (*lo + *hi);
  const double half = *hi > *lo ? 0.5 * (*hi - *lo) : 1.0;

  Eigen::MatrixXd design(k, 3);
  Eigen::VectorXd values(k);
  for (Eigen::Index r = 0; r < k; ++r) {
    const double u = (t[r] - mid) / half;
    design(r, 0) = u * u;
    design(r, 1) = u;
    design(r, 2) = 1.0;
    values(r) = y[r];
  }
  const Eigen::Vector3d q = design.colPivHouseholderQr().solve(values);
  const Eigen::MatrixXd affine = design.rightCols(2);
  const Eigen::Vector2d l = affine.colPivHouseholderQr().solve(values);

  DecayFit fit;
  const double h2 = half * half;
  fit.a = q(0) / h2;
  fit.b = -2.0 * q(0) * mid / h2 + q(1) / half;
  fit.c = q(0) * mid * mid / h2 - q(1) * mid / half + q(2);
  fit.r_squared = detail::r_squared(values, design * q);
  fit.linear_r_squared = detail::r_squared(values, affine * l);
  fit.quadratic_gain = fit.r_squared - fit.linear_r_squared;
  fit.first_round = static_cast<std::size_t>(*lo);
  fit.last_round = static_cast<std::size_t>(*hi);
  fit.samples = t.size();
  return fit;
}

inline constexpr std::size_t kMinFitRounds = 20;

/// The decaying series of a wrong hypothesis: log mu(theta) for the belief
/// rules, -r(theta*, theta) for pairwise learning.
inline std::vector<double> decay_series(const RoundTrace& trace, AgentId agent, Hypothesis theta) {
  if (!trace.theta_star) throw InputError("trace does not name the true hypothesis");
  const Hypothesis truth = *trace.theta_star;
  const std::size_t m = trace.hypothesis_count();
  if (theta >= m) throw InputError("hypothesis out of range");
  std::vector<double> series;
  series.reserve(trace.rounds.size());
  for (std::size_t t = 0; t < trace.rounds.size(); ++t) {
    const auto& rec = trace.record(t, agent);
    switch (trace.rule) {
      case Rule::bfl:
      case Rule::ff_bfl: series.push_back(rec.state.at(theta)); break;
      case Rule::pairwise: series.push_back(-rec.state.at(truth * m + theta)); break;
      case Rule::consensus: throw InputError("consensus traces carry no beliefs");
    }
  }
  return series;
}

/// Quadratic fit over the trailing half of the trace (rounds T - T/2 .. T).
inline DecayFit fit_quadratic_decay(const RoundTrace& trace, AgentId agent, Hypothesis theta) {
  const std::size_t horizon = trace.horizon();
  if (horizon < kMinFitRounds)
    throw InsufficientDataError("decay fit needs at least " + std::to_string(kMinFitRounds) +
                                " rounds, trace has " + std::to_string(horizon));
  if (trace.theta_star && theta == *trace.theta_star)
    throw InputError("decay fit is defined for wrong hypotheses only");
  const auto series = decay_series(trace, agent, theta);
  const std::size_t first = horizon - horizon / 2;
  std::vector<double> t, y;
  for (std::size_t r = first; r <= horizon; ++r) {
    t.push_back(static_cast<double>(r));
    y.push_back(series[r]);
  }
  return fit_quadratic(t, y);
}

/// Trailing moving average: out[k] = mean(x[k-window+1 .. k]) for k >= window-1.
inline std::vector<double> moving_average(std::span<const double> x, std::size_t window) {
  if (window == 0) throw InputError("moving-average window must be positive");
  std::vector<double> out;
  if (x.size() < window) return out;
  double sum = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sum += x[k];
    if (k >= window) sum -= x[k - window];
    if (k + 1 >= window) out.push_back(sum / static_cast<double>(window));
  }
  return out;
}

inline bool is_nondecreasing(std::span<const double> x) {
  return std::adjacent_find(x.begin(), x.end(), [](double a, double b) { return b < a; }) == x.end();
}

}  // namespace byzlearn
