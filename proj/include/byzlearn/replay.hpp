#pragma once

// Closed-form replay of failure-free runs. With no faulty agents the
// log-belief ratios psi_t(theta) = log mu_t(theta) - log mu_t(theta*) follow
// psi_t = A psi_{t-1} + S_t with S_t the cumulative log-likelihood ratio, so
// psi_t = sum_{r=1..t} A^{t-r} S_r.

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "byzlearn/graph.hpp"
#include "byzlearn/signals.hpp"
#include "byzlearn/trace.hpp"

namespace byzlearn {

class MatrixReplay {
 public:
  explicit MatrixReplay(Eigen::MatrixXd a) : a_(std::move(a)) {
    if (a_.rows() != a_.cols() || a_.rows() == 0) throw InputError("replay matrix must be square");
  }

  /// A_ij = 1/(|I_i|+1) for j in I_i and j = i.
  static MatrixReplay failure_free(const Digraph& g) {
    const auto n = static_cast<Eigen::Index>(g.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (AgentId i = 0; i < g.size(); ++i) {
      const double w = 1.0 / static_cast<double>(g.incoming(i).size() + 1);
      a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = w;
      for (AgentId j : g.incoming(i)) a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = w;
    }
    return MatrixReplay(std::move(a));
  }

  /// The matrix bfl applies when f = 0: One-Iter then averages the own value
  /// twice (once on its own, once as a singleton subset) with each input once.
  static MatrixReplay bfl_without_faults(const Digraph& g) {
    const auto n = static_cast<Eigen::Index>(g.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (AgentId i = 0; i < g.size(); ++i) {
      const double w = 1.0 / static_cast<double>(g.incoming(i).size() + 2);
      a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 2.0 * w;
      for (AgentId j : g.incoming(i)) a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = w;
    }
    return MatrixReplay(std::move(a));
  }

  const Eigen::MatrixXd& matrix() const { return a_; }
  std::size_t size() const { return static_cast<std::size_t>(a_.rows()); }

  /// max_i |sum_j A_ij - 1|
  double row_sum_error() const { return (a_.rowwise().sum().array() - 1.0).abs().maxCoeff(); }

  /// lambda = (1 - n^{-n})^{1/n}
  double lambda() const {
    const double n = static_cast<double>(size());
    return std::pow(1.0 - std::pow(n, -n), 1.0 / n);
  }

  struct Limit {
    Eigen::RowVectorXd pi;
    /// Smallest k with max |A^k - A^{k+1}| <= tolerance.
    std::size_t power = 0;
    double step_change = 0.0;
    bool converged = false;
  };

  /// Powers A until consecutive powers agree to `tolerance`; pi is the
  /// column-wise mean of the rows of the last power. `max_power` 0 means 10 n^2.
  Limit limit(double tolerance = 1e-9, std::size_t max_power = 0) const {
    const std::size_t n = size();
    if (max_power == 0) max_power = 10 * n * n;
    Limit out;
    Eigen::MatrixXd power = a_;
    for (std::size_t k = 1; k <= max_power; ++k) {
      Eigen::MatrixXd next = power * a_;
      out.step_change = (next - power).cwiseAbs().maxCoeff();
      power = std::move(next);
      if (out.step_change <= tolerance) {
        out.power = k;
        out.converged = true;
        break;
      }
      out.power = k;
    }
    out.pi = power.colwise().mean();
    return out;
  }

  /// psi_t for t = 0..T from the per-round increments L_1..L_T.
  std::vector<Eigen::VectorXd> replay(const std::vector<Eigen::VectorXd>& increments) const {
    const auto n = a_.rows();
    const std::size_t horizon = increments.size();
    std::vector<Eigen::VectorXd> cumulative(horizon + 1, Eigen::VectorXd::Zero(n));
    for (std::size_t r = 1; r <= horizon; ++r) cumulative[r] = cumulative[r - 1] + increments[r - 1];
    std::vector<Eigen::MatrixXd> powers(horizon + 1);
    powers[0] = Eigen::MatrixXd::Identity(n, n);
    for (std::size_t k = 1; k <= horizon; ++k) powers[k] = powers[k - 1] * a_;

    std::vector<Eigen::VectorXd> psi(horizon + 1, Eigen::VectorXd::Zero(n));
    for (std::size_t t = 1; t <= horizon; ++t)
      for (std::size_t r = 1; r <= t; ++r) psi[t] += powers[t - r] * cumulative[r];
    return psi;
  }

 private:
  Eigen::MatrixXd a_;
};

/// L_k^i = log l_i(s_k | theta) - log l_i(s_k | theta_star) for k = 1..T,
/// from the signals recorded in a failure-free trace.
inline std::vector<Eigen::VectorXd> log_ratio_increments(const SignalModel& model, const RoundTrace& trace,
                                                         Hypothesis theta, Hypothesis theta_star) {
  if (!trace.faulty.empty()) throw PreconditionError("matrix replay needs a failure-free trace");
  const auto n = static_cast<Eigen::Index>(trace.honest.size());
  std::vector<Eigen::VectorXd> out;
  for (std::size_t t = 1; t < trace.rounds.size(); ++t) {
    Eigen::VectorXd l(n);
    for (const auto& rec : trace.rounds[t].agents) {
      if (!rec.signal) throw InputError("trace round " + std::to_string(t) + " has no signals");
      l(static_cast<Eigen::Index>(rec.agent)) = model.log_likelihood(rec.agent, *rec.signal, theta) -
                                                model.log_likelihood(rec.agent, *rec.signal, theta_star);
    }
    out.push_back(std::move(l));
  }
  return out;
}

/// psi_t(theta) of every agent as recorded in a belief trace.
inline std::vector<Eigen::VectorXd> recorded_psi(const RoundTrace& trace, Hypothesis theta, Hypothesis theta_star) {
  const auto n = static_cast<Eigen::Index>(trace.honest.size());
  std::vector<Eigen::VectorXd> out;
  for (const auto& round : trace.rounds) {
    Eigen::VectorXd psi(n);
    for (const auto& rec : round.agents)
      psi(static_cast<Eigen::Index>(rec.agent)) = rec.state.at(theta) - rec.state.at(theta_star);
    out.push_back(std::move(psi));
  }
  return out;
}

/// Largest |recorded - replayed| over agents and rounds.
inline double replay_discrepancy(const std::vector<Eigen::VectorXd>& recorded,
                                 const std::vector<Eigen::VectorXd>& replayed) {
  if (recorded.size() != replayed.size()) throw InputError("trajectories differ in length");
  double worst = 0.0;
  for (std::size_t t = 0; t < recorded.size(); ++t)
    worst = std::max(worst, (recorded[t] - replayed[t]).cwiseAbs().maxCoeff());
  return worst;
}

}  // namespace byzlearn
