#pragma once

// Hypotheses, per-agent finite likelihood tables and the quantities derived
// from them. Everything is in natural-log units.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "byzlearn/error.hpp"
#include "byzlearn/graph.hpp"
#include "byzlearn/rng.hpp"

namespace byzlearn {

using Hypothesis = std::size_t;

/// Labels are written verbatim into trace keys, so a few separators are banned.
inline void validate_hypothesis_labels(const std::vector<std::string>& labels) {
  if (labels.size() < 2) throw InputError("need at least two hypotheses");
  for (std::size_t a = 0; a < labels.size(); ++a) {
    if (labels[a].empty()) throw InputError("empty hypothesis label");
    if (labels[a].find_first_of(",/\"\n\r") != std::string::npos)
      throw InputError("hypothesis label '" + labels[a] + "' contains a reserved character");
    for (std::size_t b = 0; b < a; ++b)
      if (labels[a] == labels[b]) throw InputError("duplicate hypothesis label '" + labels[a] + "'");
  }
}

struct HypothesisSet {
  std::vector<std::string> labels;
  Hypothesis true_index = 0;

  std::size_t size() const noexcept { return labels.size(); }

  void validate() const {
    validate_hypothesis_labels(labels);
    if (true_index >= labels.size()) throw InputError("true hypothesis index out of range");
  }
};

class SignalModel {
 public:
  static constexpr double kMinLikelihood = 1e-9;
  static constexpr double kNormalizationTolerance = 1e-12;

  SignalModel() = default;

  /// `tables[i][w][theta]` is l_i(w | theta): one row per signal, one
  /// column per hypothesis. Columns must sum to one and be bounded away
  /// from zero.
  SignalModel(std::vector<std::string> hypotheses,
              const std::vector<std::vector<std::vector<double>>>& tables)
      : labels_(std::move(hypotheses)) {
    validate_hypothesis_labels(labels_);
    const std::size_t m = labels_.size();
    if (tables.empty()) throw InputError("model has no agents");
    agents_.reserve(tables.size());
    for (std::size_t i = 0; i < tables.size(); ++i) {
      const auto& rows = tables[i];
      const std::string who = "agent " + std::to_string(i + 1);
      if (rows.empty()) throw InputError(who + " has an empty signal space");
      Table t;
      t.signals = rows.size();
      t.p.resize(t.signals * m);
      t.log_p.resize(t.signals * m);
      for (std::size_t w = 0; w < rows.size(); ++w) {
        if (rows[w].size() != m)
          throw InputError(who + " signal " + std::to_string(w + 1) + " has " +
                           std::to_string(rows[w].size()) + " columns, expected " +
                           std::to_string(m));
        for (Hypothesis h = 0; h < m; ++h) {
          const double v = rows[w][h];
          if (!std::isfinite(v) || v < kMinLikelihood)
            throw InputError(who + " likelihood for signal " + std::to_string(w + 1) +
                             " under '" + labels_[h] + "' is below " +
                             std::to_string(kMinLikelihood));
          t.p[w * m + h] = v;
          t.log_p[w * m + h] = std::log(v);
        }
      }
      for (Hypothesis h = 0; h < m; ++h) {
        double sum = 0.0;
        for (std::size_t w = 0; w < t.signals; ++w) sum += t.p[w * m + h];
        if (std::abs(sum - 1.0) > kNormalizationTolerance)
          throw InputError(who + " likelihoods under '" + labels_[h] + "' sum to " +
                           std::to_string(sum) + ", not 1");
      }
      agents_.push_back(std::move(t));
    }
  }

  std::size_t hypothesis_count() const noexcept { return labels_.size(); }
  std::size_t agent_count() const noexcept { return agents_.size(); }
  std::size_t signal_count(AgentId i) const { return agents_.at(i).signals; }
  const std::vector<std::string>& hypotheses() const noexcept { return labels_; }

  Hypothesis hypothesis_index(std::string_view label) const {
    for (Hypothesis h = 0; h < labels_.size(); ++h)
      if (labels_[h] == label) return h;
    throw InputError("unknown hypothesis '" + std::string(label) + "'");
  }

  double likelihood(AgentId i, std::size_t w, Hypothesis h) const {
    const Table& t = agents_.at(i);
    return t.p.at(w * labels_.size() + h);
  }

  double log_likelihood(AgentId i, std::size_t w, Hypothesis h) const {
    const Table& t = agents_.at(i);
    return t.log_p.at(w * labels_.size() + h);
  }

  /// Copy with the likelihood columns of `a` and `b` exchanged at every agent.
  SignalModel with_swapped_hypotheses(Hypothesis a, Hypothesis b) const {
    SignalModel copy = *this;
    const std::size_t m = labels_.size();
    for (Table& t : copy.agents_)
      for (std::size_t w = 0; w < t.signals; ++w) {
        std::swap(t.p[w * m + a], t.p[w * m + b]);
        std::swap(t.log_p[w * m + a], t.log_p[w * m + b]);
      }
    return copy;
  }

 private:
  struct Table {
    std::size_t signals = 0;
    std::vector<double> p;
    std::vector<double> log_p;
  };

  std::vector<std::string> labels_;
  std::vector<Table> agents_;
};

/// D(l_i(.|theta1) || l_i(.|theta2)) in nats.
inline double kl_divergence(const SignalModel& model, AgentId i, Hypothesis theta1,
                            Hypothesis theta2) {
  double sum = 0.0;
  for (std::size_t w = 0; w < model.signal_count(i); ++w)
    sum += model.likelihood(i, w, theta1) *
           (model.log_likelihood(i, w, theta1) - model.log_likelihood(i, w, theta2));
  return std::max(sum, 0.0);
}

/// E under theta_star of log(l_i(w|theta) / l_i(w|theta_star)); equals
/// -D(l_i(.|theta_star) || l_i(.|theta)).
inline double expected_log_ratio(const SignalModel& model, AgentId i, Hypothesis theta,
                                 Hypothesis theta_star) {
  double sum = 0.0;
  for (std::size_t w = 0; w < model.signal_count(i); ++w)
    sum += model.likelihood(i, w, theta_star) *
           (model.log_likelihood(i, w, theta) - model.log_likelihood(i, w, theta_star));
  return sum;
}

/// Categorical draw from l_i(.|theta) by inverse CDF.
inline std::size_t sample_signal(const SignalModel& model, AgentId i, Hypothesis theta, Rng& rng) {
  const double u = uniform01(rng);
  const std::size_t count = model.signal_count(i);
  double cumulative = 0.0;
  for (std::size_t w = 0; w + 1 < count; ++w) {
    cumulative += model.likelihood(i, w, theta);
    if (u < cumulative) return w;
  }
  return count - 1;
}

/// Largest |log(l_i(w|theta1) / l_i(w|theta2))| over agents, signals and
/// ordered pairs theta1 != theta2.
inline double c0(const SignalModel& model) {
  double worst = 0.0;
  const std::size_t m = model.hypothesis_count();
  for (AgentId i = 0; i < model.agent_count(); ++i)
    for (std::size_t w = 0; w < model.signal_count(i); ++w)
      for (Hypothesis a = 0; a < m; ++a)
        for (Hypothesis b = 0; b < m; ++b)
          if (a != b)
            worst = std::max(worst, std::abs(model.log_likelihood(i, w, a) -
                                             model.log_likelihood(i, w, b)));
  return worst;
}

/// Running sum over rounds of log l_i(s_r | theta), one entry per hypothesis.
class CumulativeLogLikelihood {
 public:
  CumulativeLogLikelihood() = default;
  explicit CumulativeLogLikelihood(std::size_t hypotheses) : values_(hypotheses, 0.0) {}

  void observe(const SignalModel& model, AgentId i, std::size_t signal) {
    for (Hypothesis h = 0; h < values_.size(); ++h) values_[h] += model.log_likelihood(i, signal, h);
    ++rounds_;
  }

  double operator[](Hypothesis h) const { return values_.at(h); }
  std::span<const double> values() const noexcept { return values_; }
  std::size_t rounds() const noexcept { return rounds_; }
  double log_ratio(Hypothesis a, Hypothesis b) const { return values_.at(a) - values_.at(b); }

 private:
  std::vector<double> values_;
  std::size_t rounds_ = 0;
};

}  // namespace byzlearn
