#include <catch_amalgamated.hpp>

#include <array>
#include <cmath>

#include "byzlearn/signals.hpp"

using namespace byzlearn;
using Catch::Approx;

namespace {

// Reference values from 40-digit summation (mpmath).
constexpr double kKlHalfVsQuarter = 0.1438410362258904637;   // D((.5,.5) || (.25,.75))
constexpr double kKlQuarterVsHalf = 0.1308120359411369591;   // D((.25,.75) || (.5,.5))
constexpr double kKlNineTenths = 1.757779661868975506;       // D((.9,.1) || (.1,.9)) = 0.8 ln 9
constexpr double kLn9 = 2.197224577336219383;
constexpr double kLn2 = 0.6931471805599453094;

SignalModel two_column(std::vector<double> p, std::vector<double> q, std::size_t agents = 1) {
  std::vector<std::vector<double>> rows;
  for (std::size_t w = 0; w < p.size(); ++w) rows.push_back({p[w], q[w]});
  return SignalModel({"a", "b"}, std::vector<std::vector<std::vector<double>>>(agents, rows));
}

/// Exhaustive scan of |log(l(w|a) / l(w|b))|.
double scan_c0(const SignalModel& model) {
  double worst = 0.0;
  for (AgentId i = 0; i < model.agent_count(); ++i)
    for (std::size_t w = 0; w < model.signal_count(i); ++w)
      for (Hypothesis a = 0; a < model.hypothesis_count(); ++a)
        for (Hypothesis b = 0; b < model.hypothesis_count(); ++b)
          worst = std::max(worst, std::abs(std::log(model.likelihood(i, w, a) / model.likelihood(i, w, b))));
  return worst;
}

SignalModel random_model(Rng& rng, std::size_t agents, std::size_t m, std::size_t signals) {
  std::vector<std::vector<std::vector<double>>> tables(agents);
  std::vector<std::string> labels;
  for (std::size_t h = 0; h < m; ++h) labels.push_back("t" + std::to_string(h + 1));
  for (auto& rows : tables) {
    rows.assign(signals, std::vector<double>(m, 0.0));
    for (std::size_t h = 0; h < m; ++h) {
      double sum = 0.0;
      for (std::size_t w = 0; w < signals; ++w) sum += rows[w][h] = 0.05 + uniform01(rng);
      double total = 0.0;
      for (std::size_t w = 0; w + 1 < signals; ++w) total += rows[w][h] /= sum;
      rows[signals - 1][h] = 1.0 - total;
    }
  }
  return SignalModel(labels, tables);
}

}  // namespace

TEST_CASE("hypothesis labels are validated") {
  CHECK_THROWS_AS(validate_hypothesis_labels({"only"}), InputError);
  CHECK_THROWS_AS(validate_hypothesis_labels({"x", "x"}), InputError);
  CHECK_THROWS_AS(validate_hypothesis_labels({"x", ""}), InputError);
  CHECK_THROWS_AS(validate_hypothesis_labels({"x", "a,b"}), InputError);
  CHECK_THROWS_AS(validate_hypothesis_labels({"x", "a/b"}), InputError);
  CHECK_NOTHROW(validate_hypothesis_labels({"x", "y", "z"}));
  HypothesisSet set{{"x", "y"}, 2};
  CHECK_THROWS_AS(set.validate(), InputError);
}

TEST_CASE("signal models reject bad tables") {
  CHECK_THROWS_AS(two_column({0.5, 0.6}, {0.5, 0.5}), InputError);
  CHECK_THROWS_AS(two_column({1.0, 0.0}, {0.5, 0.5}), InputError);
  CHECK_THROWS_AS(two_column({1.0 - 1e-10, 1e-10}, {0.5, 0.5}), InputError);
  CHECK_THROWS_AS(SignalModel({"a", "b"}, {{{0.5}, {0.5}}}), InputError);
  CHECK_THROWS_AS(SignalModel({"a", "b"}, {}), InputError);
  CHECK_NOTHROW(two_column({1.0 - 1e-9, 1e-9}, {0.5, 0.5}));
}

TEST_CASE("kl divergence reference values") {
  const auto m1 = two_column({0.5, 0.5}, {0.25, 0.75});
  CHECK(kl_divergence(m1, 0, 0, 1) == Approx(kKlHalfVsQuarter).margin(1e-12));
  CHECK(kl_divergence(m1, 0, 1, 0) == Approx(kKlQuarterVsHalf).margin(1e-12));
  CHECK(kl_divergence(m1, 0, 0, 0) == 0.0);
  const auto m2 = two_column({0.9, 0.1}, {0.1, 0.9});
  CHECK(kl_divergence(m2, 0, 0, 1) == Approx(kKlNineTenths).margin(1e-12));
  CHECK(kl_divergence(m2, 0, 1, 0) == Approx(kKlNineTenths).margin(1e-12));
}

TEST_CASE("kl divergence is nonnegative and zero iff columns match") {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const auto model = random_model(rng, 2, 3, 2 + uniform_index(rng, 4));
    for (AgentId i = 0; i < 2; ++i)
      for (Hypothesis a = 0; a < 3; ++a)
        for (Hypothesis b = 0; b < 3; ++b) {
          const double d = kl_divergence(model, i, a, b);
          CHECK(d >= 0.0);
          if (a == b)
            CHECK(d == 0.0);
          else
            CHECK(d > 0.0);
        }
  }
  const auto same = two_column({0.3, 0.7}, {0.3, 0.7});
  CHECK(kl_divergence(same, 0, 0, 1) == 0.0);
}

TEST_CASE("expected log-likelihood ratio is minus the KL divergence") {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const auto model = random_model(rng, 1, 3, 4);
    for (Hypothesis truth = 0; truth < 3; ++truth)
      for (Hypothesis theta = 0; theta < 3; ++theta) {
        double direct = 0.0;
        for (std::size_t w = 0; w < 4; ++w)
          direct += model.likelihood(0, w, truth) * std::log(model.likelihood(0, w, theta) / model.likelihood(0, w, truth));
        const double h = expected_log_ratio(model, 0, theta, truth);
        CHECK(h == Approx(direct).margin(1e-14));
        CHECK(h == Approx(-kl_divergence(model, 0, truth, theta)).margin(1e-14));
        CHECK(h <= 1e-15);
      }
  }
}

TEST_CASE("c0 reference values") {
  CHECK(c0(two_column({0.3, 0.7}, {0.3, 0.7})) == 0.0);
  const auto nine = two_column({0.9, 0.1}, {0.1, 0.9}, 2);
  CHECK(c0(nine) == Approx(kLn9).margin(1e-12));
  CHECK(scan_c0(nine) == Approx(kLn9).margin(1e-12));
  // Ratios across hypotheses are 2 and 2/3; 0.75/0.25 compares two signals
  // under one hypothesis and does not enter the bound.
  const auto half = two_column({0.5, 0.5}, {0.25, 0.75});
  CHECK(c0(half) == Approx(kLn2).margin(1e-12));
  CHECK(scan_c0(half) == Approx(kLn2).margin(1e-12));
}

TEST_CASE("c0 matches an exhaustive scan") {
  Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const auto model = random_model(rng, 3, 2 + uniform_index(rng, 3), 2 + uniform_index(rng, 3));
    CHECK(c0(model) == Approx(scan_c0(model)).margin(1e-14));
  }
}

TEST_CASE("swapping hypotheses exchanges likelihood columns") {
  Rng rng(2);
  const auto model = random_model(rng, 2, 3, 3);
  const auto swapped = model.with_swapped_hypotheses(0, 2);
  for (AgentId i = 0; i < 2; ++i)
    for (std::size_t w = 0; w < 3; ++w) {
      CHECK(swapped.likelihood(i, w, 0) == model.likelihood(i, w, 2));
      CHECK(swapped.likelihood(i, w, 2) == model.likelihood(i, w, 0));
      CHECK(swapped.likelihood(i, w, 1) == model.likelihood(i, w, 1));
      CHECK(swapped.log_likelihood(i, w, 0) == model.log_likelihood(i, w, 2));
    }
}

TEST_CASE("sampling a near point mass") {
  const auto model = two_column({0.999999, 1e-6}, {0.5, 0.5});
  Rng rng(1);
  std::size_t first = 0;
  for (int k = 0; k < 10'000; ++k)
    if (sample_signal(model, 0, 0, rng) == 0) ++first;
  CHECK(first >= 9990);
}

TEST_CASE("sampling a uniform column") {
  const SignalModel model({"a", "b"}, {{{0.25, 0.1}, {0.25, 0.2}, {0.25, 0.3}, {0.25, 0.4}}});
  Rng rng(99);
  std::array<std::size_t, 4> counts{};
  const int draws = 100'000;
  for (int k = 0; k < draws; ++k) ++counts[sample_signal(model, 0, 0, rng)];
  for (auto c : counts) CHECK(std::abs(static_cast<double>(c) / draws - 0.25) <= 0.02);
}

TEST_CASE("sampling is deterministic for a fixed seed") {
  const SignalModel model({"a", "b"}, {{{0.2, 0.1}, {0.3, 0.2}, {0.5, 0.7}}});
  Rng r1 = make_substream(42, 3, 7, StreamPurpose::signal);
  Rng r2 = make_substream(42, 3, 7, StreamPurpose::signal);
  for (int k = 0; k < 1000; ++k) REQUIRE(sample_signal(model, 0, 1, r1) == sample_signal(model, 0, 1, r2));
}

TEST_CASE("substreams differ by every coordinate") {
  const auto base = substream_seed(1, 2, 3, StreamPurpose::signal);
  CHECK(base != substream_seed(2, 2, 3, StreamPurpose::signal));
  CHECK(base != substream_seed(1, 3, 3, StreamPurpose::signal));
  CHECK(base != substream_seed(1, 2, 4, StreamPurpose::signal));
  CHECK(base != substream_seed(1, 2, 3, StreamPurpose::adversary));
}

TEST_CASE("uniform helpers stay in range") {
  Rng rng(5);
  for (int k = 0; k < 10'000; ++k) {
    const double u = uniform01(rng);
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    REQUIRE(uniform_index(rng, 7) < 7);
  }
}

TEST_CASE("cumulative log-likelihood: incremental equals batch over 1000 rounds") {
  Rng rng(31);
  const auto model = random_model(rng, 1, 4, 5);
  CumulativeLogLikelihood cumulative(4);
  std::vector<std::size_t> history;
  for (int t = 0; t < 1000; ++t) {
    const auto s = sample_signal(model, 0, 2, rng);
    history.push_back(s);
    cumulative.observe(model, 0, s);
  }
  CHECK(cumulative.rounds() == 1000);
  for (Hypothesis h = 0; h < 4; ++h) {
    long double batch = 0.0L;
    for (auto s : history) batch += std::log(static_cast<long double>(model.likelihood(0, s, h)));
    CHECK(cumulative[h] == Approx(static_cast<double>(batch)).margin(1e-10));
  }
  CHECK(cumulative.log_ratio(1, 3) == Approx(cumulative[1] - cumulative[3]).margin(1e-12));
}

TEST_CASE("per-round log-likelihood increments are bounded by c0") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const auto model = random_model(rng, 2, 3, 3);
    const double bound = c0(model) + 1e-12;
    for (int t = 0; t < 500; ++t)
      for (AgentId i = 0; i < 2; ++i) {
        const auto s = sample_signal(model, i, 0, rng);
        for (Hypothesis a = 0; a < 3; ++a)
          for (Hypothesis b = 0; b < 3; ++b)
            REQUIRE(std::abs(model.log_likelihood(i, s, a) - model.log_likelihood(i, s, b)) <= bound);
      }
  }
}
