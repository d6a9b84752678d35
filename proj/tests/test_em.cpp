#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "mimosa/em.hpp"
#include "mimosa/error.hpp"
#include "mimosa/simulate.hpp"

using namespace mimosa;

namespace {
std::vector<CountPair> small_fixture(std::uint64_t seed, Sidedness side, int n = 60) {
  SimSpec spec;
  spec.n_subjects = n;
  spec.sidedness = side;
  spec.seed = seed;
  SeededRng rng(seed, stream_key("em-test"));
  return simulate_univariate(spec, rng).records;
}
}  // namespace

TEST_CASE("method of moments formulas") {
  const std::vector<double> p{0.2, 0.3, 0.25};
  const double m = 0.25;
  const double v = ((0.05 * 0.05) * 2) / 2.0;  // sample variance, n - 1 denominator
  const double k = m * (1 - m) / v - 1;
  const BetaShapes s = method_of_moments(p);
  CHECK(s.alpha == doctest::Approx(m * k).epsilon(1e-10));
  CHECK(s.beta == doctest::Approx((1 - m) * k).epsilon(1e-10));
}

TEST_CASE("initialization") {
  EmConfig cfg;
  SUBCASE("no differences triggers the fold-change fallback") {
    std::vector<CountPair> same;
    for (int i = 0; i < 12; ++i) same.push_back({"s" + std::to_string(i), 5 + i, 5000, 5 + i, 5000});
    const auto init = initialize(same, cfg);
    CHECK(init.fallback_used);
  }
  SUBCASE("separated groups are recovered") {
    SimSpec spec;
    spec.hypers = {20, 2e4, 100, 2e4, 0.5};  // p_u about 1e-3, p_s about 5e-3
    spec.sidedness = Sidedness::TwoSided;
    SeededRng rng(3, 3);
    const auto d = simulate_univariate(spec, rng);
    const auto init = initialize(d.records, cfg);
    int hit = 0, pos = 0;
    for (std::size_t i = 0; i < d.true_z.size(); ++i)
      if (d.true_z[i]) ++pos, hit += init.responsibilities[i] == 1.0;
    CHECK(hit >= 0.9 * pos);
  }
  SUBCASE("too few subjects") {
    const std::vector<CountPair> three(3, CountPair{"a", 1, 10, 1, 10});
    CHECK_THROWS_AS(initialize(three, cfg), ValidationError);
  }
}

TEST_CASE("m_step weight update") {
  const auto data = small_fixture(4, Sidedness::TwoSided, 10);
  EmConfig cfg;
  const BetaBinHypers start{8, 4e4, 40, 4e4, 0.6};
  const std::vector<double> zeros(10, 0.0), halves(10, 0.5);
  const auto h0 = m_step(zeros, data, start, cfg);
  CHECK(h0.w == 0.0);
  // The stimulated shapes carry no weight, so only the pooled fit matters.
  CHECK(expected_complete_loglik(h0, zeros, data, Sidedness::TwoSided) >=
        expected_complete_loglik(start, zeros, data, Sidedness::TwoSided));
  CHECK(m_step(halves, data, start, cfg).w == doctest::Approx(0.5));
}

TEST_CASE("m_step does not decrease the expected complete-data log-likelihood") {
  for (Sidedness side : {Sidedness::TwoSided, Sidedness::OneSidedIncrease}) {
    const auto data = small_fixture(5, side, 40);
    EmConfig cfg;
    cfg.sidedness = side;
    const auto init = initialize(data, cfg);
    const auto r = e_step(init.hypers, data, side);
    const auto next = m_step(r, data, init.hypers, cfg);
    CHECK(expected_complete_loglik(next, r, data, side) >=
          expected_complete_loglik(init.hypers, r, data, side) - 1e-9);
  }
}

TEST_CASE("fit_em") {
  SUBCASE("null data gives a small weight") {
    SimSpec spec;
    spec.w = 0.0;
    spec.sidedness = Sidedness::TwoSided;
    SeededRng rng(6, 6);
    const auto d = simulate_univariate(spec, rng);
    const EmFit fit = fit_em(d.records, EmConfig{});
    CHECK(fit.hypers.w < 0.1);
    for (std::size_t k = 1; k < fit.observed_loglik_trace.size(); ++k)
      CHECK(fit.observed_loglik_trace[k] >= fit.observed_loglik_trace[k - 1] - 1e-8);
  }
  SUBCASE("weight recovered on a 60% response design") {
    SimSpec spec;
    spec.sidedness = Sidedness::TwoSided;
    SeededRng rng(7, 7);
    const auto d = simulate_univariate(spec, rng);
    const EmFit fit = fit_em(d.records, EmConfig{});
    CHECK(fit.converged);
    CHECK(fit.hypers.w >= 0.5);
    CHECK(fit.hypers.w <= 0.7);
  }
}

TEST_CASE("input order only permutes the output") {
  auto data = small_fixture(8, Sidedness::TwoSided, 40);
  EmConfig cfg;
  const EmFit a = fit_em(data, cfg);
  std::vector<std::size_t> perm(data.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  std::rotate(perm.begin(), perm.begin() + 7, perm.end());
  std::vector<CountPair> shuffled;
  for (std::size_t j : perm) shuffled.push_back(data[j]);
  const EmFit b = fit_em(shuffled, cfg);
  CHECK(a.hypers.w == b.hypers.w);
  CHECK(a.hypers.alpha_u == b.hypers.alpha_u);
  for (std::size_t j = 0; j < perm.size(); ++j)
    CHECK(b.responsibilities[j] == a.responsibilities[perm[j]]);
}

TEST_CASE("multivariate EM is monotone on a small design") {
  MultiSimSpec spec = fixture_multi_spec();
  spec.n_subjects = 40;
  SeededRng rng(9, 9);
  const auto d = simulate_multivariate(spec, rng);
  EmConfig cfg;
  cfg.max_iters = 15;
  const EmFitMv fit = fit_em(d.records, cfg);
  for (std::size_t k = 1; k < fit.observed_loglik_trace.size(); ++k)
    CHECK(fit.observed_loglik_trace[k] >= fit.observed_loglik_trace[k - 1] - 1e-8);
}

TEST_CASE("config validation") {
  EmConfig cfg;
  cfg.max_iters = 0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = {};
  cfg.init_pvalue_threshold = 1.5;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
}
