#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "mimosa/baselines.hpp"
#include "mimosa/em.hpp"
#include "mimosa/error.hpp"
#include "mimosa/evaluate.hpp"
#include "mimosa/simulate.hpp"

using namespace mimosa;

namespace {
// Asymptotic Kolmogorov tail for a KS statistic d with effective size n.
double ks_pvalue(double d, double n) {
  const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) s += 2.0 * (k % 2 ? 1 : -1) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::clamp(s, 0.0, 1.0);
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::fabs(double(i) / a.size() - double(j) / b.size()));
  }
  const double ne = double(a.size()) * b.size() / (a.size() + b.size());
  return ks_pvalue(d, ne);
}

double ks_uniform(std::vector<double> p) {
  std::sort(p.begin(), p.end());
  const double n = double(p.size());
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    d = std::max({d, (i + 1) / n - p[i], p[i] - i / n});
  return ks_pvalue(d, n);
}
}  // namespace

TEST_CASE("univariate simulation") {
  SUBCASE("reproducible from the seed") {
    SimSpec spec;
    spec.n_subjects = 50;
    const auto a = simulate_replicates(spec);
    const auto b = simulate_replicates(spec);
    REQUIRE(a.size() == 10);
    for (std::size_t r = 0; r < a.size(); ++r) {
      CHECK(a[r].records == b[r].records);
      CHECK(a[r].true_z == b[r].true_z);
    }
    CHECK_FALSE(a[0].records == a[1].records);
  }
  SUBCASE("w = 0: stimulated and unstimulated counts share a distribution") {
    SimSpec spec;
    spec.n_subjects = 5000;
    spec.w = 0.0;
    SeededRng rng(1, 1);
    const auto d = simulate_univariate(spec, rng);
    std::vector<double> s, u;
    for (const auto& y : d.records) s.push_back(double(y.n_s)), u.push_back(double(y.n_u));
    CHECK(std::all_of(d.true_z.begin(), d.true_z.end(), [](int z) { return z == 0; }));
    CHECK(ks_two_sample(s, u) > 0.01);
  }
  SUBCASE("w = 1, two-sided, five-fold effect") {
    SimSpec spec;
    spec.n_subjects = 10000;
    spec.w = 1.0;
    spec.sidedness = Sidedness::TwoSided;
    SeededRng rng(2, 2);
    const auto d = simulate_univariate(spec, rng);
    double s = 0, u = 0;
    for (const auto& y : d.records) s += double(y.n_s), u += double(y.n_u);
    CHECK(s / u == doctest::Approx(5.0).epsilon(0.1));
  }
  SUBCASE("one-sided responders satisfy the constraint in expectation") {
    SimSpec spec;
    spec.w = 1.0;
    spec.hypers = {5, 5, 5, 5, 1.0};
    spec.n_subjects = 2000;
    SeededRng rng(3, 3);
    const auto d = simulate_univariate(spec, rng);
    int up = 0;
    for (const auto& y : d.records) up += y.n_s > y.n_u;
    CHECK(up > 0.85 * 2000);
  }
  SUBCASE("degenerate one-sided constraint") {
    SimSpec spec;
    spec.hypers = {1e6, 1, 1, 1e6, 0.6};
    SeededRng rng(4, 4);
    CHECK_THROWS_AS(simulate_univariate(spec, rng), DegenerateConstraintError);
  }
  SUBCASE("fit recovers the weight") {
    SimSpec spec;
    spec.sidedness = Sidedness::TwoSided;
    spec.w = 0.4;
    SeededRng rng(5, 5);
    const auto d = simulate_univariate(spec, rng);
    CHECK(std::fabs(fit_em(d.records, EmConfig{}).hypers.w - 0.4) <= 0.1);
  }
}

TEST_CASE("truncated normal moment matching") {
  SUBCASE("uniform target") {
    const auto p = match_truncated_normal(0.5, 1.0 / 12.0);
    CHECK(truncated_normal_mean(p) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(truncated_normal_variance(p) == doctest::Approx(1.0 / 12.0).epsilon(1e-6));
    SeededRng rng(6, 6);
    double s = 0, s2 = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      const double x = sample_truncated_normal(rng, p.mu, p.sigma, 0.0, 1.0);
      s += x, s2 += x * x;
    }
    const double m = s / n;
    CHECK(m == doctest::Approx(0.5).epsilon(0.01));
    CHECK(s2 / n - m * m == doctest::Approx(1.0 / 12.0).epsilon(0.01));
  }
  SUBCASE("sharply peaked target") {
    const double a = 50, b = 5e4, mean = a / (a + b);
    const double var = mean * (1 - mean) / (a + b + 1);
    const auto p = match_truncated_normal(mean, var);
    SeededRng rng(7, 7);
    double s = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) s += sample_truncated_normal(rng, p.mu, p.sigma, 0.0, 1.0);
    CHECK(s / n == doctest::Approx(mean).epsilon(0.02));
  }
  SUBCASE("impossible moments") {
    CHECK_THROWS_AS(match_truncated_normal(0.5, 0.3), ParameterError);
  }
  SUBCASE("misspecified data still favours the mixture model") {
    SimSpec spec;
    spec.generator = Generator::TruncNormalMatched;
    spec.sidedness = Sidedness::TwoSided;
    SeededRng rng(8, 8);
    const auto d = simulate_misspecified(spec, rng);
    REQUIRE(d.records.size() == 200);
    const EmFit fit = fit_em(d.records, EmConfig{});
    std::vector<double> fisher;
    for (const auto& y : d.records)
      fisher.push_back(-std::log(fisher_exact(y, Sidedness::TwoSided).p_value));
    CHECK(roc(fit.responsibilities, d.true_z).auc >= roc(fisher, d.true_z).auc);
  }
}

TEST_CASE("multivariate simulation") {
  SUBCASE("fixture hypers") {
    const auto h = multi_hypers(fixture_multi_spec());
    CHECK(h.alpha_u.size() == 8);
    CHECK(h.alpha_s[1] - h.alpha_u[1] == doctest::Approx(2000 * 2.5e-3));
    MultiSimSpec bad = fixture_multi_spec();
    bad.effect_deltas[2] = -0.01;
    CHECK_THROWS_AS(multi_hypers(bad), ParameterError);
  }
  SUBCASE("zero effects: null p-values are uniform") {
    MultiSimSpec spec;
    spec.mean_u = {0.4, 0.3, 0.2, 0.1};
    spec.effect_deltas = {0, 0, 0, 0};
    spec.w = 0.0;
    spec.n_subjects = 2000;
    const auto h = multi_hypers(spec);
    CHECK(h.alpha_s == h.alpha_u);
    SeededRng rng(9, 9);
    const auto d = simulate_multivariate(spec, rng);
    std::vector<double> ps;
    for (const auto& y : d.records) ps.push_back(multinomial_lrt(y).p_value);
    CHECK(ks_uniform(ps) > 0.01);
  }
  SUBCASE("M = 2 matches the univariate simulator in distribution") {
    MultiSimSpec m;
    m.mean_u = {0.3, 0.7};
    m.effect_deltas = {0.1, -0.1};
    m.concentration = 2000;
    m.n_subjects = 10000;
    SimSpec u;
    u.hypers = {600, 1400, 800, 1200, 0.6};
    u.sidedness = Sidedness::TwoSided;
    u.total_counts = m.total_counts;
    u.n_subjects = 10000;
    SeededRng r1(10, 1), r2(10, 2);
    const auto dm = simulate_multivariate(m, r1);
    const auto du = simulate_univariate(u, r2);
    std::vector<double> a, b;
    for (const auto& y : dm.records) a.push_back(double(y.n_s[0]));
    for (const auto& y : du.records) b.push_back(double(y.n_s));
    CHECK(ks_two_sample(a, b) > 0.01);
  }
  SUBCASE("reproducible") {
    MultiSimSpec spec = fixture_multi_spec();
    spec.n_subjects = 30;
    spec.replicates = 2;
    const auto a = simulate_multi_replicates(spec), b = simulate_multi_replicates(spec);
    CHECK(a[1].records == b[1].records);
  }
}
