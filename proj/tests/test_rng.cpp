#include <cmath>
#include <numeric>
#include <variant>

#include "doctest.h"
#include "mimosa/error.hpp"
#include "mimosa/rng.hpp"

using namespace mimosa;

namespace {
template <class F>
std::pair<double, double> moments(int n, F draw) {
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = draw();
    s += x;
    s2 += x * x;
  }
  const double m = s / n;
  return {m, s2 / n - m * m};
}
}  // namespace

TEST_CASE("streams are deterministic and distinct") {
  SeededRng a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  bool differs_c = false, differs_d = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    differs_c |= x != c.next_u64();
    differs_d |= x != d.next_u64();
  }
  CHECK(differs_c);
  CHECK(differs_d);
  CHECK(stream_key("z") == stream_key("z"));
  CHECK(stream_key("z") != stream_key("w"));
  CHECK(combine_keys(1, 2) != combine_keys(2, 1));
}

TEST_CASE("uniform lies in [0, 1)") {
  SeededRng r(1, 1);
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("Beta(1,1) mean") {
  SeededRng r(2, 2);
  const auto [m, v] = moments(100000, [&] { return sample_beta(r, 1, 1); });
  CHECK(std::fabs(m - 0.5) < 0.005);
  CHECK(std::fabs(v - 1.0 / 12.0) < 0.002);
}

TEST_CASE("gamma moments, including small shapes") {
  for (double k : {0.05, 0.7, 3.0, 250.0}) {
    SeededRng r(3, stream_key("gamma"));
    const int n = 200000;
    const auto [m, v] = moments(n, [&] { return sample_gamma(r, k); });
    CHECK(std::fabs(m - k) < 5 * std::sqrt(k / n));
    CHECK(v == doctest::Approx(k).epsilon(0.05));
  }
  SeededRng r(3, 3);
  CHECK_THROWS_AS(sample_gamma(r, 0.0), DomainError);
}

TEST_CASE("Dirichlet draws sum to one") {
  SeededRng r(4, 4);
  const std::vector<double> alpha{1, 1, 1, 1};
  for (int i = 0; i < 1000; ++i) {
    const auto p = sample_dirichlet(r, alpha);
    CHECK(std::fabs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0) < 1e-12);
  }
}

TEST_CASE("binomial and multinomial") {
  SeededRng r(5, 5);
  for (auto [n, p] : {std::pair{20LL, 0.3}, {5000LL, 2e-4}, {100000LL, 0.45}}) {
    const int draws = 50000;
    const auto [m, v] = moments(draws, [&] { return double(sample_binomial(r, n, p)); });
    const double mu = n * p, var = n * p * (1 - p);
    CHECK(std::fabs(m - mu) < 5 * std::sqrt(var / draws));
    CHECK(v == doctest::Approx(var).epsilon(0.05));
  }
  CHECK(sample_binomial(r, 10, 0.0) == 0);
  CHECK(sample_binomial(r, 10, 1.0) == 10);
  const std::vector<double> probs{0.2, 0.5, 0.3};
  for (int i = 0; i < 100; ++i) {
    const auto c = sample_multinomial(r, 1500, probs);
    CHECK(std::accumulate(c.begin(), c.end(), 0LL) == 1500);
  }
}

TEST_CASE("hypergeometric mean") {
  SeededRng r(6, 6);
  const int draws = 50000;
  const auto [m, v] = moments(draws, [&] { return double(sample_hypergeometric(r, 30, 70, 25)); });
  CHECK(std::fabs(m - 7.5) < 5 * std::sqrt(v / draws));
}

TEST_CASE("truncated normal") {
  SeededRng r(7, 7);
  const auto [m, v] = moments(100000, [&] { return sample_truncated_normal(r, 0.5, 10.0, 0.0, 1.0); });
  CHECK(std::fabs(m - 0.5) < 0.01);
  // Far tail: mass concentrated at the lower bound.
  for (int i = 0; i < 1000; ++i) {
    const double x = sample_truncated_normal(r, -3.0, 0.1, 0.0, 1.0);
    REQUIRE(x > 0.0);
    REQUIRE(x < 1.0);
  }
}

TEST_CASE("distribution variant dispatch") {
  SeededRng a(8, 8), b(8, 8);
  const Draw d = sample(BetaDist{2, 3}, a);
  CHECK(std::get<double>(d) == sample_beta(b, 2, 3));
  const Draw m = sample(MultinomialDist{10, {0.5, 0.5}}, a);
  CHECK(std::get<std::vector<long long>>(m).size() == 2);
}
