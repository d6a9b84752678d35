#include "mimosa/baselines.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "mimosa/error.hpp"
#include "mimosa/numerics.hpp"

namespace mimosa {

namespace {

int direction_of(long long n_s, long long N_s, long long n_u, long long N_u) {
  const double lhs = static_cast<double>(n_s) * static_cast<double>(N_u);
  const double rhs = static_cast<double>(n_u) * static_cast<double>(N_s);
  return (lhs > rhs) - (lhs < rhs);
}

double xlogx_ratio(double o, double e) { return o > 0.0 ? o * std::log(o / e) : 0.0; }

// G = 2 sum O ln(O/E) over a 2 x M table given as column pairs (stim, unstim).
double g_statistic(std::span<const long long> stim, std::span<const long long> unstim) {
  const double r1 = static_cast<double>(std::accumulate(stim.begin(), stim.end(), 0LL));
  const double r2 = static_cast<double>(std::accumulate(unstim.begin(), unstim.end(), 0LL));
  const double n = r1 + r2;
  double g = 0.0;
  for (std::size_t k = 0; k < stim.size(); ++k) {
    const double c = static_cast<double>(stim[k] + unstim[k]);
    if (c == 0.0) continue;
    g += xlogx_ratio(static_cast<double>(stim[k]), r1 * c / n);
    g += xlogx_ratio(static_cast<double>(unstim[k]), r2 * c / n);
  }
  return std::max(0.0, 2.0 * g);
}

std::vector<double> log_factorial_table(long long n) {
  std::vector<double> lf(static_cast<std::size_t>(n) + 1, 0.0);
  for (long long k = 1; k <= n; ++k)
    lf[static_cast<std::size_t>(k)] =
        lf[static_cast<std::size_t>(k - 1)] + std::log(static_cast<double>(k));
  return lf;
}

// Collapsed 2 x M table: only columns with a positive total.
struct Table {
  std::vector<long long> stim, unstim, cols;
  long long r1 = 0, r2 = 0;
};

Table collapse(const MultiCountPair& y) {
  if (y.n_s.size() != y.n_u.size())
    throw DomainError("count vectors differ in length");
  Table t;
  for (std::size_t k = 0; k < y.n_s.size(); ++k) {
    if (y.n_s[k] < 0 || y.n_u[k] < 0) throw DomainError("counts must be >= 0");
    if (y.n_s[k] + y.n_u[k] == 0) continue;
    t.stim.push_back(y.n_s[k]);
    t.unstim.push_back(y.n_u[k]);
    t.cols.push_back(y.n_s[k] + y.n_u[k]);
    t.r1 += y.n_s[k];
    t.r2 += y.n_u[k];
  }
  return t;
}

int multi_direction(const MultiCountPair& y) {
  // Sign of the largest absolute proportion shift across categories.
  const double ns = static_cast<double>(y.N_s());
  const double nu = static_cast<double>(y.N_u());
  if (ns == 0.0 || nu == 0.0) return 0;
  double best = 0.0;
  for (std::size_t k = 0; k < y.n_s.size(); ++k) {
    const double diff = static_cast<double>(y.n_s[k]) / ns - static_cast<double>(y.n_u[k]) / nu;
    if (std::fabs(diff) > std::fabs(best)) best = diff;
  }
  return (best > 0.0) - (best < 0.0);
}

// Tolerance for "as or less likely than observed" comparisons on log scale.
constexpr double kLogTieTol = 1e-7;

}  // namespace

TestResult fisher_exact(const CountPair& y, Sidedness side) {
  if (y.n_s < 0 || y.n_u < 0 || y.n_s > y.N_s || y.n_u > y.N_u)
    throw DomainError("counts must satisfy 0 <= n <= N");
  TestResult r;
  r.subject_id = y.subject_id;
  r.statistic = static_cast<double>(y.n_s);
  r.direction = direction_of(y.n_s, y.N_s, y.n_u, y.N_u);
  const long long k = y.n_s + y.n_u;  // positive margin
  const long long n = y.N_s + y.N_u;
  const long long lo = std::max(0LL, y.N_s - (n - k));
  const long long hi = std::min(y.N_s, k);
  if (lo == hi) {
    r.p_value = 1.0;
    return r;
  }
  // ln pmf by ratio accumulation from the lower end of the support.
  const std::size_t len = static_cast<std::size_t>(hi - lo + 1);
  std::vector<double> lp(len);
  lp[0] = 0.0;
  const double kd = static_cast<double>(k);
  const double sd = static_cast<double>(y.N_s);
  const double rest = static_cast<double>(n - k - y.N_s);
  for (std::size_t i = 1; i < len; ++i) {
    const double x = static_cast<double>(lo + static_cast<long long>(i) - 1);
    lp[i] = lp[i - 1] + std::log((kd - x) * (sd - x) / ((x + 1.0) * (rest + x + 1.0)));
  }
  const double top = *std::max_element(lp.begin(), lp.end());
  double total = 0.0;
  for (double v : lp) total += std::exp(v - top);
  const std::size_t obs = static_cast<std::size_t>(y.n_s - lo);
  double tail = 0.0;
  if (side == Sidedness::OneSidedIncrease) {
    for (std::size_t i = obs; i < len; ++i) tail += std::exp(lp[i] - top);
  } else {
    const double cut = lp[obs] + kLogTieTol;
    for (std::size_t i = 0; i < len; ++i)
      if (lp[i] <= cut) tail += std::exp(lp[i] - top);
  }
  r.p_value = std::clamp(tail / total, 0.0, 1.0);
  return r;
}

TestResult binomial_lrt(const CountPair& y, Sidedness side) {
  if (y.N_s <= 0 || y.N_u <= 0)
    throw DomainError("likelihood ratio test needs positive totals");
  if (y.n_s < 0 || y.n_u < 0 || y.n_s > y.N_s || y.n_u > y.N_u)
    throw DomainError("counts must satisfy 0 <= n <= N");
  const std::array<long long, 2> stim{y.n_s, y.N_s - y.n_s};
  const std::array<long long, 2> unstim{y.n_u, y.N_u - y.n_u};
  TestResult r;
  r.subject_id = y.subject_id;
  r.statistic = g_statistic(stim, unstim);
  r.direction = direction_of(y.n_s, y.N_s, y.n_u, y.N_u);
  const double p2 = chi_square_sf(r.statistic, 1.0);
  if (side == Sidedness::TwoSided) {
    r.p_value = p2;
  } else {
    r.p_value = r.direction > 0 ? 0.5 * p2 : 1.0 - 0.5 * p2;
  }
  return r;
}

TestResult log_fold_change(const CountPair& y) {
  TestResult r;
  r.subject_id = y.subject_id;
  r.statistic = std::log((static_cast<double>(y.n_s) + 0.5) / (static_cast<double>(y.N_s) + 1.0)) -
                std::log((static_cast<double>(y.n_u) + 0.5) / (static_cast<double>(y.N_u) + 1.0));
  r.direction = (r.statistic > 0.0) - (r.statistic < 0.0);
  r.p_value = 1.0;
  return r;
}

TestResult multinomial_lrt(const MultiCountPair& y) {
  const Table t = collapse(y);
  TestResult r;
  r.subject_id = y.subject_id;
  r.direction = multi_direction(y);
  if (t.cols.size() < 2 || t.r1 == 0 || t.r2 == 0) {
    r.statistic = 0.0;
    r.p_value = 1.0;
    return r;
  }
  r.statistic = g_statistic(t.stim, t.unstim);
  r.p_value = chi_square_sf(r.statistic, static_cast<double>(t.cols.size() - 1));
  return r;
}

double count_tables(const MultiCountPair& y) {
  const Table t = collapse(y);
  // ways[s]: number of partial stim rows summing to s; box-kernel convolution.
  std::vector<double> ways(static_cast<std::size_t>(t.r1) + 1, 0.0);
  ways[0] = 1.0;
  for (long long c : t.cols) {
    std::vector<double> next(ways.size(), 0.0);
    double window = 0.0;
    for (std::size_t s = 0; s < ways.size(); ++s) {
      window += ways[s];
      if (static_cast<long long>(s) - c - 1 >= 0)
        window -= ways[s - static_cast<std::size_t>(c) - 1];
      next[s] = window;
    }
    ways = std::move(next);
  }
  // Overflow surfaces as inf or NaN.
  const double v = ways.back();
  return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

TestResult multi_fisher(const MultiCountPair& y, SeededRng& rng,
                        const MultiFisherOptions& opts) {
  const Table t = collapse(y);
  TestResult r;
  r.subject_id = y.subject_id;
  r.direction = multi_direction(y);
  const std::size_t m = t.cols.size();
  if (m < 2 || t.r1 == 0 || t.r2 == 0) {
    r.p_value = 1.0;
    return r;
  }
  const long long n = t.r1 + t.r2;
  const std::vector<double> lf = log_factorial_table(n);
  auto cell = [&](long long c, long long x) {
    return -lf[static_cast<std::size_t>(x)] - lf[static_cast<std::size_t>(c - x)];
  };
  // ln P(table) up to a margin-only constant.
  double obs = 0.0;
  for (std::size_t k = 0; k < m; ++k) obs += cell(t.cols[k], t.stim[k]);
  const double constant = lf[static_cast<std::size_t>(t.r1)] +
                          lf[static_cast<std::size_t>(t.r2)] -
                          lf[static_cast<std::size_t>(n)] +
                          [&] {
                            double s = 0.0;
                            for (long long c : t.cols) s += lf[static_cast<std::size_t>(c)];
                            return s;
                          }();
  r.statistic = obs + constant;
  const double cut = obs + kLogTieTol;

  if (count_tables(y) <= opts.enumeration_limit) {
    // Depth-first enumeration; suffix capacities prune infeasible branches.
    std::vector<long long> suffix(m + 1, 0);
    for (std::size_t k = m; k-- > 0;) suffix[k] = suffix[k + 1] + t.cols[k];
    double le = 0.0, all = 0.0;
    auto rec = [&](auto&& self, std::size_t k, long long left, double acc) -> void {
      if (k + 1 == m) {
        const double v = acc + cell(t.cols[k], left);
        const double p = std::exp(v - obs);
        all += p;
        if (v <= cut) le += p;
        return;
      }
      const long long lo = std::max(0LL, left - suffix[k + 1]);
      const long long hi = std::min(t.cols[k], left);
      for (long long x = lo; x <= hi; ++x)
        self(self, k + 1, left - x, acc + cell(t.cols[k], x));
    };
    rec(rec, 0, t.r1, 0.0);
    r.p_value = std::clamp(le / all, 0.0, 1.0);
    return r;
  }

  // Monte Carlo: fill columns smallest first, the largest is determined.
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return t.cols[a] < t.cols[b]; });
  std::size_t hits = 0;
  for (std::size_t b = 0; b < opts.resamples; ++b) {
    long long good = t.r1, bad = t.r2;
    double v = 0.0;
    for (std::size_t j = 0; j + 1 < m; ++j) {
      const long long c = t.cols[order[j]];
      const long long x = sample_hypergeometric(rng, good, bad, c, lf);
      v += cell(c, x);
      good -= x;
      bad -= c - x;
    }
    v += cell(t.cols[order[m - 1]], good);
    if (v <= cut) ++hits;
  }
  r.p_value = (1.0 + static_cast<double>(hits)) /
              (static_cast<double>(opts.resamples) + 1.0);
  return r;
}

MultiTestResults multi_category_test(const MultiCountPair& y, SeededRng& rng,
                                     const MultiFisherOptions& opts) {
  MultiTestResults out;
  out.lrt = multinomial_lrt(y);
  out.fisher_exact_enumeration = count_tables(y) <= opts.enumeration_limit;
  out.fisher = multi_fisher(y, rng, opts);
  return out;
}

std::vector<double> adjust_pvalues(std::span<const double> ps, PAdjustMethod) {
  for (double p : ps)
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("p-values must lie in [0, 1]");
  const std::size_t n = ps.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return ps[a] < ps[b]; });
  std::vector<double> q(n);
  double running = 1.0;
  for (std::size_t r = n; r-- > 0;) {
    const double v = ps[order[r]] * static_cast<double>(n) / static_cast<double>(r + 1);
    running = std::min(running, v);
    q[order[r]] = running;
  }
  return q;
}

}  // namespace mimosa
