// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails. Pass criterion numbers as
// arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mimosa/baselines.hpp"
#include "mimosa/betabin.hpp"
#include "mimosa/dirmult.hpp"
#include "mimosa/em.hpp"
#include "mimosa/evaluate.hpp"
#include "mimosa/mcmc.hpp"
#include "mimosa/simulate.hpp"
#include "oracles.hpp"

using namespace mimosa;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
  std::optional<double> timed_s;  // when set, the budget applies to this instead of wall time
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double neg_log_p(double p) {
  return p > 0.0 ? -std::log(p) : std::numeric_limits<double>::infinity();
}

double auc_of(const std::vector<double>& scores, const std::vector<int>& labels) {
  return roc(scores, labels).auc;
}

double log_uniform(std::mt19937_64& g, double lo, double hi) {
  return std::exp(std::uniform_real_distribution<double>(std::log(lo), std::log(hi))(g));
}

double beta_draw(std::mt19937_64& g, double a, double b) {
  const double x = std::gamma_distribution<double>(a, 1.0)(g);
  const double y = std::gamma_distribution<double>(b, 1.0)(g);
  return x / (x + y);
}

long long binom_draw(std::mt19937_64& g, long long n, double p) {
  return std::binomial_distribution<long long>(n, std::clamp(p, 0.0, 1.0))(g);
}

// --- 1 -------------------------------------------------------------------

Verdict marginal_oracles() {
  std::mt19937_64 g(20240101);
  double worst_two = 0.0, worst_one = 0.0;
  // The budget covers the library; the oracles are deliberately slow.
  double library_s = 0.0;
  for (int f = 0; f < 50; ++f) {
    BetaBinHypers h;
    long long Ns, Nu;
    if (f % 2 == 0) {  // flow-cytometry-like magnitudes
      h = {log_uniform(g, 1.0, 60.0), log_uniform(g, 1e3, 1e5), log_uniform(g, 1.0, 60.0),
           log_uniform(g, 1e3, 1e5), 0.5};
      Ns = std::uniform_int_distribution<long long>(1000, 20000)(g);
      Nu = std::uniform_int_distribution<long long>(1000, 20000)(g);
    } else {
      h = {log_uniform(g, 0.3, 300.0), log_uniform(g, 0.3, 300.0), log_uniform(g, 0.3, 300.0),
           log_uniform(g, 0.3, 300.0), 0.5};
      Ns = std::uniform_int_distribution<long long>(1, 400)(g);
      Nu = std::uniform_int_distribution<long long>(1, 400)(g);
    }
    const double pu = beta_draw(g, h.alpha_u, h.beta_u);
    const double ps = f % 3 == 0 ? pu : beta_draw(g, h.alpha_s, h.beta_s);
    const CountPair y{"F", binom_draw(g, Ns, ps), Ns, binom_draw(g, Nu, pu), Nu};

    const double o0 = oracle::log_L0(h.alpha_u, h.beta_u, y.n_s, y.N_s, y.n_u, y.N_u);
    const double o1 = oracle::log_L1_two_sided(h.alpha_u, h.beta_u, h.alpha_s, h.beta_s, y.n_s,
                                               y.N_s, y.n_u, y.N_u);
    const double o2 = oracle::log_L1_one_sided(h.alpha_u, h.beta_u, h.alpha_s, h.beta_s, y.n_s,
                                               y.N_s, y.n_u, y.N_u);
    const auto t0 = std::chrono::steady_clock::now();
    const double l0 = log_L0(h, y), l1 = log_L1_two_sided(h, y), l2 = log_L1_one_sided(h, y);
    library_s += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    // Relative error of the likelihood = absolute error of its log.
    worst_two = std::max({worst_two, std::fabs(l0 - o0), std::fabs(l1 - o1)});
    worst_one = std::max(worst_one, std::fabs(l2 - o2));
  }
  return {worst_two <= 1e-6 && worst_one <= 1e-5,
          fmt("max rel err L0/L1 two-sided %.2e (tol 1e-6), L1 one-sided %.2e (tol 1e-5)",
              worst_two, worst_one),
          library_s};
}

// --- 2 -------------------------------------------------------------------

std::vector<std::vector<long long>> compositions(long long total, std::size_t parts) {
  if (parts == 1) return {{total}};
  std::vector<std::vector<long long>> out;
  for (long long first = 0; first <= total; ++first)
    for (auto rest : compositions(total - first, parts - 1)) {
      rest.insert(rest.begin(), first);
      out.push_back(rest);
    }
  return out;
}

Verdict normalization() {
  double worst = 0.0;
  const std::vector<BetaBinHypers> hypers = {
      {1.0, 1.0, 1.0, 1.0, 0.5}, {0.4, 2.5, 3.0, 1.2, 0.5}, {8.0, 40.0, 20.0, 15.0, 0.5}};
  const std::vector<std::pair<long long, long long>> sizes = {{30, 30}, {30, 7}, {1, 25}, {12, 18}};
  for (const auto& h : hypers)
    for (auto [Ns, Nu] : sizes)
      for (Sidedness side : {Sidedness::TwoSided, Sidedness::OneSidedIncrease}) {
        double s0 = 0.0, s1 = 0.0;
        for (long long ns = 0; ns <= Ns; ++ns)
          for (long long nu = 0; nu <= Nu; ++nu) {
            const CountPair y{"x", ns, Ns, nu, Nu};
            s0 += std::exp(log_L0(h, y));
            s1 += std::exp(log_L1(h, y, side));
          }
        worst = std::max({worst, std::fabs(s0 - 1.0), std::fabs(s1 - 1.0)});
      }
  const std::vector<DirMultHypers> mv = {{{1.0, 1.0, 1.0}, {2.0, 0.5, 3.0}, 0.5},
                                         {{0.3, 4.0, 9.0}, {7.0, 7.0, 0.8}, 0.5}};
  for (const auto& h : mv)
    for (long long N : {1LL, 4LL, 6LL}) {
      const auto comps = compositions(N, 3);
      double s0 = 0.0, s1 = 0.0;
      for (const auto& cs : comps)
        for (const auto& cu : comps) {
          const MultiCountPair y{"x", cs, cu, {"a", "b", "c"}};
          s0 += std::exp(log_L0_mv(h, y));
          s1 += std::exp(log_L1_mv(h, y));
        }
      worst = std::max({worst, std::fabs(s0 - 1.0), std::fabs(s1 - 1.0)});
    }
  return {worst <= 1e-8, fmt("max |sum - 1| = %.2e over L0 and L1, both models (tol 1e-8)", worst)};
}

// --- 3 -------------------------------------------------------------------

Verdict em_monotone() {
  std::mt19937_64 g(777);
  double worst_drop = 0.0;
  int fits = 0;
  for (int f = 0; f < 30; ++f) {
    const int kind = f % 3;  // 0 two-sided, 1 one-sided, 2 multivariate
    const int n = std::uniform_int_distribution<int>(20, 50)(g);
    EmConfig cfg;
    std::vector<double> trace;
    if (kind < 2) {
      cfg.sidedness = kind == 0 ? Sidedness::TwoSided : Sidedness::OneSidedIncrease;
      const double au = log_uniform(g, 2.0, 30.0), bu = au * log_uniform(g, 20.0, 500.0);
      const double effect = log_uniform(g, 1.5, 6.0);
      const long long N = std::uniform_int_distribution<long long>(300, 3000)(g);
      std::vector<CountPair> data;
      for (int i = 0; i < n; ++i) {
        const double pu = beta_draw(g, au, bu);
        const double ps = (i % 2) ? std::min(0.99, pu * effect) : pu;
        data.push_back({"S" + std::to_string(i), binom_draw(g, N, ps), N, binom_draw(g, N, pu), N});
      }
      auto init = initialize(data, cfg);
      BetaBinHypers h = init.hypers;
      std::vector<double> r = e_step(h, data, cfg.sidedness);
      trace.push_back(observed_loglik(h, data, cfg.sidedness));
      for (int it = 0; it < 12; ++it) {
        h = m_step(r, data, h, cfg);
        r = e_step(h, data, cfg.sidedness);
        trace.push_back(observed_loglik(h, data, cfg.sidedness));
      }
    } else {
      const std::size_t m = f % 2 ? 3 : 4;
      std::vector<double> au(m);
      for (double& a : au) a = log_uniform(g, 2.0, 200.0);
      const long long N = std::uniform_int_distribution<long long>(200, 1500)(g);
      std::vector<MultiCountPair> data;
      std::vector<std::string> labels;
      for (std::size_t k = 0; k < m; ++k) labels.push_back("c" + std::to_string(k));
      for (int i = 0; i < n; ++i) {
        auto draw = [&](const std::vector<double>& a) {
          std::vector<double> p(m);
          double s = 0.0;
          for (std::size_t k = 0; k < m; ++k) s += p[k] = std::gamma_distribution<double>(a[k])(g);
          std::vector<long long> c(m, 0);
          long long left = N;
          double mass = 1.0;
          for (std::size_t k = 0; k + 1 < m; ++k) {
            c[k] = binom_draw(g, left, std::min(1.0, p[k] / s / mass));
            left -= c[k];
            mass -= p[k] / s;
          }
          c[m - 1] = left;
          return c;
        };
        std::vector<double> as = au;
        if (i % 2) as[0] *= 3.0;
        data.push_back({"S" + std::to_string(i), draw(as), draw(au), labels});
      }
      auto init = initialize(data, cfg);
      DirMultHypers h = init.hypers;
      std::vector<double> r = e_step(h, data);
      trace.push_back(observed_loglik(h, data));
      for (int it = 0; it < 12; ++it) {
        h = m_step(r, data, h, cfg);
        r = e_step(h, data);
        trace.push_back(observed_loglik(h, data));
      }
    }
    ++fits;
    for (std::size_t k = 1; k < trace.size(); ++k)
      worst_drop = std::max(worst_drop, trace[k - 1] - trace[k]);
  }
  return {worst_drop <= 1e-8,
          fmt("%d fits x 12 EM steps; largest log-likelihood decrease %.2e (tol 1e-8)", fits,
              worst_drop)};
}

// --- 4, 5, 7: shared one-sided replicates -------------------------------

struct OneSidedStudy {
  std::vector<LabelledDataset> reps;
  std::vector<EmFit> em;
  std::vector<std::vector<TestResult>> fisher;
  std::vector<std::vector<TestResult>> lfc;
};

const OneSidedStudy& one_sided_study() {
  static std::optional<OneSidedStudy> study;
  if (study) return *study;
  OneSidedStudy s;
  SimSpec spec;  // I = 200, w = 0.6, N = 5000, fixture hypers, one-sided
  spec.seed = 4;
  s.reps = simulate_replicates(spec);
  EmConfig cfg;
  cfg.sidedness = Sidedness::OneSidedIncrease;
  for (const auto& d : s.reps) {
    s.em.push_back(fit_em(d.records, cfg));
    std::vector<TestResult> f, l;
    for (const auto& y : d.records) {
      f.push_back(fisher_exact(y, Sidedness::OneSidedIncrease));
      l.push_back(log_fold_change(y));
    }
    s.fisher.push_back(std::move(f));
    s.lfc.push_back(std::move(l));
  }
  study = std::move(s);
  return *study;
}

Verdict one_sided_reproduction() {
  const OneSidedStudy& s = one_sided_study();
  std::vector<double> a_em, a_f, a_l;
  int w_ok = 0;
  for (std::size_t r = 0; r < s.reps.size(); ++r) {
    const auto& z = s.reps[r].true_z;
    std::vector<double> sf, sl;
    for (const auto& t : s.fisher[r]) sf.push_back(neg_log_p(t.p_value));
    for (const auto& t : s.lfc[r]) sl.push_back(t.statistic);
    a_em.push_back(auc_of(s.em[r].responsibilities, z));
    a_f.push_back(auc_of(sf, z));
    a_l.push_back(auc_of(sl, z));
    if (s.em[r].hypers.w >= 0.5 && s.em[r].hypers.w <= 0.7) ++w_ok;
  }
  const bool pass = mean(a_em) >= mean(a_f) && mean(a_em) >= mean(a_l) && w_ok >= 8;
  return {pass, fmt("mean AUC EM %.4f, Fisher %.4f, LFC %.4f; w-hat in [0.5, 0.7] in %d/10",
                    mean(a_em), mean(a_f), mean(a_l), w_ok)};
}

Verdict fdr_calibration() {
  const OneSidedStudy& s = one_sided_study();
  const std::vector<double> levels = {0.05, 0.10, 0.20};
  std::vector<double> obs_m(3, 0.0), obs_f(3, 0.0);
  for (std::size_t r = 0; r < s.reps.size(); ++r) {
    const auto& z = s.reps[r].true_z;
    std::vector<double> ps;
    for (const auto& t : s.fisher[r]) ps.push_back(t.p_value);
    const auto fm = observed_vs_nominal(calls_from_posterior(s.em[r].responsibilities, levels),
                                        levels, z);
    const auto ff = observed_vs_nominal(calls_from_qvalues(adjust_pvalues(ps), levels), levels, z);
    for (int k = 0; k < 3; ++k) {
      obs_m[k] += fm.observed[k] / static_cast<double>(s.reps.size());
      obs_f[k] += ff.observed[k] / static_cast<double>(s.reps.size());
    }
  }
  bool within = true, fisher_closer_everywhere = true;
  std::string detail;
  for (int k = 0; k < 3; ++k) {
    const double em_gap = std::fabs(obs_m[k] - levels[k]);
    const double f_gap = std::fabs(obs_f[k] - levels[k]);
    within = within && em_gap <= 0.10;
    fisher_closer_everywhere = fisher_closer_everywhere && f_gap < em_gap;
    detail += fmt("%snominal %.2f: MIMOSA %.3f, Fisher+BH %.3f", k ? "; " : "", levels[k],
                  obs_m[k], obs_f[k]);
  }
  return {within && !fisher_closer_everywhere, detail};
}

// --- 6 -------------------------------------------------------------------

Verdict misspecification() {
  SimSpec spec;
  spec.generator = Generator::TruncNormalMatched;
  spec.sidedness = Sidedness::TwoSided;
  spec.seed = 6;
  const auto reps = simulate_replicates(spec);
  EmConfig cfg;  // two-sided model
  std::vector<double> a_em, a_f;
  for (const auto& d : reps) {
    const EmFit fit = fit_em(d.records, cfg);
    std::vector<double> sf;
    for (const auto& y : d.records) sf.push_back(neg_log_p(fisher_exact(y, Sidedness::TwoSided).p_value));
    a_em.push_back(auc_of(fit.responsibilities, d.true_z));
    a_f.push_back(auc_of(sf, d.true_z));
  }
  return {mean(a_em) >= mean(a_f),
          fmt("truncated-normal data, two-sided: mean AUC EM %.4f vs Fisher %.4f", mean(a_em),
              mean(a_f))};
}

// --- 7 -------------------------------------------------------------------

// Posterior of (alpha_u, beta_u) for two subjects under the two-sided model
// with exponential priors, on a log grid; (alpha_s, beta_s), z and w are
// integrated out exactly on the same grid.
struct GridMarginals {
  std::vector<double> log_grid;
  std::vector<double> alpha_u, beta_u;  // densities in log coordinates
};

GridMarginals toy_grid(const std::vector<CountPair>& data, double rate) {
  constexpr int n = 400;
  GridMarginals out;
  const double lo = std::log(1e-6), hi = std::log(5e4);
  for (int k = 0; k < n; ++k) out.log_grid.push_back(lo + (hi - lo) * k / (n - 1));
  const double dx = (hi - lo) / (n - 1);
  auto trap = [&](int k) { return (k == 0 || k == n - 1) ? 0.5 : 1.0; };

  // J(S) = integral over the s shapes of prior * prod_{i in S} stimulated marginal.
  std::vector<double> logJ(4);
  for (int mask = 0; mask < 4; ++mask) {
    std::vector<double> logs;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        const double x = std::exp(out.log_grid[a]), y = std::exp(out.log_grid[b]);
        double v = std::log(rate) * 2 - rate * (x + y) + out.log_grid[a] + out.log_grid[b] +
                   std::log(trap(a) * trap(b));
        for (int i = 0; i < 2; ++i)
          if (mask >> i & 1) v += oracle::closed_half(x, y, data[i].n_s, data[i].N_s);
        logs.push_back(v);
      }
    const double mx = *std::max_element(logs.begin(), logs.end());
    double s = 0.0;
    for (double v : logs) s += std::exp(v - mx);
    logJ[mask] = mx + std::log(s * dx * dx);
  }

  std::vector<double> logpost(n * n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const double x = std::exp(out.log_grid[a]), y = std::exp(out.log_grid[b]);
      const double base = -rate * (x + y) + out.log_grid[a] + out.log_grid[b];
      double terms[4];
      for (int mask = 0; mask < 4; ++mask) {
        const int k = __builtin_popcount(mask);
        // integral of w^k (1 - w)^(2 - k) over the uniform prior on w
        double v = std::log(k == 1 ? 1.0 / 6.0 : 1.0 / 3.0) + logJ[mask];
        for (int i = 0; i < 2; ++i) {
          const auto& d = data[i];
          v += (mask >> i & 1) ? oracle::closed_half(x, y, d.n_u, d.N_u)
                               : oracle::closed_L0(x, y, d.n_s, d.N_s, d.n_u, d.N_u);
        }
        terms[mask] = v;
      }
      const double mx = *std::max_element(terms, terms + 4);
      double s = 0.0;
      for (double t : terms) s += std::exp(t - mx);
      logpost[a * n + b] = base + mx + std::log(s);
    }
  const double mx = *std::max_element(logpost.begin(), logpost.end());
  out.alpha_u.assign(n, 0.0);
  out.beta_u.assign(n, 0.0);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const double v = std::exp(logpost[a * n + b] - mx);
      out.alpha_u[a] += v * trap(b);
      out.beta_u[b] += v * trap(a);
    }
  return out;
}

// Total variation between the chain's draws and the grid density on 20
// bins of equal oracle mass.
double binned_tv(const std::vector<double>& grid, const std::vector<double>& density,
                 const std::vector<double>& log_draws) {
  const std::size_t n = grid.size();
  std::vector<double> cdf(n, 0.0);
  for (std::size_t k = 1; k < n; ++k)
    cdf[k] = cdf[k - 1] + 0.5 * (density[k] + density[k - 1]) * (grid[k] - grid[k - 1]);
  for (double& c : cdf) c /= cdf.back();
  std::vector<double> edges;
  for (int b = 1; b < 20; ++b) {
    const double q = b / 20.0;
    const std::size_t k = std::lower_bound(cdf.begin(), cdf.end(), q) - cdf.begin();
    const double t = (q - cdf[k - 1]) / (cdf[k] - cdf[k - 1]);
    edges.push_back(grid[k - 1] + t * (grid[k] - grid[k - 1]));
  }
  std::vector<double> counts(20, 0.0);
  for (double x : log_draws)
    counts[std::upper_bound(edges.begin(), edges.end(), x) - edges.begin()] += 1.0;
  double tv = 0.0;
  for (double c : counts) tv += std::fabs(c / static_cast<double>(log_draws.size()) - 0.05);
  return 0.5 * tv;
}

Verdict mcmc_correctness() {
  // Toy posterior.
  const std::vector<CountPair> toy = {{"A", 9, 20, 2, 20}, {"B", 4, 25, 5, 25}};
  McmcConfig tc;
  tc.iterations = 1000000;
  tc.burn_in = 20000;
  tc.thin = 5;
  tc.seed = 71;
  const McmcFit tf = fit_mcmc(toy, tc);
  std::vector<double> la, lb;
  for (const auto& row : tf.trace) {
    la.push_back(std::log(row[1]));
    lb.push_back(std::log(row[2]));
  }
  const GridMarginals gm = toy_grid(toy, 1.0 / tc.prior_mean_hypers);
  const double tv_a = binned_tv(gm.log_grid, gm.alpha_u, la);
  const double tv_b = binned_tv(gm.log_grid, gm.beta_u, lb);

  // Agreement with EM and mixing on the first one-sided replicate.
  const OneSidedStudy& s = one_sided_study();
  McmcConfig cfg;
  cfg.sidedness = Sidedness::OneSidedIncrease;
  cfg.seed = 72;
  const McmcFit fit = fit_mcmc(s.reps[0].records, cfg);
  const double rho = spearman(fit.posterior_response_prob, s.em[0].responsibilities);
  double min_ess = std::numeric_limits<double>::infinity();
  std::string worst;
  for (const auto& p : fit.chain_summary)
    if (p.ess < min_ess) min_ess = p.ess, worst = p.name;

  const bool pass = tv_a < 0.02 && tv_b < 0.02 && rho >= 0.95 && min_ess >= 200.0;
  return {pass, fmt("toy TV alpha_u %.4f, beta_u %.4f (tol 0.02); Spearman(MCMC, EM) %.4f; "
                    "min ESS %.0f (%s)",
                    tv_a, tv_b, rho, min_ess, worst.c_str())};
}

// --- 8 -------------------------------------------------------------------

Verdict multivariate_reproduction() {
  MultiSimSpec spec = fixture_multi_spec();
  spec.seed = 8;
  const auto reps = simulate_multi_replicates(spec);
  std::vector<double> a_mc, a_lrt, a_f;
  McmcConfig cfg;
  cfg.seed = 81;
  cfg.keep_trace = false;
  const MultiFisherOptions opts;
  for (const auto& d : reps) {
    const McmcFitMv fit = fit_mcmc(d.records, cfg);
    std::vector<double> s_lrt, s_f;
    for (const auto& y : d.records) {
      SeededRng rng(spec.seed, combine_keys(stream_key("fisher"), stream_key(y.subject_id)) +
                                   static_cast<std::uint64_t>(d.replicate_index));
      const MultiTestResults t = multi_category_test(y, rng, opts);
      s_lrt.push_back(neg_log_p(t.lrt.p_value));
      s_f.push_back(neg_log_p(t.fisher.p_value));
    }
    a_mc.push_back(auc_of(fit.posterior_response_prob, d.true_z));
    a_lrt.push_back(auc_of(s_lrt, d.true_z));
    a_f.push_back(auc_of(s_f, d.true_z));
  }
  return {mean(a_mc) > mean(a_lrt) && mean(a_mc) > mean(a_f),
          fmt("mean AUC MCMC %.4f, multinomial LRT %.4f, Monte Carlo Fisher %.4f", mean(a_mc),
              mean(a_lrt), mean(a_f))};
}

// --- 9 -------------------------------------------------------------------

std::string strip_timestamps(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line))
    if (line.find("\"timestamp\"") == std::string::npos) out << line << '\n';
  return out.str();
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = strip_timestamps(e.path());
  return files;
}

Verdict determinism() {
  const fs::path root = fs::temp_directory_path() / "mimosa_acceptance_determinism";
  fs::remove_all(root);
  const std::string cli = MIMOSA_CLI_PATH;
  const fs::path in = root / "inputs", out = root / "out";
  fs::create_directories(in / "batch");
  {
    std::ofstream c(in / "small.json");
    c << R"({"simulate": {"n_subjects": 40, "replicates": 2}})";
  }
  auto call = [&](const std::string& args) {
    return std::system((cli + " " + args + " > /dev/null 2>&1").c_str());
  };
  // Shared inputs for the fit and baseline commands.
  int failures = 0;
  failures += call("simulate --model betabin --seed 9 --output-dir " + (in / "uni").string()) != 0;
  failures += call("simulate --model dirmult --seed 9 --config " + (in / "small.json").string() +
                   " --output-dir " + (in / "mv").string()) != 0;
  for (const char* r : {"replicate_01", "replicate_02"})
    if (fs::exists(in / "uni" / r / "data.csv"))
      fs::copy_file(in / "uni" / r / "data.csv", in / "batch" / (std::string(r) + ".csv"));
  const std::string uni = (in / "uni" / "replicate_01" / "data.csv").string();
  const std::string mv = (in / "mv" / "replicate_01" / "data.csv").string();
  const std::string o = out.string();

  // Identical command lines, run twice into the same directory.
  const std::vector<std::string> commands = {
      "simulate --model betabin --seed 9 --output-dir " + o + "/sim_uni",
      "simulate --model dirmult --seed 9 --config " + (in / "small.json").string() +
          " --output-dir " + o + "/sim_mv",
      "fit --model betabin --method em --sided two --seed 9 --input " + uni + " --output-dir " + o +
          "/fit_em",
      "fit --model betabin --method mcmc --sided one --seed 9 --iterations 4000 --burn-in 1000 "
      "--input " + uni + " --output-dir " + o + "/fit_mcmc",
      "fit --model dirmult --method mcmc --seed 9 --iterations 4000 --burn-in 1000 --input " + mv +
          " --output-dir " + o + "/fit_mv",
      "fit --model betabin --method em --seed 9 --threads 2 --input " + (in / "batch").string() +
          " --output-dir " + o + "/batch",
      "baseline --model dirmult --method fisher --seed 9 --input " + mv + " --output-dir " + o +
          "/base_mv",
  };
  std::vector<std::map<std::string, std::string>> snaps;
  for (int pass = 0; pass < 2; ++pass) {
    fs::remove_all(out);
    for (const auto& c : commands) failures += call(c) != 0;
    snaps.push_back(snapshot(out));
  }
  int differing = 0;
  for (const auto& [name, content] : snaps[0]) {
    const auto it = snaps[1].find(name);
    if (it == snaps[1].end() || it->second != content) ++differing;
  }
  if (snaps[0].size() != snaps[1].size()) ++differing;
  return {failures == 0 && differing == 0 && !snaps[0].empty(),
          fmt("%zu files compared across two runs of %zu commands; %d differ; %d non-zero exits",
              snaps[0].size(), commands.size(), differing, failures)};
}

// --- 10 ------------------------------------------------------------------

Verdict reductions() {
  std::mt19937_64 g(1010);
  double worst_l = 0.0, worst_t = 0.0;
  for (int f = 0; f < 200; ++f) {
    const BetaBinHypers h{log_uniform(g, 0.2, 1e3), log_uniform(g, 0.2, 1e5),
                          log_uniform(g, 0.2, 1e3), log_uniform(g, 0.2, 1e5), 0.5};
    const long long Ns = std::uniform_int_distribution<long long>(1, 5000)(g);
    const long long Nu = std::uniform_int_distribution<long long>(1, 5000)(g);
    const double p = beta_draw(g, h.alpha_u, h.beta_u);
    const CountPair y{"R", binom_draw(g, Ns, p), Ns, binom_draw(g, Nu, p * 1.5), Nu};
    const MultiCountPair my{"R", {y.n_s, y.N_s - y.n_s}, {y.n_u, y.N_u - y.n_u}, {"pos", "neg"}};
    const DirMultHypers mh{{h.alpha_u, h.beta_u}, {h.alpha_s, h.beta_s}, 0.5};
    worst_l = std::max({worst_l, std::fabs(log_L0_mv(mh, my) - log_L0(h, y)),
                        std::fabs(log_L1_mv(mh, my) - log_L1_two_sided(h, y))});
    SeededRng rng(1, stream_key("reduction"));
    MultiFisherOptions opts;
    opts.resamples = 10;
    const TestResult a = multi_category_test(my, rng, opts).lrt;
    if (y.n_s + y.n_u == 0 || y.n_s + y.n_u == y.N_s + y.N_u) continue;  // binomial LRT undefined
    const TestResult b = binomial_lrt(y, Sidedness::TwoSided);
    worst_t = std::max({worst_t, std::fabs(a.statistic - b.statistic), std::fabs(a.p_value - b.p_value)});
  }
  return {worst_l <= 1e-10 && worst_t <= 1e-10,
          fmt("M=2 vs univariate: max log-likelihood diff %.2e, max LRT diff (multi_category_test) %.2e (tol 1e-10)",
              worst_l, worst_t)};
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;  // 0: no runtime bound
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> all = {
      {1, "marginal-likelihood oracle", 30, marginal_oracles},
      {2, "normalization", 30, normalization},
      {3, "EM monotonicity", 0, em_monotone},
      {4, "one-sided simulation reproduction", 300, one_sided_reproduction},
      {5, "FDR calibration", 0, fdr_calibration},
      {6, "misspecification robustness", 0, misspecification},
      {7, "MCMC correctness", 300, mcmc_correctness},
      {8, "multivariate reproduction", 600, multivariate_reproduction},
      {9, "determinism", 0, determinism},
      {10, "M=2 reductions", 0, reductions},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool pass = v.pass;
    std::string timing = fmt("%.1f s", secs);
    if (v.timed_s) timing = fmt("library %.3f s, with oracles %.1f s", *v.timed_s, secs);
    if (c.budget_s > 0) {
      timing += fmt(" (budget %.0f s)", c.budget_s);
      if (v.timed_s.value_or(secs) > c.budget_s) pass = false;
    }
    std::printf("criterion %2d %s  %s: %s [%s]\n", c.id, pass ? "PASS" : "FAIL", c.name,
                v.detail.c_str(), timing.c_str());
    std::fflush(stdout);
    if (!pass) ++failed;
  }
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
