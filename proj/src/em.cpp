#include "mimosa/em.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>

#include "mimosa/baselines.hpp"
#include "mimosa/error.hpp"
#include "mimosa/numerics.hpp"
#include "mimosa/rng.hpp"

namespace mimosa {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLogShapeMin = -13.815510557964274;  // ln 1e-6
constexpr double kLogShapeMax = 20.723265836946411;   // ln 1e9
constexpr double kShapeFloor = 1e-6;
constexpr double kKappaMin = 1.0;
constexpr double kKappaMax = 1e7;

// z * a with the convention 0 * -inf = 0.
double weighted(double z, double a) { return z == 0.0 ? 0.0 : z * a; }

double sample_mean(std::span<const double> xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs, double m) {
  if (xs.size() < 2) return 0.0;
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

double kappa_from(double m, double v) {
  if (!(v > 0.0)) return kKappaMax;
  return std::clamp(m * (1.0 - m) / v - 1.0, kKappaMin, kKappaMax);
}

bool in_bounds(std::span<const double> x) {
  for (double v : x)
    if (!(v >= kLogShapeMin && v <= kLogShapeMax)) return false;
  return true;
}

// Model adapters: packing of shapes on log scale and per-subject logliks.
struct UniModel {
  using Data = CountPair;
  using Hypers = BetaBinHypers;
  Sidedness side;

  std::vector<double> pack(const Hypers& h) const {
    return {std::log(h.alpha_u), std::log(h.beta_u), std::log(h.alpha_s),
            std::log(h.beta_s)};
  }
  Hypers unpack(std::span<const double> x, double w) const {
    return {std::exp(x[0]), std::exp(x[1]), std::exp(x[2]), std::exp(x[3]), w};
  }
  double prior_mass(const Hypers& h) const {
    return side == Sidedness::OneSidedIncrease ? log_prior_constraint_mass(h) : 0.0;
  }
  double l0(const Hypers& h, const Data& y, double) const { return log_L0(h, y); }
  double l1(const Hypers& h, const Data& y, double lpm) const {
    return side == Sidedness::OneSidedIncrease ? log_L1_one_sided(h, y, lpm)
                                               : log_L1_two_sided(h, y);
  }
};

struct MultiModel {
  using Data = MultiCountPair;
  using Hypers = DirMultHypers;

  std::vector<double> pack(const Hypers& h) const {
    std::vector<double> x;
    x.reserve(2 * h.alpha_u.size());
    for (double a : h.alpha_u) x.push_back(std::log(a));
    for (double a : h.alpha_s) x.push_back(std::log(a));
    return x;
  }
  Hypers unpack(std::span<const double> x, double w) const {
    const std::size_t m = x.size() / 2;
    Hypers h;
    h.alpha_u.resize(m);
    h.alpha_s.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
      h.alpha_u[k] = std::exp(x[k]);
      h.alpha_s[k] = std::exp(x[m + k]);
    }
    h.w = w;
    return h;
  }
  double prior_mass(const Hypers&) const { return 0.0; }
  double l0(const Hypers& h, const Data& y, double) const { return log_L0_mv(h, y); }
  double l1(const Hypers& h, const Data& y, double) const { return log_L1_mv(h, y); }
};

// Start index of each run of consecutive subjects with identical counts;
// canonical order puts all duplicates into one run.
template <class Data>
std::vector<std::size_t> count_runs(std::span<const Data> data) {
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (i == 0 || !same_counts(data[i - 1], data[i])) starts.push_back(i);
  starts.push_back(data.size());
  return starts;
}

template <class M>
void component_logliks(const M& model, const typename M::Hypers& h,
                       std::span<const typename M::Data> data,
                       std::vector<double>& l0, std::vector<double>& l1) {
  const double lpm = model.prior_mass(h);
  l0.resize(data.size());
  l1.resize(data.size());
  const std::vector<std::size_t> runs = count_runs(data);
  for (std::size_t g = 0; g + 1 < runs.size(); ++g) {
    const double a = model.l0(h, data[runs[g]], lpm);
    const double b = model.l1(h, data[runs[g]], lpm);
    for (std::size_t i = runs[g]; i < runs[g + 1]; ++i) {
      l0[i] = a;
      l1[i] = b;
    }
  }
}

double observed_from(double w, std::span<const double> l0, std::span<const double> l1) {
  const double lw = w > 0.0 ? std::log(w) : -kInf;
  const double lw0 = w < 1.0 ? std::log1p(-w) : -kInf;
  double s = 0.0;
  for (std::size_t i = 0; i < l0.size(); ++i) s += log_add_exp(lw0 + l0[i], lw + l1[i]);
  return s;
}

std::vector<double> resp_from(double w, std::span<const double> l0,
                              std::span<const double> l1) {
  std::vector<double> r(l0.size());
  for (std::size_t i = 0; i < l0.size(); ++i) r[i] = responsibility_from_logs(w, l0[i], l1[i]);
  return r;
}

template <class M>
double expected_impl(const M& model, const typename M::Hypers& h,
                     std::span<const double> resp,
                     std::span<const typename M::Data> data) {
  if (resp.size() != data.size())
    throw DomainError("responsibilities and data differ in length");
  std::vector<double> l0, l1;
  component_logliks(model, h, data, l0, l1);
  const double lw = h.w > 0.0 ? std::log(h.w) : -kInf;
  const double lw0 = h.w < 1.0 ? std::log1p(-h.w) : -kInf;
  double s = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i)
    s += weighted(resp[i], lw + l1[i]) + weighted(1.0 - resp[i], lw0 + l0[i]);
  return s;
}

// Responsibilities summed over runs of identical counts, so the shape
// objective needs one likelihood evaluation per distinct count tuple.
template <class Data>
struct WeightedRuns {
  std::vector<const Data*> rep;
  std::vector<double> w1, w0;
};

template <class Data>
WeightedRuns<Data> weighted_runs(std::span<const double> resp, std::span<const Data> data) {
  WeightedRuns<Data> out;
  const std::vector<std::size_t> runs = count_runs(data);
  for (std::size_t g = 0; g + 1 < runs.size(); ++g) {
    double a = 0.0, b = 0.0;
    for (std::size_t i = runs[g]; i < runs[g + 1]; ++i) {
      a += resp[i];
      b += 1.0 - resp[i];
    }
    out.rep.push_back(&data[runs[g]]);
    out.w1.push_back(a);
    out.w0.push_back(b);
  }
  return out;
}

// Shape part of the expected complete-data log-likelihood; runs with zero
// weight on a component skip that component's likelihood.
template <class M>
double shape_objective(const M& model, const typename M::Hypers& h,
                       const WeightedRuns<typename M::Data>& runs) {
  const double lpm = model.prior_mass(h);
  double s = 0.0;
  for (std::size_t g = 0; g < runs.rep.size(); ++g) {
    if (runs.w1[g] > 0.0) s += runs.w1[g] * model.l1(h, *runs.rep[g], lpm);
    if (runs.w0[g] > 0.0) s += runs.w0[g] * model.l0(h, *runs.rep[g], lpm);
  }
  return s;
}

template <class M>
typename M::Hypers m_step_impl(const M& model, std::span<const double> resp,
                               std::span<const typename M::Data> data,
                               const typename M::Hypers& prev, const EmConfig& cfg,
                               MStepReport* report, double initial_step) {
  if (resp.size() != data.size() || data.empty())
    throw DomainError("responsibilities and data differ in length");
  MStepReport rep;
  typename M::Hypers out = prev;
  out.w = sample_mean(resp);
  const auto runs = weighted_runs(resp, data);

  auto objective = [&](std::span<const double> x) -> double {
    if (!in_bounds(x)) return kInf;
    try {
      return -shape_objective(model, model.unpack(x, out.w), runs);
    } catch (const DomainError&) {
      return kInf;
    } catch (const DegenerateConstraintError&) {
      return kInf;
    }
  };

  std::vector<double> x0 = model.pack(prev);
  for (double& v : x0) v = std::clamp(v, kLogShapeMin, kLogShapeMax);
  NelderMeadOptions opts;
  opts.tol = cfg.optimizer_tol;
  opts.max_evals = cfg.optimizer_max_evals;
  opts.initial_step = initial_step;
  try {
    const double f0 = objective(x0);
    const NelderMeadResult res = nelder_mead_minimize(objective, x0, opts);
    rep.evaluations = res.evals;
    if (res.fmin <= f0) {
      out = model.unpack(res.argmin, out.w);
    } else {
      rep.accepted = false;
    }
  } catch (const InitializationError&) {
    rep.accepted = false;
    rep.optimizer_failure = true;
  }
  if (report) *report = rep;
  return out;
}

std::vector<double> step_delta(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = std::fabs(a[i] - b[i]);
  return d;
}

template <class M, class Init>
EmFitResult<typename M::Hypers> fit_impl(const M& model,
                                         std::span<const typename M::Data> data,
                                         const EmConfig& cfg, Init init_fn) {
  validate(cfg);
  using Data = typename M::Data;
  const std::vector<std::size_t> order = canonical_order(data);
  std::vector<Data> sorted;
  sorted.reserve(data.size());
  for (std::size_t i : order) sorted.push_back(data[i]);

  EmFitResult<typename M::Hypers> fit;
  auto init = init_fn(std::span<const Data>(sorted));
  auto h = init.hypers;
  std::vector<double> l0, l1;
  component_logliks(model, h, std::span<const Data>(sorted), l0, l1);
  std::vector<double> resp = resp_from(h.w, l0, l1);
  double ll = observed_from(h.w, l0, l1);
  fit.observed_loglik_trace.push_back(ll);

  double step = 0.1;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    MStepReport rep;
    auto next = m_step_impl(model, resp, std::span<const Data>(sorted), h, cfg, &rep, step);
    fit.iterations = it;
    if (!rep.accepted) ++fit.rejected_m_steps;
    if (rep.optimizer_failure) fit.optimizer_failure = true;
    fit.optimizer_evaluations += rep.evaluations;
    component_logliks(model, next, std::span<const Data>(sorted), l0, l1);
    const double ll_next = observed_from(next.w, l0, l1);
    if (!(ll_next >= ll)) {
      // Only rounding can lower the likelihood here: stop at the fixed point.
      fit.converged = ll - ll_next < cfg.loglik_tol;
      break;
    }
    const std::vector<double> moved = step_delta(model.pack(next), model.pack(h));
    step = std::clamp(2.0 * *std::max_element(moved.begin(), moved.end()), 1e-3, 0.1);
    h = next;
    resp = resp_from(h.w, l0, l1);
    fit.observed_loglik_trace.push_back(ll_next);
    const double gain = ll_next - ll;
    ll = ll_next;
    if (gain < cfg.loglik_tol) {
      fit.converged = true;
      break;
    }
  }

  fit.hypers = h;
  fit.responsibilities.assign(data.size(), 0.0);
  for (std::size_t j = 0; j < order.size(); ++j) fit.responsibilities[order[j]] = resp[j];
  return fit;
}

// z^(0) fallback: top quartile by score gets 1, bottom quartile gets 0.
void quartile_fallback(std::vector<double>& z, std::span<const double> score) {
  const std::size_t n = z.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return score[a] < score[b]; });
  const std::size_t q = std::max<std::size_t>(1, n / 4);
  for (std::size_t j = 0; j < q; ++j) {
    z[idx[j]] = 0.0;
    z[idx[n - 1 - j]] = 1.0;
  }
}

double initial_w(std::span<const double> z) {
  return std::clamp(sample_mean(z), 0.05, 0.95);
}

}  // namespace

void validate(const EmConfig& cfg) {
  if (cfg.max_iters < 1) throw ConfigError("em max_iters must be >= 1");
  if (!(cfg.loglik_tol > 0.0)) throw ConfigError("em loglik_tol must be > 0");
  if (!(cfg.optimizer_tol > 0.0)) throw ConfigError("em optimizer_tol must be > 0");
  if (cfg.optimizer_max_evals < 1) throw ConfigError("em optimizer_max_evals must be >= 1");
  if (!(cfg.init_pvalue_threshold > 0.0 && cfg.init_pvalue_threshold < 1.0))
    throw ConfigError("em init_pvalue_threshold must lie in (0, 1)");
  if (cfg.init_resamples < 1) throw ConfigError("em init_resamples must be >= 1");
}

BetaShapes method_of_moments(std::span<const double> proportions) {
  if (proportions.empty()) throw DomainError("method_of_moments needs data");
  const double raw = sample_mean(proportions);
  const double m = std::clamp(raw, 1e-7, 1.0 - 1e-7);
  const double k = kappa_from(m, sample_variance(proportions, raw));
  return {m * k, (1.0 - m) * k};
}

std::vector<double> method_of_moments_dirichlet(
    const std::vector<std::vector<double>>& proportions) {
  if (proportions.empty()) throw DomainError("method_of_moments needs data");
  const std::size_t m = proportions.front().size();
  std::vector<double> mean(m, 0.0), kappas;
  for (std::size_t k = 0; k < m; ++k) {
    std::vector<double> col(proportions.size());
    for (std::size_t i = 0; i < proportions.size(); ++i) col[i] = proportions[i].at(k);
    mean[k] = sample_mean(col);
    const double v = sample_variance(col, mean[k]);
    if (mean[k] > 0.0 && mean[k] < 1.0 && v > 0.0) kappas.push_back(kappa_from(mean[k], v));
  }
  double kappa = kKappaMax;
  if (!kappas.empty()) {
    std::sort(kappas.begin(), kappas.end());
    const std::size_t n = kappas.size();
    kappa = n % 2 ? kappas[n / 2] : 0.5 * (kappas[n / 2 - 1] + kappas[n / 2]);
  }
  std::vector<double> alpha(m);
  for (std::size_t k = 0; k < m; ++k) alpha[k] = std::max(mean[k] * kappa, kShapeFloor);
  return alpha;
}

EmInit<BetaBinHypers> initialize(std::span<const CountPair> data, const EmConfig& cfg) {
  if (data.size() < 4) throw ValidationError("EM needs at least 4 subjects");
  const std::size_t n = data.size();
  EmInit<BetaBinHypers> init;
  init.responsibilities.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    init.responsibilities[i] =
        fisher_exact(data[i], cfg.sidedness).p_value < cfg.init_pvalue_threshold ? 1.0 : 0.0;
  const double called = std::accumulate(init.responsibilities.begin(),
                                        init.responsibilities.end(), 0.0);
  if (called == 0.0 || called == static_cast<double>(n)) {
    std::vector<double> lfc(n);
    for (std::size_t i = 0; i < n; ++i) lfc[i] = log_fold_change(data[i]).statistic;
    quartile_fallback(init.responsibilities, lfc);
    init.fallback_used = true;
  }
  std::vector<double> pu, ps;
  for (std::size_t i = 0; i < n; ++i) {
    pu.push_back(static_cast<double>(data[i].n_u) / static_cast<double>(data[i].N_u));
    if (init.responsibilities[i] == 1.0)
      ps.push_back(static_cast<double>(data[i].n_s) / static_cast<double>(data[i].N_s));
  }
  const BetaShapes u = method_of_moments(pu);
  const BetaShapes s = method_of_moments(ps);
  init.hypers = {u.alpha, u.beta, s.alpha, s.beta, initial_w(init.responsibilities)};
  return init;
}

EmInit<DirMultHypers> initialize(std::span<const MultiCountPair> data,
                                 const EmConfig& cfg) {
  if (data.size() < 4) throw ValidationError("EM needs at least 4 subjects");
  const std::size_t n = data.size();
  EmInit<DirMultHypers> init;
  init.responsibilities.resize(n);
  MultiFisherOptions opts;
  opts.resamples = cfg.init_resamples;
  const std::uint64_t base = stream_key("em-init");
  for (std::size_t i = 0; i < n; ++i) {
    SeededRng rng(cfg.seed, combine_keys(base, stream_key(data[i].subject_id)));
    init.responsibilities[i] =
        multi_fisher(data[i], rng, opts).p_value < cfg.init_pvalue_threshold ? 1.0 : 0.0;
  }
  const double called = std::accumulate(init.responsibilities.begin(),
                                        init.responsibilities.end(), 0.0);
  if (called == 0.0 || called == static_cast<double>(n)) {
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = multinomial_lrt(data[i]).statistic;
    quartile_fallback(init.responsibilities, g);
    init.fallback_used = true;
  }
  auto proportions = [](std::span<const long long> c) {
    const double total = static_cast<double>(std::accumulate(c.begin(), c.end(), 0LL));
    std::vector<double> p(c.size());
    for (std::size_t k = 0; k < c.size(); ++k) p[k] = static_cast<double>(c[k]) / total;
    return p;
  };
  std::vector<std::vector<double>> pu, ps;
  for (std::size_t i = 0; i < n; ++i) {
    pu.push_back(proportions(data[i].n_u));
    if (init.responsibilities[i] == 1.0) ps.push_back(proportions(data[i].n_s));
  }
  init.hypers.alpha_u = method_of_moments_dirichlet(pu);
  init.hypers.alpha_s = method_of_moments_dirichlet(ps);
  init.hypers.w = initial_w(init.responsibilities);
  return init;
}

std::vector<double> e_step(const BetaBinHypers& h, std::span<const CountPair> data,
                           Sidedness side) {
  std::vector<double> l0, l1;
  component_logliks(UniModel{side}, h, data, l0, l1);
  return resp_from(h.w, l0, l1);
}

std::vector<double> e_step(const DirMultHypers& h, std::span<const MultiCountPair> data) {
  std::vector<double> l0, l1;
  component_logliks(MultiModel{}, h, data, l0, l1);
  return resp_from(h.w, l0, l1);
}

double observed_loglik(const BetaBinHypers& h, std::span<const CountPair> data,
                       Sidedness side) {
  std::vector<double> l0, l1;
  component_logliks(UniModel{side}, h, data, l0, l1);
  return observed_from(h.w, l0, l1);
}

double observed_loglik(const DirMultHypers& h, std::span<const MultiCountPair> data) {
  std::vector<double> l0, l1;
  component_logliks(MultiModel{}, h, data, l0, l1);
  return observed_from(h.w, l0, l1);
}

double expected_complete_loglik(const BetaBinHypers& h, std::span<const double> resp,
                                std::span<const CountPair> data, Sidedness side) {
  return expected_impl(UniModel{side}, h, resp, data);
}

double expected_complete_loglik(const DirMultHypers& h, std::span<const double> resp,
                                std::span<const MultiCountPair> data) {
  return expected_impl(MultiModel{}, h, resp, data);
}

BetaBinHypers m_step(std::span<const double> resp, std::span<const CountPair> data,
                     const BetaBinHypers& prev, const EmConfig& cfg,
                     MStepReport* report, double initial_step) {
  return m_step_impl(UniModel{cfg.sidedness}, resp, data, prev, cfg, report, initial_step);
}

DirMultHypers m_step(std::span<const double> resp, std::span<const MultiCountPair> data,
                     const DirMultHypers& prev, const EmConfig& cfg,
                     MStepReport* report, double initial_step) {
  return m_step_impl(MultiModel{}, resp, data, prev, cfg, report, initial_step);
}

EmFit fit_em(std::span<const CountPair> data, const EmConfig& cfg) {
  for (const auto& y : data) validate(y);
  return fit_impl(UniModel{cfg.sidedness}, data, cfg,
                  [&](std::span<const CountPair> d) { return initialize(d, cfg); });
}

EmFitMv fit_em(std::span<const MultiCountPair> data, const EmConfig& cfg) {
  for (const auto& y : data) validate(y);
  if (!data.empty()) {
    const std::size_t m = data.front().categories();
    for (const auto& y : data)
      if (y.categories() != m) throw SchemaError("subjects differ in category count");
  }
  auto fit = fit_impl(MultiModel{}, data, cfg,
                      [&](std::span<const MultiCountPair> d) { return initialize(d, cfg); });
  if (!data.empty() && data.front().categories() > 8)
    fit.warnings.push_back(
        "EM with more than 8 categories (K > 3 markers) can fail to converge; "
        "prefer MCMC");
  return fit;
}

std::vector<std::size_t> canonical_order(std::span<const CountPair> data) {
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const CountPair& x = data[a];
    const CountPair& y = data[b];
    return std::tie(x.n_s, x.N_s, x.n_u, x.N_u, x.subject_id, a) <
           std::tie(y.n_s, y.N_s, y.n_u, y.N_u, y.subject_id, b);
  });
  return idx;
}

std::vector<std::size_t> canonical_order(std::span<const MultiCountPair> data) {
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const MultiCountPair& x = data[a];
    const MultiCountPair& y = data[b];
    return std::tie(x.n_s, x.n_u, x.subject_id, a) < std::tie(y.n_s, y.n_u, y.subject_id, b);
  });
  return idx;
}

}  // namespace mimosa
