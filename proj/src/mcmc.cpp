#include "mimosa/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "mimosa/em.hpp"
#include "mimosa/error.hpp"
#include "mimosa/numerics.hpp"

namespace mimosa {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLogShapeMin = -13.815510557964274;  // ln 1e-6
constexpr double kLogShapeMax = 20.72326583694641;    // ln 1e9

double d(long long v) { return static_cast<double>(v); }

bool in_bounds(std::span<const double> x) {
  for (double v : x)
    if (!(v >= kLogShapeMin && v <= kLogShapeMax)) return false;
  return true;
}

std::vector<double> logs_of(std::span<const double> xs) {
  std::vector<double> out(xs.size());
  for (std::size_t k = 0; k < xs.size(); ++k) out[k] = std::log(xs[k]);
  return out;
}

double sum_exp(std::span<const double> xs) {
  double s = 0.0;
  for (double v : xs) s += std::exp(v);
  return s;
}

// Chain adapters. The log-likelihood kernels drop the multinomial
// coefficients, which cancel in every ratio the sampler forms.
struct UniChain {
  using Data = CountPair;
  using Hypers = BetaBinHypers;
  struct Pre {
    double lbu = 0.0, lbs = 0.0, lpm = 0.0;
  };
  Sidedness side;

  std::size_t block_dim(int) const { return 2; }
  std::vector<double> get_block(const Hypers& h, int b) const {
    return b == 0 ? std::vector<double>{std::log(h.alpha_u), std::log(h.beta_u)}
                  : std::vector<double>{std::log(h.alpha_s), std::log(h.beta_s)};
  }
  void set_block(Hypers& h, int b, std::span<const double> x) const {
    (b == 0 ? h.alpha_u : h.alpha_s) = std::exp(x[0]);
    (b == 0 ? h.beta_u : h.beta_s) = std::exp(x[1]);
  }
  Pre prepare(const Hypers& h) const {
    Pre p;
    p.lbu = log_beta(h.alpha_u, h.beta_u);
    p.lbs = log_beta(h.alpha_s, h.beta_s);
    if (side == Sidedness::OneSidedIncrease) p.lpm = log_prior_constraint_mass(h);
    return p;
  }
  double l0(const Hypers& h, const Pre& p, const Data& y) const {
    return log_beta(d(y.n_s + y.n_u) + h.alpha_u,
                    d(y.N_s - y.n_s + y.N_u - y.n_u) + h.beta_u) -
           p.lbu;
  }
  double l1(const Hypers& h, const Pre& p, const Data& y) const {
    const double au = d(y.n_u) + h.alpha_u, bu = d(y.N_u - y.n_u) + h.beta_u;
    const double as = d(y.n_s) + h.alpha_s, bs = d(y.N_s - y.n_s) + h.beta_s;
    double out = log_beta(au, bu) - p.lbu + log_beta(as, bs) - p.lbs;
    if (side == Sidedness::OneSidedIncrease)
      out += log_beta_gt_prob(as, bs, au, bu) - p.lpm;
    return out;
  }
  std::vector<std::string> shape_names(const Hypers&) const {
    return {"alpha_u", "beta_u", "alpha_s", "beta_s"};
  }
  std::vector<double> shapes(const Hypers& h) const {
    return {h.alpha_u, h.beta_u, h.alpha_s, h.beta_s};
  }
  void set_shapes(Hypers& h, std::span<const double> s) const {
    h.alpha_u = s[0];
    h.beta_u = s[1];
    h.alpha_s = s[2];
    h.beta_s = s[3];
  }

  void initial_state(std::span<const Data> data, Hypers& h, std::vector<int>& z) const {
    z.assign(data.size(), 0);
    if (data.size() >= 4) {
      EmConfig ec;
      ec.sidedness = side;
      const EmInit<Hypers> init = initialize(data, ec);
      h = init.hypers;
      for (std::size_t i = 0; i < z.size(); ++i) z[i] = init.responsibilities[i] > 0.5;
    } else {
      std::vector<double> pu;
      for (const Data& y : data) pu.push_back(d(y.n_u) / d(y.N_u));
      const BetaShapes s = method_of_moments(pu);
      h = {s.alpha, s.beta, s.alpha, s.beta, 0.5};
    }
    if (side == Sidedness::OneSidedIncrease) {
      try {
        log_prior_constraint_mass(h);
      } catch (const DegenerateConstraintError&) {
        h.alpha_s = h.alpha_u;
        h.beta_s = h.beta_u;
      }
    }
  }
};

struct MultiChain {
  using Data = MultiCountPair;
  using Hypers = DirMultHypers;
  struct Pre {
    double lmu = 0.0, lms = 0.0;
  };

  std::size_t m = 0;

  std::size_t block_dim(int) const { return m; }
  std::vector<double> get_block(const Hypers& h, int b) const {
    return logs_of(b == 0 ? h.alpha_u : h.alpha_s);
  }
  void set_block(Hypers& h, int b, std::span<const double> x) const {
    std::vector<double>& a = b == 0 ? h.alpha_u : h.alpha_s;
    for (std::size_t k = 0; k < m; ++k) a[k] = std::exp(x[k]);
  }
  Pre prepare(const Hypers& h) const {
    return {log_mv_beta(h.alpha_u), log_mv_beta(h.alpha_s)};
  }
  static double shifted(std::span<const double> a, std::span<const long long> c1,
                        std::span<const long long> c2) {
    thread_local std::vector<double> buf;
    buf.resize(a.size());
    for (std::size_t k = 0; k < a.size(); ++k)
      buf[k] = a[k] + d(c1[k]) + (c2.empty() ? 0.0 : d(c2[k]));
    return log_mv_beta(buf);
  }
  double l0(const Hypers& h, const Pre& p, const Data& y) const {
    return shifted(h.alpha_u, y.n_s, y.n_u) - p.lmu;
  }
  double l1(const Hypers& h, const Pre& p, const Data& y) const {
    return shifted(h.alpha_u, y.n_u, {}) - p.lmu + shifted(h.alpha_s, y.n_s, {}) - p.lms;
  }
  std::vector<std::string> shape_names(const Hypers&) const {
    std::vector<std::string> out;
    for (std::size_t k = 0; k < m; ++k) out.push_back("alpha_u_" + std::to_string(k + 1));
    for (std::size_t k = 0; k < m; ++k) out.push_back("alpha_s_" + std::to_string(k + 1));
    return out;
  }
  std::vector<double> shapes(const Hypers& h) const {
    std::vector<double> out = h.alpha_u;
    out.insert(out.end(), h.alpha_s.begin(), h.alpha_s.end());
    return out;
  }
  void set_shapes(Hypers& h, std::span<const double> s) const {
    h.alpha_u.assign(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(m));
    h.alpha_s.assign(s.begin() + static_cast<std::ptrdiff_t>(m), s.end());
  }

  void initial_state(std::span<const Data> data, Hypers& h, std::vector<int>& z) const {
    z.assign(data.size(), 0);
    if (data.size() >= 4) {
      const EmInit<Hypers> init = initialize(data, EmConfig{});
      h = init.hypers;
      for (std::size_t i = 0; i < z.size(); ++i) z[i] = init.responsibilities[i] > 0.5;
      return;
    }
    std::vector<std::vector<double>> pu;
    for (const Data& y : data) {
      const double total = d(y.N_u());
      std::vector<double> p(m);
      for (std::size_t k = 0; k < m; ++k) p[k] = d(y.n_u[k]) / total;
      pu.push_back(std::move(p));
    }
    h.alpha_u = method_of_moments_dirichlet(pu);
    h.alpha_s = h.alpha_u;
    h.w = 0.5;
  }
};

// Log-likelihood cache over distinct count tuples: each entry is
// recomputed lazily once the hyperparameters it depends on change.
template <class M>
struct Cache {
  std::vector<const typename M::Data*> rep;
  std::vector<double> l0, l1;
  std::vector<char> ok0, ok1;

  void add(const typename M::Data* y) {
    rep.push_back(y);
    l0.push_back(0.0);
    l1.push_back(0.0);
    ok0.push_back(0);
    ok1.push_back(0);
  }
  std::size_t size() const { return rep.size(); }
  void fill(const M& model, const typename M::Hypers& h, const typename M::Pre& p) {
    for (std::size_t g = 0; g < rep.size(); ++g) {
      if (!ok0[g]) l0[g] = model.l0(h, p, *rep[g]), ok0[g] = 1;
      if (!ok1[g]) l1[g] = model.l1(h, p, *rep[g]), ok1[g] = 1;
    }
  }
};

template <class M>
McmcFitResult<typename M::Hypers> run_chain(const M& model,
                                            std::span<const typename M::Data> input,
                                            const McmcConfig& cfg) {
  using Hypers = typename M::Hypers;
  using Data = typename M::Data;
  validate(cfg);
  if (input.size() < 2) throw ValidationError("MCMC needs at least 2 subjects");
  for (const Data& y : input) validate(y);

  const std::vector<std::size_t> order = canonical_order(input);
  std::vector<Data> data;
  data.reserve(order.size());
  for (std::size_t i : order) data.push_back(input[i]);
  const std::size_t n = data.size();

  Hypers h;
  std::vector<int> z;
  model.initial_state(data, h, z);
  double w = h.w;
  const double rate = 1.0 / cfg.prior_mean_hypers;
  const long adapt_until = cfg.adapt_until < 0 ? cfg.burn_in : cfg.adapt_until;

  RandomWalkBlock blocks[2] = {RandomWalkBlock(model.block_dim(0), cfg.target_accept),
                               RandomWalkBlock(model.block_dim(1), cfg.target_accept)};
  SeededRng mh_rng(cfg.seed, stream_key("mh"));
  SeededRng w_rng(cfg.seed, stream_key("w"));
  std::vector<SeededRng> z_rng;
  z_rng.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    z_rng.emplace_back(cfg.seed, combine_keys(stream_key("z"), i));

  typename M::Pre pre = model.prepare(h);
  Cache<M> cache;
  std::vector<std::size_t> group(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i == 0 || !same_counts(data[i - 1], data[i])) cache.add(&data[i]);
    group[i] = cache.size() - 1;
  }
  const std::size_t n_groups = cache.size();
  cache.fill(model, h, pre);
  std::vector<long> n1(n_groups, 0), n0(n_groups, 0);  // z counts per group
  auto count_z = [&] {
    std::fill(n1.begin(), n1.end(), 0);
    std::fill(n0.begin(), n0.end(), 0);
    for (std::size_t i = 0; i < n; ++i) ++(z[i] ? n1 : n0)[group[i]];
  };
  count_z();

  const std::vector<std::string> names = model.shape_names(h);
  const std::size_t n_shapes = names.size();
  std::vector<double> r_sum(n, 0.0), z_sum(n, 0.0), shape_sum(n_shapes, 0.0);
  double w_sum = 0.0;
  long accepted[2] = {0, 0};
  long kept = 0;

  McmcFitResult<Hypers> fit;
  fit.trace_columns.push_back("iteration");
  fit.trace_columns.insert(fit.trace_columns.end(), names.begin(), names.end());
  fit.trace_columns.push_back("w");
  std::vector<std::vector<double>> thinned;  // shapes and w, for summaries

  std::vector<double> new0(n_groups), new1(n_groups), group_resp(n_groups), resp(n);
  auto block_step = [&](int b, bool counting) {
    RandomWalkBlock& blk = blocks[b];
    const std::vector<double> x = model.get_block(h, b);
    const std::vector<double> xp = blk.propose(x, mh_rng);
    double log_ratio = -kInf;
    Hypers hp = h;
    typename M::Pre pp;
    bool feasible = in_bounds(xp);
    if (feasible) {
      model.set_block(hp, b, xp);
      try {
        pp = model.prepare(hp);
      } catch (const DegenerateConstraintError&) {
        feasible = false;
      } catch (const DomainError&) {
        feasible = false;
      }
    }
    if (feasible) {
      double delta = 0.0;
      for (std::size_t g = 0; g < n_groups; ++g) {
        if (n1[g]) {
          new1[g] = model.l1(hp, pp, *cache.rep[g]);
          delta += d(n1[g]) * (new1[g] - cache.l1[g]);
        }
        if (b == 0 && n0[g]) {
          new0[g] = model.l0(hp, pp, *cache.rep[g]);
          delta += d(n0[g]) * (new0[g] - cache.l0[g]);
        }
      }
      log_ratio = delta - rate * (sum_exp(xp) - sum_exp(x)) +
                  (std::accumulate(xp.begin(), xp.end(), 0.0) -
                   std::accumulate(x.begin(), x.end(), 0.0));
    }
    const double accept_prob =
        std::isnan(log_ratio) ? 0.0 : std::min(1.0, std::exp(log_ratio));
    const bool accept = mh_accept(log_ratio, mh_rng);
    if (accept) {
      h = hp;
      pre = pp;
      for (std::size_t g = 0; g < n_groups; ++g) {
        if (n1[g])
          cache.l1[g] = new1[g];
        else
          cache.ok1[g] = 0;
        if (b == 0) {
          if (n0[g])
            cache.l0[g] = new0[g];
          else
            cache.ok0[g] = 0;
        }
      }
      if (counting) ++accepted[b];
    }
    blk.record(model.get_block(h, b), accept_prob);
  };

  for (long t = 0; t < cfg.iterations; ++t) {
    if (t == adapt_until) {
      blocks[0].freeze();
      blocks[1].freeze();
    }
    const bool post = t >= cfg.burn_in;
    block_step(0, post);
    block_step(1, post);
    cache.fill(model, h, pre);

    for (std::size_t g = 0; g < n_groups; ++g)
      group_resp[g] = responsibility_from_logs(w, cache.l0[g], cache.l1[g]);
    long responders = 0;
    for (std::size_t i = 0; i < n; ++i) {
      resp[i] = group_resp[group[i]];
      z[i] = z_rng[i].uniform() < resp[i] ? 1 : 0;
      responders += z[i];
    }
    count_z();
    w = sample_beta(w_rng, 1.0 + d(responders), 1.0 + d(static_cast<long long>(n) - responders));

    if (!post) continue;
    ++kept;
    const std::vector<double> s = model.shapes(h);
    for (std::size_t i = 0; i < n; ++i) {
      r_sum[i] += resp[i];
      z_sum[i] += z[i];
    }
    for (std::size_t k = 0; k < n_shapes; ++k) shape_sum[k] += s[k];
    w_sum += w;
    if ((t - cfg.burn_in) % cfg.thin == 0) {
      std::vector<double> row = s;
      row.push_back(w);
      thinned.push_back(row);
      if (cfg.keep_trace) {
        row.insert(row.begin(), static_cast<double>(t));
        fit.trace.push_back(std::move(row));
      }
    }
  }

  const double kd = static_cast<double>(kept);
  fit.posterior_response_prob.assign(n, 0.0);
  fit.z_sample_mean.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    fit.posterior_response_prob[order[j]] = r_sum[j] / kd;
    fit.z_sample_mean[order[j]] = z_sum[j] / kd;
  }
  for (double& v : shape_sum) v /= kd;
  fit.hyper_posterior_means = h;
  model.set_shapes(fit.hyper_posterior_means, shape_sum);
  fit.w_posterior_mean = w_sum / kd;
  fit.hyper_posterior_means.w = fit.w_posterior_mean;

  std::vector<std::string> summary_names = names;
  summary_names.push_back("w");
  std::vector<double> col(thinned.size());
  for (std::size_t k = 0; k < summary_names.size(); ++k) {
    for (std::size_t r = 0; r < thinned.size(); ++r) col[r] = thinned[r][k];
    ParamSummary ps;
    ps.name = summary_names[k];
    const double m = std::accumulate(col.begin(), col.end(), 0.0) / d(static_cast<long long>(col.size()));
    double ss = 0.0;
    for (double v : col) ss += (v - m) * (v - m);
    ps.mean = m;
    ps.sd = col.size() > 1 ? std::sqrt(ss / d(static_cast<long long>(col.size()) - 1)) : 0.0;
    ps.ess = effective_sample_size(col);
    fit.chain_summary.push_back(ps);
  }
  for (long a : accepted) fit.acceptance_rates.push_back(d(a) / kd);
  fit.diagnostic_failure =
      fit.acceptance_rates[0] < 0.01 || fit.acceptance_rates[1] < 0.01;
  return fit;
}

}  // namespace

McmcConfig McmcConfig::full_scale() {
  McmcConfig c;
  c.burn_in = 50000;
  c.iterations = 2050000;
  c.thin = 100;
  return c;
}

void validate(const McmcConfig& cfg) {
  if (cfg.iterations < 1) throw ConfigError("iterations must be >= 1");
  if (cfg.burn_in < 0 || cfg.burn_in >= cfg.iterations)
    throw ConfigError("burn_in must satisfy 0 <= burn_in < iterations");
  if (cfg.adapt_until > cfg.burn_in)
    throw ConfigError("adaptation must stop by the end of burn-in");
  if (cfg.thin < 1) throw ConfigError("thin must be >= 1");
  if (!(cfg.target_accept > 0.0 && cfg.target_accept < 1.0))
    throw ConfigError("target_accept must lie in (0, 1)");
  if (!(cfg.prior_mean_hypers > 0.0) || !std::isfinite(cfg.prior_mean_hypers))
    throw ConfigError("prior_mean_hypers must be positive");
}

McmcFit fit_mcmc(std::span<const CountPair> data, const McmcConfig& cfg) {
  return run_chain(UniChain{cfg.sidedness}, data, cfg);
}

McmcFitMv fit_mcmc(std::span<const MultiCountPair> data, const McmcConfig& cfg) {
  if (data.empty()) throw ValidationError("MCMC needs at least 2 subjects");
  return run_chain(MultiChain{data.front().categories()}, data, cfg);
}

std::vector<int> gibbs_update_z(const BetaBinHypers& h, std::span<const CountPair> data,
                                Sidedness side, SeededRng& rng) {
  std::vector<int> z(data.size());
  for (std::size_t i = 0; i < data.size(); ++i)
    z[i] = rng.uniform() < responsibility(h, data[i], side) ? 1 : 0;
  return z;
}

std::vector<int> gibbs_update_z(const DirMultHypers& h,
                                std::span<const MultiCountPair> data, SeededRng& rng) {
  std::vector<int> z(data.size());
  for (std::size_t i = 0; i < data.size(); ++i)
    z[i] = rng.uniform() < responsibility_mv(h, data[i]) ? 1 : 0;
  return z;
}

double gibbs_update_w(std::span<const int> z, SeededRng& rng) {
  const long long ones = std::count(z.begin(), z.end(), 1);
  const long long zeros = static_cast<long long>(z.size()) - ones;
  return sample_beta(rng, 1.0 + d(ones), 1.0 + d(zeros));
}

bool mh_accept(double log_ratio, SeededRng& rng) {
  if (std::isnan(log_ratio) || log_ratio == -kInf) return false;
  if (log_ratio >= 0.0) return true;
  return std::log(rng.uniform()) < log_ratio;
}

double adapt_log_scale(double log_scale, double accept_prob, double target,
                       long iteration) {
  return log_scale +
         (accept_prob - target) / std::pow(static_cast<double>(iteration) + 1.0, 0.6);
}

RandomWalkBlock::RandomWalkBlock(std::size_t dim, double target_accept, double initial_sd)
    : dim_(dim),
      target_(target_accept),
      chol_(dim * dim, 0.0),
      mean_(dim, 0.0),
      m2_(dim * dim, 0.0) {
  if (dim == 0) throw DomainError("random walk block needs dim >= 1");
  if (!(initial_sd > 0.0)) throw DomainError("initial_sd must be positive");
  for (std::size_t k = 0; k < dim; ++k) chol_[k * dim + k] = initial_sd;
}

std::vector<double> RandomWalkBlock::propose(std::span<const double> x,
                                             SeededRng& rng) const {
  std::vector<double> eps(dim_);
  for (double& e : eps) e = sample_normal(rng);
  const double s = std::exp(log_scale_);
  std::vector<double> out(x.begin(), x.end());
  for (std::size_t i = 0; i < dim_; ++i) {
    double v = 0.0;
    for (std::size_t j = 0; j <= i; ++j) v += chol_[i * dim_ + j] * eps[j];
    out[i] += s * v;
  }
  return out;
}

void RandomWalkBlock::record(std::span<const double> x, double accept_prob) {
  if (frozen_) return;
  ++steps_;
  log_scale_ = adapt_log_scale(log_scale_, accept_prob, target_, steps_);
  // Welford co-moments of the visited states.
  const double nd = static_cast<double>(steps_);
  std::vector<double> delta(dim_);
  for (std::size_t i = 0; i < dim_; ++i) {
    delta[i] = x[i] - mean_[i];
    mean_[i] += delta[i] / nd;
  }
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = 0; j < dim_; ++j)
      m2_[i * dim_ + j] += delta[i] * (x[j] - mean_[j]);
  const long warmup = std::max<long>(200, 20 * static_cast<long>(dim_));
  if (steps_ >= warmup && steps_ % 100 == 0) refresh_cholesky();
}

void RandomWalkBlock::refresh_cholesky() {
  const std::size_t n = dim_;
  const double denom = static_cast<double>(steps_ - 1);
  std::vector<double> l(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = m2_[i * n + j] / denom + (i == j ? 1e-8 : 0.0);
      for (std::size_t k = 0; k < j; ++k) s -= l[i * n + k] * l[j * n + k];
      if (i == j) {
        if (!(s > 0.0)) return;  // keep the previous factor
        l[i * n + i] = std::sqrt(s);
      } else {
        l[i * n + j] = s / l[j * n + j];
      }
    }
  }
  if (!using_empirical_) {
    log_scale_ = std::log(2.38 / std::sqrt(static_cast<double>(n)));
    using_empirical_ = true;
  }
  chol_ = std::move(l);
}

double log_hyper_target(const BetaBinHypers& h, std::span<const int> z,
                        std::span<const CountPair> data, Sidedness side,
                        double prior_rate) {
  double lpm = 0.0;
  if (side == Sidedness::OneSidedIncrease) {
    try {
      lpm = log_prior_constraint_mass(h);
    } catch (const DegenerateConstraintError&) {
      return -kInf;
    }
  }
  double out = -prior_rate * (h.alpha_u + h.beta_u + h.alpha_s + h.beta_s);
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!z[i])
      out += log_L0(h, data[i]);
    else
      out += side == Sidedness::OneSidedIncrease ? log_L1_one_sided(h, data[i], lpm)
                                                 : log_L1_two_sided(h, data[i]);
  }
  return out;
}

MhStep mh_update_hypers(const BetaBinHypers& h, std::span<const int> z,
                        std::span<const CountPair> data, Sidedness side,
                        double prior_rate, const RandomWalkBlock& u_block,
                        const RandomWalkBlock& s_block, SeededRng& rng) {
  const UniChain model{side};
  MhStep out{h, false, false};
  double current = log_hyper_target(h, z, data, side, prior_rate);
  for (int b = 0; b < 2; ++b) {
    const RandomWalkBlock& blk = b == 0 ? u_block : s_block;
    const std::vector<double> x = model.get_block(out.hypers, b);
    const std::vector<double> xp = blk.propose(x, rng);
    double log_ratio = -kInf;
    BetaBinHypers hp = out.hypers;
    double proposed = -kInf;
    if (in_bounds(xp)) {
      model.set_block(hp, b, xp);
      proposed = log_hyper_target(hp, z, data, side, prior_rate);
      log_ratio = proposed - current + (xp[0] + xp[1]) - (x[0] + x[1]);
    }
    if (mh_accept(log_ratio, rng)) {
      out.hypers = hp;
      current = proposed;
      (b == 0 ? out.accepted_u : out.accepted_s) = true;
    }
  }
  return out;
}

double effective_sample_size(std::span<const double> draws) {
  const std::size_t n = draws.size();
  if (n < 4) return static_cast<double>(n);
  const double m = std::accumulate(draws.begin(), draws.end(), 0.0) / static_cast<double>(n);
  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) s += (draws[t] - m) * (draws[t + lag] - m);
    return s / static_cast<double>(n);
  };
  const double g0 = autocov(0);
  if (!(g0 > 0.0)) return 1.0;
  // Sum consecutive-pair autocovariances while they stay positive.
  double tau = -g0;
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    const double pair = autocov(2 * k) + autocov(2 * k + 1);
    if (!(pair > 0.0)) break;
    tau += 2.0 * pair;
  }
  tau = std::max(tau, g0 / static_cast<double>(n));
  return std::min(static_cast<double>(n), static_cast<double>(n) * g0 / tau);
}

template <class Hypers>
void write_trace_csv(std::ostream& os, const McmcFitResult<Hypers>& fit) {
  for (std::size_t k = 0; k < fit.trace_columns.size(); ++k)
    os << (k ? "," : "") << fit.trace_columns[k];
  os << '\n';
  const auto flags = os.flags();
  const auto prec = os.precision(17);
  for (const auto& row : fit.trace) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      os << (k ? "," : "");
      if (k == 0)
        os << static_cast<long long>(row[k]);
      else
        os << row[k];
    }
    os << '\n';
  }
  os.precision(prec);
  os.flags(flags);
}

template void write_trace_csv(std::ostream&, const McmcFit&);
template void write_trace_csv(std::ostream&, const McmcFitMv&);

}  // namespace mimosa
