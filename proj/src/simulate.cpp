#include "mimosa/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "mimosa/error.hpp"
#include "mimosa/numerics.hpp"

namespace mimosa {

namespace {

constexpr double kMinConstraintMass = 1e-4;
constexpr long long kMaxRejections = 10'000'000;
constexpr double kSigmaCap = 1e3;

double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

std::string subject_name(int i, int n) {
  const int width = static_cast<int>(std::to_string(n).size());
  char buf[32];
  std::snprintf(buf, sizeof buf, "S%0*d", width, i + 1);
  return buf;
}

// Pr(Z in (a, b)) without cancellation in either tail.
double normal_mass(double a, double b) {
  if (a > 0.0) return normal_sf(a) - normal_sf(b);
  return normal_cdf(b) - normal_cdf(a);
}

struct ProportionDraw {
  double p_u, p_s;
};

template <class DrawU, class DrawS>
ProportionDraw draw_pair(SeededRng& rng, bool responder, Sidedness side,
                         DrawU draw_u, DrawS draw_s) {
  if (!responder) {
    const double p = draw_u(rng);
    return {p, p};
  }
  for (long long attempt = 0; attempt < kMaxRejections; ++attempt) {
    const double pu = draw_u(rng);
    const double ps = draw_s(rng);
    if (side == Sidedness::TwoSided || ps > pu) return {pu, ps};
  }
  throw DegenerateConstraintError("rejection sampler for p_s > p_u made no progress");
}

template <class DrawU, class DrawS>
LabelledDataset simulate_with(const SimSpec& spec, SeededRng& rng, DrawU draw_u,
                              DrawS draw_s) {
  LabelledDataset out;
  out.spec = spec;
  out.records.reserve(static_cast<std::size_t>(spec.n_subjects));
  for (int i = 0; i < spec.n_subjects; ++i) {
    const bool z = sample_bernoulli(rng, spec.w);
    const ProportionDraw p = draw_pair(rng, z, spec.sidedness, draw_u, draw_s);
    CountPair y;
    y.subject_id = subject_name(i, spec.n_subjects);
    y.N_u = spec.total_counts;
    y.N_s = spec.total_counts;
    y.n_u = sample_binomial(rng, y.N_u, p.p_u);
    y.n_s = sample_binomial(rng, y.N_s, p.p_s);
    out.records.push_back(std::move(y));
    out.true_z.push_back(z ? 1 : 0);
  }
  return out;
}

}  // namespace

BetaBinHypers fixture_hypers() { return {8.0, 4e4, 40.0, 4e4, 0.6}; }

void validate(const SimSpec& spec) {
  if (spec.n_subjects < 2) throw ConfigError("n_subjects must be >= 2");
  if (spec.total_counts < 1) throw ConfigError("total_counts must be >= 1");
  if (!(spec.w >= 0.0 && spec.w <= 1.0)) throw ConfigError("w must lie in [0, 1]");
  if (spec.replicates < 1) throw ConfigError("replicates must be >= 1");
  const auto& h = spec.hypers;
  for (double v : {h.alpha_u, h.beta_u, h.alpha_s, h.beta_s})
    if (!(v > 0.0 && std::isfinite(v))) throw ConfigError("shape parameters must be > 0");
}

LabelledDataset simulate_univariate(const SimSpec& spec, SeededRng& rng) {
  validate(spec);
  const BetaBinHypers& h = spec.hypers;
  if (spec.sidedness == Sidedness::OneSidedIncrease && spec.w > 0.0 &&
      beta_gt_prob(h.alpha_s, h.beta_s, h.alpha_u, h.beta_u) < kMinConstraintMass)
    throw DegenerateConstraintError("Pr(p_s > p_u) under the prior is below 1e-4");
  return simulate_with(
      spec, rng, [&](SeededRng& r) { return sample_beta(r, h.alpha_u, h.beta_u); },
      [&](SeededRng& r) { return sample_beta(r, h.alpha_s, h.beta_s); });
}

double truncated_normal_mean(const TruncNormalParams& p) {
  const double a = -p.mu / p.sigma;
  const double b = (1.0 - p.mu) / p.sigma;
  const double z = normal_mass(a, b);
  return p.mu + p.sigma * (normal_pdf(a) - normal_pdf(b)) / z;
}

double truncated_normal_variance(const TruncNormalParams& p) {
  const double a = -p.mu / p.sigma;
  const double b = (1.0 - p.mu) / p.sigma;
  const double z = normal_mass(a, b);
  const double r = (normal_pdf(a) - normal_pdf(b)) / z;
  return p.sigma * p.sigma * (1.0 + (a * normal_pdf(a) - b * normal_pdf(b)) / z - r * r);
}

TruncNormalParams match_truncated_normal(double mean, double variance) {
  if (!(mean > 0.0 && mean < 1.0) || !(variance > 0.0) ||
      !(variance < mean * (1.0 - mean)))
    throw ParameterError("target moments are not those of a (0, 1) distribution");
  const double sd = std::sqrt(variance);
  auto objective = [&](std::span<const double> x) {
    const TruncNormalParams p{x[0], std::exp(x[1])};
    if (!(p.sigma <= kSigmaCap) || !std::isfinite(p.mu)) return std::numeric_limits<double>::infinity();
    const double m = truncated_normal_mean(p);
    const double v = truncated_normal_variance(p);
    if (!std::isfinite(m) || !(v > 0.0)) return std::numeric_limits<double>::infinity();
    const double em = m / mean - 1.0;
    const double es = std::sqrt(v) / sd - 1.0;
    return em * em + es * es;
  };
  NelderMeadOptions opts;
  opts.tol = 1e-20;
  opts.max_evals = 4000;
  opts.initial_step = 0.05;
  std::vector<double> x{mean, std::log(std::min(sd, 0.5 * kSigmaCap))};
  NelderMeadResult best;
  best.fmin = std::numeric_limits<double>::infinity();
  // Restarts shed a collapsed simplex; the step is in units of (mu, log sigma).
  for (int restart = 0; restart < 4; ++restart) {
    opts.initial_step = restart == 0 ? 0.05 * std::max(sd, 1e-3) : 0.1;
    NelderMeadResult r = nelder_mead_minimize(objective, x, opts);
    if (r.fmin < best.fmin) best = r;
    x = best.argmin;
    if (best.fmin < 1e-14) break;
  }
  if (!(best.fmin < 1e-8))
    throw ParameterError("truncated-normal moment matching did not converge");
  return {best.argmin[0], std::exp(best.argmin[1])};
}

LabelledDataset simulate_misspecified(const SimSpec& spec, SeededRng& rng) {
  validate(spec);
  const BetaBinHypers& h = spec.hypers;
  auto matched = [](double a, double b) {
    const double m = a / (a + b);
    return match_truncated_normal(m, m * (1.0 - m) / (a + b + 1.0));
  };
  const TruncNormalParams tu = matched(h.alpha_u, h.beta_u);
  const TruncNormalParams ts = matched(h.alpha_s, h.beta_s);
  if (spec.sidedness == Sidedness::OneSidedIncrease && spec.w > 0.0) {
    // Acceptance probability of the joint rejection step, by quadrature.
    const double a_u = -tu.mu / tu.sigma, b_u = (1.0 - tu.mu) / tu.sigma;
    const double a_s = -ts.mu / ts.sigma, b_s = (1.0 - ts.mu) / ts.sigma;
    const double zu = normal_mass(a_u, b_u);
    const double zs = normal_mass(a_s, b_s);
    // Breaks around the stimulated density so the peak cannot be missed.
    std::vector<double> range{0.0, 1.0};
    for (double k : {-10.0, -3.0, 0.0, 3.0, 10.0}) {
      const double t = ts.mu + k * ts.sigma;
      if (t > 0.0 && t < 1.0) range.push_back(t);
    }
    std::sort(range.begin(), range.end());
    const double mass =
        integrate_adaptive(
            [&](double p) {
              const double fs = normal_pdf((p - ts.mu) / ts.sigma) / (ts.sigma * zs);
              const double fu = normal_mass(a_u, (p - tu.mu) / tu.sigma) / zu;
              return fs * fu;
            },
            range, 1e-12, 1e-8)
            .value;
    if (mass < kMinConstraintMass)
      throw DegenerateConstraintError("Pr(p_s > p_u) under the prior is below 1e-4");
  }
  return simulate_with(
      spec, rng,
      [&](SeededRng& r) { return sample_truncated_normal(r, tu.mu, tu.sigma, 0.0, 1.0); },
      [&](SeededRng& r) { return sample_truncated_normal(r, ts.mu, ts.sigma, 0.0, 1.0); });
}

std::vector<LabelledDataset> simulate_replicates(const SimSpec& spec) {
  validate(spec);
  std::vector<LabelledDataset> out;
  const std::uint64_t base = stream_key("replicate");
  for (int r = 0; r < spec.replicates; ++r) {
    SeededRng rng(spec.seed, combine_keys(base, static_cast<std::uint64_t>(r)));
    LabelledDataset d = spec.generator == Generator::Beta
                            ? simulate_univariate(spec, rng)
                            : simulate_misspecified(spec, rng);
    d.replicate_index = r;
    out.push_back(std::move(d));
  }
  return out;
}

MultiSimSpec fixture_multi_spec() {
  MultiSimSpec s;
  s.mean_u = {0.97, 0.005, 0.005, 0.005, 0.005, 0.004, 0.003, 0.003};
  s.effect_deltas = {0.0, 2.5e-3, -2.5e-3, 0.0, 0.0, 0.0, 0.0, 0.0};
  s.category_labels = {"000", "001", "010", "011", "100", "101", "110", "111"};
  return s;
}

DirMultHypers multi_hypers(const MultiSimSpec& spec) {
  const std::size_t m = spec.mean_u.size();
  if (m < 2 || m > kMaxCategories)
    throw ParameterError("category count must lie in [2, 256]");
  if (spec.effect_deltas.size() != m)
    throw ParameterError("effect_deltas length differs from the category count");
  if (!(spec.concentration > 0.0)) throw ParameterError("concentration must be > 0");
  const double total = std::accumulate(spec.mean_u.begin(), spec.mean_u.end(), 0.0);
  if (std::fabs(total - 1.0) > 1e-9) throw ParameterError("mean_u must sum to 1");
  const double dsum = std::accumulate(spec.effect_deltas.begin(), spec.effect_deltas.end(), 0.0);
  if (std::fabs(dsum) > 1e-12) throw ParameterError("effect deltas must sum to 0");
  DirMultHypers h;
  h.w = spec.w;
  for (std::size_t k = 0; k < m; ++k) {
    if (!(spec.mean_u[k] > 0.0)) throw ParameterError("mean_u entries must be > 0");
    const double shifted = spec.mean_u[k] + spec.effect_deltas[k];
    if (!(shifted > 0.0)) throw ParameterError("shifted mean proportion must be > 0");
    h.alpha_u.push_back(spec.concentration * spec.mean_u[k]);
    h.alpha_s.push_back(spec.concentration * shifted);
  }
  return h;
}

LabelledMultiDataset simulate_multivariate(const MultiSimSpec& spec, SeededRng& rng) {
  if (spec.n_subjects < 2) throw ConfigError("n_subjects must be >= 2");
  if (spec.total_counts < 1) throw ConfigError("total_counts must be >= 1");
  if (!(spec.w >= 0.0 && spec.w <= 1.0)) throw ConfigError("w must lie in [0, 1]");
  const DirMultHypers h = multi_hypers(spec);
  std::vector<std::string> labels = spec.category_labels;
  if (labels.empty())
    for (std::size_t k = 0; k < h.alpha_u.size(); ++k) labels.push_back("c" + std::to_string(k));
  if (labels.size() != h.alpha_u.size())
    throw ParameterError("category_labels length differs from the category count");

  LabelledMultiDataset out;
  out.spec = spec;
  for (int i = 0; i < spec.n_subjects; ++i) {
    const bool z = sample_bernoulli(rng, spec.w);
    const std::vector<double> pu = sample_dirichlet(rng, h.alpha_u);
    const std::vector<double> ps = z ? sample_dirichlet(rng, h.alpha_s) : pu;
    MultiCountPair y;
    y.subject_id = subject_name(i, spec.n_subjects);
    y.n_u = sample_multinomial(rng, spec.total_counts, pu);
    y.n_s = sample_multinomial(rng, spec.total_counts, ps);
    y.category_labels = labels;
    out.records.push_back(std::move(y));
    out.true_z.push_back(z ? 1 : 0);
  }
  return out;
}

std::vector<LabelledMultiDataset> simulate_multi_replicates(const MultiSimSpec& spec) {
  if (spec.replicates < 1) throw ConfigError("replicates must be >= 1");
  std::vector<LabelledMultiDataset> out;
  const std::uint64_t base = stream_key("replicate");
  for (int r = 0; r < spec.replicates; ++r) {
    SeededRng rng(spec.seed, combine_keys(base, static_cast<std::uint64_t>(r)));
    LabelledMultiDataset d = simulate_multivariate(spec, rng);
    d.replicate_index = r;
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace mimosa
