#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mimosa/betabin.hpp"
#include "mimosa/dirmult.hpp"
#include "mimosa/rng.hpp"

namespace mimosa {

struct McmcConfig {
  long iterations = 50000;
  long burn_in = 5000;
  long thin = 10;
  std::uint64_t seed = 1;
  long adapt_until = -1;  // negative: adapt for the whole burn-in
  double target_accept = 0.3;
  double prior_mean_hypers = 1e3;  // exponential prior mean of every shape
  Sidedness sidedness = Sidedness::TwoSided;  // ignored by the multivariate model
  bool keep_trace = true;

  /// 2,000,000 iterations after 50,000 burn-in.
  static McmcConfig full_scale();
};

/// Throws ConfigError unless burn_in < iterations, adapt_until <= burn_in,
/// thin >= 1, 0 < target_accept < 1 and prior_mean_hypers > 0.
void validate(const McmcConfig& cfg);

struct ParamSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double ess = 1.0;
};

template <class Hypers>
struct McmcFitResult {
  /// Posterior mean of z_i, averaged as the conditional response
  /// probability over post-burn-in iterations (Rao-Blackwellized).
  std::vector<double> posterior_response_prob;
  /// Plain frequency of sampled z_i = 1 over post-burn-in iterations.
  std::vector<double> z_sample_mean;
  Hypers hyper_posterior_means;
  std::vector<ParamSummary> chain_summary;  // shapes then w, from thinned draws
  std::vector<double> acceptance_rates;     // post-burn-in, per proposal block (u, s)
  double w_posterior_mean = 0.0;
  bool diagnostic_failure = false;          // some block accepted < 1% after burn-in
  std::vector<std::string> trace_columns;   // "iteration", shapes..., "w"
  std::vector<std::vector<double>> trace;   // thinned post-burn-in rows
};

using McmcFit = McmcFitResult<BetaBinHypers>;
using McmcFitMv = McmcFitResult<DirMultHypers>;

/// Metropolis-Hastings within Gibbs: log-normal random-walk block updates of
/// (alpha_u, beta_u) and (alpha_s, beta_s) (or the two alpha vectors), Gibbs
/// updates of z and w. Deterministic given cfg.seed; subjects are handled in
/// canonical order, each with its own z stream, so input order only
/// permutes the output.
McmcFit fit_mcmc(std::span<const CountPair> data, const McmcConfig& cfg);
McmcFitMv fit_mcmc(std::span<const MultiCountPair> data, const McmcConfig& cfg);

/// z_i ~ Bernoulli(responsibility_i), one uniform per subject in order.
std::vector<int> gibbs_update_z(const BetaBinHypers& h, std::span<const CountPair> data,
                                Sidedness side, SeededRng& rng);
std::vector<int> gibbs_update_z(const DirMultHypers& h,
                                std::span<const MultiCountPair> data, SeededRng& rng);

/// w ~ Beta(1 + sum z, 1 + I - sum z).
double gibbs_update_w(std::span<const int> z, SeededRng& rng);

/// Accept with probability min(1, exp(log_ratio)); NaN or -inf rejects.
bool mh_accept(double log_ratio, SeededRng& rng);

/// Robbins-Monro step on the log proposal scale toward the target rate.
double adapt_log_scale(double log_scale, double accept_prob, double target,
                       long iteration);

/// Log-scale Gaussian random walk over one parameter block, with adaptive
/// scale and covariance that can be frozen.
class RandomWalkBlock {
 public:
  RandomWalkBlock(std::size_t dim, double target_accept = 0.3,
                  double initial_sd = 0.1);

  std::size_t dim() const { return dim_; }
  double log_scale() const { return log_scale_; }
  bool frozen() const { return frozen_; }

  /// x + exp(log_scale) L eps.
  std::vector<double> propose(std::span<const double> x, SeededRng& rng) const;
  /// Feeds one iteration's outcome; adapts unless frozen.
  void record(std::span<const double> x, double accept_prob);
  void freeze() { frozen_ = true; }

 private:
  void refresh_cholesky();

  std::size_t dim_;
  double target_;
  double log_scale_ = 0.0;
  bool frozen_ = false;
  bool using_empirical_ = false;
  long steps_ = 0;
  std::vector<double> chol_;  // lower triangular, row-major dim x dim
  std::vector<double> mean_;
  std::vector<double> m2_;    // running co-moment sums, row-major
};

/// Log target of the shapes given z, on the shape scale:
/// sum_i log L_{z_i}(h | y_i) - rate * sum(shapes).
double log_hyper_target(const BetaBinHypers& h, std::span<const int> z,
                        std::span<const CountPair> data, Sidedness side,
                        double prior_rate);

struct MhStep {
  BetaBinHypers hypers;
  bool accepted_u = false;
  bool accepted_s = false;
};

/// One sweep of the two block updates, with the log-Jacobian of the
/// log-scale walk included in each acceptance ratio.
MhStep mh_update_hypers(const BetaBinHypers& h, std::span<const int> z,
                        std::span<const CountPair> data, Sidedness side,
                        double prior_rate, const RandomWalkBlock& u_block,
                        const RandomWalkBlock& s_block, SeededRng& rng);

/// Geyer initial-positive-sequence ESS; 1 for a constant chain.
double effective_sample_size(std::span<const double> draws);

/// CSV with the fit's trace columns.
template <class Hypers>
void write_trace_csv(std::ostream& os, const McmcFitResult<Hypers>& fit);

}  // namespace mimosa
