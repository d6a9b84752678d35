#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mimosa/betabin.hpp"
#include "mimosa/dirmult.hpp"

namespace mimosa {

struct EmConfig {
  int max_iters = 200;
  double loglik_tol = 1e-6;
  double init_pvalue_threshold = 0.05;
  double optimizer_tol = 1e-8;
  std::size_t optimizer_max_evals = 2000;
  Sidedness sidedness = Sidedness::TwoSided;  // ignored by the multivariate model
  std::size_t init_resamples = 2000;  // Monte Carlo Fisher draws, multivariate init
  std::uint64_t seed = 1;             // only used by the Monte Carlo init test
};

/// Throws ConfigError on non-positive tolerances or iteration limits.
void validate(const EmConfig& cfg);

template <class Hypers>
struct EmInit {
  Hypers hypers;
  std::vector<double> responsibilities;  // z^(0), each 0 or 1
  bool fallback_used = false;
};

template <class Hypers>
struct EmFitResult {
  Hypers hypers;
  std::vector<double> responsibilities;
  std::vector<double> observed_loglik_trace;
  bool converged = false;
  int iterations = 0;
  int rejected_m_steps = 0;
  bool optimizer_failure = false;
  std::size_t optimizer_evaluations = 0;  // objective calls over all M-steps
  std::vector<std::string> warnings;
};

using EmFit = EmFitResult<BetaBinHypers>;
using EmFitMv = EmFitResult<DirMultHypers>;

struct BetaShapes {
  double alpha = 1.0;
  double beta = 1.0;
};

/// alpha = m k, beta = (1 - m) k with k = m(1 - m)/v - 1 (sample variance);
/// k is clamped to [1, 1e7] and m to [1e-7, 1 - 1e-7].
BetaShapes method_of_moments(std::span<const double> proportions);

/// Dirichlet analogue: mean vector times the median per-category k.
std::vector<double> method_of_moments_dirichlet(
    const std::vector<std::vector<double>>& proportions);

EmInit<BetaBinHypers> initialize(std::span<const CountPair> data, const EmConfig& cfg);
EmInit<DirMultHypers> initialize(std::span<const MultiCountPair> data,
                                 const EmConfig& cfg);

std::vector<double> e_step(const BetaBinHypers& h, std::span<const CountPair> data,
                           Sidedness side);
std::vector<double> e_step(const DirMultHypers& h, std::span<const MultiCountPair> data);

/// Sum_i log[(1 - w) L0_i + w L1_i].
double observed_loglik(const BetaBinHypers& h, std::span<const CountPair> data,
                       Sidedness side);
double observed_loglik(const DirMultHypers& h, std::span<const MultiCountPair> data);

/// Sum_i z_i (log w + l1_i) + (1 - z_i)(log(1 - w) + l0_i), with 0 * -inf = 0.
double expected_complete_loglik(const BetaBinHypers& h, std::span<const double> resp,
                                std::span<const CountPair> data, Sidedness side);
double expected_complete_loglik(const DirMultHypers& h, std::span<const double> resp,
                                std::span<const MultiCountPair> data);

struct MStepReport {
  bool accepted = true;          // false: shapes kept from the previous hypers
  bool optimizer_failure = false;
  std::size_t evaluations = 0;
};

/// w = mean(resp); shapes by Nelder-Mead on log scale, never decreasing the
/// expected complete-data log-likelihood. `initial_step` is the simplex edge.
BetaBinHypers m_step(std::span<const double> resp, std::span<const CountPair> data,
                     const BetaBinHypers& prev, const EmConfig& cfg,
                     MStepReport* report = nullptr, double initial_step = 0.1);
DirMultHypers m_step(std::span<const double> resp, std::span<const MultiCountPair> data,
                     const DirMultHypers& prev, const EmConfig& cfg,
                     MStepReport* report = nullptr, double initial_step = 0.1);

/// Full EM. Subjects are processed in a canonical order so the result does
/// not depend on input order; responsibilities come back in input order.
EmFit fit_em(std::span<const CountPair> data, const EmConfig& cfg);
EmFitMv fit_em(std::span<const MultiCountPair> data, const EmConfig& cfg);

/// Index permutation sorting subjects by counts, then subject_id.
std::vector<std::size_t> canonical_order(std::span<const CountPair> data);
std::vector<std::size_t> canonical_order(std::span<const MultiCountPair> data);

}  // namespace mimosa
