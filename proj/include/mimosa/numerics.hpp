#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace mimosa {

/// Log-probability or log-likelihood in nats; log(0) is -infinity.
using LogDomainValue = double;

// Special functions. All throw DomainError on invalid arguments.

/// ln Gamma(x) for x > 0 (Lanczos, g = 7, 9 terms).
double log_gamma(double x);

/// ln B(a, b). Uses a Stirling-remainder form when either argument is
/// large so that the result keeps full relative precision.
LogDomainValue log_beta(double a, double b);

/// ln of the multivariate beta function prod Gamma(a_k) / Gamma(sum a_k).
LogDomainValue log_mv_beta(std::span<const double> alpha);

/// ln C(n, k).
LogDomainValue log_choose(long long n, long long k);

LogDomainValue log_sum_exp(std::span<const double> xs);
LogDomainValue log_add_exp(double a, double b);

/// Regularized incomplete beta I_x(a, b).
double reg_inc_beta(double x, double a, double b);

/// Pr(P1 > P2) for independent P1 ~ Beta(a1, b1), P2 ~ Beta(a2, b2).
double beta_gt_prob(double a1, double b1, double a2, double b2);

/// ln Pr(P1 > P2); keeps relative accuracy when the probability is tiny.
LogDomainValue log_beta_gt_prob(double a1, double b1, double a2, double b2);

/// Upper tail of the chi-square distribution.
double chi_square_sf(double x, double df);

double normal_cdf(double z);
/// Upper tail 1 - Phi(z), accurate for large z.
double normal_sf(double z);
double normal_quantile(double p);

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  std::size_t intervals = 0;
};

/// Adaptive Gauss-Kronrod (7/15) integration over [breaks.front(),
/// breaks.back()], starting from the given partition and bisecting the
/// interval with the largest error estimate until the total estimated
/// error is below max(abs_tol, rel_tol * |value|).
QuadratureResult integrate_adaptive(const std::function<double(double)>& f,
                                    std::span<const double> breaks,
                                    double abs_tol, double rel_tol,
                                    std::size_t max_intervals = 500);

QuadratureResult integrate_adaptive(const std::function<double(double)>& f,
                                    double lo, double hi, double abs_tol,
                                    double rel_tol,
                                    std::size_t max_intervals = 500);

struct NelderMeadOptions {
  double tol = 1e-8;             // stop when max f - min f over simplex < tol
  double xtol = 1e-4;            // ... and every vertex is within xtol of the best
  std::size_t max_evals = 2000;
  double initial_step = 0.1;     // simplex edge along each axis
};

struct NelderMeadResult {
  std::vector<double> argmin;
  double fmin = 0.0;
  std::size_t evals = 0;
  bool converged = false;
};

/// Derivative-free minimisation. Non-finite objective values are treated
/// as +infinity; throws InitializationError if f(x0) is not finite.
NelderMeadResult nelder_mead_minimize(
    const std::function<double(std::span<const double>)>& f,
    std::vector<double> x0, const NelderMeadOptions& opts = {});

}  // namespace mimosa
