#pragma once

#include <string>

#include "mimosa/numerics.hpp"

namespace mimosa {

/// One subject's paired 2x2 table: positive / total cells per condition.
struct CountPair {
  std::string subject_id;
  long long n_s = 0;
  long long N_s = 0;
  long long n_u = 0;
  long long N_u = 0;
};

bool operator==(const CountPair& a, const CountPair& b);
/// Equal counts and totals, ignoring subject_id and labels.
bool same_counts(const CountPair& a, const CountPair& b);

/// Throws ValidationError unless 0 <= n <= N and N >= 1 in both conditions.
void validate(const CountPair& y);

/// Shared hyperparameters: Beta(alpha_u, beta_u) for the unstimulated (and
/// null) proportion, Beta(alpha_s, beta_s) for the responder stimulated
/// proportion, w = Pr(response).
struct BetaBinHypers {
  double alpha_u = 1.0;
  double beta_u = 1.0;
  double alpha_s = 1.0;
  double beta_s = 1.0;
  double w = 0.5;
};

enum class Sidedness { TwoSided, OneSidedIncrease };

/// Log marginal likelihood under the null component (p_s = p_u).
LogDomainValue log_L0(const BetaBinHypers& h, const CountPair& y);

/// Log marginal likelihood under independent p_u, p_s.
LogDomainValue log_L1_two_sided(const BetaBinHypers& h, const CountPair& y);

/// ln Pr(p_s > p_u) under the prior. Throws DegenerateConstraintError when
/// the mass is below 1e-300.
LogDomainValue log_prior_constraint_mass(const BetaBinHypers& h);

/// Log marginal under the prior truncated to p_s > p_u.
LogDomainValue log_L1_one_sided(const BetaBinHypers& h, const CountPair& y);
/// Same, with ln Pr(p_s > p_u) already computed for h.
LogDomainValue log_L1_one_sided(const BetaBinHypers& h, const CountPair& y,
                                LogDomainValue log_prior_mass);

LogDomainValue log_L1(const BetaBinHypers& h, const CountPair& y, Sidedness side);

/// w L1 / ((1 - w) L0 + w L1) from log likelihoods; exact 0 / 1 at w = 0 / 1.
double responsibility_from_logs(double w, LogDomainValue l0, LogDomainValue l1);

double responsibility(const BetaBinHypers& h, const CountPair& y, Sidedness side);

struct ProportionSummary {
  double mean_p_u = 0.0;
  double mean_p_s = 0.0;
  double mean_diff = 0.0;  // mean_p_s - mean_p_u
};

/// Posterior means of p_u and p_s, mixed over the two components by the
/// subject's responsibility.
ProportionSummary posterior_proportion_summaries(const BetaBinHypers& h,
                                                 const CountPair& y,
                                                 Sidedness side);

}  // namespace mimosa
