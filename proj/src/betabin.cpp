#include "mimosa/betabin.hpp"

#include <cmath>
#include <limits>

#include "mimosa/error.hpp"

namespace mimosa {

namespace {

constexpr double kLogTinyMass = -690.7755278982137;  // ln 1e-300

double d(long long v) { return static_cast<double>(v); }

LogDomainValue log_coefficients(const CountPair& y) {
  return log_choose(y.N_u, y.n_u) + log_choose(y.N_s, y.n_s);
}

void check_counts(const CountPair& y) {
  if (y.n_s < 0 || y.n_u < 0 || y.n_s > y.N_s || y.n_u > y.N_u)
    throw DomainError("counts must satisfy 0 <= n <= N");
}

}  // namespace

bool operator==(const CountPair& a, const CountPair& b) {
  return a.subject_id == b.subject_id && a.n_s == b.n_s && a.N_s == b.N_s &&
         a.n_u == b.n_u && a.N_u == b.N_u;
}

bool same_counts(const CountPair& a, const CountPair& b) {
  return a.n_s == b.n_s && a.N_s == b.N_s && a.n_u == b.n_u && a.N_u == b.N_u;
}

void validate(const CountPair& y) {
  const std::string who = "subject '" + y.subject_id + "': ";
  if (y.N_s < 1 || y.N_u < 1)
    throw ValidationError(who + "totals N_s and N_u must be >= 1");
  if (y.n_s < 0 || y.n_u < 0)
    throw ValidationError(who + "counts must be non-negative");
  if (y.n_s > y.N_s) throw ValidationError(who + "n_s exceeds N_s");
  if (y.n_u > y.N_u) throw ValidationError(who + "n_u exceeds N_u");
}

LogDomainValue log_L0(const BetaBinHypers& h, const CountPair& y) {
  check_counts(y);
  const double pos = d(y.n_s + y.n_u);
  const double neg = d(y.N_s - y.n_s + y.N_u - y.n_u);
  return log_coefficients(y) + log_beta(pos + h.alpha_u, neg + h.beta_u) -
         log_beta(h.alpha_u, h.beta_u);
}

LogDomainValue log_L1_two_sided(const BetaBinHypers& h, const CountPair& y) {
  check_counts(y);
  return log_coefficients(y) +
         log_beta(d(y.n_u) + h.alpha_u, d(y.N_u - y.n_u) + h.beta_u) -
         log_beta(h.alpha_u, h.beta_u) +
         log_beta(d(y.n_s) + h.alpha_s, d(y.N_s - y.n_s) + h.beta_s) -
         log_beta(h.alpha_s, h.beta_s);
}

LogDomainValue log_prior_constraint_mass(const BetaBinHypers& h) {
  const double m = log_beta_gt_prob(h.alpha_s, h.beta_s, h.alpha_u, h.beta_u);
  if (!(m >= kLogTinyMass))
    throw DegenerateConstraintError(
        "prior mass of p_s > p_u is numerically zero");
  return m;
}

LogDomainValue log_L1_one_sided(const BetaBinHypers& h, const CountPair& y) {
  return log_L1_one_sided(h, y, log_prior_constraint_mass(h));
}

LogDomainValue log_L1_one_sided(const BetaBinHypers& h, const CountPair& y,
                                LogDomainValue log_prior_mass) {
  const double post = log_beta_gt_prob(
      d(y.n_s) + h.alpha_s, d(y.N_s - y.n_s) + h.beta_s,
      d(y.n_u) + h.alpha_u, d(y.N_u - y.n_u) + h.beta_u);
  return log_L1_two_sided(h, y) + post - log_prior_mass;
}

LogDomainValue log_L1(const BetaBinHypers& h, const CountPair& y, Sidedness side) {
  return side == Sidedness::TwoSided ? log_L1_two_sided(h, y)
                                     : log_L1_one_sided(h, y);
}

double responsibility_from_logs(double w, LogDomainValue l0, LogDomainValue l1) {
  if (!(w > 0.0)) return 0.0;
  if (!(w < 1.0)) return 1.0;
  const double a = std::log1p(-w) + l0;
  const double b = std::log(w) + l1;
  if (a == -std::numeric_limits<double>::infinity() &&
      b == -std::numeric_limits<double>::infinity())
    return w;
  return std::exp(b - log_add_exp(a, b));
}

double responsibility(const BetaBinHypers& h, const CountPair& y, Sidedness side) {
  if (!(h.w > 0.0)) return 0.0;
  if (!(h.w < 1.0)) return 1.0;
  return responsibility_from_logs(h.w, log_L0(h, y), log_L1(h, y, side));
}

ProportionSummary posterior_proportion_summaries(const BetaBinHypers& h,
                                                 const CountPair& y,
                                                 Sidedness side) {
  check_counts(y);
  const double z = responsibility(h, y, side);

  // Null component: one shared proportion.
  const double a0 = d(y.n_s + y.n_u) + h.alpha_u;
  const double b0 = d(y.N_s - y.n_s + y.N_u - y.n_u) + h.beta_u;
  const double m0 = a0 / (a0 + b0);

  // Responder component: independent conjugate posteriors.
  const double au = d(y.n_u) + h.alpha_u;
  const double bu = d(y.N_u - y.n_u) + h.beta_u;
  const double as = d(y.n_s) + h.alpha_s;
  const double bs = d(y.N_s - y.n_s) + h.beta_s;
  double m1u = au / (au + bu);
  double m1s = as / (as + bs);
  if (side == Sidedness::OneSidedIncrease) {
    // E[P 1{Ps > Pu}] = E[P] Pr(.) with the shape of P raised by one.
    const double base = log_beta_gt_prob(as, bs, au, bu);
    m1s *= std::exp(log_beta_gt_prob(as + 1.0, bs, au, bu) - base);
    m1u *= std::exp(log_beta_gt_prob(as, bs, au + 1.0, bu) - base);
  }

  ProportionSummary out;
  out.mean_p_u = z * m1u + (1.0 - z) * m0;
  out.mean_p_s = z * m1s + (1.0 - z) * m0;
  out.mean_diff = z * (m1s - m1u);
  return out;
}

}  // namespace mimosa
