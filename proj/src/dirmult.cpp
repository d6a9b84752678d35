#include "mimosa/dirmult.hpp"

#include <numeric>

#include "mimosa/betabin.hpp"
#include "mimosa/error.hpp"

namespace mimosa {

namespace {

void check_dims(const DirMultHypers& h, const MultiCountPair& y) {
  const std::size_t m = y.n_s.size();
  if (m < 2 || y.n_u.size() != m || h.alpha_u.size() != m || h.alpha_s.size() != m)
    throw DomainError("dimension mismatch between hyperparameters and counts");
  for (std::size_t k = 0; k < m; ++k)
    if (y.n_s[k] < 0 || y.n_u[k] < 0) throw DomainError("counts must be >= 0");
}

// ln B(alpha + counts) - ln B(alpha); sums written as in the beta-binomial
// model so that M = 2 reproduces it bit for bit.
LogDomainValue log_beta_ratio(std::span<const double> alpha,
                              std::span<const long long> a,
                              std::span<const long long> b) {
  std::vector<double> post(alpha.size());
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    const long long c = b.empty() ? a[k] : a[k] + b[k];
    post[k] = static_cast<double>(c) + alpha[k];
  }
  return log_mv_beta(post) - log_mv_beta(alpha);
}

}  // namespace

long long MultiCountPair::N_s() const {
  return std::accumulate(n_s.begin(), n_s.end(), 0LL);
}

long long MultiCountPair::N_u() const {
  return std::accumulate(n_u.begin(), n_u.end(), 0LL);
}

bool operator==(const MultiCountPair& a, const MultiCountPair& b) {
  return a.subject_id == b.subject_id && a.n_s == b.n_s && a.n_u == b.n_u &&
         a.category_labels == b.category_labels;
}

bool same_counts(const MultiCountPair& a, const MultiCountPair& b) {
  return a.n_s == b.n_s && a.n_u == b.n_u;
}

void validate(const MultiCountPair& y) {
  const std::string who = "subject '" + y.subject_id + "': ";
  const std::size_t m = y.n_s.size();
  if (m < 2 || m > kMaxCategories)
    throw ValidationError(who + "category count must lie in [2, 256]");
  if (y.n_u.size() != m) throw ValidationError(who + "count vectors differ in length");
  if (!y.category_labels.empty() && y.category_labels.size() != m)
    throw ValidationError(who + "label count differs from category count");
  for (std::size_t k = 0; k < m; ++k)
    if (y.n_s[k] < 0 || y.n_u[k] < 0)
      throw ValidationError(who + "counts must be non-negative");
  if (y.N_s() < 1 || y.N_u() < 1)
    throw ValidationError(who + "totals N_s and N_u must be >= 1");
}

LogDomainValue log_multinomial_coefficient(std::span<const long long> counts) {
  long long partial = counts.empty() ? 0 : counts[0];
  double out = 0.0;
  for (std::size_t k = 1; k < counts.size(); ++k) {
    partial += counts[k];
    out += log_choose(partial, counts[k]);
  }
  return out;
}

LogDomainValue log_L0_mv(const DirMultHypers& h, const MultiCountPair& y) {
  check_dims(h, y);
  const double coef =
      log_multinomial_coefficient(y.n_u) + log_multinomial_coefficient(y.n_s);
  return coef + log_beta_ratio(h.alpha_u, y.n_s, y.n_u);
}

LogDomainValue log_L1_mv(const DirMultHypers& h, const MultiCountPair& y) {
  check_dims(h, y);
  const double coef =
      log_multinomial_coefficient(y.n_u) + log_multinomial_coefficient(y.n_s);
  return coef + log_beta_ratio(h.alpha_u, y.n_u, {}) +
         log_beta_ratio(h.alpha_s, y.n_s, {});
}

double responsibility_mv(const DirMultHypers& h, const MultiCountPair& y) {
  if (!(h.w > 0.0)) return 0.0;
  if (!(h.w < 1.0)) return 1.0;
  return responsibility_from_logs(h.w, log_L0_mv(h, y), log_L1_mv(h, y));
}

MultiProportionSummary posterior_proportion_summaries(const DirMultHypers& h,
                                                      const MultiCountPair& y) {
  check_dims(h, y);
  const double z = responsibility_mv(h, y);
  const std::size_t m = y.n_s.size();
  double s0 = 0.0, su = 0.0, ss = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    s0 += static_cast<double>(y.n_s[k] + y.n_u[k]) + h.alpha_u[k];
    su += static_cast<double>(y.n_u[k]) + h.alpha_u[k];
    ss += static_cast<double>(y.n_s[k]) + h.alpha_s[k];
  }
  MultiProportionSummary out;
  out.mean_p_u.resize(m);
  out.mean_p_s.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double m0 = (static_cast<double>(y.n_s[k] + y.n_u[k]) + h.alpha_u[k]) / s0;
    const double mu = (static_cast<double>(y.n_u[k]) + h.alpha_u[k]) / su;
    const double ms = (static_cast<double>(y.n_s[k]) + h.alpha_s[k]) / ss;
    out.mean_p_u[k] = z * mu + (1.0 - z) * m0;
    out.mean_p_s[k] = z * ms + (1.0 - z) * m0;
  }
  return out;
}

}  // namespace mimosa
