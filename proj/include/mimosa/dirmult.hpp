#pragma once

#include <span>
#include <string>
#include <vector>

#include "mimosa/numerics.hpp"

namespace mimosa {

/// Largest supported category count (K <= 8 markers).
inline constexpr std::size_t kMaxCategories = 256;

/// One subject's stimulated / unstimulated count vectors over M categories.
struct MultiCountPair {
  std::string subject_id;
  std::vector<long long> n_s;
  std::vector<long long> n_u;
  std::vector<std::string> category_labels;

  long long N_s() const;
  long long N_u() const;
  std::size_t categories() const { return n_s.size(); }
};

bool operator==(const MultiCountPair& a, const MultiCountPair& b);
/// Equal counts and totals, ignoring subject_id and labels.
bool same_counts(const MultiCountPair& a, const MultiCountPair& b);

/// Throws ValidationError on negative counts, empty totals, length mismatch
/// or M outside [2, 256].
void validate(const MultiCountPair& y);

struct DirMultHypers {
  std::vector<double> alpha_u;
  std::vector<double> alpha_s;
  double w = 0.5;
};

/// ln N! / prod n_k!, accumulated as a chain of binomial coefficients.
LogDomainValue log_multinomial_coefficient(std::span<const long long> counts);

LogDomainValue log_L0_mv(const DirMultHypers& h, const MultiCountPair& y);
LogDomainValue log_L1_mv(const DirMultHypers& h, const MultiCountPair& y);
double responsibility_mv(const DirMultHypers& h, const MultiCountPair& y);

/// Posterior mean proportion vectors mixed by responsibility.
struct MultiProportionSummary {
  std::vector<double> mean_p_u;
  std::vector<double> mean_p_s;
};
MultiProportionSummary posterior_proportion_summaries(const DirMultHypers& h,
                                                      const MultiCountPair& y);

}  // namespace mimosa
