#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mimosa/betabin.hpp"
#include "mimosa/dirmult.hpp"
#include "mimosa/rng.hpp"

namespace mimosa {

struct TestResult {
  std::string subject_id;
  double statistic = 0.0;
  double p_value = 1.0;
  int direction = 0;  // sign of n_s/N_s - n_u/N_u
};

/// Hypergeometric test on the 2x2 table with all margins fixed. One-sided:
/// Pr(X >= n_s). Two-sided: total probability of tables no more likely
/// than the observed one. statistic = n_s.
TestResult fisher_exact(const CountPair& y, Sidedness side);

/// G = 2[l(p_s, p_u) - l(p_pooled)] at binomial MLEs, chi-square(1) p-value.
/// One-sided: half the two-sided p when p_s > p_u, else 1 - half.
/// Throws DomainError when either total is zero.
TestResult binomial_lrt(const CountPair& y, Sidedness side);

/// statistic = ln[(n_s + 0.5)/(N_s + 1)] - ln[(n_u + 0.5)/(N_u + 1)];
/// ranking only, p_value = 1.
TestResult log_fold_change(const CountPair& y);

/// G test on the 2 x M table; columns with zero total are dropped first.
/// statistic = G, df = (non-empty columns) - 1.
TestResult multinomial_lrt(const MultiCountPair& y);

struct MultiFisherOptions {
  std::size_t resamples = 100000;
  double enumeration_limit = 1e6;  // max tables for exact enumeration
};

/// Fisher-Freeman-Halton test on the 2 x M table with margins fixed: exact
/// enumeration when the table count is small, else Monte Carlo with
/// p = (1 + #{P(table) <= P(observed)}) / (B + 1). statistic = ln P(observed).
TestResult multi_fisher(const MultiCountPair& y, SeededRng& rng,
                        const MultiFisherOptions& opts = {});

/// Number of 2 x M tables sharing the observed margins; +inf past double range.
double count_tables(const MultiCountPair& y);

struct MultiTestResults {
  TestResult lrt;
  TestResult fisher;
  bool fisher_exact_enumeration = false;
};

MultiTestResults multi_category_test(const MultiCountPair& y, SeededRng& rng,
                                     const MultiFisherOptions& opts = {});

enum class PAdjustMethod { BH };

/// Benjamini-Hochberg step-up adjusted p-values, in input order.
std::vector<double> adjust_pvalues(std::span<const double> ps,
                                   PAdjustMethod method = PAdjustMethod::BH);

}  // namespace mimosa
