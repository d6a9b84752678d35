#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mimosa {

/// Points ordered by decreasing threshold, starting at (0, 0) with an
/// infinite threshold; a subject is called when score >= threshold.
struct RocCurve {
  std::vector<double> thresholds;
  std::vector<double> fpr;
  std::vector<double> tpr;
  double auc = 0.5;
};

/// Tied scores form one step, so auc equals the Mann-Whitney U / (n1 n0)
/// with ties counted one half. Throws DomainError unless both classes occur.
RocCurve roc(std::span<const double> scores, std::span<const int> labels);

/// Linear interpolation of tpr at the given fpr.
double tpr_at(const RocCurve& curve, double fpr);

/// Mean tpr across curves at each fpr of the grid.
std::vector<double> average_tpr(std::span<const RocCurve> curves,
                                std::span<const double> fpr_grid);

struct FdrStep {
  double threshold = 1.0;     // call set {i : z_i >= threshold}
  double expected_fdr = 0.0;  // mean of (1 - z_i) over the call set
  std::size_t n_called = 0;
};

/// One step per distinct responsibility, thresholds decreasing.
std::vector<FdrStep> posterior_fdr(std::span<const double> responsibilities);

/// 0.01, 0.02, ..., 0.50.
std::vector<double> nominal_grid();

/// Largest call set whose expected FDR is <= each nominal level (ties in
/// responsibility are called together or not at all).
std::vector<std::vector<int>> calls_from_posterior(std::span<const double> responsibilities,
                                                   std::span<const double> nominal);

/// Calls q_i <= nominal.
std::vector<std::vector<int>> calls_from_qvalues(std::span<const double> qvalues,
                                                 std::span<const double> nominal);

struct FdrCurve {
  std::vector<double> nominal;
  std::vector<double> observed;
  std::vector<std::size_t> n_called;
};

/// observed = #(called with label 0) / #called, 0 when nothing is called.
FdrCurve observed_vs_nominal(const std::vector<std::vector<int>>& calls,
                             std::span<const double> nominal,
                             std::span<const int> labels);

/// z_i * sign(mean_diff_i).
std::vector<double> signed_score(std::span<const double> responsibilities,
                                 std::span<const double> mean_diff);

/// Average ranks, ties sharing the mean rank (1-based).
std::vector<double> average_ranks(std::span<const double> xs);

/// Spearman rank correlation; 0 when either input is constant.
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace mimosa
