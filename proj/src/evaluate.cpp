#include "mimosa/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mimosa/error.hpp"

namespace mimosa {

namespace {

std::vector<std::size_t> descending(std::span<const double> xs) {
  std::vector<std::size_t> idx(xs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return xs[a] > xs[b]; });
  return idx;
}

}  // namespace

RocCurve roc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw DomainError("scores and labels differ in length");
  double pos = 0.0, neg = 0.0;
  for (int l : labels) {
    if (l != 0 && l != 1) throw DomainError("labels must be 0 or 1");
    (l ? pos : neg) += 1.0;
  }
  if (pos == 0.0 || neg == 0.0) throw DomainError("roc needs both classes");
  for (double s : scores)
    if (std::isnan(s)) throw DomainError("scores must not be NaN");

  const std::vector<std::size_t> idx = descending(scores);
  RocCurve c;
  c.thresholds.push_back(std::numeric_limits<double>::infinity());
  c.fpr.push_back(0.0);
  c.tpr.push_back(0.0);
  double tp = 0.0, fp = 0.0, area = 0.0;
  std::size_t j = 0;
  while (j < idx.size()) {
    const double t = scores[idx[j]];
    while (j < idx.size() && scores[idx[j]] == t) {
      (labels[idx[j]] ? tp : fp) += 1.0;
      ++j;
    }
    const double f = fp / neg, r = tp / pos;
    area += (f - c.fpr.back()) * (r + c.tpr.back()) * 0.5;
    c.thresholds.push_back(t);
    c.fpr.push_back(f);
    c.tpr.push_back(r);
  }
  c.auc = area;
  return c;
}

double tpr_at(const RocCurve& curve, double fpr) {
  const auto& f = curve.fpr;
  const auto& t = curve.tpr;
  if (fpr <= 0.0) {
    // Highest tpr reached while fpr is still zero.
    double best = 0.0;
    for (std::size_t i = 0; i < f.size() && f[i] == 0.0; ++i) best = t[i];
    return best;
  }
  for (std::size_t i = 1; i < f.size(); ++i) {
    if (f[i] >= fpr) {
      if (f[i] == f[i - 1]) return t[i];
      const double u = (fpr - f[i - 1]) / (f[i] - f[i - 1]);
      return t[i - 1] + u * (t[i] - t[i - 1]);
    }
  }
  return t.back();
}

std::vector<double> average_tpr(std::span<const RocCurve> curves,
                                std::span<const double> fpr_grid) {
  if (curves.empty()) throw DomainError("average_tpr needs at least one curve");
  std::vector<double> out(fpr_grid.size(), 0.0);
  for (const auto& c : curves)
    for (std::size_t g = 0; g < fpr_grid.size(); ++g) out[g] += tpr_at(c, fpr_grid[g]);
  for (double& v : out) v /= static_cast<double>(curves.size());
  return out;
}

std::vector<FdrStep> posterior_fdr(std::span<const double> responsibilities) {
  for (double z : responsibilities)
    if (!(z >= 0.0 && z <= 1.0)) throw DomainError("responsibilities must lie in [0, 1]");
  const std::vector<std::size_t> idx = descending(responsibilities);
  std::vector<FdrStep> out;
  double false_mass = 0.0;
  std::size_t j = 0;
  while (j < idx.size()) {
    const double t = responsibilities[idx[j]];
    while (j < idx.size() && responsibilities[idx[j]] == t) {
      false_mass += 1.0 - responsibilities[idx[j]];
      ++j;
    }
    out.push_back({t, false_mass / static_cast<double>(j), j});
  }
  return out;
}

std::vector<double> nominal_grid() {
  std::vector<double> g;
  for (int k = 1; k <= 50; ++k) g.push_back(k / 100.0);
  return g;
}

std::vector<std::vector<int>> calls_from_posterior(std::span<const double> responsibilities,
                                                   std::span<const double> nominal) {
  const std::vector<FdrStep> steps = posterior_fdr(responsibilities);
  std::vector<std::vector<int>> out;
  for (double level : nominal) {
    double threshold = std::numeric_limits<double>::infinity();
    for (const FdrStep& s : steps)
      if (s.expected_fdr <= level) threshold = s.threshold;
    std::vector<int> called(responsibilities.size(), 0);
    for (std::size_t i = 0; i < responsibilities.size(); ++i)
      called[i] = responsibilities[i] >= threshold ? 1 : 0;
    out.push_back(std::move(called));
  }
  return out;
}

std::vector<std::vector<int>> calls_from_qvalues(std::span<const double> qvalues,
                                                 std::span<const double> nominal) {
  std::vector<std::vector<int>> out;
  for (double level : nominal) {
    std::vector<int> called(qvalues.size(), 0);
    for (std::size_t i = 0; i < qvalues.size(); ++i) called[i] = qvalues[i] <= level ? 1 : 0;
    out.push_back(std::move(called));
  }
  return out;
}

FdrCurve observed_vs_nominal(const std::vector<std::vector<int>>& calls,
                             std::span<const double> nominal,
                             std::span<const int> labels) {
  if (calls.size() != nominal.size())
    throw DomainError("one call vector is needed per nominal level");
  FdrCurve c;
  for (std::size_t k = 0; k < calls.size(); ++k) {
    if (calls[k].size() != labels.size())
      throw DomainError("calls and labels differ in length");
    std::size_t n = 0, false_calls = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (!calls[k][i]) continue;
      ++n;
      if (labels[i] == 0) ++false_calls;
    }
    c.nominal.push_back(nominal[k]);
    c.observed.push_back(n ? static_cast<double>(false_calls) / static_cast<double>(n) : 0.0);
    c.n_called.push_back(n);
  }
  return c;
}

std::vector<double> signed_score(std::span<const double> responsibilities,
                                 std::span<const double> mean_diff) {
  if (responsibilities.size() != mean_diff.size())
    throw DomainError("responsibilities and differences differ in length");
  std::vector<double> out(responsibilities.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double sign = (mean_diff[i] > 0.0) - (mean_diff[i] < 0.0);
    out[i] = responsibilities[i] * sign;
  }
  return out;
}

std::vector<double> average_ranks(std::span<const double> xs) {
  std::vector<std::size_t> idx(xs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> r(xs.size());
  std::size_t j = 0;
  while (j < idx.size()) {
    std::size_t k = j;
    while (k + 1 < idx.size() && xs[idx[k + 1]] == xs[idx[j]]) ++k;
    const double mean_rank = 0.5 * static_cast<double>(j + k) + 1.0;
    for (std::size_t m = j; m <= k; ++m) r[idx[m]] = mean_rank;
    j = k + 1;
  }
  return r;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw DomainError("spearman needs two equal-length samples of size >= 2");
  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace mimosa
