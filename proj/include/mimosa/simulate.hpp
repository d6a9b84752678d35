#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mimosa/betabin.hpp"
#include "mimosa/dirmult.hpp"
#include "mimosa/rng.hpp"

namespace mimosa {

enum class Generator { Beta, TruncNormalMatched };

/// Null proportion ~2e-4 with a five-fold responder effect.
BetaBinHypers fixture_hypers();

struct SimSpec {
  int n_subjects = 200;
  double w = 0.6;
  long long total_counts = 5000;  // N for both conditions
  BetaBinHypers hypers = fixture_hypers();
  Sidedness sidedness = Sidedness::OneSidedIncrease;
  Generator generator = Generator::Beta;
  int replicates = 10;
  std::uint64_t seed = 1;
};

/// Throws ConfigError on out-of-range fields.
void validate(const SimSpec& spec);

struct LabelledDataset {
  std::vector<CountPair> records;
  std::vector<int> true_z;
  SimSpec spec;
  int replicate_index = 0;
};

/// z ~ Bern(w); p_u ~ Beta(alpha_u, beta_u); responders draw p_s ~
/// Beta(alpha_s, beta_s), jointly rejected until p_s > p_u when one-sided;
/// non-responders have p_s = p_u. Counts are Bin(N, p). Throws
/// DegenerateConstraintError when Pr(p_s > p_u) < 1e-4.
LabelledDataset simulate_univariate(const SimSpec& spec, SeededRng& rng);

/// As simulate_univariate, with each beta replaced by the truncated normal
/// on (0, 1) that has the same mean and variance.
LabelledDataset simulate_misspecified(const SimSpec& spec, SeededRng& rng);

/// Replicate r uses the stream derived from (spec.seed, "replicate", r).
std::vector<LabelledDataset> simulate_replicates(const SimSpec& spec);

struct TruncNormalParams {
  double mu = 0.0;
  double sigma = 1.0;
};

/// Mean and variance of Normal(mu, sigma) truncated to (0, 1).
double truncated_normal_mean(const TruncNormalParams& p);
double truncated_normal_variance(const TruncNormalParams& p);

/// Parent-normal parameters whose (0, 1) truncation has the given moments.
/// sigma is capped at 1e3, enough to reach the uniform's variance to ~1e-7.
/// Throws ParameterError when the moments cannot be matched.
TruncNormalParams match_truncated_normal(double mean, double variance);

struct MultiSimSpec {
  int n_subjects = 200;
  double w = 0.6;
  long long total_counts = 1500;
  std::vector<double> mean_u;  // unstimulated mean proportions, sums to 1
  double concentration = 2000.0;
  std::vector<double> effect_deltas;  // responder mean shift, sums to 0
  std::vector<std::string> category_labels;
  int replicates = 10;
  std::uint64_t seed = 1;
};

/// Eight categories ("000".."111"), deltas +2.5e-3 / -2.5e-3 on two of them,
/// N = 1500.
MultiSimSpec fixture_multi_spec();

/// alpha_u = c m_u and alpha_s = c (m_u + delta); throws ParameterError if
/// the deltas do not sum to zero or any shifted mean is <= 0.
DirMultHypers multi_hypers(const MultiSimSpec& spec);

struct LabelledMultiDataset {
  std::vector<MultiCountPair> records;
  std::vector<int> true_z;
  MultiSimSpec spec;
  int replicate_index = 0;
};

/// p_u ~ Dir(alpha_u); responders draw p_s ~ Dir(alpha_s) independently,
/// non-responders have p_s = p_u; counts multinomial with total N.
LabelledMultiDataset simulate_multivariate(const MultiSimSpec& spec, SeededRng& rng);

std::vector<LabelledMultiDataset> simulate_multi_replicates(const MultiSimSpec& spec);

}  // namespace mimosa
