#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace mimosa {

/// xoshiro256** seeded through splitmix64 from (seed, stream_id).
/// Identical (seed, stream_id) pairs give identical sequences on every
/// platform; all samplers below use only integer ops and IEEE arithmetic.
class SeededRng {
 public:
  SeededRng(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();

  /// Independent child stream; (seed, stream_id, key) determines it fully.
  SeededRng derive(std::uint64_t key) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::array<std::uint64_t, 4> s_{};
};

/// FNV-1a hash, for naming streams ("replicate", subject ids, ...).
std::uint64_t stream_key(std::string_view name);
/// Mixes two keys into one stream id.
std::uint64_t combine_keys(std::uint64_t a, std::uint64_t b);

double sample_uniform(SeededRng& rng, double lo, double hi);
double sample_normal(SeededRng& rng);
double sample_exponential(SeededRng& rng, double rate);
/// Gamma(shape, 1); Marsaglia-Tsang, with the U^(1/a) boost for a < 1.
double sample_gamma(SeededRng& rng, double shape);
double sample_beta(SeededRng& rng, double a, double b);
bool sample_bernoulli(SeededRng& rng, double p);
std::vector<double> sample_dirichlet(SeededRng& rng, std::span<const double> alpha);
/// Inversion for n*min(p,1-p) < 30, else Knuth's beta splitting.
long long sample_binomial(SeededRng& rng, long long n, double p);
/// Conditional binomials in category order.
std::vector<long long> sample_multinomial(SeededRng& rng, long long n,
                                          std::span<const double> probs);
/// Number of "good" items in `draws` draws without replacement from an urn
/// of good + bad items. Chop-down inversion from the mode.
long long sample_hypergeometric(SeededRng& rng, long long good, long long bad,
                                long long draws);
/// Same draw, with ln k! supplied for k = 0..good + bad.
long long sample_hypergeometric(SeededRng& rng, long long good, long long bad,
                                long long draws,
                                std::span<const double> log_factorials);
/// Normal(mu, sigma) restricted to (lo, hi), by inverse CDF.
double sample_truncated_normal(SeededRng& rng, double mu, double sigma,
                               double lo, double hi);

struct BetaDist { double a, b; };
struct GammaDist { double shape, scale = 1.0; };
struct DirichletDist { std::vector<double> alpha; };
struct BinomialDist { long long n; double p; };
struct MultinomialDist { long long n; std::vector<double> probs; };
struct BernoulliDist { double p; };
struct UniformDist { double lo = 0.0, hi = 1.0; };
struct ExponentialDist { double rate; };
struct TruncatedNormalDist { double mu, sigma, lo = 0.0, hi = 1.0; };

using Distribution =
    std::variant<BetaDist, GammaDist, DirichletDist, BinomialDist,
                 MultinomialDist, BernoulliDist, UniformDist, ExponentialDist,
                 TruncatedNormalDist>;

/// Scalar reals, counts, probability vectors and count vectors.
using Draw = std::variant<double, long long, std::vector<double>,
                          std::vector<long long>>;

/// Validates parameters (DomainError) and dispatches to the samplers above.
Draw sample(const Distribution& dist, SeededRng& rng);

}  // namespace mimosa
