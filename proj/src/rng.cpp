#include "mimosa/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "mimosa/error.hpp"
#include "mimosa/numerics.hpp"

namespace mimosa {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t mix(std::uint64_t x) { return splitmix64(x); }

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

void check(bool ok, const char* msg) {
  if (!ok) throw DomainError(msg);
}

long long binomial_inversion(SeededRng& rng, long long n, double p) {
  // p <= 0.5 here; pmf recursion from zero.
  const double q = 1.0 - p;
  const double ratio = p / q;
  double pmf = std::exp(static_cast<double>(n) * std::log1p(-p));
  double u = rng.uniform();
  long long k = 0;
  while (u > pmf && k < n) {
    u -= pmf;
    pmf *= ratio * static_cast<double>(n - k) / static_cast<double>(k + 1);
    ++k;
  }
  return k;
}

}  // namespace

SeededRng::SeededRng(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  std::uint64_t x = mix(seed) ^ mix(stream_id ^ 0xD1B54A32D192ED03ULL);
  for (auto& w : s_) w = splitmix64(x);
  if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
}

std::uint64_t SeededRng::next_u64() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double SeededRng::uniform() {
  // (k + 0.5) / 2^53 never hits 0 or 1.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

SeededRng SeededRng::derive(std::uint64_t key) const {
  return SeededRng(seed_, combine_keys(stream_id_, key));
}

std::uint64_t stream_key(std::string_view name) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::uint64_t combine_keys(std::uint64_t a, std::uint64_t b) {
  return mix(a ^ mix(b + 0x632BE59BD9B4E019ULL));
}

double sample_uniform(SeededRng& rng, double lo, double hi) {
  check(lo < hi, "uniform requires lo < hi");
  return lo + (hi - lo) * rng.uniform();
}

double sample_normal(SeededRng& rng) {
  const double u1 = rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double sample_exponential(SeededRng& rng, double rate) {
  check(rate > 0.0 && std::isfinite(rate), "exponential rate must be positive");
  return -std::log(rng.uniform()) / rate;
}

double sample_gamma(SeededRng& rng, double shape) {
  check(shape > 0.0 && std::isfinite(shape), "gamma shape must be positive");
  if (shape < 1.0) {
    const double g = sample_gamma(rng, shape + 1.0);
    return g * std::exp(std::log(rng.uniform()) / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = sample_normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double sample_beta(SeededRng& rng, double a, double b) {
  check(a > 0.0 && b > 0.0 && std::isfinite(a) && std::isfinite(b),
        "beta shapes must be positive");
  const double x = sample_gamma(rng, a);
  const double y = sample_gamma(rng, b);
  if (x + y == 0.0) return rng.uniform() < a / (a + b) ? 1.0 : 0.0;
  return x / (x + y);
}

bool sample_bernoulli(SeededRng& rng, double p) {
  check(p >= 0.0 && p <= 1.0, "bernoulli p must lie in [0, 1]");
  return rng.uniform() < p;
}

std::vector<double> sample_dirichlet(SeededRng& rng,
                                     std::span<const double> alpha) {
  check(!alpha.empty(), "dirichlet requires at least one component");
  std::vector<double> g(alpha.size());
  for (std::size_t k = 0; k < alpha.size(); ++k) g[k] = sample_gamma(rng, alpha[k]);
  const double total = std::accumulate(g.begin(), g.end(), 0.0);
  if (total == 0.0) {
    // All gammas underflowed: mass goes to one category drawn by mean.
    std::vector<double> out(alpha.size(), 0.0);
    const double asum = std::accumulate(alpha.begin(), alpha.end(), 0.0);
    double u = rng.uniform() * asum;
    std::size_t k = 0;
    while (k + 1 < alpha.size() && u > alpha[k]) u -= alpha[k++];
    out[k] = 1.0;
    return out;
  }
  for (double& v : g) v /= total;
  return g;
}

long long sample_binomial(SeededRng& rng, long long n, double p) {
  check(n >= 0, "binomial n must be non-negative");
  check(p >= 0.0 && p <= 1.0, "binomial p must lie in [0, 1]");
  if (n == 0 || p == 0.0) return 0;
  if (p == 1.0) return n;
  if (p > 0.5) return n - sample_binomial(rng, n, 1.0 - p);
  long long offset = 0;
  // Knuth: the a-th order statistic of n uniforms is Beta(a, n + 1 - a).
  while (static_cast<double>(n) * std::min(p, 1.0 - p) >= 30.0) {
    const long long a = 1 + n / 2;
    const long long b = n + 1 - a;
    const double x = sample_beta(rng, static_cast<double>(a), static_cast<double>(b));
    if (x >= p) {
      n = a - 1;
      p /= x;
    } else {
      offset += a;
      n = b - 1;
      p = (p - x) / (1.0 - x);
    }
  }
  if (n == 0 || p <= 0.0) return offset;
  if (p >= 1.0) return offset + n;
  if (p > 0.5) return offset + n - binomial_inversion(rng, n, 1.0 - p);
  return offset + binomial_inversion(rng, n, p);
}

std::vector<long long> sample_multinomial(SeededRng& rng, long long n,
                                          std::span<const double> probs) {
  check(n >= 0, "multinomial n must be non-negative");
  check(!probs.empty(), "multinomial requires at least one category");
  double mass = 0.0;
  for (double p : probs) {
    check(p >= 0.0 && std::isfinite(p), "multinomial probabilities must be >= 0");
    mass += p;
  }
  check(mass > 0.0, "multinomial probabilities must not all be zero");
  std::vector<long long> out(probs.size(), 0);
  long long remaining = n;
  for (std::size_t k = 0; k + 1 < probs.size() && remaining > 0; ++k) {
    const double cond = mass > 0.0 ? std::clamp(probs[k] / mass, 0.0, 1.0) : 0.0;
    out[k] = sample_binomial(rng, remaining, cond);
    remaining -= out[k];
    mass -= probs[k];
  }
  out.back() += remaining;
  return out;
}

namespace {

// Chop-down inversion outward from the mode; log_pmf(k) supplies one value.
template <class LogPmf>
long long hypergeometric_from_mode(SeededRng& rng, long long good, long long bad,
                                   long long draws, LogPmf log_pmf) {
  check(good >= 0 && bad >= 0, "hypergeometric urn sizes must be >= 0");
  check(draws >= 0 && draws <= good + bad,
        "hypergeometric draws must lie in [0, good + bad]");
  const long long lo = std::max(0LL, draws - bad);
  const long long hi = std::min(draws, good);
  if (lo == hi) return lo;
  const double total = static_cast<double>(good + bad);
  long long mode = static_cast<long long>(
      std::floor((static_cast<double>(draws) + 1.0) *
                 (static_cast<double>(good) + 1.0) / (total + 2.0)));
  mode = std::clamp(mode, lo, hi);
  const double pmode = std::exp(log_pmf(mode));
  double u = rng.uniform() - pmode;
  if (u <= 0.0) return mode;
  long long down = mode, up = mode;
  double pdown = pmode, pup = pmode;
  const double g = static_cast<double>(good);
  const double b = static_cast<double>(bad);
  const double d = static_cast<double>(draws);
  while (down > lo || up < hi) {
    if (down > lo) {
      const double k = static_cast<double>(down);
      pdown *= k * (b - d + k) / ((g - k + 1.0) * (d - k + 1.0));
      --down;
      u -= pdown;
      if (u <= 0.0) return down;
    }
    if (up < hi) {
      const double k = static_cast<double>(up);
      pup *= (g - k) * (d - k) / ((k + 1.0) * (b - d + k + 1.0));
      ++up;
      u -= pup;
      if (u <= 0.0) return up;
    }
  }
  return mode;  // rounding residue
}

}  // namespace

long long sample_hypergeometric(SeededRng& rng, long long good, long long bad,
                                long long draws) {
  return hypergeometric_from_mode(rng, good, bad, draws, [&](long long k) {
    return log_choose(good, k) + log_choose(bad, draws - k) -
           log_choose(good + bad, draws);
  });
}

long long sample_hypergeometric(SeededRng& rng, long long good, long long bad,
                                long long draws,
                                std::span<const double> lf) {
  check(static_cast<long long>(lf.size()) > good + bad,
        "log-factorial table too short");
  return hypergeometric_from_mode(rng, good, bad, draws, [&](long long k) {
    return lf[good] - lf[k] - lf[good - k] + lf[bad] - lf[draws - k] -
           lf[bad - draws + k] - lf[good + bad] + lf[draws] + lf[good + bad - draws];
  });
}

double sample_truncated_normal(SeededRng& rng, double mu, double sigma,
                               double lo, double hi) {
  check(sigma > 0.0 && std::isfinite(sigma), "truncated normal sigma must be positive");
  check(std::isfinite(mu), "truncated normal mu must be finite");
  check(lo < hi, "truncated normal requires lo < hi");
  const double a = (lo - mu) / sigma;
  const double b = (hi - mu) / sigma;
  const double u = rng.uniform();
  double z;
  if (a > 0.0) {
    // Entirely in the upper tail: invert the survival function.
    const double sa = normal_sf(a);
    const double sb = normal_sf(b);
    z = -normal_quantile(sb + u * (sa - sb));
  } else {
    const double fa = normal_cdf(a);
    const double fb = normal_cdf(b);
    z = normal_quantile(fa + u * (fb - fa));
  }
  return std::clamp(mu + sigma * z, std::nextafter(lo, hi), std::nextafter(hi, lo));
}

Draw sample(const Distribution& dist, SeededRng& rng) {
  struct Visitor {
    SeededRng& rng;
    Draw operator()(const BetaDist& d) const { return sample_beta(rng, d.a, d.b); }
    Draw operator()(const GammaDist& d) const {
      check(d.scale > 0.0 && std::isfinite(d.scale), "gamma scale must be positive");
      return d.scale * sample_gamma(rng, d.shape);
    }
    Draw operator()(const DirichletDist& d) const {
      for (double a : d.alpha)
        check(a > 0.0 && std::isfinite(a), "dirichlet components must be positive");
      return sample_dirichlet(rng, d.alpha);
    }
    Draw operator()(const BinomialDist& d) const {
      return sample_binomial(rng, d.n, d.p);
    }
    Draw operator()(const MultinomialDist& d) const {
      return sample_multinomial(rng, d.n, d.probs);
    }
    Draw operator()(const BernoulliDist& d) const {
      return static_cast<long long>(sample_bernoulli(rng, d.p));
    }
    Draw operator()(const UniformDist& d) const {
      return sample_uniform(rng, d.lo, d.hi);
    }
    Draw operator()(const ExponentialDist& d) const {
      return sample_exponential(rng, d.rate);
    }
    Draw operator()(const TruncatedNormalDist& d) const {
      return sample_truncated_normal(rng, d.mu, d.sigma, d.lo, d.hi);
    }
  };
  return std::visit(Visitor{rng}, dist);
}

}  // namespace mimosa
