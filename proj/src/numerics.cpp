#include "mimosa/numerics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

#include "mimosa/error.hpp"

namespace mimosa {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLnSqrt2Pi = 0.918938533204672741780329736406;

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw DomainError(std::string(what) + " must be positive and finite, got " +
                      std::to_string(v));
}

// Stirling-series remainder lnGamma(x) - [(x-0.5)ln x - x + ln sqrt(2pi)],
// for x >= 10.
double lgamma_correction(double x) {
  const double r = 1.0 / x;
  const double r2 = r * r;
  return r * (1.0 / 12.0 +
              r2 * (-1.0 / 360.0 +
                    r2 * (1.0 / 1260.0 +
                          r2 * (-1.0 / 1680.0 +
                                r2 * (1.0 / 1188.0 +
                                      r2 * (-691.0 / 360360.0 +
                                            r2 * (1.0 / 156.0 +
                                                  r2 * (-3617.0 / 122400.0))))))));
}

// ln(1 - exp(x)) for x <= 0.
double log1m_exp(double x) {
  if (x > -std::numbers::ln2) return std::log(-std::expm1(x));
  return std::log1p(-std::exp(x));
}

// Modified Lentz evaluation of the incomplete-beta continued fraction.
double beta_continued_fraction(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-15;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 20000; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) break;
  }
  return h;
}

struct LogIncBeta {
  double lower;  // ln I_x(a, b)
  double upper;  // ln (1 - I_x(a, b))
};

// Both tails of the incomplete beta in log space. x and y = 1 - x are passed
// separately (with their logs) so neither tail suffers cancellation.
LogIncBeta log_inc_beta(double a, double b, double x, double y, double log_x,
                        double log_y, double lbeta_ab) {
  if (x <= 0.0 && log_x == -kInf) return {-kInf, 0.0};
  if (y <= 0.0 && log_y == -kInf) return {0.0, -kInf};
  const double log_front = a * log_x + b * log_y - lbeta_ab;
  if (x < (a + 1.0) / (a + b + 2.0)) {
    const double lo = log_front + std::log(beta_continued_fraction(a, b, x) / a);
    return {lo, log1m_exp(std::min(lo, 0.0))};
  }
  const double up = log_front + std::log(beta_continued_fraction(b, a, y) / b);
  return {log1m_exp(std::min(up, 0.0)), up};
}

// One tail only: ln I_x(a, b) when lower_tail, else ln(1 - I_x(a, b)).
double log_inc_beta_tail(double a, double b, double x, double y, double log_x,
                         double log_y, double lbeta_ab, bool lower_tail) {
  if (x <= 0.0 && log_x == -kInf) return lower_tail ? -kInf : 0.0;
  if (y <= 0.0 && log_y == -kInf) return lower_tail ? 0.0 : -kInf;
  const double log_front = a * log_x + b * log_y - lbeta_ab;
  if (x < (a + 1.0) / (a + b + 2.0)) {
    const double lo = log_front + std::log(beta_continued_fraction(a, b, x) / a);
    return lower_tail ? lo : log1m_exp(std::min(lo, 0.0));
  }
  const double up = log_front + std::log(beta_continued_fraction(b, a, y) / b);
  return lower_tail ? log1m_exp(std::min(up, 0.0)) : up;
}

// x = sigma(t), y = sigma(-t) and their logs, without overflow.
struct Logistic {
  double x, y, log_x, log_y;
};

inline Logistic logistic(double t) {
  Logistic out;
  const double e = std::exp(-std::fabs(t));
  const double l = -std::log1p(e);
  const double big = 1.0 / (1.0 + e);
  if (t > 0.0) {
    out = {big, e * big, l, -t + l};
  } else {
    out = {e * big, big, t + l, l};
  }
  return out;
}

// 15-point Kronrod / 7-point Gauss rule (QUADPACK qk15 constants).
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double lo, hi, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

template <class F>
Segment gk15(F& f, double lo, double hi) {
  const double center = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  const double fc = f(center);
  double res_g = fc * kWg[3];
  double res_k = fc * kWgk[7];
  double res_abs = std::fabs(res_k);
  std::array<double, 7> f1{}, f2{};
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    f1[j] = f(center - dx);
    f2[j] = f(center + dx);
    res_k += kWgk[j] * (f1[j] + f2[j]);
    res_abs += kWgk[j] * (std::fabs(f1[j]) + std::fabs(f2[j]));
    if (j % 2 == 1) res_g += kWg[j / 2] * (f1[j] + f2[j]);
  }
  const double mean = 0.5 * res_k;
  double res_asc = kWgk[7] * std::fabs(fc - mean);
  for (int j = 0; j < 7; ++j)
    res_asc += kWgk[j] * (std::fabs(f1[j] - mean) + std::fabs(f2[j] - mean));
  res_k *= half;
  res_abs *= std::fabs(half);
  res_asc *= std::fabs(half);
  double err = std::fabs((res_k - res_g * half));
  if (res_asc != 0.0 && err != 0.0)
    err = res_asc * std::min(1.0, std::pow(200.0 * err / res_asc, 1.5));
  constexpr double eps50 = 50.0 * std::numeric_limits<double>::epsilon();
  if (res_abs > std::numeric_limits<double>::min() / eps50)
    err = std::max(eps50 * res_abs, err);
  return {lo, hi, res_k, err};
}

template <class F>
QuadratureResult integrate_impl(F& f, std::span<const double> breaks,
                                double abs_tol, double rel_tol,
                                std::size_t max_intervals) {
  std::priority_queue<Segment> heap;
  double total = 0.0, total_err = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (!(breaks[i + 1] > breaks[i])) continue;
    Segment s = gk15(f, breaks[i], breaks[i + 1]);
    total += s.value;
    total_err += s.error;
    heap.push(s);
  }
  while (!heap.empty() && heap.size() < max_intervals &&
         total_err > std::max(abs_tol, rel_tol * std::fabs(total))) {
    Segment worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.lo + worst.hi);
    Segment left = gk15(f, worst.lo, mid);
    Segment right = gk15(f, mid, worst.hi);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  // Re-sum to shed drift from the incremental updates.
  QuadratureResult out;
  out.intervals = heap.size();
  while (!heap.empty()) {
    out.value += heap.top().value;
    out.error += heap.top().error;
    heap.pop();
  }
  return out;
}

}  // namespace

double log_gamma(double x) {
  require_positive(x, "log_gamma argument");
  static constexpr std::array<double, 9> c = {
      0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
      771.32342877765313,      -176.61502916214059,   12.507343278686905,
      -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};
  if (x < 0.5) {
    // Reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x).
    return std::log(std::numbers::pi / std::sin(std::numbers::pi * x)) -
           log_gamma(1.0 - x);
  }
  const double z = x - 1.0;
  double sum = c[0];
  for (int i = 1; i < 9; ++i) sum += c[i] / (z + i);
  const double t = z + 7.5;
  return kLnSqrt2Pi + (z + 0.5) * std::log(t) - t + std::log(sum);
}

LogDomainValue log_beta(double a, double b) {
  require_positive(a, "log_beta a");
  require_positive(b, "log_beta b");
  const double p = std::min(a, b);
  const double q = std::max(a, b);
  if (p >= 10.0) {
    const double corr =
        lgamma_correction(p) + lgamma_correction(q) - lgamma_correction(p + q);
    return -0.5 * std::log(q) + kLnSqrt2Pi + corr +
           (p - 0.5) * std::log(p / (p + q)) + q * std::log1p(-p / (p + q));
  }
  if (q >= 10.0) {
    const double corr = lgamma_correction(q) - lgamma_correction(p + q);
    return log_gamma(p) + corr + p - p * std::log(p + q) +
           (q - 0.5) * std::log1p(-p / (p + q));
  }
  return log_gamma(p) + log_gamma(q) - log_gamma(p + q);
}

LogDomainValue log_mv_beta(std::span<const double> alpha) {
  if (alpha.empty()) throw DomainError("log_mv_beta of an empty vector");
  for (double a : alpha) require_positive(a, "log_mv_beta component");
  // B(a_1..a_M) = prod_k B(a_1 + ... + a_{k-1}, a_k)
  double partial = alpha[0];
  double out = 0.0;
  for (std::size_t k = 1; k < alpha.size(); ++k) {
    out += log_beta(partial, alpha[k]);
    partial += alpha[k];
  }
  return out;
}

LogDomainValue log_choose(long long n, long long k) {
  if (n < 0 || k < 0 || k > n)
    throw DomainError("log_choose requires 0 <= k <= n");
  if (k == 0 || k == n) return 0.0;
  return -std::log(static_cast<double>(n) + 1.0) -
         log_beta(static_cast<double>(k) + 1.0, static_cast<double>(n - k) + 1.0);
}

LogDomainValue log_sum_exp(std::span<const double> xs) {
  if (xs.empty()) throw DomainError("log_sum_exp of an empty vector");
  const double m = *std::max_element(xs.begin(), xs.end());
  if (m == -kInf) return -kInf;
  if (m == kInf) return kInf;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

LogDomainValue log_add_exp(double a, double b) {
  const double m = std::max(a, b);
  if (m == -kInf) return -kInf;
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

double reg_inc_beta(double x, double a, double b) {
  require_positive(a, "reg_inc_beta a");
  require_positive(b, "reg_inc_beta b");
  if (!(x >= 0.0 && x <= 1.0))
    throw DomainError("reg_inc_beta x must lie in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double y = 1.0 - x;
  const LogIncBeta r =
      log_inc_beta(a, b, x, y, std::log(x), std::log1p(-x), log_beta(a, b));
  return std::clamp(std::exp(r.lower), 0.0, 1.0);
}

LogDomainValue log_beta_gt_prob(double a1, double b1, double a2, double b2) {
  require_positive(a1, "beta_gt_prob a1");
  require_positive(b1, "beta_gt_prob b1");
  require_positive(a2, "beta_gt_prob a2");
  require_positive(b2, "beta_gt_prob b2");

  // Pr(P1 > P2) = E[F2(P1)] = E[1 - F1(P2)]. Integrate against the narrower
  // density (in logit scale) so the CDF factor is smooth on its support.
  const double s1 = std::sqrt(1.0 / a1 + 1.0 / b1);
  const double s2 = std::sqrt(1.0 / a2 + 1.0 / b2);
  const bool density_first = s1 <= s2;
  const double da = density_first ? a1 : a2;
  const double db = density_first ? b1 : b2;
  const double ca = density_first ? a2 : a1;
  const double cb = density_first ? b2 : b1;
  const double lb_density = log_beta(da, db);
  const double lb_cdf = log_beta(ca, cb);

  // Log integrand in t = logit(p); the density of logit(P) is
  // sigma(t)^a sigma(-t)^b / B(a, b), log-concave with mode log(a/b).
  auto log_integrand = [&](double t) {
    const Logistic p = logistic(t);
    return da * p.log_x + db * p.log_y - lb_density +
           log_inc_beta_tail(ca, cb, p.x, p.y, p.log_x, p.log_y, lb_cdf,
                             density_first);
  };

  // The log integrand is concave (log-concave density times log-concave
  // CDF). Its peak sits near the density mode unless the two laws barely
  // overlap, when it moves far out and becomes much narrower; locate it and
  // measure its width before laying out the grid.
  double mode = std::log(da / db);
  double scale = std::sqrt(1.0 / da + 1.0 / db);
  const Logistic at_mode = logistic(mode);
  const double log_cdf_at_mode =
      log_integrand(mode) - (da * at_mode.log_x + db * at_mode.log_y - lb_density);
  // A CDF factor above e^-8 at the mode cannot pull the peak more than a few
  // density scales away, which the grid below already covers.
  if (!(log_cdf_at_mode > -8.0)) {
    double step = scale;
    const double dir = log_integrand(mode + 1e-3 * scale) >= log_integrand(mode) ? 1.0 : -1.0;
    double a = mode, b = mode + dir * step;
    double fb = log_integrand(b), fa = log_integrand(a);
    while (fb > fa && std::isfinite(b) && std::fabs(b) < 800.0) {
      a = b, fa = fb;
      step *= 2.0;
      b = a + dir * step;
      fb = log_integrand(b);
    }
    // The peak lies in [a - dir * step / 2, b]; golden-section search.
    double lo = std::min(a - dir * 0.5 * step, b), hi = std::max(a - dir * 0.5 * step, b);
    constexpr double g = 0.6180339887498949;
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = log_integrand(x1), f2 = log_integrand(x2);
    for (int it = 0; it < 200 && hi - lo > 1e-12 * (1.0 + std::fabs(lo)); ++it) {
      if (f1 < f2) {
        lo = x1, x1 = x2, f1 = f2;
        x2 = lo + g * (hi - lo);
        f2 = log_integrand(x2);
      } else {
        hi = x2, x2 = x1, f2 = f1;
        x1 = hi - g * (hi - lo);
        f1 = log_integrand(x1);
      }
    }
    const double top_t = 0.5 * (lo + hi);
    const double top = log_integrand(top_t);
    if (std::isfinite(top)) {
      // Width: distance to a drop of 1/2 on the narrower side.
      double width = kInf;
      for (double side : {-1.0, 1.0}) {
        double w_lo = 0.0, w_hi = scale;
        while (log_integrand(top_t + side * w_hi) > top - 0.5 && w_hi < 1e3) w_hi *= 2.0;
        for (int it = 0; it < 60; ++it) {
          const double w = 0.5 * (w_lo + w_hi);
          (log_integrand(top_t + side * w) > top - 0.5 ? w_lo : w_hi) = w;
        }
        width = std::min(width, w_hi);
      }
      mode = top_t;
      scale = std::min(scale, width);
    }
  }

  // Trapezoid rule in u with t = mode + scale * L * sinh(u / L): near the
  // mode the spacing is uniform in units of the density's logit scale, and
  // long exponential tails are compressed. Step halving until two
  // successive sums agree to 1e-5; the halved sum is then far more accurate
  // because the trapezoid error decays geometrically in 1/step.
  constexpr double stretch = 6.0;
  auto log_node = [&](double u) {
    const double v = u / stretch;
    return log_integrand(mode + scale * stretch * std::sinh(v)) +
           std::log(scale * std::cosh(v));
  };
  constexpr double tail_drop = 36.0;  // e^-36 ~ 2.3e-16 of the peak
  constexpr int max_nodes = 2000;

  double step = 1.0;
  std::vector<double> logs;  // node values at the current step, k = lo..hi
  double peak = log_node(0.0);
  logs.push_back(peak);
  int lo = 0, hi = 0;
  for (int dir = -1; dir <= 1; dir += 2) {
    double prev = peak;
    for (int k = 1; k < max_nodes; ++k) {
      const double g = log_node(dir * k * step);
      if (dir < 0) {
        logs.insert(logs.begin(), g);
        lo = -k;
      } else {
        logs.push_back(g);
        hi = k;
      }
      peak = std::max(peak, g);
      if (g < peak - tail_drop && g <= prev) break;
      prev = g;
    }
  }
  if (peak == -kInf) return -kInf;

  double sum = 0.0;
  for (double g : logs) sum += std::exp(g - peak);
  double estimate = step * sum;
  for (int level = 0; level < 6; ++level) {
    double mid = 0.0;
    for (int k = lo; k < hi; ++k) mid += std::exp(log_node((k + 0.5) * step) - peak);
    const double refined = 0.5 * estimate + 0.5 * step * mid;
    lo *= 2;
    hi *= 2;
    step *= 0.5;
    const bool done = std::fabs(refined - estimate) <= 1e-5 * refined;
    estimate = refined;
    if (done) break;
  }
  if (!(estimate > 0.0)) return -kInf;
  return std::min(0.0, peak + std::log(estimate));
}

double beta_gt_prob(double a1, double b1, double a2, double b2) {
  return std::exp(log_beta_gt_prob(a1, b1, a2, b2));
}

double chi_square_sf(double x, double df) {
  require_positive(df, "chi_square_sf df");
  if (!(x > 0.0)) return 1.0;
  if (x == kInf) return 0.0;
  return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_sf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -kInf;
    if (p == 1.0) return kInf;
    throw DomainError("normal_quantile p must lie in [0, 1]");
  }
  // Acklam's rational approximation followed by one Halley step.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

QuadratureResult integrate_adaptive(const std::function<double(double)>& f,
                                    std::span<const double> breaks,
                                    double abs_tol, double rel_tol,
                                    std::size_t max_intervals) {
  if (breaks.size() < 2) throw DomainError("integrate_adaptive needs >= 2 breaks");
  auto g = [&](double x) { return f(x); };
  return integrate_impl(g, breaks, abs_tol, rel_tol, max_intervals);
}

QuadratureResult integrate_adaptive(const std::function<double(double)>& f,
                                    double lo, double hi, double abs_tol,
                                    double rel_tol, std::size_t max_intervals) {
  const std::array<double, 2> breaks{lo, hi};
  return integrate_adaptive(f, breaks, abs_tol, rel_tol, max_intervals);
}

NelderMeadResult nelder_mead_minimize(
    const std::function<double(std::span<const double>)>& f,
    std::vector<double> x0, const NelderMeadOptions& opts) {
  const std::size_t n = x0.size();
  if (n == 0) throw DomainError("nelder_mead_minimize needs dimension >= 1");
  std::size_t evals = 0;
  auto eval = [&](const std::vector<double>& x) {
    ++evals;
    const double v = f(x);
    return std::isfinite(v) ? v : kInf;
  };

  std::vector<std::vector<double>> simplex(n + 1, x0);
  std::vector<double> fv(n + 1);
  fv[0] = eval(x0);
  if (fv[0] == kInf)
    throw InitializationError("objective is not finite at the starting point");
  for (std::size_t j = 0; j < n; ++j) {
    simplex[j + 1][j] += opts.initial_step;
    fv[j + 1] = eval(simplex[j + 1]);
  }

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), xr(n), xe(n), xc(n);
  bool converged = false;
  while (true) {
    for (std::size_t i = 0; i <= n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[n - 1];
    if (fv[worst] - fv[best] < opts.tol) {
      // A flat spread alone can mean vertices straddling the minimum.
      double size = 0.0;
      for (std::size_t i = 0; i <= n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          size = std::max(size, std::fabs(simplex[i][j] - simplex[best][j]));
      if (size <= opts.xtol) {
        converged = true;
        break;
      }
    }
    if (evals >= opts.max_evals) break;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= n; ++i)
      if (i != worst)
        for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j];
    for (double& c : centroid) c /= static_cast<double>(n);

    for (std::size_t j = 0; j < n; ++j)
      xr[j] = centroid[j] + (centroid[j] - simplex[worst][j]);
    const double fr = eval(xr);
    if (fr < fv[best]) {
      for (std::size_t j = 0; j < n; ++j)
        xe[j] = centroid[j] + 2.0 * (centroid[j] - simplex[worst][j]);
      const double fe = eval(xe);
      if (fe < fr) {
        simplex[worst] = xe;
        fv[worst] = fe;
      } else {
        simplex[worst] = xr;
        fv[worst] = fr;
      }
      continue;
    }
    if (fr < fv[second]) {
      simplex[worst] = xr;
      fv[worst] = fr;
      continue;
    }
    // Contraction, outside if the reflected point improved on the worst.
    const bool outside = fr < fv[worst];
    const std::vector<double>& anchor = outside ? xr : simplex[worst];
    for (std::size_t j = 0; j < n; ++j)
      xc[j] = centroid[j] + 0.5 * (anchor[j] - centroid[j]);
    const double fc = eval(xc);
    if (fc < (outside ? fr : fv[worst])) {
      simplex[worst] = xc;
      fv[worst] = fc;
      continue;
    }
    // Shrink towards the best vertex.
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == best) continue;
      for (std::size_t j = 0; j < n; ++j)
        simplex[i][j] = simplex[best][j] + 0.5 * (simplex[i][j] - simplex[best][j]);
      fv[i] = eval(simplex[i]);
    }
  }

  const auto best_it = std::min_element(fv.begin(), fv.end());
  NelderMeadResult out;
  out.argmin = simplex[static_cast<std::size_t>(best_it - fv.begin())];
  out.fmin = *best_it;
  out.evals = evals;
  out.converged = converged;
  return out;
}

}  // namespace mimosa
