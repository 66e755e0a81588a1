#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "calamp/gauss.hpp"

namespace calamp {

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule on [-1, 1].
inline constexpr double kKronrodNodes[8] = {
    0.99145537112081263921, 0.94910791234275852453, 0.86486442335976907279,
    0.74153118559939443986, 0.58608723546769113029, 0.40584515137739716691,
    0.20778495500789846760, 0.0};
inline constexpr double kKronrodWeights[8] = {
    0.02293532201052922496, 0.06309209262997855329, 0.10479001032225018384,
    0.14065325971552591875, 0.16900472663926790283, 0.19035057806478540991,
    0.20443294007529889241, 0.20948214108472782801};
inline constexpr double kGaussWeights[4] = {
    0.12948496616886969327, 0.27970539148927666790, 0.38183005050511894495,
    0.41795918367346938776};

template <class F>
void gk15(const F& f, double a, double b, double* result, double* err) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double fk[15];
  double rk = 0.0, rg = 0.0;
  for (int i = 0; i < 8; ++i) {
    const double dx = h * kKronrodNodes[i];
    const double f1 = f(c - dx);
    const double f2 = i == 7 ? 0.0 : f(c + dx);
    fk[i] = f1;
    fk[14 - i] = f2;
    rk += kKronrodWeights[i] * (i == 7 ? f1 : f1 + f2);
  }
  for (int j = 0; j < 4; ++j) {
    const int i = 2 * j + 1;
    rg += kGaussWeights[j] * (i == 7 ? fk[7] : fk[i] + fk[14 - i]);
  }
  *result = rk * h;
  *err = std::fabs((rk - rg) * h);
}

}  // namespace detail

// Adaptive Gauss-Kronrod integration on a finite interval. The range is
// pre-split into uniform panels before adaptation so that features much
// narrower than the range cannot slip between the nodes of a single rule
// application and silently pass the error estimate.
template <class F>
double integrate(const F& f, double a, double b, double rel_tol = 1e-12,
                 double abs_tol = 1e-300, int max_intervals = 600, int initial_panels = 16) {
  struct Seg {
    double a, b, value, err;
  };
  std::vector<Seg> segs;
  double total = 0.0;
  double total_err = 0.0;
  initial_panels = std::max(initial_panels, 1);
  for (int k = 0; k < initial_panels; ++k) {
    Seg seg;
    seg.a = a + (b - a) * k / initial_panels;
    seg.b = a + (b - a) * (k + 1) / initial_panels;
    detail::gk15(f, seg.a, seg.b, &seg.value, &seg.err);
    total += seg.value;
    total_err += seg.err;
    segs.push_back(seg);
  }
  while (total_err > std::max(abs_tol, rel_tol * std::fabs(total)) &&
         static_cast<int>(segs.size()) < max_intervals) {
    std::size_t worst = 0;
    for (std::size_t i = 1; i < segs.size(); ++i)
      if (segs[i].err > segs[worst].err) worst = i;
    const Seg old = segs[worst];
    if (old.b - old.a < 1e-15 * (std::fabs(old.a) + std::fabs(old.b) + 1.0)) break;
    const double mid = 0.5 * (old.a + old.b);
    Seg left, right;
    left.a = old.a;
    left.b = mid;
    right.a = mid;
    right.b = old.b;
    detail::gk15(f, left.a, left.b, &left.value, &left.err);
    detail::gk15(f, right.a, right.b, &right.value, &right.err);
    total += left.value + right.value - old.value;
    total_err += left.err + right.err - old.err;
    segs[worst] = left;
    segs.push_back(right);
  }
  return total;
}

// Moments of a log-weight against a Gaussian, scale-free.
//
// Computes m_k proportional to int (x - center)^k exp(log_w(x))
// N(x; mean, var) dx over [lo, hi], all m_k sharing one (unreported)
// positive scale so that ratios are exact. Centering on the scanned peak of
// the integrand keeps mean() and variance() free of the cancellation that
// plain raw moments suffer when the mass is a needle far from the origin.
// The integration window is [mean - 10 sqrt(var), mean + 10 sqrt(var)]
// intersected with the support; when the intersection is empty the window
// hugs the nearest support edge. zero_evidence is set when no mass is found
// at double precision.
struct ScaledMoments {
  double m0 = 0.0, m1 = 0.0, m2 = 0.0;  // m_k = scaled int (x - center)^k
  double center = 0.0;
  double log_scale = 0.0;  // true centered f_k = m_k * exp(log_scale)
  bool zero_evidence = true;

  double mean() const { return center + m1 / m0; }
  double variance() const { return m2 / m0 - (m1 / m0) * (m1 / m0); }
  double raw_m1() const { return center * m0 + m1; }
  double raw_m2() const { return center * center * m0 + 2.0 * center * m1 + m2; }
};

inline ScaledMoments gaussian_weight_moments(const std::function<double(double)>& log_w,
                                             double mean, double var, double lo, double hi,
                                             double rel_tol = 1e-12, int scan = 512,
                                             int initial_panels = 16) {
  if (!(var > 0.0)) throw std::domain_error("gaussian_weight_moments: var must be positive");
  const double sd = std::sqrt(var);
  double a = std::max(lo, mean - 10.0 * sd);
  double b = std::min(hi, mean + 10.0 * sd);
  if (!(a < b)) {
    // Gaussian bulk misses the support entirely; integrate the strip of the
    // nearest edge where the tail still varies by ~e^45.
    const double edge = mean < lo ? lo : hi;
    const double dist = std::fabs(edge - mean);
    const double w = std::sqrt(dist * dist + 90.0 * var) - dist;
    if (edge == lo) {
      a = lo;
      b = std::min(hi, lo + w);
    } else {
      b = hi;
      a = std::max(lo, hi - w);
    }
    if (!(a < b)) return {};
  }
  // Locate the peak of the log integrand on a scan grid; it normalizes the
  // scale and becomes the moment center. The weight can push mass beyond the
  // plain Gaussian window, so the window grows until the integrand has
  // decayed at both ends (or the support stops it).
  double peak = -std::numeric_limits<double>::infinity();
  double arg_peak = a;
  auto log_f = [&](double x) { return log_w(x) + log_gauss_pdf(x, mean, var); };
  for (int grow = 0; grow < 16; ++grow) {
    peak = -std::numeric_limits<double>::infinity();
    arg_peak = a;
    for (int i = 0; i <= scan; ++i) {
      const double x = a + (b - a) * i / scan;
      const double l = log_f(x);
      if (l > peak) {
        peak = l;
        arg_peak = x;
      }
    }
    if (!std::isfinite(peak)) return {};
    const double span = b - a;
    bool grew = false;
    if (b < hi && log_f(b) > peak - 60.0) {
      b = std::min(hi, b + span);
      grew = true;
    }
    if (a > lo && log_f(a) > peak - 60.0) {
      a = std::max(lo, a - span);
      grew = true;
    }
    if (!grew) break;
  }
  ScaledMoments out;
  out.log_scale = peak;
  out.center = arg_peak;
  auto base = [&](double x) {
    const double l = log_w(x) + log_gauss_pdf(x, mean, var) - peak;
    return l < -745.0 ? 0.0 : std::exp(l);
  };
  out.m0 = integrate([&](double x) { return base(x); }, a, b, rel_tol, 1e-300, 600,
                     initial_panels);
  out.zero_evidence = !(out.m0 > 0.0) || !std::isfinite(out.m0);
  if (out.zero_evidence) return out;
  // Centered moments can be arbitrarily close to zero, so their stopping
  // rule needs an absolute scale taken from the mass and the window span.
  const double span = b - a;
  out.m1 = integrate([&](double x) { return (x - arg_peak) * base(x); }, a, b, rel_tol,
                     rel_tol * out.m0 * span, 600, initial_panels);
  out.m2 = integrate([&](double x) { return (x - arg_peak) * (x - arg_peak) * base(x); }, a, b,
                     rel_tol, rel_tol * out.m0 * span * span, 600, initial_panels);
  return out;
}

}  // namespace calamp
