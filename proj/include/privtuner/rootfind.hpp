#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace privtuner {

// Brent's method on a bracketing interval [a, b] with fa = f(a), fb = f(b)
// of opposite sign (either endpoint may already be an exact root).
// Converges superlinearly for smooth f; falls back to bisection otherwise.
template <typename F>
double brent_root(F&& f, double a, double b, double fa, double fb,
                  double xtol_rel = 1e-12, double xtol_abs = 0.0,
                  int max_iter = 160) {
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa > 0.0) == (fb > 0.0))
    throw std::invalid_argument("brent_root: endpoints do not bracket a root");

  double c = a, fc = fa;
  double d = b - a, e = d;
  for (int it = 0; it < max_iter; ++it) {
    if ((fb > 0.0) == (fc > 0.0)) {
      c = a; fc = fa; d = b - a; e = d;
    }
    if (std::fabs(fc) < std::fabs(fb)) {
      a = b; b = c; c = a;
      fa = fb; fb = fc; fc = fa;
    }
    const double tol = 2.0 * std::fabs(b) * xtol_rel + 0.5 * xtol_abs +
                       4.0 * std::numeric_limits<double>::epsilon() * std::fabs(b);
    const double xm = 0.5 * (c - b);
    if (std::fabs(xm) <= tol || fb == 0.0) return b;

    if (std::fabs(e) >= tol && std::fabs(fa) > std::fabs(fb)) {
      // inverse quadratic / secant step
      const double s = fb / fa;
      double p, q;
      if (a == c) {
        p = 2.0 * xm * s;
        q = 1.0 - s;
      } else {
        const double qq = fa / fc;
        const double r = fb / fc;
        p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
        q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) q = -q;
      p = std::fabs(p);
      if (2.0 * p < std::min(3.0 * xm * q - std::fabs(tol * q), std::fabs(e * q))) {
        e = d; d = p / q;
      } else {
        d = xm; e = d;
      }
    } else {
      d = xm; e = d;
    }
    a = b; fa = fb;
    b += (std::fabs(d) > tol) ? d : (xm > 0.0 ? tol : -tol);
    fb = f(b);
    if (fb == 0.0) return b;
  }
  return b;
}

template <typename F>
double brent_root(F&& f, double a, double b,
                  double xtol_rel = 1e-12, double xtol_abs = 0.0,
                  int max_iter = 160) {
  const double fa = f(a);
  const double fb = f(b);
  return brent_root(f, a, b, fa, fb, xtol_rel, xtol_abs, max_iter);
}

}  // namespace privtuner
