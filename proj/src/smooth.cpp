#include "cylattract/smooth.hpp"

#include <algorithm>
#include <cmath>

namespace cylattract {

namespace {
double sigma(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }
// sigma'(t) = sigma(t)/t^2
double sigma_d1(double t) { return t > 0.0 ? sigma(t) / (t * t) : 0.0; }
// sigma''(t) = sigma(t)(1 - 2t)/t^4
double sigma_d2(double t) {
  return t > 0.0 ? sigma(t) * (1.0 - 2.0 * t) / (t * t * t * t) : 0.0;
}
}  // namespace

double smooth_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = sigma(t), b = sigma(1.0 - t);
  return a / (a + b);
}

double smooth_step_d1(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  const double a = sigma(t), b = sigma(1.0 - t);
  const double ad = sigma_d1(t), bd = -sigma_d1(1.0 - t);
  const double s = a + b;
  return (ad * s - a * (ad + bd)) / (s * s);
}

double smooth_step_d2(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  const double a = sigma(t), b = sigma(1.0 - t);
  const double ad = sigma_d1(t), bd = -sigma_d1(1.0 - t);
  const double add = sigma_d2(t), bdd = sigma_d2(1.0 - t);
  const double s = a + b, sd = ad + bd, sdd = add + bdd;
  // d2 of a/s
  return (add * s * s - 2.0 * ad * sd * s - a * sdd * s + 2.0 * a * sd * sd) /
         (s * s * s);
}

double Quintic::eval(double x) const {
  const double u = x - x0;
  return c[0] + u * (c[1] + u * (c[2] + u * (c[3] + u * (c[4] + u * c[5]))));
}

double Quintic::d1(double x) const {
  const double u = x - x0;
  return c[1] +
         u * (2.0 * c[2] +
              u * (3.0 * c[3] + u * (4.0 * c[4] + u * 5.0 * c[5])));
}

double Quintic::d2(double x) const {
  const double u = x - x0;
  return 2.0 * c[2] +
         u * (6.0 * c[3] + u * (12.0 * c[4] + u * 20.0 * c[5]));
}

namespace {
// real roots of A u^2 + B u + C inside (0, L)
int quad_roots_in(double A, double B, double C, double L, double out[2]) {
  int n = 0;
  if (A == 0.0) {
    if (B != 0.0) {
      double r = -C / B;
      if (r > 0.0 && r < L) out[n++] = r;
    }
    return n;
  }
  double disc = B * B - 4.0 * A * C;
  if (disc < 0.0) return 0;
  double sq = std::sqrt(disc);
  // numerically stable pair
  double q = -0.5 * (B + (B >= 0.0 ? sq : -sq));
  double r1 = q / A;
  double r2 = (q != 0.0) ? C / q : r1;
  if (r1 > 0.0 && r1 < L) out[n++] = r1;
  if (r2 != r1 && r2 > 0.0 && r2 < L) out[n++] = r2;
  return n;
}
}  // namespace

double Quintic::d1_abs_max() const {
  const double L = x1 - x0;
  double m = std::max(std::fabs(d1(x0)), std::fabs(d1(x1)));
  // d2(u) = 2c2 + 6c3 u + 12c4 u^2 + 20c5 u^3; with c2 = 0 in our tails
  // it factors through u = 0, but solve the general cubic by splitting:
  // critical points of d1 are roots of d2. Handle the cubic as
  // u * (quadratic) when c2 == 0, else sample densely as fallback.
  if (c[2] == 0.0) {
    double r[2];
    int n = quad_roots_in(20.0 * c[5], 12.0 * c[4], 6.0 * c[3], L, r);
    for (int i = 0; i < n; ++i)
      m = std::max(m, std::fabs(d1(x0 + r[i])));
  } else {
    for (int i = 1; i < 4096; ++i)
      m = std::max(m, std::fabs(d1(x0 + L * i / 4096.0)));
  }
  return m;
}

double Quintic::d1_min() const {
  const double L = x1 - x0;
  double m = std::min(d1(x0), d1(x1));
  if (c[2] == 0.0) {
    double r[2];
    int n = quad_roots_in(20.0 * c[5], 12.0 * c[4], 6.0 * c[3], L, r);
    for (int i = 0; i < n; ++i) m = std::min(m, d1(x0 + r[i]));
  } else {
    for (int i = 1; i < 4096; ++i) m = std::min(m, d1(x0 + L * i / 4096.0));
  }
  return m;
}

double Quintic::d2_abs_max() const {
  const double L = x1 - x0;
  double m = std::max(std::fabs(d2(x0)), std::fabs(d2(x1)));
  // critical points of d2 are roots of d3 = 6c3 + 24c4 u + 60c5 u^2
  double r[2];
  int n = quad_roots_in(60.0 * c[5], 24.0 * c[4], 6.0 * c[3], L, r);
  for (int i = 0; i < n; ++i) m = std::max(m, std::fabs(d2(x0 + r[i])));
  return m;
}

Quintic hermite_tail(double x0, double v0, double m0, double x1, double v1,
                     double m1) {
  const double L = x1 - x0;
  // p(u) = v0 + m0 u + c3 u^3 + c4 u^4 + c5 u^5 with p''(0) = 0; the
  // remaining constraints p(L)=v1, p'(L)=m1, p''(L)=0 give, in the
  // scaled unknowns e_k = c_k L^k:
  //   e3 +  e4 +  e5 = A        A = v1 - v0 - m0 L
  //  3e3 + 4e4 + 5e5 = B L      B = m1 - m0
  //  6e3 +12e4 +20e5 = 0
  const double A = v1 - v0 - m0 * L;
  const double BL = (m1 - m0) * L;
  const double e3 = 10.0 * A - 4.0 * BL;
  const double e4 = -15.0 * A + 7.0 * BL;
  const double e5 = 6.0 * A - 3.0 * BL;
  Quintic q;
  q.x0 = x0;
  q.x1 = x1;
  q.c[0] = v0;
  q.c[1] = m0;
  q.c[2] = 0.0;
  q.c[3] = e3 / (L * L * L);
  q.c[4] = e4 / (L * L * L * L);
  q.c[5] = e5 / (L * L * L * L * L);
  return q;
}

}  // namespace cylattract
