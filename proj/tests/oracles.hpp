#pragma once

// Brute-force oracle for bounded points of P^1(Q(z)), independent of the
// library's quadrature and enumeration.

#include <cmath>
#include <complex>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "arakheight/projpoint.hpp"

namespace arak::oracle {

// Dense univariate integer polynomials, c[k] is the coefficient of z^k.
using Dense = std::vector<long>;

inline int degree(const Dense& f) {
  for (int k = static_cast<int>(f.size()) - 1; k >= 0; --k) {
    if (f[static_cast<std::size_t>(k)] != 0) return k;
  }
  return -1;
}

// integral of log|f| against the normalized FS measure on P^1:
// log|lead| + sum over roots of (1/2) log(1 + |alpha|^2)
inline double fs_mahler(const Dense& f) {
  const int e = degree(f);
  const double lead = static_cast<double>(f[static_cast<std::size_t>(e)]);
  double m = std::log(std::fabs(lead));
  if (e == 0) return m;
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(e, e);
  for (int i = 1; i < e; ++i) comp(i, i - 1) = 1;
  for (int i = 0; i < e; ++i) comp(i, e - 1) = -static_cast<double>(f[static_cast<std::size_t>(i)]) / lead;
  Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
  for (int i = 0; i < e; ++i) m += 0.5 * std::log1p(std::norm(es.eigenvalues()(i)));
  return m;
}

struct GaussLegendre {
  std::vector<double> x, w;  // on [0, 1]
  explicit GaussLegendre(int n) {
    for (int i = 1; i <= n; ++i) {
      double t = std::cos(M_PI * (i - 0.25) / (n + 0.5));
      double dp = 0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1, p1 = t;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (t * p1 - p0) / (t * t - 1);
        const double step = p1 / dp;
        t -= step;
        if (std::fabs(step) < 1e-16) break;
      }
      x.push_back(0.5 * (1 - t));
      w.push_back(1.0 / ((1 - t * t) * dp * dp));
    }
  }
};

inline std::complex<double> horner(const Dense& f, std::complex<double> z) {
  std::complex<double> acc = 0;
  for (auto it = f.rbegin(); it != f.rend(); ++it) acc = acc * z + static_cast<double>(*it);
  return acc;
}

// h = e/2 + int (1/2)[log(|f0|^2 + |f1|^2) - e log(1 + |z|^2)] dmu over the
// charts |z| <= 1 and |1/z| <= 1, each in polar coordinates.
inline double oracle_height(const Dense& f0, const Dense& f1) {
  static const GaussLegendre gl(60);
  const int e = std::max(degree(f0), degree(f1));
  auto reversed = [e](const Dense& f) {
    Dense r(static_cast<std::size_t>(e + 1), 0);
    for (int k = 0; k <= e && k < static_cast<int>(f.size()); ++k) r[static_cast<std::size_t>(e - k)] = f[static_cast<std::size_t>(k)];
    return r;
  };
  double total = 0;
  for (const auto& [g0, g1] : {std::pair{f0, f1}, std::pair{reversed(f0), reversed(f1)}}) {
    for (std::size_t i = 0; i < gl.x.size(); ++i) {
      const double r = gl.x[i];
      auto sample = [&](int k, int n) {
        const std::complex<double> z = std::polar(r, 2 * M_PI * k / n);
        return 0.5 * (std::log(std::norm(horner(g0, z)) + std::norm(horner(g1, z))) - e * std::log1p(r * r));
      };
      // trapezoid in theta, doubling until the mean settles
      int n = 32;
      double sum = 0;
      for (int k = 0; k < n; ++k) sum += sample(k, n);
      double mean = sum / n;
      for (; n < (1 << 16); n *= 2) {
        for (int k = 1; k < 2 * n; k += 2) sum += sample(k, 2 * n);
        const double next = sum / (2 * n);
        const bool done = std::fabs(next - mean) < 1e-13;
        mean = next;
        if (done) break;
      }
      // dmu = (1/pi) r dr dtheta / (1 + r^2)^2
      total += gl.w[i] * mean * 2 * r / ((1 + r * r) * (1 + r * r));
    }
  }
  return e / 2.0 + total;
}

struct OracleHit {
  std::string name;
  double height;
};

// Scan all pairs with degrees <= D and coefficients in [-H, H]; each
// coordinate must satisfy int log|f| <= M + slack since |f_k|^2 <= sum |f_j|^2.
inline std::vector<OracleHit> oracle_set(double bound, int D, long H) {
  const double slack = 1e-6;
  std::vector<Dense> polys{Dense(static_cast<std::size_t>(D + 1), 0)};
  const long radix = 2 * H + 1;
  long count = 1;
  for (int k = 0; k <= D; ++k) count *= radix;
  for (long idx = 0; idx < count; ++idx) {
    Dense f(static_cast<std::size_t>(D + 1));
    long r = idx;
    for (auto& c : f) {
      c = r % radix - H;
      r /= radix;
    }
    if (degree(f) < 0) continue;
    if (degree(f) * std::log(2.0) > 2 * (bound + slack)) continue;
    if (fs_mahler(f) <= bound + slack) polys.push_back(f);
  }
  std::map<std::string, OracleHit> hits;
  for (const auto& f0 : polys) {
    for (const auto& f1 : polys) {
      if (degree(f0) < 0 && degree(f1) < 0) continue;
      std::vector<MultiPoly> coords(2, MultiPoly(1));
      for (int k = 0; k <= D; ++k) {
        if (f0[static_cast<std::size_t>(k)] != 0) coords[0].add_term({k}, Integer(f0[static_cast<std::size_t>(k)]));
        if (f1[static_cast<std::size_t>(k)] != 0) coords[1].add_term({k}, Integer(f1[static_cast<std::size_t>(k)]));
      }
      const ProjPoint p = normalize(coords).point;
      const std::string key = p.to_string();
      if (hits.count(key)) continue;
      // the height is read off the normalized representative
      Dense g0(static_cast<std::size_t>(D + 1), 0), g1(static_cast<std::size_t>(D + 1), 0);
      for (const auto& [ex, c] : p.coords()[0].terms()) g0[static_cast<std::size_t>(ex[0])] = c.get_si();
      for (const auto& [ex, c] : p.coords()[1].terms()) g1[static_cast<std::size_t>(ex[0])] = c.get_si();
      const double h = oracle_height(g0, g1);
      if (h <= bound + slack) hits.emplace(key, OracleHit{key, h});
    }
  }
  std::vector<OracleHit> out;
  for (auto& [k, v] : hits) out.push_back(v);
  return out;
}

}  // namespace arak::oracle
