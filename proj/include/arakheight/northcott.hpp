#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "arakheight/heights.hpp"

namespace arak {

/// Every point of P^n(Q(z_1..z_d)) with height <= M has a representative
/// with deg_i(f_j) <= degree_bounds[i] and integer coefficients in
/// [-coeff_bound, coeff_bound].
struct SearchBox {
  int n = 1;
  int d = 1;
  double bound = 0.0;     // M
  double epsilon = 0.0;   // quadrature budget added to M
  double margin = 0.0;    // the safety constant a in e_i log 2 <= 2 h + a
  Rational certificate_scale = 1;  // prod a_i from the fairly-large certificate
  std::vector<int> degree_bounds;
  Integer coeff_bound = 0;
  std::string polarization;

  bool empty() const;
  /// Number of monomials per coordinate.
  std::uint64_t monomials() const;
  /// Number of coefficient tuples, saturated at UINT64_MAX.
  std::uint64_t tuples() const;
};

struct NorthcottOptions {
  double tol = 1e-7;
  /// Quadrature budget; negative means 10 * tol.
  double epsilon = -1.0;
  double margin = 0.0;
  std::uint64_t budget = 20'000'000;
  int threads = 1;
};

/// max over 0 <= lambda <= e <= D of sqrt(e^e / (lambda^lambda (e-lambda)^(e-lambda))),
/// multiplied over factors: coefficient size per unit of sup norm.
double coefficient_factor(const std::vector<int>& degree_bounds);

SearchBox derive_box(int n, int d, double bound, const Polarization& pol, const NorthcottOptions& opts = {});

/// Lower bound for the FS height from exact data: max(e_i) log 2 / 2, the
/// logarithm of every lexicographically extreme coefficient and, for
/// coordinates in one variable, (1/2) log sum_k c_k^2 / binom(e, k).
double fs_height_lower_bound(const ProjPoint& p);

enum class PointStatus { In, Undecided };
std::string_view to_string(PointStatus s);

struct BoundedPoint {
  ProjPoint point;
  RigorousValue height;
  PointStatus status = PointStatus::In;
};

struct Enumeration {
  SearchBox box;
  std::vector<BoundedPoint> points;  // canonical order, In and Undecided mixed
  std::uint64_t scanned = 0;         // coefficient tuples visited
  std::uint64_t distinct = 0;        // distinct normalized points
  std::uint64_t prefiltered = 0;     // rejected by exact bounds
  std::uint64_t evaluated = 0;       // heights computed

  std::vector<ProjPoint> members() const;    // status In
  std::vector<ProjPoint> undecided() const;  // status Undecided
};

Enumeration enumerate_bounded(int n, int d, double bound, const Polarization& pol, const NorthcottOptions& opts = {},
                              const IntersectionEngine& engine = IntersectionEngine{});

struct NorthcottRow {
  double bound = 0.0;
  std::size_t in = 0;
  std::size_t undecided = 0;
  std::size_t box_points = 0;
};

std::vector<NorthcottRow> northcott_report(int n, int d, const std::vector<double>& ladder, const Polarization& pol,
                                           const NorthcottOptions& opts = {},
                                           const IntersectionEngine& engine = IntersectionEngine{});

}  // namespace arak
