#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "arakheight/heights.hpp"
#include "json.hpp"

namespace arak {

/// g(X0, X1) = sum_k coeffs[k] X0^(m-k) X1^k with coefficients in Z[z_1..z_d].
struct BinaryForm {
  int num_vars = 0;
  std::vector<MultiPoly> coeffs;

  int degree() const { return static_cast<int>(coeffs.size()) - 1; }
  /// Text in X0, X1 and z1..zd, e.g. "X1^2 - 2*X0^2".
  static BinaryForm parse(const std::string& text, int num_vars);
  /// g(1, x) in the ring (x, z_1, ..., z_d).
  MultiPoly dehomogenized() const;
  /// Primitive, no polynomial factor in z alone, canonical sign.
  BinaryForm canonical() const;
  std::string to_string() const;
  friend bool operator==(const BinaryForm& a, const BinaryForm& b) { return a.coeffs == b.coeffs; }
};

/// A closed point of P^n over Q(z): a rational point, or (n = 1) the
/// conjugate roots of an irreducible binary form.
struct CycleComponent {
  int multiplicity = 1;
  std::optional<ProjPoint> point;
  std::optional<BinaryForm> form;

  int degree() const;  // 1 for a point, deg g for a form
  std::string to_string() const;
};

struct ZeroCycle {
  int n = 1;
  int d = 0;
  std::vector<CycleComponent> components;

  int degree() const;  // sum of multiplicity * component degree
  void validate() const;
  /// Degree-one forms become points, equal components merge, order is canonical.
  ZeroCycle canonical() const;
  std::string to_string() const;

  /// "[(1,'(1, z1)'), (2,'(1, 0)'), (1,'form: X1^2 - 2*X0^2')]"
  static ZeroCycle parse(const std::string& text, int n = -1, int d = -1);
  nlohmann::json to_json() const;
  static ZeroCycle from_json(const nlohmann::json& j, int d = -1);
};

/// Homogeneous form in u_0..u_n with coefficients in Z[z]; stored in the ring
/// (z_1, ..., z_d, u_0, ..., u_n), canonical up to the unit -1.
struct ChowForm {
  int n = 1;
  int d = 0;
  int degree = 0;
  MultiPoly form;

  /// Monomials of degree `degree` in u, u_0^degree first (lexicographic).
  std::vector<Exponent> monomials() const;
  /// The Chow coordinates a_lambda in the order of monomials().
  std::vector<MultiPoly> coordinates() const;
  ProjPoint chow_point() const;
  std::string to_string() const;
  friend bool operator==(const ChowForm& a, const ChowForm& b) {
    return a.n == b.n && a.d == b.d && a.form == b.form;
  }
};

/// Homogeneous resultant of two binary forms (coefficient lists as in
/// BinaryForm) by fraction-free elimination of the Sylvester matrix.
MultiPoly binary_resultant(const std::vector<MultiPoly>& a, const std::vector<MultiPoly>& b);

ChowForm chow_form(const ZeroCycle& z);

/// Height of a closed point under pol: of the rational point, or the degree of
/// O(1)_FS . div(g) . pol on P^1 x (P^1)^d for a conjugate block (the sum
/// over the conjugates).
RigorousValue closed_point_height(const CycleComponent& c, const Polarization& pol,
                                  const IntersectionEngine& engine = IntersectionEngine{});

/// Multiplicity-weighted average of the closed-point heights.
RigorousValue cycle_height_dim0(const ZeroCycle& z, const Polarization& pol,
                                const IntersectionEngine& engine = IntersectionEngine{});

/// Height of the Chow point.
RigorousValue chow_height(const ZeroCycle& z, const Polarization& pol,
                          const IntersectionEngine& engine = IntersectionEngine{});

struct InjectivityReport {
  std::size_t cycles = 0;
  std::size_t distinct_cycles = 0;
  std::size_t distinct_forms = 0;
  std::vector<std::pair<std::string, std::string>> collisions;  // distinct cycles, same form
  bool injective() const { return collisions.empty(); }
};
InjectivityReport chow_injectivity_check(const std::vector<ZeroCycle>& sample);

/// Random cycles on P^1 over Q(z_1..z_d): up to three components of total
/// degree <= max_degree, coefficients in [-max_coeff, max_coeff]. For d = 0
/// the forms are irreducible over Q.
std::vector<ZeroCycle> generate_cycle_family(std::uint64_t seed, std::size_t count, int d, int max_degree = 3,
                                             int max_coeff = 1000);

struct BoundednessReport {
  std::vector<double> differences;  // chow_height / deg - cycle height
  double fit_constant = 0.0;        // max |difference| on the first half
  double validation_constant = 0.0; // max |difference| on the second half
  double deviation = 0.0;           // |validation - fit| / fit
  bool stable(double limit = 0.2) const { return deviation < limit; }
};
BoundednessReport chow_boundedness(const std::vector<ZeroCycle>& family, const Polarization& pol,
                                   const IntersectionEngine& engine = IntersectionEngine{}, int threads = 1);

/// Cycles of the family with degree <= max_degree and cycle height <= bound
/// (within the quadrature error), in family order.
std::vector<std::size_t> bounded_cycles(const std::vector<ZeroCycle>& family, double bound, int max_degree,
                                        const Polarization& pol,
                                        const IntersectionEngine& engine = IntersectionEngine{});

enum class MeanKind { Log, Plain };

struct SupnormReport {
  Integer coeff_max;          // |s|, the largest coefficient
  double log_mean = 0.0;      // integral of log ||s||_FS
  double error_bound = 0.0;   // on log_mean
  double mean = 0.0;          // exp(log_mean), or the integral of ||s|| for MeanKind::Plain
  double bgs_factor = 1.0;    // exp(sum d_i / 2)
  double norm_factor = 1.0;   // max over monomials of 1 / sup ||x^lambda||
  double constant = 1.0;      // bgs_factor * norm_factor
  double sup_norm = 0.0;      // exact for monomials, a grid maximum otherwise
  bool sup_exact = false;
  MeanKind kind = MeanKind::Log;
  bool holds = false;         // |s| <= constant * mean
};

/// s is a section of O(d_1, ..., d_r) on (P^1)^r, r <= 2, d_i <= 6, written in
/// the affine coordinates z_1..z_r.
SupnormReport supnorm_vs_mean(const MultiPoly& s, const std::vector<int>& degrees, MeanKind kind = MeanKind::Log,
                              const IntersectionEngine& engine = IntersectionEngine{});

}  // namespace arak
