#pragma once

#include <string>
#include <vector>

#include "arakheight/poly.hpp"

namespace arak {

/// A point (f_0 : ... : f_n) of projective n-space over Q(z_1, ..., z_d) in
/// canonical form: integer content 1, coordinates coprime as polynomials, and
/// the first nonzero coordinate has a positive leading coefficient (graded
/// lexicographic order). Only `normalize` produces instances.
class ProjPoint {
 public:
  int dim() const { return static_cast<int>(coords_.size()) - 1; }
  int num_vars() const { return num_vars_; }
  const std::vector<MultiPoly>& coords() const { return coords_; }
  /// e_i = max_j deg_i(f_j).
  const std::vector<int>& multidegree() const { return multidegree_; }
  bool is_constant() const;

  std::string to_string() const;

  friend bool operator==(const ProjPoint& a, const ProjPoint& b) { return a.coords_ == b.coords_; }

 private:
  friend struct NormalizeResult normalize(const std::vector<MultiPoly>& raw);
  ProjPoint() = default;

  int num_vars_ = 0;
  std::vector<MultiPoly> coords_;
  std::vector<int> multidegree_;
};

/// Deterministic total order used wherever point lists are reported:
/// total degree, then dimension, then canonical text.
bool canonical_less(const ProjPoint& a, const ProjPoint& b);

struct NormalizeResult {
  ProjPoint point;
  /// Positive integer removed from every coordinate.
  Integer removed_content;
  /// Primitive polynomial gcd removed from every coordinate (1 if none).
  MultiPoly removed_gcd;
  bool negated = false;
};

/// Canonical representative of the projective point spanned by `raw`.
/// Throws AllZero when every entry vanishes and VarMismatch when the entries
/// live in different rings.
NormalizeResult normalize(const std::vector<MultiPoly>& raw);

/// Returns max_j deg_var(coords_j); minus infinity when all coordinates vanish.
Degree max_partial_degree(const std::vector<MultiPoly>& coords, int var);

/// Coefficient of z_var^degree in every coordinate, with z_var dropped from
/// the ring.
std::vector<MultiPoly> coefficient_tuple(const std::vector<MultiPoly>& coords, int var, int degree);

/// What was removed when a restricted tuple was re-normalized. A caller that
/// turns the removed pieces into intersection corrections needs all three:
/// the integer content (vertical fibres), the primitive polynomial gcd
/// (a horizontal divisor) and the drop of the multidegree below the declared
/// one (copies of the divisors at infinity).
struct CorrectionLedger {
  Integer content = 1;
  MultiPoly gcd;
  std::vector<int> degree_drop;

  bool trivial() const;
};

struct Restriction {
  ProjPoint point;
  CorrectionLedger ledger;
  /// The tuple of leading coefficients before re-normalization.
  std::vector<MultiPoly> leading_tuple;
};

/// Restricts P to the fibre z_var = infinity: keeps the coefficients of
/// z_var^{e_var}, which cannot all vanish, and re-normalizes them.
Restriction leading_restriction(const ProjPoint& point, int var);

/// Integer prime factorization by trial division; the final entry may be a
/// composite cofactor when it exceeds `trial_limit`^2.
std::vector<std::pair<Integer, int>> factor_integer(Integer n, unsigned long trial_limit = 100000);

}  // namespace arak
