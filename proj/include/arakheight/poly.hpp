#pragma once

#include <complex>
#include <compare>
#include <map>
#include <string>
#include <vector>

#include <gmpxx.h>

#include "arakheight/errors.hpp"

namespace arak {

using Integer = mpz_class;
using Rational = mpq_class;
using Exponent = std::vector<int>;

/// Graded lexicographic order on exponent vectors: total degree first, then
/// lexicographic with variable 0 most significant.
struct GrLexLess {
  bool operator()(const Exponent& a, const Exponent& b) const;
};

/// Degree of a polynomial. The zero polynomial has degree minus infinity,
/// which is a distinct state and never an integer.
class Degree {
 public:
  static Degree neg_inf() { return Degree(); }
  static Degree of(int d) { return Degree(d); }

  bool is_neg_inf() const { return neg_inf_; }
  int value() const;

  friend bool operator==(const Degree& a, const Degree& b) {
    return a.neg_inf_ == b.neg_inf_ && (a.neg_inf_ || a.value_ == b.value_);
  }
  friend std::strong_ordering operator<=>(const Degree& a, const Degree& b);
  friend Degree operator+(const Degree& a, const Degree& b);

  std::string to_string() const;

 private:
  Degree() = default;
  explicit Degree(int d) : neg_inf_(false), value_(d) {}
  bool neg_inf_ = true;
  int value_ = 0;
};

/// Exact polynomial in Z[z_0, ..., z_{d-1}]. Variables are 0-based in the
/// API; the text syntax names them z1 ... z9.
class MultiPoly {
 public:
  using TermMap = std::map<Exponent, Integer, GrLexLess>;

  explicit MultiPoly(int num_vars = 0);

  static MultiPoly constant(int num_vars, const Integer& c);
  static MultiPoly variable(int num_vars, int index);
  static MultiPoly monomial(const Exponent& exponent, const Integer& c);

  int num_vars() const { return num_vars_; }
  bool is_zero() const { return terms_.empty(); }
  bool is_constant() const;
  const TermMap& terms() const { return terms_; }
  std::size_t num_terms() const { return terms_.size(); }

  /// Coefficient of a monomial (zero if absent).
  Integer coefficient(const Exponent& exponent) const;

  /// Adds c * z^exponent, dropping the term if it cancels.
  void add_term(const Exponent& exponent, const Integer& c);

  Degree partial_degree(int var) const;
  Degree total_degree() const;
  /// Largest exponent of every variable; all zeros for the zero polynomial.
  std::vector<int> degree_vector() const;

  /// Nonnegative gcd of the coefficients; 0 for the zero polynomial.
  Integer content() const;
  MultiPoly primitive_part() const;

  /// Leading term under the graded lexicographic order.
  const Exponent& leading_exponent() const;
  const Integer& leading_coefficient() const;

  /// Coefficients with respect to one variable: result[k] is the coefficient
  /// of z_var^k, a polynomial in the same ring that does not involve z_var.
  std::vector<MultiPoly> coefficients_in(int var) const;

  /// Drops variable `var` (which must not occur) from the ring.
  MultiPoly remove_variable(int var) const;
  /// Inserts a fresh variable at position `var` that does not occur.
  MultiPoly insert_variable(int var) const;
  /// Substitutes integer values for one variable, keeping the ring.
  MultiPoly substitute(int var, const Integer& value) const;

  Integer evaluate(const std::vector<Integer>& point) const;

  MultiPoly operator-() const;
  MultiPoly& operator+=(const MultiPoly& other);
  MultiPoly& operator-=(const MultiPoly& other);
  MultiPoly& operator*=(const Integer& c);

  friend MultiPoly operator+(MultiPoly a, const MultiPoly& b) { return a += b; }
  friend MultiPoly operator-(MultiPoly a, const MultiPoly& b) { return a -= b; }
  friend MultiPoly operator*(const MultiPoly& a, const MultiPoly& b);
  friend MultiPoly operator*(MultiPoly a, const Integer& c) { return a *= c; }
  friend MultiPoly operator*(const Integer& c, MultiPoly a) { return a *= c; }
  friend bool operator==(const MultiPoly& a, const MultiPoly& b) {
    return a.num_vars_ == b.num_vars_ && a.terms_ == b.terms_;
  }

  MultiPoly pow(int k) const;

  /// Divides every coefficient by c; throws NotDivisible if inexact.
  MultiPoly divexact(const Integer& c) const;

  /// Canonical text form, e.g. "z1^2*z2 - 3". Terms are printed in
  /// decreasing graded lexicographic order.
  std::string to_string() const;

 private:
  void check_ring(const MultiPoly& other) const;

  int num_vars_;
  TermMap terms_;
};

/// Exact division f / g; throws NotDivisible when g does not divide f.
MultiPoly divexact(const MultiPoly& f, const MultiPoly& g);

/// True when g divides f exactly; stores the quotient when requested.
bool divides(const MultiPoly& g, const MultiPoly& f, MultiPoly* quotient = nullptr);

/// Greatest common divisor over Z (content included), with a positive
/// leading coefficient. gcd(0, 0) = 0.
MultiPoly gcd(const MultiPoly& f, const MultiPoly& g);

/// Flips the sign so that the leading coefficient is positive.
MultiPoly positive_leading(MultiPoly f);

/// Evaluation at a complex point together with a floating-point error bound.
struct ComplexEval {
  std::complex<double> value;
  double error_bound = 0.0;
  bool overflow = false;
};

ComplexEval eval_complex(const MultiPoly& f, const std::vector<std::complex<double>>& z);

}  // namespace arak
