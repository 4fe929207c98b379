#pragma once

#include <map>
#include <optional>
#include <string>

#include "arakheight/poly.hpp"

namespace arak {

/// Exact real number of the form q_0 + sum_k q_k log(p_k) with rational q's
/// and integer bases p_k >= 2. Bases are factored by trial division so that
/// log 4 - 2 log 2 cancels; a large cofactor that resists trial division is
/// kept as its own base.
class LogLinear {
 public:
  LogLinear() = default;

  static LogLinear rational(const Rational& q);
  /// coeff * log(n) for n >= 1.
  static LogLinear log_of(const Integer& n, const Rational& coeff = 1);
  /// coeff * log(num/den) for a positive rational.
  static LogLinear log_of(const Rational& x, const Rational& coeff = 1);

  const Rational& rational_part() const { return constant_; }
  const std::map<Integer, Rational>& log_terms() const { return logs_; }

  bool is_zero() const { return constant_ == 0 && logs_.empty(); }
  bool is_rational() const { return logs_.empty(); }
  double evaluate() const;

  LogLinear& operator+=(const LogLinear& other);
  LogLinear& operator-=(const LogLinear& other);
  LogLinear& operator*=(const Rational& q);
  friend LogLinear operator+(LogLinear a, const LogLinear& b) { return a += b; }
  friend LogLinear operator-(LogLinear a, const LogLinear& b) { return a -= b; }
  friend LogLinear operator*(LogLinear a, const Rational& q) { return a *= q; }
  friend LogLinear operator*(const Rational& q, LogLinear a) { return a *= q; }
  friend bool operator==(const LogLinear& a, const LogLinear& b) {
    return a.constant_ == b.constant_ && a.logs_ == b.logs_;
  }

  /// e.g. "1/2 + 3/2*log(2) - log(5)"; "0" for zero.
  std::string to_string() const;

 private:
  void add_log(const Integer& base, const Rational& coeff);

  Rational constant_ = 0;
  std::map<Integer, Rational> logs_;
};

/// A computed real number: an exact symbolic value when one is known, a
/// floating estimate, and an error bound on |estimate - true value|.
struct RigorousValue {
  std::optional<LogLinear> symbolic;
  double numeric = 0.0;
  double error_bound = 0.0;

  static RigorousValue exact(const LogLinear& v);
  static RigorousValue exact(const Rational& q) { return exact(LogLinear::rational(q)); }
  static RigorousValue approx(double value, double error);

  bool has_symbolic() const { return symbolic.has_value(); }
  /// True when the value is known symbolically to be 0.
  bool is_exact_zero() const { return symbolic && symbolic->is_zero(); }

  RigorousValue& operator+=(const RigorousValue& other);
  RigorousValue& operator-=(const RigorousValue& other);
  RigorousValue& operator*=(const Rational& q);
  friend RigorousValue operator+(RigorousValue a, const RigorousValue& b) { return a += b; }
  friend RigorousValue operator-(RigorousValue a, const RigorousValue& b) { return a -= b; }
  friend RigorousValue operator*(RigorousValue a, const Rational& q) { return a *= q; }
  friend RigorousValue operator*(const Rational& q, RigorousValue a) { return a *= q; }

  std::string to_string() const;
};

double to_double(const Rational& q);

}  // namespace arak
