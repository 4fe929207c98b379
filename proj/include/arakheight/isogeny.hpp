#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "arakheight/poly.hpp"

namespace arak {

/// ([N_1]^k_1 ... [N_r]^k_r)^* S for a base symbol S.
struct PullbackAtom {
  std::string symbol;
  std::map<int, int> pullbacks;  // N -> k >= 1

  std::string to_string() const;
  friend auto operator<=>(const PullbackAtom&, const PullbackAtom&) = default;
};

/// Q-linear combination of pullback atoms.
class FormalClass {
 public:
  FormalClass() = default;
  /// ([N]^k)^* symbol
  static FormalClass atom(const std::string& symbol, int k = 0, int n = 2);
  /// "2*([2]^1)*H - 8*H", "([2]^3)*H", "1/2*H", "0"
  static FormalClass parse(const std::string& text);

  const std::map<PullbackAtom, Rational>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  void add(const PullbackAtom& a, const Rational& q);

  FormalClass& operator+=(const FormalClass& o);
  FormalClass& operator-=(const FormalClass& o);
  FormalClass& operator*=(const Rational& q);
  friend FormalClass operator+(FormalClass a, const FormalClass& b) { return a += b; }
  friend FormalClass operator-(FormalClass a, const FormalClass& b) { return a -= b; }
  friend FormalClass operator*(const Rational& q, FormalClass a) { return a *= q; }
  friend bool operator==(const FormalClass& a, const FormalClass& b) { return a.terms_ == b.terms_; }

  std::string to_string() const;

 private:
  std::map<PullbackAtom, Rational> terms_;
};

/// [N]^* S -> r S
class RewriteRules {
 public:
  /// [2]^* H = 4 H
  static RewriteRules standard();
  void add(int n, const std::string& symbol, const Rational& factor);
  const Rational& factor(int n, const std::string& symbol) const;

 private:
  std::map<std::pair<int, std::string>, Rational> rules_;
};

/// Symmetric table of deg(c1(S) c1(T)).
class PairingTable {
 public:
  void set(const std::string& a, const std::string& b, const Rational& value);
  const Rational& get(const std::string& a, const std::string& b) const;

 private:
  std::map<std::pair<std::string, std::string>, Rational> values_;
};

/// Pullback-free normal form; UnknownSymbol when a pullback has no rule.
FormalClass reduce(const FormalClass& cls, const RewriteRules& rules = RewriteRules::standard());

/// Bilinear extension of the table to reduced classes.
Rational pair(const FormalClass& a, const FormalClass& b, const PairingTable& table,
              const RewriteRules& rules = RewriteRules::standard());

struct CounterexampleRow {
  int n = 0;
  Rational height;  // deg(([2]^n)^* H . H)
};

struct CounterexampleReport {
  Rational c;
  std::vector<CounterexampleRow> rows;
  bool fails_northcott = false;
  std::string verdict;
  std::string curve = "Y^2 Z + X Y Z + eps^2 Y Z^2 - X^3 over Z[(5 + sqrt 29)/2]";
};

/// Heights of x_n = [2]^n x_0 when deg(H . H) = c.
CounterexampleReport counterexample_heights(int n_max, const Rational& c);

}  // namespace arak
