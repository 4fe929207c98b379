#include "arakheight/poly.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace arak {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::AllZero: return "AllZero";
    case ErrorCode::VarMismatch: return "VarMismatch";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NotDivisible: return "NotDivisible";
    case ErrorCode::SingularIntegrand: return "SingularIntegrand";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::BaseLocusHit: return "BaseLocusHit";
    case ErrorCode::UnsupportedShape: return "UnsupportedShape";
    case ErrorCode::NotFairlyLarge: return "NotFairlyLarge";
    case ErrorCode::NotPSD: return "NotPSD";
    case ErrorCode::NotSquareFree: return "NotSquareFree";
    case ErrorCode::BoxOverflow: return "BoxOverflow";
    case ErrorCode::UnknownSymbol: return "UnknownSymbol";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

namespace {

int total(const Exponent& e) { return std::accumulate(e.begin(), e.end(), 0); }

Exponent zero_exponent(int n) { return Exponent(static_cast<std::size_t>(n), 0); }

MultiPoly shift(const MultiPoly& f, int var, int k) {
  MultiPoly out(f.num_vars());
  for (const auto& [e, c] : f.terms()) {
    Exponent shifted = e;
    shifted[static_cast<std::size_t>(var)] += k;
    out.add_term(shifted, c);
  }
  return out;
}

int highest_variable(const MultiPoly& f) {
  int best = -1;
  for (const auto& [e, c] : f.terms()) {
    for (int v = static_cast<int>(e.size()) - 1; v > best; --v) {
      if (e[static_cast<std::size_t>(v)] > 0) {
        best = v;
        break;
      }
    }
  }
  return best;
}

int degree_in(const MultiPoly& f, int var) {
  Degree d = f.partial_degree(var);
  return d.is_neg_inf() ? -1 : d.value();
}

MultiPoly pseudo_remainder(MultiPoly a, const MultiPoly& b, int var) {
  const int db = degree_in(b, var);
  const MultiPoly lcb = b.coefficients_in(var).back();
  while (!a.is_zero()) {
    const int da = degree_in(a, var);
    if (da < db) break;
    const MultiPoly lca = a.coefficients_in(var).back();
    a = lcb * a - lca * shift(b, var, da - db);
  }
  return a;
}

MultiPoly gcd_of(const std::vector<MultiPoly>& polys, int num_vars);

// Content with respect to `var`: gcd of the coefficients of var^k.
MultiPoly content_in(const MultiPoly& f, int var) {
  return gcd_of(f.coefficients_in(var), f.num_vars());
}

MultiPoly gcd_of(const std::vector<MultiPoly>& polys, int num_vars) {
  MultiPoly g(num_vars);
  for (const auto& p : polys) {
    if (p.is_zero()) continue;
    g = gcd(g, p);
    if (g.is_constant() && g.leading_coefficient() == 1) break;
  }
  return g;
}

}  // namespace

// ---------------------------------------------------------------- order

bool GrLexLess::operator()(const Exponent& a, const Exponent& b) const {
  const int ta = total(a);
  const int tb = total(b);
  if (ta != tb) return ta < tb;
  return a < b;
}

// ---------------------------------------------------------------- Degree

int Degree::value() const {
  if (neg_inf_) throw Error(ErrorCode::InvalidArgument, "degree of the zero polynomial is -inf");
  return value_;
}

std::strong_ordering operator<=>(const Degree& a, const Degree& b) {
  if (a.neg_inf_ && b.neg_inf_) return std::strong_ordering::equal;
  if (a.neg_inf_) return std::strong_ordering::less;
  if (b.neg_inf_) return std::strong_ordering::greater;
  return a.value_ <=> b.value_;
}

Degree operator+(const Degree& a, const Degree& b) {
  if (a.neg_inf_ || b.neg_inf_) return Degree::neg_inf();
  return Degree::of(a.value_ + b.value_);
}

std::string Degree::to_string() const { return neg_inf_ ? "-inf" : std::to_string(value_); }

// ---------------------------------------------------------------- MultiPoly

MultiPoly::MultiPoly(int num_vars) : num_vars_(num_vars) {
  if (num_vars < 0) throw Error(ErrorCode::InvalidArgument, "negative number of variables");
}

MultiPoly MultiPoly::constant(int num_vars, const Integer& c) {
  MultiPoly p(num_vars);
  p.add_term(zero_exponent(num_vars), c);
  return p;
}

MultiPoly MultiPoly::variable(int num_vars, int index) {
  if (index < 0 || index >= num_vars) {
    throw Error(ErrorCode::IndexOutOfRange, "variable index out of range");
  }
  Exponent e = zero_exponent(num_vars);
  e[static_cast<std::size_t>(index)] = 1;
  return monomial(e, 1);
}

MultiPoly MultiPoly::monomial(const Exponent& exponent, const Integer& c) {
  MultiPoly p(static_cast<int>(exponent.size()));
  p.add_term(exponent, c);
  return p;
}

bool MultiPoly::is_constant() const {
  if (terms_.empty()) return true;
  return terms_.size() == 1 && total(terms_.begin()->first) == 0;
}

Integer MultiPoly::coefficient(const Exponent& exponent) const {
  auto it = terms_.find(exponent);
  return it == terms_.end() ? Integer(0) : it->second;
}

void MultiPoly::add_term(const Exponent& exponent, const Integer& c) {
  if (static_cast<int>(exponent.size()) != num_vars_) {
    throw Error(ErrorCode::VarMismatch, "exponent length differs from number of variables");
  }
  if (c == 0) return;
  auto [it, inserted] = terms_.try_emplace(exponent, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0) terms_.erase(it);
  }
}

Degree MultiPoly::partial_degree(int var) const {
  if (var < 0 || var >= num_vars_) {
    throw Error(ErrorCode::IndexOutOfRange, "variable index " + std::to_string(var) + " out of range");
  }
  if (terms_.empty()) return Degree::neg_inf();
  int d = 0;
  for (const auto& [e, c] : terms_) d = std::max(d, e[static_cast<std::size_t>(var)]);
  return Degree::of(d);
}

Degree MultiPoly::total_degree() const {
  if (terms_.empty()) return Degree::neg_inf();
  return Degree::of(total(terms_.rbegin()->first));
}

std::vector<int> MultiPoly::degree_vector() const {
  std::vector<int> out(static_cast<std::size_t>(num_vars_), 0);
  for (const auto& [e, c] : terms_) {
    for (std::size_t i = 0; i < e.size(); ++i) out[i] = std::max(out[i], e[i]);
  }
  return out;
}

Integer MultiPoly::content() const {
  Integer g = 0;
  for (const auto& [e, c] : terms_) {
    mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), c.get_mpz_t());
    if (g == 1) break;
  }
  return g;
}

MultiPoly MultiPoly::primitive_part() const {
  if (terms_.empty()) return *this;
  return divexact(content());
}

const Exponent& MultiPoly::leading_exponent() const {
  if (terms_.empty()) throw Error(ErrorCode::InvalidArgument, "zero polynomial has no leading term");
  return terms_.rbegin()->first;
}

const Integer& MultiPoly::leading_coefficient() const {
  if (terms_.empty()) throw Error(ErrorCode::InvalidArgument, "zero polynomial has no leading term");
  return terms_.rbegin()->second;
}

std::vector<MultiPoly> MultiPoly::coefficients_in(int var) const {
  const int d = degree_in(*this, var);
  std::vector<MultiPoly> out(static_cast<std::size_t>(std::max(d + 1, 0)), MultiPoly(num_vars_));
  for (const auto& [e, c] : terms_) {
    Exponent reduced = e;
    const int k = reduced[static_cast<std::size_t>(var)];
    reduced[static_cast<std::size_t>(var)] = 0;
    out[static_cast<std::size_t>(k)].add_term(reduced, c);
  }
  return out;
}

MultiPoly MultiPoly::remove_variable(int var) const {
  if (var < 0 || var >= num_vars_) throw Error(ErrorCode::IndexOutOfRange, "variable index out of range");
  MultiPoly out(num_vars_ - 1);
  for (const auto& [e, c] : terms_) {
    if (e[static_cast<std::size_t>(var)] != 0) {
      throw Error(ErrorCode::InvalidArgument, "cannot drop a variable that occurs");
    }
    Exponent reduced;
    reduced.reserve(e.size() - 1);
    for (std::size_t i = 0; i < e.size(); ++i) {
      if (static_cast<int>(i) != var) reduced.push_back(e[i]);
    }
    out.add_term(reduced, c);
  }
  return out;
}

MultiPoly MultiPoly::insert_variable(int var) const {
  if (var < 0 || var > num_vars_) throw Error(ErrorCode::IndexOutOfRange, "variable index out of range");
  MultiPoly out(num_vars_ + 1);
  for (const auto& [e, c] : terms_) {
    Exponent widened = e;
    widened.insert(widened.begin() + var, 0);
    out.add_term(widened, c);
  }
  return out;
}

MultiPoly MultiPoly::substitute(int var, const Integer& value) const {
  if (var < 0 || var >= num_vars_) throw Error(ErrorCode::IndexOutOfRange, "variable index out of range");
  MultiPoly out(num_vars_);
  for (const auto& [e, c] : terms_) {
    Exponent reduced = e;
    const int k = reduced[static_cast<std::size_t>(var)];
    reduced[static_cast<std::size_t>(var)] = 0;
    Integer power;
    mpz_pow_ui(power.get_mpz_t(), value.get_mpz_t(), static_cast<unsigned long>(k));
    out.add_term(reduced, c * power);
  }
  return out;
}

Integer MultiPoly::evaluate(const std::vector<Integer>& point) const {
  if (static_cast<int>(point.size()) != num_vars_) {
    throw Error(ErrorCode::VarMismatch, "evaluation point has wrong dimension");
  }
  Integer sum = 0;
  Integer power;
  for (const auto& [e, c] : terms_) {
    Integer term = c;
    for (std::size_t i = 0; i < e.size(); ++i) {
      if (e[i] == 0) continue;
      mpz_pow_ui(power.get_mpz_t(), point[i].get_mpz_t(), static_cast<unsigned long>(e[i]));
      term *= power;
    }
    sum += term;
  }
  return sum;
}

void MultiPoly::check_ring(const MultiPoly& other) const {
  if (other.num_vars_ != num_vars_) {
    throw Error(ErrorCode::VarMismatch, "polynomials live in rings with different numbers of variables");
  }
}

MultiPoly MultiPoly::operator-() const {
  MultiPoly out = *this;
  for (auto& [e, c] : out.terms_) c = -c;
  return out;
}

MultiPoly& MultiPoly::operator+=(const MultiPoly& other) {
  check_ring(other);
  for (const auto& [e, c] : other.terms_) add_term(e, c);
  return *this;
}

MultiPoly& MultiPoly::operator-=(const MultiPoly& other) {
  check_ring(other);
  for (const auto& [e, c] : other.terms_) add_term(e, -c);
  return *this;
}

MultiPoly& MultiPoly::operator*=(const Integer& c) {
  if (c == 0) {
    terms_.clear();
    return *this;
  }
  for (auto& [e, coeff] : terms_) coeff *= c;
  return *this;
}

MultiPoly operator*(const MultiPoly& a, const MultiPoly& b) {
  a.check_ring(b);
  MultiPoly out(a.num_vars_);
  Exponent e(static_cast<std::size_t>(a.num_vars_));
  for (const auto& [ea, ca] : a.terms_) {
    for (const auto& [eb, cb] : b.terms_) {
      for (std::size_t i = 0; i < e.size(); ++i) e[i] = ea[i] + eb[i];
      out.add_term(e, ca * cb);
    }
  }
  return out;
}

MultiPoly MultiPoly::pow(int k) const {
  if (k < 0) throw Error(ErrorCode::InvalidArgument, "negative power");
  MultiPoly result = constant(num_vars_, 1);
  MultiPoly base = *this;
  while (k > 0) {
    if (k & 1) result = result * base;
    k >>= 1;
    if (k > 0) base = base * base;
  }
  return result;
}

MultiPoly MultiPoly::divexact(const Integer& c) const {
  if (c == 0) throw Error(ErrorCode::NotDivisible, "division by zero");
  MultiPoly out = *this;
  for (auto& [e, coeff] : out.terms_) {
    if (!mpz_divisible_p(coeff.get_mpz_t(), c.get_mpz_t())) {
      throw Error(ErrorCode::NotDivisible, "coefficient not divisible by " + c.get_str());
    }
    mpz_divexact(coeff.get_mpz_t(), coeff.get_mpz_t(), c.get_mpz_t());
  }
  return out;
}

std::string MultiPoly::to_string() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
    const auto& [e, c] = *it;
    const bool negative = c < 0;
    Integer magnitude = abs(c);
    if (first) {
      if (negative) os << '-';
    } else {
      os << (negative ? " - " : " + ");
    }
    first = false;
    const bool is_const = total(e) == 0;
    bool need_star = false;
    if (is_const || magnitude != 1) {
      os << magnitude.get_str();
      need_star = true;
    }
    for (std::size_t i = 0; i < e.size(); ++i) {
      if (e[i] == 0) continue;
      if (need_star) os << '*';
      os << 'z' << (i + 1);
      if (e[i] > 1) os << '^' << e[i];
      need_star = true;
    }
  }
  return os.str();
}

// ---------------------------------------------------------------- division / gcd

bool divides(const MultiPoly& g, const MultiPoly& f, MultiPoly* quotient) {
  if (g.num_vars() != f.num_vars()) throw Error(ErrorCode::VarMismatch, "ring mismatch in division");
  if (g.is_zero()) throw Error(ErrorCode::NotDivisible, "division by the zero polynomial");
  MultiPoly r = f;
  MultiPoly q(f.num_vars());
  const Exponent& lg = g.leading_exponent();
  const Integer& cg = g.leading_coefficient();
  Exponent t(lg.size());
  while (!r.is_zero()) {
    const Exponent& lr = r.leading_exponent();
    for (std::size_t i = 0; i < lg.size(); ++i) {
      t[i] = lr[i] - lg[i];
      if (t[i] < 0) return false;
    }
    const Integer& cr = r.leading_coefficient();
    if (!mpz_divisible_p(cr.get_mpz_t(), cg.get_mpz_t())) return false;
    Integer qc;
    mpz_divexact(qc.get_mpz_t(), cr.get_mpz_t(), cg.get_mpz_t());
    MultiPoly term = MultiPoly::monomial(t, qc);
    q += term;
    r -= term * g;
  }
  if (quotient) *quotient = std::move(q);
  return true;
}

MultiPoly divexact(const MultiPoly& f, const MultiPoly& g) {
  MultiPoly q;
  if (!divides(g, f, &q)) {
    throw Error(ErrorCode::NotDivisible, "(" + g.to_string() + ") does not divide (" + f.to_string() + ")");
  }
  return q;
}

MultiPoly positive_leading(MultiPoly f) {
  if (!f.is_zero() && f.leading_coefficient() < 0) f = -f;
  return f;
}

MultiPoly gcd(const MultiPoly& f, const MultiPoly& g) {
  if (f.num_vars() != g.num_vars()) throw Error(ErrorCode::VarMismatch, "ring mismatch in gcd");
  if (f.is_zero()) return positive_leading(g);
  if (g.is_zero()) return positive_leading(f);

  const int var = std::max(highest_variable(f), highest_variable(g));
  if (var < 0) {
    Integer c;
    mpz_gcd(c.get_mpz_t(), f.leading_coefficient().get_mpz_t(), g.leading_coefficient().get_mpz_t());
    return MultiPoly::constant(f.num_vars(), c);
  }

  const MultiPoly cont_f = content_in(f, var);
  const MultiPoly cont_g = content_in(g, var);
  const MultiPoly cont = gcd(cont_f, cont_g);

  MultiPoly a = divexact(f, cont_f);
  MultiPoly b = divexact(g, cont_g);
  if (degree_in(a, var) < degree_in(b, var)) std::swap(a, b);

  MultiPoly last = b;
  while (true) {
    if (degree_in(b, var) == 0) {
      last = MultiPoly::constant(f.num_vars(), 1);
      break;
    }
    MultiPoly r = pseudo_remainder(a, b, var);
    if (r.is_zero()) {
      last = b;
      break;
    }
    r = divexact(r, content_in(r, var));
    a = std::move(b);
    b = std::move(r);
  }
  last = divexact(last, content_in(last, var));
  return positive_leading(cont * last);
}

// ---------------------------------------------------------------- complex evaluation

ComplexEval eval_complex(const MultiPoly& f, const std::vector<std::complex<double>>& z) {
  if (static_cast<int>(z.size()) != f.num_vars()) {
    throw Error(ErrorCode::VarMismatch, "evaluation point has wrong dimension");
  }
  constexpr double unit = std::numeric_limits<double>::epsilon() / 2;
  ComplexEval out;
  double magnitude_sum = 0.0;
  int max_degree = 0;
  for (const auto& [e, c] : f.terms()) {
    const double cd = c.get_d();
    if (!std::isfinite(cd)) {
      out.overflow = true;
      continue;
    }
    std::complex<double> term = cd;
    int deg = 0;
    for (std::size_t i = 0; i < e.size(); ++i) {
      for (int k = 0; k < e[i]; ++k) term *= z[i];
      deg += e[i];
    }
    max_degree = std::max(max_degree, deg);
    out.value += term;
    magnitude_sum += std::abs(term);
  }
  if (!std::isfinite(out.value.real()) || !std::isfinite(out.value.imag()) || !std::isfinite(magnitude_sum)) {
    out.overflow = true;
  }
  if (out.overflow) {
    out.error_bound = std::numeric_limits<double>::infinity();
    return out;
  }
  // Each complex product contributes at most ~2*sqrt(2) units of relative
  // error; summation contributes one unit per term.
  const double factor = 3.0 * (max_degree + 1) + static_cast<double>(f.num_terms()) + 2.0;
  out.error_bound = 1.01 * factor * unit * magnitude_sum;
  return out;
}

}  // namespace arak
