#include "arakheight/chow.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <complex>
#include <exception>
#include <map>
#include <mutex>
#include <random>
#include <thread>

#include "arakheight/parse.hpp"

namespace arak {

using json = nlohmann::json;

namespace {

MultiPoly lift(const MultiPoly& f, int offset, int total) {
  MultiPoly out(total);
  for (const auto& [e, c] : f.terms()) {
    Exponent x(static_cast<std::size_t>(total), 0);
    for (std::size_t i = 0; i < e.size(); ++i) x[static_cast<std::size_t>(offset) + i] = e[i];
    out.add_term(x, c);
  }
  return out;
}

std::string power(const std::string& var, int k) {
  if (k == 0) return "";
  return k == 1 ? var : var + "^" + std::to_string(k);
}

std::string monomial_text(const std::vector<std::pair<std::string, int>>& parts) {
  std::string out;
  for (const auto& [v, k] : parts) {
    const std::string p = power(v, k);
    if (p.empty()) continue;
    if (!out.empty()) out += "*";
    out += p;
  }
  return out;
}

std::string scaled(const MultiPoly& c, const std::string& mono) {
  if (mono.empty()) return c.to_string();
  if (c.is_constant()) {
    const Integer v = c.terms().begin()->second;
    if (v == 1) return mono;
    if (v == -1) return "-" + mono;
    return v.get_str() + "*" + mono;
  }
  if (c.num_terms() == 1) return c.to_string() + "*" + mono;
  return "(" + c.to_string() + ")*" + mono;
}

std::string join_terms(const std::vector<std::string>& terms) {
  if (terms.empty()) return "0";
  std::string out;
  for (const auto& t : terms) {
    if (out.empty()) {
      out = t;
    } else if (t[0] == '-') {
      out += " - " + t.substr(1);
    } else {
      out += " + " + t;
    }
  }
  return out;
}

int max_z_index(const std::string& text) {
  int best = 0;
  for (std::size_t i = 0; i + 1 < text.size(); ++i) {
    if (text[i] == 'z' && std::isdigit(static_cast<unsigned char>(text[i + 1])) &&
        (i == 0 || !std::isalnum(static_cast<unsigned char>(text[i - 1])))) {
      best = std::max(best, text[i + 1] - '0');
    }
  }
  return best;
}

MultiPoly derivative(const MultiPoly& f, int var) {
  MultiPoly out(f.num_vars());
  for (const auto& [e, c] : f.terms()) {
    const int k = e[static_cast<std::size_t>(var)];
    if (k == 0) continue;
    Exponent x = e;
    x[static_cast<std::size_t>(var)] = k - 1;
    out.add_term(x, c * k);
  }
  return out;
}

std::vector<Integer> divisors(Integer n) {
  if (n < 0) n = -n;
  std::vector<Integer> out;
  for (Integer k = 1; k * k <= n; ++k) {
    if (n % k == 0) {
      out.push_back(k);
      if (k * k != n) out.push_back(n / k);
    }
  }
  return out;
}

// Binary form over Z with a linear factor over Q.
bool has_rational_root(const std::vector<Integer>& g) {
  const Integer& g0 = g.front();
  const Integer& gm = g.back();
  if (g0 == 0 || gm == 0) return true;
  for (const auto& p : divisors(g0)) {
    for (const auto& q : divisors(gm)) {
      for (int sign : {1, -1}) {
        Integer acc = 0;
        Integer ppow = 1;
        std::vector<Integer> qpow(g.size(), 1);
        for (std::size_t k = 1; k < g.size(); ++k) qpow[k] = qpow[k - 1] * q;
        const std::size_t m = g.size() - 1;
        for (std::size_t k = 0; k <= m; ++k) {
          acc += g[k] * ppow * qpow[m - k];
          ppow *= sign * p;
        }
        if (acc == 0) return true;
      }
    }
  }
  return false;
}

const Integer kRootTestLimit("1000000000000");

}  // namespace

// ---- binary forms ----------------------------------------------------------

BinaryForm BinaryForm::parse(const std::string& text, int num_vars) {
  const int d = num_vars < 0 ? max_z_index(text) : num_vars;
  VariableTable vars;
  vars.add("X0", 0);
  vars.add("X1", 1);
  for (int i = 1; i <= d; ++i) vars.add("z" + std::to_string(i), i + 1);
  const MultiPoly p = parse_poly(text, vars);
  if (p.is_zero()) throw Error(ErrorCode::AllZero, "the zero form has no roots");
  int m = -1;
  for (const auto& [e, c] : p.terms()) {
    const int k = e[0] + e[1];
    if (m >= 0 && k != m) throw Error(ErrorCode::ParseError, "form '" + text + "' is not homogeneous in X0, X1");
    m = k;
  }
  if (m < 1) throw Error(ErrorCode::ParseError, "form '" + text + "' has degree 0 in X0, X1");
  BinaryForm g;
  g.num_vars = d;
  g.coeffs.assign(static_cast<std::size_t>(m + 1), MultiPoly(d));
  for (const auto& [e, c] : p.terms()) {
    Exponent z(e.begin() + 2, e.end());
    g.coeffs[static_cast<std::size_t>(e[1])].add_term(z, c);
  }
  return g;
}

MultiPoly BinaryForm::dehomogenized() const {
  MultiPoly out(num_vars + 1);
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    MultiPoly t = lift(coeffs[k], 1, num_vars + 1);
    Exponent x(static_cast<std::size_t>(num_vars + 1), 0);
    x[0] = static_cast<int>(k);
    out += t * MultiPoly::monomial(x, 1);
  }
  return out;
}

BinaryForm BinaryForm::canonical() const {
  BinaryForm g = *this;
  g.coeffs = normalize(coeffs).point.coords();
  return g;
}

std::string BinaryForm::to_string() const {
  std::vector<std::string> terms;
  const int m = degree();
  for (int k = 0; k <= m; ++k) {
    const auto& c = coeffs[static_cast<std::size_t>(k)];
    if (c.is_zero()) continue;
    terms.push_back(scaled(c, monomial_text({{"X0", m - k}, {"X1", k}})));
  }
  return join_terms(terms);
}

// ---- cycles ----------------------------------------------------------------

int CycleComponent::degree() const { return form ? form->degree() : 1; }

std::string CycleComponent::to_string() const {
  return point ? point->to_string() : "form: " + form->to_string();
}

int ZeroCycle::degree() const {
  int total = 0;
  for (const auto& c : components) total += c.multiplicity * c.degree();
  return total;
}

void ZeroCycle::validate() const {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "ambient dimension must be at least 1");
  if (components.empty()) throw Error(ErrorCode::InvalidArgument, "empty cycle");
  for (const auto& c : components) {
    if (c.multiplicity < 1) throw Error(ErrorCode::InvalidArgument, "multiplicities must be positive");
    if (c.point.has_value() == c.form.has_value()) {
      throw Error(ErrorCode::InvalidArgument, "a component is either a point or a form");
    }
    if (c.point) {
      if (c.point->dim() != n) throw Error(ErrorCode::VarMismatch, "point " + c.point->to_string() + " is not in P^" + std::to_string(n));
      if (c.point->num_vars() != d) throw Error(ErrorCode::VarMismatch, "point over a different base");
      continue;
    }
    const BinaryForm& g = *c.form;
    if (n != 1) throw Error(ErrorCode::UnsupportedShape, "conjugate blocks are only supported on P^1");
    if (g.num_vars != d) throw Error(ErrorCode::VarMismatch, "form over a different base");
    if (g.degree() < 1) throw Error(ErrorCode::InvalidArgument, "form of degree 0");
    for (const auto& a : g.coeffs) {
      if (a.num_vars() != d) throw Error(ErrorCode::VarMismatch, "form coefficient in the wrong ring");
    }
    if (std::all_of(g.coeffs.begin(), g.coeffs.end(), [](const MultiPoly& a) { return a.is_zero(); })) {
      throw Error(ErrorCode::AllZero, "the zero form has no roots");
    }
    const BinaryForm can = g.canonical();
    if (can.coeffs != g.coeffs) {
      std::vector<MultiPoly> neg;
      for (const auto& a : g.coeffs) neg.push_back(-a);
      if (can.coeffs != neg) throw Error(ErrorCode::InvalidArgument, "form " + g.to_string() + " is not primitive");
    }
    const int m = g.degree();
    const std::string name = g.to_string();
    if (m >= 2 && g.coeffs[static_cast<std::size_t>(m)].is_zero() && g.coeffs[static_cast<std::size_t>(m - 1)].is_zero()) {
      throw Error(ErrorCode::NotSquareFree, "form " + name + " has a repeated root at X0 = 0");
    }
    const MultiPoly big = g.dehomogenized();
    const MultiPoly common = gcd(big, derivative(big, 0));
    if (!common.is_zero() && common.partial_degree(0).value() > 0) {
      throw Error(ErrorCode::NotSquareFree, "form " + name + " has a repeated factor " + common.to_string());
    }
    if (d == 0 && m >= 2) {
      std::vector<Integer> ints;
      for (const auto& a : g.coeffs) ints.push_back(a.is_zero() ? Integer(0) : a.terms().begin()->second);
      const Integer g0 = abs(ints.front());
      const Integer gm = abs(ints.back());
      if (g0 <= kRootTestLimit && gm <= kRootTestLimit && has_rational_root(ints)) {
        throw Error(ErrorCode::InvalidArgument, "form " + name + " has a rational root; list it as a point");
      }
    }
  }
}

ZeroCycle ZeroCycle::canonical() const {
  validate();
  std::vector<CycleComponent> points, forms;
  auto add = [](std::vector<CycleComponent>& list, CycleComponent c) {
    for (auto& x : list) {
      if (x.to_string() == c.to_string()) {
        x.multiplicity += c.multiplicity;
        return;
      }
    }
    list.push_back(std::move(c));
  };
  for (const auto& c : components) {
    if (c.point) {
      add(points, c);
    } else if (c.form->degree() == 1) {
      const auto& g = c.form->coeffs;
      add(points, CycleComponent{c.multiplicity, normalize({g[1], -g[0]}).point, std::nullopt});
    } else {
      add(forms, CycleComponent{c.multiplicity, std::nullopt, c.form->canonical()});
    }
  }
  std::sort(points.begin(), points.end(),
            [](const CycleComponent& a, const CycleComponent& b) { return canonical_less(*a.point, *b.point); });
  std::sort(forms.begin(), forms.end(), [](const CycleComponent& a, const CycleComponent& b) {
    if (a.form->degree() != b.form->degree()) return a.form->degree() < b.form->degree();
    return a.to_string() < b.to_string();
  });
  ZeroCycle out{n, d, std::move(points)};
  for (auto& f : forms) out.components.push_back(std::move(f));
  return out;
}

std::string ZeroCycle::to_string() const {
  std::string out = "[";
  for (std::size_t k = 0; k < components.size(); ++k) {
    if (k) out += ", ";
    out += "(" + std::to_string(components[k].multiplicity) + ",'" + components[k].to_string() + "')";
  }
  return out + "]";
}

namespace {

class CycleParser {
 public:
  explicit CycleParser(const std::string& text) : text_(text) {}

  std::vector<std::pair<int, std::string>> entries() {
    std::vector<std::pair<int, std::string>> out;
    expect('[');
    skip();
    if (peek() == ']') {
      ++pos_;
      return out;
    }
    for (;;) {
      expect('(');
      skip();
      std::size_t start = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (start == pos_) fail("expected a multiplicity");
      const int mult = std::stoi(text_.substr(start, pos_ - start));
      expect(',');
      skip();
      const char quote = peek();
      if (quote != '\'' && quote != '"') fail("expected a quoted point or form");
      ++pos_;
      start = pos_;
      while (pos_ < text_.size() && text_[pos_] != quote) ++pos_;
      if (pos_ >= text_.size()) fail("unterminated quote");
      out.emplace_back(mult, text_.substr(start, pos_ - start));
      ++pos_;
      expect(')');
      skip();
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      expect(']');
      break;
    }
    skip();
    if (pos_ != text_.size()) fail("trailing characters");
    return out;
  }

 private:
  void skip() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
  void expect(char c) {
    skip();
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorCode::ParseError, "cycle: " + msg + " at offset " + std::to_string(pos_));
  }

  const std::string& text_;
  std::size_t pos_ = 0;
};

ZeroCycle build_cycle(const std::vector<std::tuple<int, std::string, bool>>& items, int n, int d) {
  if (d < 0) {
    d = 0;
    for (const auto& [m, text, is_form] : items) d = std::max(d, max_z_index(text));
  }
  ZeroCycle z;
  z.d = d;
  z.n = n;
  for (const auto& [m, text, is_form] : items) {
    CycleComponent c;
    c.multiplicity = m;
    if (is_form) {
      c.form = BinaryForm::parse(text, d).canonical();
      if (z.n < 0) z.n = 1;
    } else {
      c.point = normalize(parse_tuple(text, d)).point;
      if (z.n < 0) z.n = c.point->dim();
    }
    z.components.push_back(std::move(c));
  }
  if (z.n < 0) z.n = 1;
  z.validate();
  return z;
}

}  // namespace

ZeroCycle ZeroCycle::parse(const std::string& text, int n, int d) {
  const auto first = text.find_first_not_of(" \t\n\r");
  if (first != std::string::npos && text[first] == '{') return from_json(json::parse(text), d);
  if (first != std::string::npos && text[first] == '[') {
    const auto second = text.find_first_not_of(" \t\n\r", first + 1);
    if (second != std::string::npos && text[second] == '{') return from_json(json::parse(text), d);
  }
  std::vector<std::tuple<int, std::string, bool>> items;
  for (auto& [mult, body] : CycleParser(text).entries()) {
    const auto colon = body.find(':');
    if (colon != std::string::npos && body.substr(0, colon).find("form") != std::string::npos) {
      items.emplace_back(mult, body.substr(colon + 1), true);
    } else {
      items.emplace_back(mult, body, false);
    }
  }
  return build_cycle(items, n, d);
}

json ZeroCycle::to_json() const {
  json comps = json::array();
  for (const auto& c : components) {
    json j{{"mult", c.multiplicity}};
    if (c.point) {
      j["point"] = c.point->to_string();
    } else {
      j["form"] = c.form->to_string();
    }
    comps.push_back(j);
  }
  return json{{"n", n}, {"d", d}, {"components", comps}};
}

ZeroCycle ZeroCycle::from_json(const json& j, int d) {
  try {
    const json& comps = j.is_array() ? j : j.at("components");
    int n = -1;
    if (j.is_object() && j.contains("n")) n = j.at("n").get<int>();
    if (j.is_object() && j.contains("d") && d < 0) d = j.at("d").get<int>();
    std::vector<std::tuple<int, std::string, bool>> items;
    for (const auto& c : comps) {
      const int mult = c.value("mult", 1);
      if (c.contains("form")) {
        items.emplace_back(mult, c.at("form").get<std::string>(), true);
      } else {
        items.emplace_back(mult, c.at("point").get<std::string>(), false);
      }
    }
    return build_cycle(items, n, d);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("cycle json: ") + e.what());
  }
}

// ---- Chow forms ------------------------------------------------------------

std::vector<Exponent> ChowForm::monomials() const {
  std::vector<Exponent> out;
  Exponent cur(static_cast<std::size_t>(n + 1), 0);
  auto rec = [&](auto&& self, int pos, int left) -> void {
    if (pos == n) {
      cur[static_cast<std::size_t>(pos)] = left;
      out.push_back(cur);
      return;
    }
    for (int k = left; k >= 0; --k) {
      cur[static_cast<std::size_t>(pos)] = k;
      self(self, pos + 1, left - k);
    }
  };
  rec(rec, 0, degree);
  return out;
}

std::vector<MultiPoly> ChowForm::coordinates() const {
  std::map<Exponent, MultiPoly> parts;
  for (const auto& [e, c] : form.terms()) {
    Exponent u(e.begin() + d, e.end());
    Exponent z(e.begin(), e.begin() + d);
    auto it = parts.try_emplace(u, MultiPoly(d)).first;
    it->second.add_term(z, c);
  }
  std::vector<MultiPoly> out;
  for (const auto& u : monomials()) {
    auto it = parts.find(u);
    out.push_back(it == parts.end() ? MultiPoly(d) : it->second);
  }
  return out;
}

ProjPoint ChowForm::chow_point() const { return normalize(coordinates()).point; }

std::string ChowForm::to_string() const {
  std::vector<std::string> terms;
  const auto monos = monomials();
  const auto coords = coordinates();
  for (std::size_t k = 0; k < monos.size(); ++k) {
    if (coords[k].is_zero()) continue;
    std::vector<std::pair<std::string, int>> parts;
    for (int j = 0; j <= n; ++j) parts.emplace_back("u" + std::to_string(j), monos[k][static_cast<std::size_t>(j)]);
    terms.push_back(scaled(coords[k], monomial_text(parts)));
  }
  return join_terms(terms);
}

MultiPoly binary_resultant(const std::vector<MultiPoly>& a, const std::vector<MultiPoly>& b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::InvalidArgument, "resultant of an empty form");
  const int ring = a.front().num_vars();
  const int p = static_cast<int>(a.size()) - 1;
  const int q = static_cast<int>(b.size()) - 1;
  const int size = p + q;
  if (size == 0) return MultiPoly::constant(ring, 1);
  std::vector<std::vector<MultiPoly>> m(static_cast<std::size_t>(size),
                                        std::vector<MultiPoly>(static_cast<std::size_t>(size), MultiPoly(ring)));
  for (int i = 0; i < q; ++i) {
    for (int k = 0; k <= p; ++k) m[static_cast<std::size_t>(i)][static_cast<std::size_t>(i + k)] = a[static_cast<std::size_t>(k)];
  }
  for (int i = 0; i < p; ++i) {
    for (int k = 0; k <= q; ++k) m[static_cast<std::size_t>(q + i)][static_cast<std::size_t>(i + k)] = b[static_cast<std::size_t>(k)];
  }
  // Bareiss elimination: every division is exact
  MultiPoly prev = MultiPoly::constant(ring, 1);
  bool negate = false;
  for (int k = 0; k + 1 < size; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    if (m[ku][ku].is_zero()) {
      int r = k + 1;
      while (r < size && m[static_cast<std::size_t>(r)][ku].is_zero()) ++r;
      if (r == size) return MultiPoly(ring);
      std::swap(m[ku], m[static_cast<std::size_t>(r)]);
      negate = !negate;
    }
    for (int i = k + 1; i < size; ++i) {
      const auto iu = static_cast<std::size_t>(i);
      for (int j = k + 1; j < size; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        m[iu][ju] = divexact(m[ku][ku] * m[iu][ju] - m[iu][ku] * m[ku][ju], prev);
      }
      m[iu][ku] = MultiPoly(ring);
    }
    prev = m[ku][ku];
  }
  MultiPoly det = m[static_cast<std::size_t>(size - 1)][static_cast<std::size_t>(size - 1)];
  return negate ? -det : det;
}

ChowForm chow_form(const ZeroCycle& z) {
  z.validate();
  const int ring = z.d + z.n + 1;
  MultiPoly product = MultiPoly::constant(ring, 1);
  for (const auto& c : z.components) {
    MultiPoly factor(ring);
    if (c.point) {
      for (int j = 0; j <= z.n; ++j) {
        factor += lift(c.point->coords()[static_cast<std::size_t>(j)], 0, ring) * MultiPoly::variable(ring, z.d + j);
      }
    } else {
      std::vector<MultiPoly> g;
      for (const auto& a : c.form->coeffs) g.push_back(lift(a, 0, ring));
      // u0 X0 + u1 X1 vanishes only at the point (u1 : -u0)
      factor = binary_resultant(g, {MultiPoly::variable(ring, z.d), MultiPoly::variable(ring, z.d + 1)});
    }
    product = product * factor.pow(c.multiplicity);
  }
  ChowForm raw{z.n, z.d, z.degree(), product};
  const ProjPoint p = raw.chow_point();
  MultiPoly canonical(ring);
  const auto monos = raw.monomials();
  for (std::size_t k = 0; k < monos.size(); ++k) {
    Exponent u(static_cast<std::size_t>(ring), 0);
    for (int j = 0; j <= z.n; ++j) u[static_cast<std::size_t>(z.d + j)] = monos[k][static_cast<std::size_t>(j)];
    canonical += lift(p.coords()[k], 0, ring) * MultiPoly::monomial(u, 1);
  }
  raw.form = canonical;
  return raw;
}

// ---- heights ---------------------------------------------------------------

RigorousValue closed_point_height(const CycleComponent& c, const Polarization& pol, const IntersectionEngine& engine) {
  pol.validate();
  if (c.point) return height_point(*c.point, pol, engine);
  const BinaryForm& g = *c.form;
  if (g.num_vars != pol.d) throw Error(ErrorCode::VarMismatch, "form and polarization live on different bases");
  const int m = pol.d + 1;
  std::vector<int> degrees(static_cast<std::size_t>(m), 0);
  degrees[0] = g.degree();
  for (const auto& a : g.coeffs) {
    const auto dv = a.degree_vector();
    for (int i = 0; i < pol.d; ++i) degrees[static_cast<std::size_t>(i + 1)] = std::max(degrees[static_cast<std::size_t>(i + 1)], dv[static_cast<std::size_t>(i)]);
  }
  IntersectionProblem prob;
  prob.m = m;
  prob.classes.push_back(MetrizedBundle::fs_factor(m, 0));
  prob.classes.push_back(MetrizedBundle::pullback(SectionClass{{g.dehomogenized()}, degrees}));
  for (const auto& b : pol.bundles) {
    MetrizedBundle s = MetrizedBundle::zero(m);
    for (int i = 0; i < pol.d; ++i) s.fs[static_cast<std::size_t>(i + 1)] = b.fs[static_cast<std::size_t>(i)];
    s.constant = b.constant;
    prob.classes.push_back(s);
  }
  return engine.degree(prob);
}

RigorousValue cycle_height_dim0(const ZeroCycle& z, const Polarization& pol, const IntersectionEngine& engine) {
  z.validate();
  if (z.d != pol.d) throw Error(ErrorCode::VarMismatch, "cycle and polarization live on different bases");
  RigorousValue total = RigorousValue::exact(Rational(0));
  for (const auto& c : z.components) total += closed_point_height(c, pol, engine) * Rational(c.multiplicity);
  return total * Rational(1, z.degree());
}

RigorousValue chow_height(const ZeroCycle& z, const Polarization& pol, const IntersectionEngine& engine) {
  if (z.d != pol.d) throw Error(ErrorCode::VarMismatch, "cycle and polarization live on different bases");
  return height_point(chow_form(z).chow_point(), pol, engine);
}

InjectivityReport chow_injectivity_check(const std::vector<ZeroCycle>& sample) {
  InjectivityReport r;
  r.cycles = sample.size();
  std::map<std::string, std::string> by_form;
  std::map<std::string, bool> cycles;
  for (const auto& z : sample) {
    const std::string key = z.canonical().to_string();
    const std::string form = chow_form(z).to_string();
    cycles[key] = true;
    auto [it, fresh] = by_form.emplace(form, key);
    if (!fresh && it->second != key) r.collisions.emplace_back(it->second, key);
  }
  r.distinct_cycles = cycles.size();
  r.distinct_forms = by_form.size();
  return r;
}

std::vector<ZeroCycle> generate_cycle_family(std::uint64_t seed, std::size_t count, int d, int max_degree,
                                             int max_coeff) {
  if (d < 0 || max_degree < 1 || max_coeff < 1) throw Error(ErrorCode::InvalidArgument, "bad family parameters");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> coeff(-max_coeff, max_coeff);
  std::uniform_int_distribution<int> coin(0, 3);
  // polynomials in z of degree <= 1 in each variable
  auto random_coefficient = [&]() {
    MultiPoly f = MultiPoly::constant(d, coeff(rng));
    for (int i = 0; i < d; ++i) {
      if (coin(rng) == 0) f += MultiPoly::variable(d, i) * Integer(coeff(rng));
    }
    return f;
  };
  std::vector<ZeroCycle> out;
  while (out.size() < count) {
    const int total = std::uniform_int_distribution<int>(1, max_degree)(rng);
    ZeroCycle z;
    z.n = 1;
    z.d = d;
    int left = total;
    while (left > 0) {
      const int k = std::uniform_int_distribution<int>(1, std::min(left, 3))(rng);
      CycleComponent c;
      if (k == 1) {
        std::vector<MultiPoly> t{random_coefficient(), random_coefficient()};
        if (t[0].is_zero() && t[1].is_zero()) continue;
        c.point = normalize(t).point;
        c.multiplicity = (left >= 2 && coin(rng) == 0) ? 2 : 1;
      } else {
        BinaryForm g;
        g.num_vars = d;
        for (int j = 0; j <= k; ++j) g.coeffs.push_back(random_coefficient());
        if (g.coeffs.front().is_zero() || g.coeffs.back().is_zero()) continue;
        g = g.canonical();
        ZeroCycle probe{1, d, {CycleComponent{1, std::nullopt, g}}};
        try {
          probe.validate();
        } catch (const Error&) {
          continue;
        }
        c.form = g;
      }
      left -= c.multiplicity * c.degree();
      z.components.push_back(std::move(c));
    }
    out.push_back(z.canonical());
  }
  return out;
}

BoundednessReport chow_boundedness(const std::vector<ZeroCycle>& family, const Polarization& pol,
                                   const IntersectionEngine& engine, int threads) {
  BoundednessReport r;
  r.differences.assign(family.size(), 0.0);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&]() {
    for (std::size_t k = next++; k < family.size(); k = next++) {
      try {
        const auto& z = family[k];
        const double ch = chow_height(z, pol, engine).numeric / z.degree();
        r.differences[k] = ch - cycle_height_dim0(z, pol, engine).numeric;
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  const std::size_t half = family.size() / 2;
  for (std::size_t k = 0; k < family.size(); ++k) {
    double& c = k < half ? r.fit_constant : r.validation_constant;
    c = std::max(c, std::fabs(r.differences[k]));
  }
  if (r.fit_constant > 0) {
    r.deviation = std::fabs(r.validation_constant - r.fit_constant) / r.fit_constant;
  } else {
    r.deviation = r.validation_constant > 0 ? INFINITY : 0.0;
  }
  return r;
}

std::vector<std::size_t> bounded_cycles(const std::vector<ZeroCycle>& family, double bound, int max_degree,
                                        const Polarization& pol, const IntersectionEngine& engine) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < family.size(); ++k) {
    if (family[k].degree() > max_degree) continue;
    const RigorousValue h = cycle_height_dim0(family[k], pol, engine);
    if (h.numeric <= bound + h.error_bound) out.push_back(k);
  }
  return out;
}

// ---- sup norm against the mean ---------------------------------------------

namespace {

struct Node {
  std::complex<double> x0, x1;
  double weight;
};

std::vector<double> legendre_rule(int n, std::vector<double>& weights) {
  std::vector<double> nodes;
  weights.clear();
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
      if (std::fabs(step) < 1e-15) break;
    }
    nodes.push_back(0.5 * (1 - t));
    weights.push_back(1.0 / ((1 - t * t) * dp * dp));
  }
  return nodes;
}

// Points of P^1 in the charts (1 : x) and (w : 1), |x|, |w| <= 1, weighted for
// the FS probability measure when `quadrature` is set.
std::vector<Node> sphere_nodes(bool quadrature) {
  std::vector<Node> out;
  const int ntheta = quadrature ? 32 : 24;
  std::vector<double> radii, weights;
  if (quadrature) {
    radii = legendre_rule(24, weights);
  } else {
    for (int k = 0; k <= 16; ++k) radii.push_back(k / 16.0);
    weights.assign(radii.size(), 0.0);
  }
  for (int chart = 0; chart < 2; ++chart) {
    for (std::size_t i = 0; i < radii.size(); ++i) {
      const double r = radii[i];
      const double w = weights[i] * 2 * r / ((1 + r * r) * (1 + r * r)) / ntheta;
      for (int k = 0; k < ntheta; ++k) {
        const std::complex<double> t = std::polar(r, 2 * M_PI * k / ntheta);
        out.push_back(chart == 0 ? Node{1.0, t, w} : Node{t, 1.0, w});
        if (r == 0) break;
      }
    }
  }
  return out;
}

struct DenseSection {
  std::vector<std::pair<std::vector<int>, double>> terms;  // exponent of X1 per factor
  std::vector<int> degrees;

  double norm(const std::vector<const Node*>& at) const {
    std::complex<double> v = 0;
    for (const auto& [e, c] : terms) {
      std::complex<double> t = c;
      for (std::size_t i = 0; i < degrees.size(); ++i) {
        t *= std::pow(at[i]->x0, degrees[i] - e[i]) * std::pow(at[i]->x1, e[i]);
      }
      v += t;
    }
    double scale = 1;
    for (std::size_t i = 0; i < degrees.size(); ++i) {
      scale *= std::pow(std::norm(at[i]->x0) + std::norm(at[i]->x1), degrees[i] / 2.0);
    }
    return std::abs(v) / scale;
  }
};

template <class F>
void tensor(const std::vector<Node>& nodes, std::size_t r, F&& f) {
  std::vector<const Node*> at(r);
  auto rec = [&](auto&& self, std::size_t i) -> void {
    if (i == r) {
      f(at);
      return;
    }
    for (const auto& n : nodes) {
      at[i] = &n;
      self(self, i + 1);
    }
  };
  rec(rec, 0);
}

}  // namespace

SupnormReport supnorm_vs_mean(const MultiPoly& s, const std::vector<int>& degrees, MeanKind kind,
                              const IntersectionEngine& engine) {
  const std::size_t r = degrees.size();
  if (r < 1 || r > 2) throw Error(ErrorCode::UnsupportedShape, "sections on (P^1)^r need 1 <= r <= 2");
  if (s.num_vars() != static_cast<int>(r)) throw Error(ErrorCode::VarMismatch, "section in the wrong ring");
  if (s.is_zero()) throw Error(ErrorCode::AllZero, "the zero section");
  const auto dv = s.degree_vector();
  for (std::size_t i = 0; i < r; ++i) {
    if (degrees[i] < 0 || degrees[i] > 6) throw Error(ErrorCode::UnsupportedShape, "degrees up to 6 are supported");
    if (dv[i] > degrees[i]) throw Error(ErrorCode::InvalidArgument, "declared degree below the actual degree");
  }
  SupnormReport rep;
  rep.kind = kind;
  rep.coeff_max = 0;
  DenseSection dense;
  dense.degrees = degrees;
  rep.norm_factor = 0;
  for (const auto& [e, c] : s.terms()) {
    rep.coeff_max = std::max(rep.coeff_max, Integer(abs(c)));
    dense.terms.emplace_back(std::vector<int>(e.begin(), e.end()), c.get_d());
    double k = 1;
    for (std::size_t i = 0; i < r; ++i) k /= monomial_sup(degrees[i] - e[i], e[i]);
    rep.norm_factor = std::max(rep.norm_factor, k);
  }
  double half_degrees = 0;
  for (int x : degrees) half_degrees += x / 2.0;
  rep.bgs_factor = std::exp(half_degrees);
  rep.constant = rep.bgs_factor * rep.norm_factor;

  // integral of log ||s|| = deg(div s . FS^r) - deg(O(d)_FS . FS^r)
  IntersectionProblem prob;
  prob.m = static_cast<int>(r);
  for (std::size_t i = 0; i < r; ++i) prob.classes.push_back(MetrizedBundle::fs_factor(prob.m, static_cast<int>(i)));
  prob.classes.push_back(MetrizedBundle::pullback(SectionClass{{s}, degrees}));
  const RigorousValue div = engine.degree(prob);
  rep.log_mean = div.numeric - half_degrees;
  rep.error_bound = div.error_bound;

  if (s.num_terms() == 1) {
    const auto& [e, c] = *s.terms().begin();
    rep.sup_norm = std::fabs(c.get_d());
    for (std::size_t i = 0; i < r; ++i) rep.sup_norm *= monomial_sup(degrees[i] - e[i], e[i]);
    rep.sup_exact = true;
  } else {
    tensor(sphere_nodes(false), r, [&](const std::vector<const Node*>& at) { rep.sup_norm = std::max(rep.sup_norm, dense.norm(at)); });
  }

  double bound_mean;
  if (kind == MeanKind::Log) {
    rep.mean = std::exp(rep.log_mean);
    bound_mean = std::exp(rep.log_mean + rep.error_bound);
  } else {
    double total = 0;
    tensor(sphere_nodes(true), r, [&](const std::vector<const Node*>& at) {
      double w = 1;
      for (const auto* n : at) w *= n->weight;
      total += w * dense.norm(at);
    });
    rep.mean = total;
    bound_mean = total * (1 + 1e-6);
  }
  rep.holds = rep.coeff_max.get_d() <= rep.constant * bound_mean;
  return rep;
}

}  // namespace arak
