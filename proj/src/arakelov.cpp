#include "arakheight/arakelov.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>

#include "arakheight/parse.hpp"
#include "json.hpp"

namespace arak {

namespace {

using json = nlohmann::json;
using Tuple = std::vector<MultiPoly>;
using Pattern = std::vector<int>;

RigorousValue exact_zero() { return RigorousValue::exact(LogLinear()); }

bool all_ones(const Pattern& a) {
  return std::all_of(a.begin(), a.end(), [](int x) { return x == 1; });
}

template <class T>
std::vector<T> erase_at(std::vector<T> v, std::size_t i) {
  v.erase(v.begin() + static_cast<std::ptrdiff_t>(i));
  return v;
}

// k+1 FS classes on (P^1)^k with exponent pattern a: the class of one factor
// squared against the point class contributes 1/2, everything else vanishes.
Rational fs_only(const Pattern& a) {
  int twos = 0;
  for (int x : a) {
    if (x == 2) {
      ++twos;
    } else if (x != 1) {
      return 0;
    }
  }
  return twos == 1 ? Rational(1, 2) : Rational(0);
}

// FS pattern b (k classes) restricted to the divisor z_l = infinity.
Rational fs_on_infinity(const Pattern& b, std::size_t l) {
  if (b[l] > 0) return 0;
  return fs_only(erase_at(b, l));
}

std::string pattern_str(const Pattern& a) {
  std::string s = "(";
  for (std::size_t i = 0; i < a.size(); ++i) s += (i ? "," : "") + std::to_string(a[i]);
  return s + ")";
}

std::string tuple_str(const Tuple& t) {
  std::string s = "(";
  for (std::size_t i = 0; i < t.size(); ++i) s += (i ? ", " : "") + t[i].to_string();
  return s + ")";
}

void note(TraceNode* parent, std::string label, const RigorousValue& v) {
  if (parent) parent->children.push_back(TraceNode{std::move(label), v, {}});
}

TraceNode* open_node(TraceNode* parent, std::string label) {
  if (!parent) return nullptr;
  parent->children.push_back(TraceNode{std::move(label), {}, {}});
  return &parent->children.back();
}

// ---- section + FS recursion ------------------------------------------------

class Peeler {
 public:
  Peeler(const EngineOptions& opts, const FsIntegrator& integrator) : opts_(opts), integrator_(integrator) {}

  // Degree of [section T (declared degrees), FS pattern b] on (P^1)^k,
  // sum(b) = k. T may be raw: content, gcd and degree drops are split off.
  RigorousValue section(const Tuple& raw, const std::vector<int>& declared, const Pattern& b,
                        const std::vector<int>& labels, TraceNode* parent) {
    const std::size_t k = declared.size();
    Tuple t;
    for (const auto& f : raw) {
      if (f.num_vars() != static_cast<int>(k)) throw Error(ErrorCode::VarMismatch, "section tuple in the wrong ring");
      if (!f.is_zero()) t.push_back(f);
    }
    if (t.empty()) throw Error(ErrorCode::BaseLocusHit, "every section coordinate vanishes on the restricted cycle");

    std::string key = tuple_str(t) + pattern_str(declared) + pattern_str(b) + pattern_str(labels);
    if (auto it = memo_.find(key); it != memo_.end()) {
      note(parent, "reuse " + tuple_str(t) + " pattern " + pattern_str(b), it->second);
      return it->second;
    }
    TraceNode* node = open_node(parent, "section " + tuple_str(t) + " degrees " + pattern_str(declared) +
                                            " fs " + pattern_str(b));

    RigorousValue total = exact_zero();
    if (k == 0) {
      Integer n = 0;
      for (const auto& f : t) n += f.terms().begin()->second * f.terms().begin()->second;
      total = RigorousValue::exact(LogLinear::log_of(n, Rational(1, 2)));
      note(node, "point height (1/2) log " + n.get_str(), total);
    } else {
      Integer content;
      MultiPoly h(static_cast<int>(k));
      Tuple core;
      std::vector<int> core_deg;
      if (t.size() == 1) {
        content = t[0].content();
        core = {t[0].divexact(content)};
        core_deg = t[0].degree_vector();
      } else {
        NormalizeResult nr = normalize(t);
        content = nr.removed_content;
        if (!nr.removed_gcd.is_constant()) h = nr.removed_gcd;
        core = nr.point.coords();
        core_deg = nr.point.multidegree();
      }
      const std::vector<int> hdeg = h.is_zero() ? std::vector<int>(k, 0) : h.degree_vector();
      if (content != 1 && all_ones(b)) {
        const auto v = RigorousValue::exact(LogLinear::log_of(content));
        note(node, "content " + content.get_str(), v);
        total += v;
      }
      Rational drops = 0;
      for (std::size_t l = 0; l < k; ++l) {
        const int drop = declared[l] - core_deg[l] - hdeg[l];
        if (drop < 0) throw Error(ErrorCode::InvalidArgument, "declared degree below the actual degree");
        drops += fs_on_infinity(b, l) * drop;
      }
      if (drops != 0) {
        const auto v = RigorousValue::exact(LogLinear::rational(drops));
        note(node, "degree drop at infinity", v);
        total += v;
      }
      if (!h.is_zero()) total += section({h}, hdeg, b, labels, open_node(node, "gcd " + h.to_string()));
      total += this->core(core, core_deg, b, labels, node);
    }
    if (node) node->value = total;
    memo_.emplace(std::move(key), total);
    return total;
  }

 private:
  // T normalized (coprime with content 1, or a primitive single polynomial)
  // and declared degrees equal to the actual ones.
  RigorousValue core(const Tuple& t, const std::vector<int>& e, const Pattern& b, const std::vector<int>& labels,
                     TraceNode* parent) {
    const std::size_t k = e.size();
    if (std::all_of(e.begin(), e.end(), [](int x) { return x == 0; })) {
      if (!all_ones(b)) return exact_zero();
      Integer n = 0;
      for (const auto& f : t) n += f.terms().begin()->second * f.terms().begin()->second;
      const auto v = RigorousValue::exact(LogLinear::log_of(n, Rational(1, 2)));
      if (n != 1) note(parent, "constant section (1/2) log " + n.get_str(), v);
      return v;
    }
    const std::size_t i = choose(b, labels);
    TraceNode* node = open_node(parent, "peel FS class of z" + std::to_string(labels[i] + 1));
    RigorousValue total = exact_zero();

    const Tuple lead = coefficient_tuple(t, static_cast<int>(i), e[i]);
    const std::vector<int> e_r = erase_at(e, i);
    if (b[i] == 1) {
      total += section(lead, e_r, erase_at(b, i), erase_at(labels, i), open_node(node, "restriction to z" +
                                                                                      std::to_string(labels[i] + 1) +
                                                                                      " = infinity"));
    }
    Rational green = 0;
    for (std::size_t l = 0; l < k; ++l) {
      Pattern c = b;
      c[i] -= 1;
      c[l] += 1;
      if (all_ones(c)) green += Rational(e[l], 2);
    }
    if (green != 0) {
      const auto v = RigorousValue::exact(LogLinear::rational(green));
      note(node, "Green current against curvature masses", v);
      total += v;
    }
    if (all_ones(b)) {
      const RigorousValue full = integral(t, e);
      note(node, "integral of the section weight", full);
      const RigorousValue at_inf = integral(lead, e_r);
      note(node, "minus integral on z" + std::to_string(labels[i] + 1) + " = infinity", at_inf);
      total += full;
      total -= at_inf;
    }
    if (node) node->value = total;
    return total;
  }

  std::size_t choose(const Pattern& b, const std::vector<int>& labels) const {
    auto rank = [&](int label) {
      auto it = std::find(opts_.peel_order.begin(), opts_.peel_order.end(), label);
      return it == opts_.peel_order.end() ? 1000 + label : static_cast<int>(it - opts_.peel_order.begin());
    };
    std::size_t best = b.size();
    for (std::size_t i = 0; i < b.size(); ++i) {
      if (b[i] > 0 && (best == b.size() || rank(labels[i]) < rank(labels[best]))) best = i;
    }
    return best;
  }

  // (1/2) * integral of log sum |f~_k|^2 over (P^1)^k.
  RigorousValue integral(const Tuple& t, const std::vector<int>& e) {
    Integrand g(static_cast<int>(e.size()));
    Tuple nz;
    for (const auto& f : t) {
      if (!f.is_zero()) nz.push_back(f);
    }
    g.add_log_norm_sq(Rational(1, 2), nz, e);
    // low-dimensional integrals are cheap, so most of the budget goes to the top one
    const double tol = e.size() >= 2 ? opts_.tol / 4 : opts_.tol / 64;
    return integrator_.integrate(g, tol).value();
  }

  const EngineOptions& opts_;
  const FsIntegrator& integrator_;
  std::map<std::string, RigorousValue> memo_;
};

// ---- problem preprocessing -------------------------------------------------

MultiPoly substitute_point(const MultiPoly& f, int var, int declared, const Integer& a, const Integer& b) {
  const auto parts = f.coefficients_in(var);
  MultiPoly out(f.num_vars());
  Integer bpow = 1;
  for (int j = 0; j <= declared; ++j) {
    if (j < static_cast<int>(parts.size()) && !parts[static_cast<std::size_t>(j)].is_zero()) {
      Integer apow;
      mpz_pow_ui(apow.get_mpz_t(), a.get_mpz_t(), static_cast<unsigned long>(declared - j));
      out += parts[static_cast<std::size_t>(j)] * Integer(apow * bpow);
    }
    bpow *= b;
  }
  return out.remove_variable(var);
}

IntersectionProblem collapse_points(const IntersectionProblem& prob) {
  IntersectionProblem out = prob;
  if (out.factors.empty()) return out;
  for (int i = out.m - 1; i >= 0; --i) {
    const FactorSpec& f = prob.factors[static_cast<std::size_t>(i)];
    if (f.kind != FactorSpec::Kind::Point) continue;
    const Integer norm = f.a * f.a + f.b * f.b;
    for (auto& cls : out.classes) {
      const Rational q = cls.fs[static_cast<std::size_t>(i)];
      if (q != 0) cls.constant += LogLinear::log_of(norm, q / 2);
      cls.fs = erase_at(cls.fs, static_cast<std::size_t>(i));
      if (cls.section) {
        auto& s = *cls.section;
        const int d = s.degrees[static_cast<std::size_t>(i)];
        bool any = false;
        for (auto& c : s.tuple) {
          c = substitute_point(c, i, d, f.a, f.b);
          any = any || !c.is_zero();
        }
        if (!any) {
          throw Error(ErrorCode::BaseLocusHit, "section vanishes identically on the fibre over (" + f.a.get_str() +
                                                   " : " + f.b.get_str() + ")");
        }
        s.degrees = erase_at(s.degrees, static_cast<std::size_t>(i));
      }
    }
    out.factors.erase(out.factors.begin() + i);
    --out.m;
  }
  out.factors.clear();
  return out;
}

std::vector<Rational> geometric_row(const MetrizedBundle& b) {
  std::vector<Rational> row = b.fs;
  if (b.section) {
    for (std::size_t l = 0; l < row.size(); ++l) row[l] += b.section->degrees[l];
  }
  return row;
}

struct Component {
  enum Kind { Fs, Const, Section } kind;
  int var = -1;
  Rational coef = 1;
  LogLinear constant;
};

}  // namespace

// ---- bundles ---------------------------------------------------------------

SectionClass SectionClass::of(const ProjPoint& p) { return SectionClass{p.coords(), p.multidegree()}; }

SectionClass SectionClass::raw(std::vector<MultiPoly> tuple) {
  if (tuple.empty()) throw Error(ErrorCode::AllZero, "empty section tuple");
  const int n = tuple.front().num_vars();
  std::vector<int> deg(static_cast<std::size_t>(n), 0);
  for (int l = 0; l < n; ++l) {
    const Degree d = max_partial_degree(tuple, l);
    if (d.is_neg_inf()) throw Error(ErrorCode::AllZero, "all section coordinates are zero");
    deg[static_cast<std::size_t>(l)] = d.value();
  }
  return SectionClass{std::move(tuple), std::move(deg)};
}

MetrizedBundle MetrizedBundle::zero(int m) {
  MetrizedBundle b;
  b.fs.assign(static_cast<std::size_t>(m), Rational(0));
  return b;
}

MetrizedBundle MetrizedBundle::fs_factor(int m, int i, const Rational& q) {
  if (i < 0 || i >= m) throw Error(ErrorCode::IndexOutOfRange, "FS factor index out of range");
  MetrizedBundle b = zero(m);
  b.fs[static_cast<std::size_t>(i)] = q;
  return b;
}

MetrizedBundle MetrizedBundle::fs_product(std::vector<Rational> q) {
  MetrizedBundle b;
  b.fs = std::move(q);
  return b;
}

MetrizedBundle MetrizedBundle::twist(int m, const LogLinear& c) {
  MetrizedBundle b = zero(m);
  b.constant = c;
  return b;
}

MetrizedBundle MetrizedBundle::pullback(const ProjPoint& p) { return pullback(SectionClass::of(p)); }

MetrizedBundle MetrizedBundle::pullback(const SectionClass& s) {
  MetrizedBundle b = zero(s.num_vars());
  b.section = s;
  return b;
}

bool MetrizedBundle::is_nef() const {
  return std::all_of(fs.begin(), fs.end(), [](const Rational& q) { return q >= 0; }) && constant.evaluate() >= 0;
}

bool MetrizedBundle::has_positive_part() const {
  return section.has_value() || std::any_of(fs.begin(), fs.end(), [](const Rational& q) { return q > 0; });
}

MetrizedBundle& MetrizedBundle::operator+=(const MetrizedBundle& other) {
  if (other.fs.size() != fs.size()) throw Error(ErrorCode::VarMismatch, "tensoring bundles on different bases");
  for (std::size_t l = 0; l < fs.size(); ++l) fs[l] += other.fs[l];
  constant += other.constant;
  if (other.section) {
    if (section) throw Error(ErrorCode::UnsupportedShape, "a bundle carries at most one section pullback");
    section = other.section;
  }
  return *this;
}

MetrizedBundle& MetrizedBundle::operator*=(const Rational& t) {
  if (section && t != 1) throw Error(ErrorCode::UnsupportedShape, "section pullbacks cannot be rescaled");
  for (auto& q : fs) q *= t;
  constant *= t;
  return *this;
}

std::string MetrizedBundle::to_string() const {
  std::ostringstream os;
  bool first = true;
  for (std::size_t l = 0; l < fs.size(); ++l) {
    if (fs[l] == 0) continue;
    os << (first ? "" : " + ") << fs[l].get_str() << "*FS" << l + 1;
    first = false;
  }
  if (!constant.is_zero()) {
    os << (first ? "" : " + ") << "const(" << constant.to_string() << ")";
    first = false;
  }
  if (section) {
    os << (first ? "" : " + ") << "pullback" << tuple_str(section->tuple);
    first = false;
  }
  if (first) os << "0";
  return os.str();
}

FactorSpec FactorSpec::point(const Integer& a, const Integer& b) {
  if (a == 0 && b == 0) throw Error(ErrorCode::AllZero, "(0 : 0) is not a point");
  Integer g;
  mpz_gcd(g.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  FactorSpec f;
  f.kind = Kind::Point;
  f.a = a / g;
  f.b = b / g;
  return f;
}

int IntersectionProblem::free_factors() const {
  if (factors.empty()) return m;
  return static_cast<int>(std::count_if(factors.begin(), factors.end(),
                                        [](const FactorSpec& f) { return f.kind == FactorSpec::Kind::Free; }));
}

int IntersectionProblem::arithmetic_dim() const { return free_factors() + (fiber ? 0 : 1); }

void IntersectionProblem::validate() const {
  if (m < 0) throw Error(ErrorCode::InvalidArgument, "negative base dimension");
  if (!factors.empty() && static_cast<int>(factors.size()) != m) {
    throw Error(ErrorCode::InvalidArgument, "factor list length differs from the base dimension");
  }
  if (static_cast<int>(classes.size()) != arithmetic_dim()) {
    throw Error(ErrorCode::InvalidArgument, "expected " + std::to_string(arithmetic_dim()) + " classes, got " +
                                                std::to_string(classes.size()));
  }
  int sections = 0;
  for (const auto& c : classes) {
    if (c.num_vars() != m) throw Error(ErrorCode::VarMismatch, "class lives on a different base");
    if (c.section) {
      ++sections;
      if (c.section->num_vars() != m) throw Error(ErrorCode::VarMismatch, "section on a different base");
      for (const auto& f : c.section->tuple) {
        if (f.num_vars() != m) throw Error(ErrorCode::VarMismatch, "section polynomial in the wrong ring");
      }
    }
  }
  if (sections > 1) throw Error(ErrorCode::UnsupportedShape, "more than one section pullback class");
  if (fiber && *fiber < 2) throw Error(ErrorCode::InvalidArgument, "fibre prime must be at least 2");
}

Rational mixed_degree(const std::vector<std::vector<Rational>>& rows) {
  const std::size_t n = rows.size();
  for (const auto& r : rows) {
    if (r.size() != n) throw Error(ErrorCode::InvalidArgument, "mixed degree needs a square matrix");
  }
  if (n == 0) return 1;
  // Ryser's formula
  Rational total = 0;
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
    Rational prod = 1;
    for (std::size_t i = 0; i < n && prod != 0; ++i) {
      Rational s = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if ((mask >> j) & 1) s += rows[i][j];
      }
      prod *= s;
    }
    const int bits = std::popcount(mask);
    if ((n - static_cast<std::size_t>(bits)) % 2 == 0) {
      total += prod;
    } else {
      total -= prod;
    }
  }
  return total;
}

// ---- engine ----------------------------------------------------------------

IntersectionEngine::IntersectionEngine(EngineOptions opts, FsIntegrator integrator)
    : opts_(std::move(opts)), integrator_(std::move(integrator)) {
  if (!integrator_.cache()) {
    integrator_ = FsIntegrator(integrator_.options(), std::make_shared<QuadCache>(QuadCache::default_dir()));
  }
}

RigorousValue IntersectionEngine::degree(const IntersectionProblem& input, TraceNode* trace) const {
  input.validate();
  const IntersectionProblem prob = collapse_points(input);
  const int m = prob.m;
  TraceNode* root = open_node(trace, "degree on (P^1)^" + std::to_string(m) + (prob.fiber ? " mod " + prob.fiber->get_str() : ""));

  if (prob.fiber) {
    std::vector<std::vector<Rational>> rows;
    for (const auto& c : prob.classes) rows.push_back(geometric_row(c));
    const Rational deg = mixed_degree(rows);
    const auto v = RigorousValue::exact(LogLinear::log_of(*prob.fiber, deg));
    if (root) root->value = v;
    return v;
  }

  // Expand every slot into pure classes and group identical products.
  std::vector<std::vector<Component>> slots;
  const SectionClass* section = nullptr;
  for (const auto& c : prob.classes) {
    std::vector<Component> comps;
    for (int l = 0; l < m; ++l) {
      if (c.fs[static_cast<std::size_t>(l)] != 0) comps.push_back({Component::Fs, l, c.fs[static_cast<std::size_t>(l)], {}});
    }
    if (!c.constant.is_zero()) comps.push_back({Component::Const, -1, 1, c.constant});
    if (c.section) {
      comps.push_back({Component::Section, -1, 1, {}});
      section = &*c.section;
    }
    if (comps.empty()) {
      if (root) root->value = exact_zero();
      return exact_zero();
    }
    slots.push_back(std::move(comps));
  }

  std::map<Pattern, Rational> all_fs, with_section;
  std::map<Pattern, LogLinear> const_fs, const_section;
  Pattern a(static_cast<std::size_t>(m), 0);
  std::function<void(std::size_t, Rational, const LogLinear*, bool)> walk =
      [&](std::size_t s, Rational coef, const LogLinear* cst, bool sec) {
        if (s == slots.size()) {
          if (cst && sec) {
            const_section[a] += *cst * coef;
          } else if (cst) {
            const_fs[a] += *cst * coef;
          } else if (sec) {
            with_section[a] += coef;
          } else {
            all_fs[a] += coef;
          }
          return;
        }
        for (const auto& comp : slots[s]) {
          switch (comp.kind) {
            case Component::Fs:
              ++a[static_cast<std::size_t>(comp.var)];
              walk(s + 1, coef * comp.coef, cst, sec);
              --a[static_cast<std::size_t>(comp.var)];
              break;
            case Component::Const:
              if (!cst) walk(s + 1, coef, &comp.constant, sec);
              break;
            case Component::Section:
              walk(s + 1, coef, cst, true);
              break;
          }
        }
      };
  walk(0, Rational(1), nullptr, false);

  RigorousValue total = exact_zero();
  LogLinear exact;
  for (const auto& [p, c] : all_fs) {
    const Rational v = fs_only(p) * c;
    if (v != 0) note(root, "FS classes " + pattern_str(p), RigorousValue::exact(LogLinear::rational(v)));
    exact += LogLinear::rational(v);
  }
  for (const auto& [p, c] : const_fs) {
    if (all_ones(p) && !c.is_zero()) {
      note(root, "constant twist against FS classes " + pattern_str(p), RigorousValue::exact(c));
      exact += c;
    }
  }
  for (const auto& [p, c] : const_section) {
    Rational mass = 0;
    for (int l = 0; l < m; ++l) {
      Pattern q = p;
      ++q[static_cast<std::size_t>(l)];
      if (all_ones(q)) mass += section->degrees[static_cast<std::size_t>(l)];
    }
    if (mass != 0 && !c.is_zero()) {
      note(root, "constant twist against section and FS classes " + pattern_str(p), RigorousValue::exact(c * mass));
      exact += c * mass;
    }
  }
  total += RigorousValue::exact(exact);

  Peeler peeler(opts_, integrator_);
  std::vector<int> labels(static_cast<std::size_t>(m));
  std::iota(labels.begin(), labels.end(), 0);
  for (const auto& [p, c] : with_section) {
    if (c == 0) continue;
    TraceNode* node = open_node(root, "section against FS classes " + pattern_str(p) + " times " + c.get_str());
    RigorousValue v = peeler.section(section->tuple, section->degrees, p, labels, node);
    v *= c;
    if (node) node->value = v;
    total += v;
  }
  if (root) root->value = total;
  return total;
}

RestrictionResult IntersectionEngine::restrict_to_infinity(const IntersectionProblem& prob, int factor,
                                                           int peeled) const {
  prob.validate();
  if (prob.fiber || prob.free_factors() != prob.m) {
    throw Error(ErrorCode::InvalidArgument, "restriction expects a horizontal problem on free factors");
  }
  if (factor < 0 || factor >= prob.m) throw Error(ErrorCode::IndexOutOfRange, "restriction factor out of range");
  const std::size_t i = static_cast<std::size_t>(factor);
  if (peeled < 0) {
    for (std::size_t c = 0; c < prob.classes.size(); ++c) {
      if (prob.classes[c].fs[i] > 0 && !prob.classes[c].section) {
        peeled = static_cast<int>(c);
        break;
      }
    }
  }
  if (peeled < 0 || peeled >= static_cast<int>(prob.classes.size()) ||
      prob.classes[static_cast<std::size_t>(peeled)].fs[i] <= 0) {
    throw Error(ErrorCode::InvalidArgument, "no class with positive FS exponent at the restriction factor");
  }

  RestrictionResult out;
  IntersectionProblem& res = out.problem;
  res.m = prob.m - 1;
  int section_slot = -1;
  SectionClass lead_section;
  for (std::size_t c = 0; c < prob.classes.size(); ++c) {
    if (static_cast<int>(c) == peeled) continue;
    MetrizedBundle b = prob.classes[c];
    b.fs = erase_at(b.fs, i);
    if (b.section) {
      const auto& s = *b.section;
      lead_section.tuple = coefficient_tuple(s.tuple, factor, s.degrees[i]);
      lead_section.degrees = erase_at(s.degrees, i);
      section_slot = static_cast<int>(res.classes.size());
    }
    res.classes.push_back(std::move(b));
  }
  out.correction = exact_zero();
  if (section_slot < 0) return out;

  // Split the restricted section into its normalized part and the ledger.
  std::optional<NormalizeResult> nr;
  try {
    nr = normalize(lead_section.tuple);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::AllZero) throw;
    throw Error(ErrorCode::BaseLocusHit, "section vanishes identically at infinity");
  }
  CorrectionLedger& ledger = out.ledger;
  ledger.content = nr->removed_content;
  ledger.gcd = nr->removed_gcd;
  const SectionClass normalized = SectionClass::of(nr->point);
  const std::vector<int> gdeg = ledger.gcd.degree_vector();
  for (std::size_t l = 0; l < static_cast<std::size_t>(res.m); ++l) {
    ledger.degree_drop.push_back(lead_section.degrees[l] - normalized.degrees[l] - gdeg[l]);
  }

  const MetrizedBundle original = res.classes[static_cast<std::size_t>(section_slot)];
  auto with_slot = [&](MetrizedBundle b) {
    IntersectionProblem p = res;
    p.classes[static_cast<std::size_t>(section_slot)] = std::move(b);
    return p;
  };
  {
    MetrizedBundle b = original;
    b.section = normalized;
    res.classes[static_cast<std::size_t>(section_slot)] = b;
  }
  RigorousValue corr = exact_zero();
  if (ledger.content != 1) {
    corr += degree(with_slot(MetrizedBundle::twist(res.m, LogLinear::log_of(ledger.content))));
  }
  for (int l = 0; l < res.m; ++l) {
    const int drop = ledger.degree_drop[static_cast<std::size_t>(l)];
    if (drop == 0) continue;
    IntersectionProblem p = res;
    p.classes.erase(p.classes.begin() + section_slot);
    p.factors.assign(static_cast<std::size_t>(res.m), FactorSpec::free());
    p.factors[static_cast<std::size_t>(l)] = FactorSpec::point(0, 1);
    for (auto& b : p.classes) b.section.reset();
    RigorousValue v = degree(p);
    v *= Rational(drop);
    corr += v;
  }
  if (!ledger.gcd.is_constant()) {
    corr += degree(with_slot(MetrizedBundle::pullback(SectionClass{{ledger.gcd}, gdeg})));
  }
  out.correction = corr;
  return out;
}

RigorousValue intersection_degree(const IntersectionProblem& prob, double tol) {
  EngineOptions opts;
  opts.tol = tol;
  return IntersectionEngine(opts).degree(prob);
}

// ---- JSON ------------------------------------------------------------------

namespace {

json loglinear_json(const LogLinear& v) {
  json j;
  j["rational"] = v.rational_part().get_str();
  json logs = json::object();
  for (const auto& [p, q] : v.log_terms()) logs[p.get_str()] = q.get_str();
  j["logs"] = logs;
  return j;
}

LogLinear loglinear_from(const json& j) {
  LogLinear v = LogLinear::rational(Rational(j.at("rational").get<std::string>()));
  if (j.contains("logs")) {
    for (const auto& [base, q] : j.at("logs").items()) {
      v += LogLinear::log_of(Integer(base), Rational(q.get<std::string>()));
    }
  }
  return v;
}

json value_json(const RigorousValue& v) {
  json j;
  j["numeric"] = v.numeric;
  j["error_bound"] = v.error_bound;
  j["symbolic"] = v.symbolic ? json(v.symbolic->to_string()) : json(nullptr);
  return j;
}

json trace_json(const TraceNode& n) {
  json j;
  j["label"] = n.label;
  j["value"] = value_json(n.value);
  if (!n.children.empty()) {
    json c = json::array();
    for (const auto& ch : n.children) c.push_back(trace_json(ch));
    j["children"] = c;
  }
  return j;
}

}  // namespace

std::string problem_to_json(const IntersectionProblem& prob) {
  json j;
  j["m"] = prob.m;
  json classes = json::array();
  for (const auto& c : prob.classes) {
    json b;
    json fs = json::array();
    for (const auto& q : c.fs) fs.push_back(q.get_str());
    b["fs"] = fs;
    b["constant"] = loglinear_json(c.constant);
    if (c.section) {
      json t = json::array();
      for (const auto& f : c.section->tuple) t.push_back(f.to_string());
      b["section"] = {{"tuple", t}, {"degrees", c.section->degrees}};
    }
    classes.push_back(b);
  }
  j["classes"] = classes;
  json factors = json::array();
  for (const auto& f : prob.factors) {
    if (f.kind == FactorSpec::Kind::Free) {
      factors.push_back({{"kind", "free"}});
    } else {
      factors.push_back({{"kind", "point"}, {"a", f.a.get_str()}, {"b", f.b.get_str()}});
    }
  }
  j["factors"] = factors;
  j["fiber"] = prob.fiber ? json(prob.fiber->get_str()) : json(nullptr);
  return j.dump();
}

IntersectionProblem problem_from_json(const std::string& text) {
  IntersectionProblem prob;
  try {
    const json j = json::parse(text);
    prob.m = j.at("m").get<int>();
    for (const auto& b : j.at("classes")) {
      MetrizedBundle mb;
      for (const auto& q : b.at("fs")) mb.fs.emplace_back(q.get<std::string>());
      for (auto& q : mb.fs) q.canonicalize();
      if (b.contains("constant")) mb.constant = loglinear_from(b.at("constant"));
      if (b.contains("section") && !b.at("section").is_null()) {
        SectionClass s;
        for (const auto& f : b.at("section").at("tuple")) s.tuple.push_back(parse_poly(f.get<std::string>(), prob.m));
        s.degrees = b.at("section").at("degrees").get<std::vector<int>>();
        mb.section = std::move(s);
      }
      prob.classes.push_back(std::move(mb));
    }
    if (j.contains("factors")) {
      for (const auto& f : j.at("factors")) {
        if (f.at("kind").get<std::string>() == "free") {
          prob.factors.push_back(FactorSpec::free());
        } else {
          prob.factors.push_back(
              FactorSpec::point(Integer(f.at("a").get<std::string>()), Integer(f.at("b").get<std::string>())));
        }
      }
    }
    if (j.contains("fiber") && !j.at("fiber").is_null()) prob.fiber = Integer(j.at("fiber").get<std::string>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed problem JSON: ") + e.what());
  }
  prob.validate();
  return prob;
}

std::string trace_to_json(const TraceNode& node, int indent) { return trace_json(node).dump(indent); }

}  // namespace arak
