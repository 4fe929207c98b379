#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "arakheight/arakelov.hpp"
#include "arakheight/parse.hpp"
#include "support.hpp"

using namespace arak;

namespace {

MetrizedBundle fs(int m, int i, int q = 1) { return MetrizedBundle::fs_factor(m, i, q); }

std::vector<MultiPoly> parse_tuple_list(const std::vector<std::string>& coords, int m) {
  std::vector<MultiPoly> out;
  for (const auto& c : coords) out.push_back(parse_poly(c, m));
  return out;
}

MetrizedBundle section(const std::vector<std::string>& coords, int m) {
  return MetrizedBundle::pullback(normalize(parse_tuple_list(coords, m)).point);
}

IntersectionProblem problem(int m, std::vector<MetrizedBundle> classes) {
  IntersectionProblem p;
  p.m = m;
  p.classes = std::move(classes);
  return p;
}

bool exact_equals(const RigorousValue& v, const LogLinear& expected) {
  return v.symbolic && *v.symbolic == expected && v.error_bound == 0.0;
}

// Brute-force permanent over all permutations.
Rational permanent(std::vector<std::vector<Rational>> a) {
  const std::size_t n = a.size();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rational total = 0;
  do {
    Rational p = 1;
    for (std::size_t i = 0; i < n; ++i) p *= a[i][perm[i]];
    total += p;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return total;
}

// Closed form for one section class against FS classes: the section metric
// differs from the FS metric of the same multidegree by the function
// psi = (1/2) log sum |f~_k|^2, so
//   deg = (1/4) sum_l perm(rows with column l doubled) + perm(FS rows) * int psi.
struct Oracle {
  double value;
  double error;
};

Oracle closed_form(const std::vector<MultiPoly>& t, const std::vector<int>& e,
                   const std::vector<std::vector<Rational>>& fs_rows) {
  const std::size_t m = e.size();
  std::vector<std::vector<Rational>> rows = fs_rows;
  rows.emplace_back(e.begin(), e.end());
  Rational mass = 0;
  for (std::size_t l = 0; l < m; ++l) {
    std::vector<std::vector<Rational>> doubled;
    for (const auto& r : rows) {
      auto d = r;
      d.push_back(r[l]);
      doubled.push_back(d);
    }
    mass += permanent(doubled);
  }
  mass /= 4;
  const Rational q = permanent(fs_rows);
  QuadOptions o;
  o.tol = 1e-6;
  auto psi = fs_integrate_function(
      static_cast<int>(m),
      [&](const std::vector<std::complex<double>>& z) {
        double s = 0;
        for (const auto& f : t) s += std::norm(eval_complex(f, z).value);
        double v = std::log(s);
        for (std::size_t l = 0; l < m; ++l) v -= e[l] * std::log1p(std::norm(z[l]));
        return v / 2;
      },
      o);
  return {mpq_get_d(mass.get_mpq_t()) + mpq_get_d(q.get_mpq_t()) * psi.estimate,
          std::fabs(mpq_get_d(q.get_mpq_t())) * psi.error_bound};
}

MultiPoly swap_vars(const MultiPoly& f, int a, int b) {
  MultiPoly out(f.num_vars());
  for (const auto& [ex, c] : f.terms()) {
    Exponent e = ex;
    std::swap(e[static_cast<std::size_t>(a)], e[static_cast<std::size_t>(b)]);
    out.add_term(e, c);
  }
  return out;
}

}  // namespace

TEST_CASE("FS self-intersection on P^1 is 1/2") {
  auto v = intersection_degree(problem(1, {fs(1, 0), fs(1, 0)}));
  CHECK(exact_equals(v, LogLinear::rational(Rational(1, 2))));
  CHECK(std::fabs(v.numeric - 0.5) < 1e-12);
}

TEST_CASE("constant twist against FS is -log lambda") {
  for (int lambda : {1, 3, 10}) {
    const LogLinear c = LogLinear::log_of(Integer(lambda), -1);
    auto v = intersection_degree(problem(1, {MetrizedBundle::twist(1, c), fs(1, 0)}));
    CHECK(exact_equals(v, c));
    CHECK(std::fabs(v.numeric + std::log(lambda)) < 1e-12);
  }
}

TEST_CASE("section (1:z2) against FS1 squared is 1/2") {
  auto v = intersection_degree(problem(2, {section({"1", "z2"}, 2), fs(2, 0), fs(2, 0)}));
  CHECK(exact_equals(v, LogLinear::rational(Rational(1, 2))));
}

TEST_CASE("two squared FS factors vanish exactly") {
  auto v = intersection_degree(
      problem(4, {section({"z1 + 2*z3", "z2*z4 - 1"}, 4), fs(4, 0), fs(4, 0), fs(4, 1), fs(4, 1)}));
  CHECK(exact_equals(v, LogLinear()));
}

TEST_CASE("diagonal: graph of (1:z) meets FS like FS itself") {
  auto diag = intersection_degree(problem(1, {section({"1", "z1"}, 1), fs(1, 0)}));
  auto self = intersection_degree(problem(1, {fs(1, 0), fs(1, 0)}));
  CHECK(std::fabs(diag.numeric - self.numeric) <= diag.error_bound + 1e-12);
  CHECK(std::fabs(diag.numeric - 0.5) < 1e-9);
}

TEST_CASE("mixed degree") {
  CHECK(mixed_degree({{1, 0}, {0, 1}}) == 1);
  CHECK(mixed_degree({{1, 0}, {1, 0}}) == 0);
  CHECK(mixed_degree({{1, 1, 0}, {0, 1, 1}, {1, 0, 1}}) == 2);
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> entry(-3, 3);
  for (int n = 1; n <= 5; ++n) {
    std::vector<std::vector<Rational>> a(static_cast<std::size_t>(n), std::vector<Rational>(static_cast<std::size_t>(n)));
    for (auto& r : a) {
      for (auto& x : r) x = Rational(entry(rng), 2);
    }
    CHECK(mixed_degree(a) == permanent(a));
  }
}

TEST_CASE("restriction to infinity") {
  IntersectionEngine engine;
  SUBCASE("(1:z1) restricts to (0:1) with no corrections") {
    auto r = engine.restrict_to_infinity(problem(1, {section({"1", "z1"}, 1), fs(1, 0)}), 0);
    REQUIRE(r.problem.classes.size() == 1);
    REQUIRE(r.problem.classes[0].section);
    const auto& t = r.problem.classes[0].section->tuple;
    CHECK(t[0].is_zero());
    CHECK(t[1] == MultiPoly::constant(0, 1));
    CHECK(r.ledger.trivial());
    CHECK(r.correction.is_exact_zero());
  }
  SUBCASE("(2z1+1 : 4z1) sheds content 2") {
    auto r = engine.restrict_to_infinity(problem(1, {section({"2*z1 + 1", "4*z1"}, 1), fs(1, 0)}), 0);
    const auto& t = r.problem.classes[0].section->tuple;
    CHECK(t[0] == MultiPoly::constant(0, 1));
    CHECK(t[1] == MultiPoly::constant(0, 2));
    CHECK(r.ledger.content == 2);
    CHECK(exact_equals(r.correction, LogLinear::log_of(Integer(2))));
  }
  SUBCASE("(1 : z1 z2) sheds the gcd z2") {
    auto r = engine.restrict_to_infinity(problem(2, {section({"1", "z1*z2"}, 2), fs(2, 0), fs(2, 1)}), 0);
    const auto& t = r.problem.classes[0].section->tuple;
    CHECK(t[0].is_zero());
    CHECK(t[1] == MultiPoly::constant(1, 1));
    CHECK(r.ledger.gcd.to_string() == "z1");
    CHECK(std::fabs(r.correction.numeric) <= r.correction.error_bound + 1e-9);
  }
}

TEST_CASE("restriction plus ledger matches the collapsed problem") {
  std::mt19937_64 rng(11);
  IntersectionEngine engine;
  for (int trial = 0; trial < 15; ++trial) {
    const int m = 1 + trial % 2;
    auto tuple = testing::random_tuple(rng, m, 1, 2, 4, 2);
    MetrizedBundle sec;
    try {
      sec = MetrizedBundle::pullback(normalize(tuple).point);
    } catch (const Error&) {
      continue;
    }
    std::vector<MetrizedBundle> classes{sec};
    for (int l = 0; l < m; ++l) classes.push_back(fs(m, l));
    const IntersectionProblem p = problem(m, classes);
    RestrictionResult r;
    try {
      r = engine.restrict_to_infinity(p, 0, 1);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::BaseLocusHit);
      continue;
    }
    const RigorousValue via_ledger = engine.degree(r.problem) + r.correction;
    IntersectionProblem collapsed = p;
    collapsed.classes.erase(collapsed.classes.begin() + 1);
    collapsed.factors.assign(static_cast<std::size_t>(m), FactorSpec::free());
    collapsed.factors[0] = FactorSpec::point(0, 1);
    const RigorousValue direct = engine.degree(collapsed);
    CHECK(std::fabs(via_ledger.numeric - direct.numeric) <= via_ledger.error_bound + direct.error_bound + 1e-9);
  }
}

TEST_CASE("closed-form oracle on random problems") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> q(0, 2);
  int checked = 0;
  for (int trial = 0; trial < 16; ++trial) {
    const int m = 1 + trial % 2;
    ProjPoint pt = testing::random_point(rng, m, 1, m == 1 ? 3 : 2, 5, 3);
    if (pt.is_constant() && trial % 3 != 0) continue;
    std::vector<std::vector<Rational>> rows;
    std::vector<MetrizedBundle> classes{MetrizedBundle::pullback(pt)};
    for (int c = 0; c < m; ++c) {
      std::vector<Rational> row(static_cast<std::size_t>(m));
      for (auto& x : row) x = q(rng);
      rows.push_back(row);
      classes.push_back(MetrizedBundle::fs_product(row));
    }
    auto v = IntersectionEngine(EngineOptions{.tol = 1e-5}).degree(problem(m, classes));
    auto oracle = closed_form(pt.coords(), pt.multidegree(), rows);
    INFO("point ", pt.to_string());
    CHECK(std::fabs(v.numeric - oracle.value) <= v.error_bound + oracle.error + 1e-7);
    ++checked;
  }
  CHECK(checked >= 8);
}

TEST_CASE("multilinearity") {
  const auto sec = section({"z1^2 - 3", "2*z1*z2 + 1"}, 2);
  IntersectionEngine engine(EngineOptions{.tol = 1e-5});
  auto two = engine.degree(problem(2, {sec, fs(2, 0, 2), fs(2, 1)}));
  auto one = engine.degree(problem(2, {sec, fs(2, 0), fs(2, 1)}));
  CHECK(std::fabs(two.numeric - 2 * one.numeric) <= two.error_bound + 2 * one.error_bound + 2e-5);

  const MetrizedBundle sum = fs(2, 0) + fs(2, 1) + MetrizedBundle::twist(2, LogLinear::log_of(Integer(3)));
  auto whole = engine.degree(problem(2, {sec, sum, fs(2, 1)}));
  auto parts = engine.degree(problem(2, {sec, fs(2, 0), fs(2, 1)})) + engine.degree(problem(2, {sec, fs(2, 1), fs(2, 1)})) +
               engine.degree(problem(2, {sec, MetrizedBundle::twist(2, LogLinear::log_of(Integer(3))), fs(2, 1)}));
  CHECK(std::fabs(whole.numeric - parts.numeric) <= whole.error_bound + parts.error_bound + 2e-5);
}

TEST_CASE("symmetry under class order and peeling order") {
  const auto sec = section({"z1 + z2 + 1", "z1*z2 - 2"}, 2);
  const auto a = fs(2, 0) + MetrizedBundle::twist(2, LogLinear::log_of(Integer(2), Rational(1, 2)));
  const auto b = fs(2, 1) + fs(2, 0, 2);
  std::vector<MetrizedBundle> classes{sec, a, b};
  std::vector<int> idx{0, 1, 2};
  const auto ref = IntersectionEngine(EngineOptions{.tol = 1e-5}).degree(problem(2, classes));
  do {
    std::vector<MetrizedBundle> perm;
    for (int i : idx) perm.push_back(classes[static_cast<std::size_t>(i)]);
    auto v = IntersectionEngine(EngineOptions{.tol = 1e-5}).degree(problem(2, perm));
    CHECK(std::fabs(v.numeric - ref.numeric) <= 2e-5);
  } while (std::next_permutation(idx.begin(), idx.end()));
  auto swapped = IntersectionEngine(EngineOptions{.tol = 1e-5, .peel_order = {1, 0}}).degree(problem(2, classes));
  CHECK(std::fabs(swapped.numeric - ref.numeric) <= swapped.error_bound + ref.error_bound + 2e-5);
}

TEST_CASE("factor relabeling") {
  std::mt19937_64 rng(17);
  IntersectionEngine engine(EngineOptions{.tol = 1e-5});
  for (int trial = 0; trial < 4; ++trial) {
    auto t = testing::random_tuple(rng, 2, 1, 2, 4, 3);
    ProjPoint p = normalize(t).point;
    std::vector<MultiPoly> s;
    for (const auto& f : t) s.push_back(swap_vars(f, 0, 1));
    ProjPoint ps = normalize(s).point;
    auto v = engine.degree(problem(2, {MetrizedBundle::pullback(p), fs(2, 0), fs(2, 1, 2)}));
    auto w = engine.degree(problem(2, {MetrizedBundle::pullback(ps), fs(2, 1), fs(2, 0, 2)}));
    CHECK(std::fabs(v.numeric - w.numeric) <= v.error_bound + w.error_bound + 1e-8);
  }
}

TEST_CASE("nef classes give nonnegative degrees") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> q(0, 2);
  for (int trial = 0; trial < 10; ++trial) {
    const int m = 1 + trial % 2;
    ProjPoint pt = testing::random_point(rng, m, 1 + trial % 2, 2, 6, 3);
    std::vector<MetrizedBundle> classes{MetrizedBundle::pullback(pt)};
    for (int c = 0; c < m; ++c) {
      std::vector<Rational> row(static_cast<std::size_t>(m));
      for (auto& x : row) x = q(rng);
      MetrizedBundle b = MetrizedBundle::fs_product(row);
      b.constant = LogLinear::log_of(Integer(1 + q(rng)));
      classes.push_back(b);
    }
    for (const auto& c : classes) REQUIRE(c.is_nef());
    auto v = IntersectionEngine(EngineOptions{.tol = 1e-5}).degree(problem(m, classes));
    CHECK(v.numeric >= -v.error_bound);
  }
}

TEST_CASE("patterns with two squares vanish exactly") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 3 + trial % 2;
    std::vector<int> a(static_cast<std::size_t>(m), 0);
    std::vector<int> idx(static_cast<std::size_t>(m));
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    a[static_cast<std::size_t>(idx[0])] = 2;
    a[static_cast<std::size_t>(idx[1])] = 2;
    const bool with_section = (std::accumulate(a.begin(), a.end(), 0) == m);
    if (!with_section && m == 3) a[static_cast<std::size_t>(idx[2])] = 0;
    std::vector<MetrizedBundle> classes;
    if (with_section) {
      classes.push_back(MetrizedBundle::pullback(testing::random_point(rng, m, 1, 2, 5, 3)));
    } else {
      // fill up to m+1 classes with FS copies
      int need = m + 1 - std::accumulate(a.begin(), a.end(), 0);
      for (int k = 2; need > 0; ++k) {
        a[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])] += 1;
        --need;
      }
    }
    for (int l = 0; l < m; ++l) {
      for (int c = 0; c < a[static_cast<std::size_t>(l)]; ++c) classes.push_back(fs(m, l));
    }
    auto v = intersection_degree(problem(m, classes));
    CHECK(exact_equals(v, LogLinear()));
  }
}

TEST_CASE("fibres and collapsed factors") {
  IntersectionProblem p = problem(2, {fs(2, 0), fs(2, 1)});
  p.fiber = Integer(3);
  CHECK(exact_equals(intersection_degree(p), LogLinear::log_of(Integer(3))));

  IntersectionProblem q = problem(1, {fs(1, 0)});
  q.factors = {FactorSpec::point(2, 4)};
  CHECK(exact_equals(intersection_degree(q), LogLinear::log_of(Integer(5), Rational(1, 2))));

  // collapsing the section's factor gives the height of the specialized point
  IntersectionProblem s = problem(1, {section({"z1 + 1", "3*z1"}, 1)});
  s.factors = {FactorSpec::point(1, 2)};
  CHECK(exact_equals(intersection_degree(s), LogLinear::log_of(Integer(45), Rational(1, 2))));
}

TEST_CASE("errors") {
  IntersectionProblem p = problem(1, {section({"z1", "z1^2"}, 1)});
  p.classes[0].section = SectionClass::raw(parse_tuple_list({"z1", "z1^2"}, 1));
  p.factors = {FactorSpec::point(1, 0)};
  try {
    intersection_degree(p);
    FAIL("expected BaseLocusHit");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BaseLocusHit);
  }
  IntersectionProblem two = problem(1, {section({"1", "z1"}, 1), section({"1", "z1 + 1"}, 1)});
  try {
    intersection_degree(two);
    FAIL("expected UnsupportedShape");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnsupportedShape);
  }
  CHECK_THROWS_AS(intersection_degree(problem(1, {fs(1, 0)})), Error);
}

TEST_CASE("JSON round trip and trace") {
  IntersectionProblem p = problem(2, {section({"1", "z1*z2 + 2"}, 2), fs(2, 0) + MetrizedBundle::twist(2, LogLinear::log_of(Integer(2))), fs(2, 1)});
  const std::string text = problem_to_json(p);
  IntersectionProblem back = problem_from_json(text);
  CHECK(problem_to_json(back) == text);
  TraceNode root;
  IntersectionEngine engine;
  auto v = engine.degree(back, &root);
  auto w = engine.degree(p);
  CHECK(v.numeric == w.numeric);
  REQUIRE_FALSE(root.children.empty());
  CHECK(trace_to_json(root).find("Green") != std::string::npos);
  CHECK_THROWS_AS(problem_from_json("{\"m\": 1}"), Error);
}
