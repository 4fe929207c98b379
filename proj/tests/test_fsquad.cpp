#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "arakheight/fsquad.hpp"
#include "arakheight/parse.hpp"

using namespace arak;
namespace fs = std::filesystem;

namespace {

QuadOptions numeric_only(double tol) {
  QuadOptions o;
  o.tol = tol;
  o.analytic_reduction = false;
  return o;
}

// Radial reduction oracles. With s = |z|^2 the FS measure is ds dtheta /
// (2 pi (1+s)^2); both closed forms come from antiderivatives in s.
//   int_0^inf ln(1+s)/(1+s)^2 ds = [-(ln(1+s)+1)/(1+s)]_0^inf = 1
//   int_1^inf ln(sqrt s)/(1+s)^2 ds = (1/2) ln 2
constexpr double kHalfLogOnePlus = 0.5;
const double kLogMax = std::log(2.0) / 2;

fs::path fresh_dir(const char* tag) {
  fs::path p = fs::temp_directory_path() / ("arakheight_test_" + std::string(tag));
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("constant integrand is exact") {
  Integrand g(1);
  g.add_constant(1);
  auto r = fs_integrate(g, QuadOptions{});
  CHECK(r.symbolic);
  CHECK(r.estimate == 1.0);
  CHECK(r.error_bound == 0.0);
  CHECK(r.method == QuadMethod::Exact);
}

TEST_CASE("half log(1+|z|^2) integrates to 1/2") {
  Integrand g(1);
  g.add_log_one_plus_sq(Rational(1, 2), 0);
  auto num = fs_integrate(g, numeric_only(1e-9));
  CHECK(num.converged);
  CHECK(std::fabs(num.estimate - kHalfLogOnePlus) <= std::max(num.error_bound, 1e-12));
  CHECK(std::fabs(num.estimate - kHalfLogOnePlus) < 1e-8);
  auto exact = fs_integrate(g, QuadOptions{});
  REQUIRE(exact.symbolic);
  CHECK(*exact.symbolic == LogLinear::rational(Rational(1, 2)));
}

TEST_CASE("log max(1,|z|) integrates to (log 2)/2") {
  Integrand g(1);
  g.add_log_max_abs(1, {MultiPoly::constant(1, 1), parse_poly("z1", 1)});
  auto num = fs_integrate(g, numeric_only(1e-8));
  CHECK(std::fabs(num.estimate - kLogMax) < 1e-7);
  auto reduced = fs_integrate(g, QuadOptions{});
  CHECK(std::fabs(reduced.estimate - kLogMax) < 1e-7);
  // the degree-shift part alone is exact: log max(1,|z|) = -log|x_0|
  Integrand shift(1);
  shift.add_log_norm_max(-1, {MultiPoly::constant(1, 1)}, {1});
  auto exact = fs_integrate(shift, QuadOptions{});
  REQUIRE(exact.symbolic);
  CHECK(*exact.symbolic == LogLinear::log_of(Integer(2), Rational(1, 2)));
}

TEST_CASE("measure moments") {
  // |z|^2/(1+|z|^2)^2 = u(1-u) with u = s/(1+s) uniform: 1/6
  auto r = fs_integrate_function(
      1, [](const std::vector<std::complex<double>>& z) {
        const double s = std::norm(z[0]);
        return s / ((1 + s) * (1 + s));
      },
      QuadOptions{});
  CHECK(std::fabs(r.estimate - 1.0 / 6) < 1e-8);
  // density check: P(|z| <= 1) = 1/2
  auto half = fs_integrate_function(
      1, [](const std::vector<std::complex<double>>& z) { return std::abs(z[0]) <= 1 ? 1.0 : 0.0; },
      QuadOptions{});
  CHECK(std::fabs(half.estimate - 0.5) < 1e-6);
  // angular uniformity: E[Re z / (1+|z|^2)] = 0
  auto ang = fs_integrate_function(
      1, [](const std::vector<std::complex<double>>& z) { return z[0].real() / (1 + std::norm(z[0])); },
      QuadOptions{});
  CHECK(std::fabs(ang.estimate) < 1e-8);
}

TEST_CASE("symmetry: log|z| integrates to zero") {
  Integrand g(1);
  g.add_log_sum_sq(Rational(1, 2), {parse_poly("z1", 1)});
  auto num = fs_integrate(g, numeric_only(1e-8));
  CHECK(std::fabs(num.estimate) < 1e-7);
  auto red = fs_integrate(g, QuadOptions{});
  CHECK(std::fabs(red.estimate) < 1e-6);
}

TEST_CASE("log|z - a| against the root formula") {
  // int log|z - a| dmu = (1/2) log(1 + |a|^2)
  for (int a : {2, -3, 7}) {
    Integrand g(1);
    MultiPoly f = parse_poly("z1", 1) - MultiPoly::constant(1, a);
    g.add_log_sum_sq(Rational(1, 2), {f});
    auto r = fs_integrate(g, QuadOptions{});
    CHECK(std::fabs(r.estimate - 0.5 * std::log(1.0 + a * a)) < 1e-6);
    CHECK(r.error_bound <= 1e-6);
  }
}

TEST_CASE("tensorization on two factors") {
  auto f = [](std::complex<double> z) {
    const double s = std::norm(z);
    return s / ((1 + s) * (1 + s));
  };
  auto h = [](std::complex<double> z) { return 1.0 / (1 + std::norm(z)); };
  QuadOptions o;
  o.tol = 1e-7;
  auto joint = fs_integrate_function(
      2, [&](const std::vector<std::complex<double>>& z) { return f(z[0]) * h(z[1]); }, o);
  auto a = fs_integrate_function(1, [&](const std::vector<std::complex<double>>& z) { return f(z[0]); }, o);
  auto b = fs_integrate_function(1, [&](const std::vector<std::complex<double>>& z) { return h(z[0]); }, o);
  const double bound = joint.error_bound + a.error_bound * std::fabs(b.estimate) +
                       b.error_bound * std::fabs(a.estimate) + 1e-12;
  CHECK(std::fabs(joint.estimate - a.estimate * b.estimate) <= bound);
  CHECK(std::fabs(joint.estimate - 1.0 / 12) < 1e-6);
}

TEST_CASE("two-factor log integrand with separable oracle") {
  Integrand g(2);
  g.add_log_sum_sq(Rational(1, 2), {parse_poly("z1 - 2", 2)});
  g.add_log_sum_sq(Rational(1, 2), {parse_poly("z2 + 3", 2)});
  g.add_log_sum_sq(Rational(1, 4), {parse_poly("(z1 - 2)*(z2 + 3)", 2)});
  const double oracle = 1.5 * (0.5 * std::log(5.0) + 0.5 * std::log(10.0));
  auto r = fs_integrate(g, QuadOptions{});
  CHECK(std::fabs(r.estimate - oracle) < 1e-5);
}

TEST_CASE("single polynomial on two factors: fibre against direct integration") {
  // log |x0 y1 - x1 y0|^2 in normalized coordinates: -1 for every fibre
  Integrand wedge(2);
  wedge.add_log_norm_sq(1, {parse_poly("z2 - z1", 2)}, {1, 1});
  auto w = fs_integrate(wedge, QuadOptions{.tol = 1e-9});
  CHECK(std::fabs(w.estimate + 1.0) <= w.error_bound + 1e-12);
  CHECK(w.error_bound <= 1e-9);

  for (const char* text : {"17*z1^3*z2 - 40*z1*z2^2 + 3*z2^3 + 25", "z1^2*z2^2 - 3*z1 + 2*z2 - 1", "5*z1*z2 + 7"}) {
    const MultiPoly f = parse_poly(text, 2);
    const std::vector<int> deg{3, 3};
    Integrand g(2);
    g.add_log_norm_sq(Rational(1, 2), {f}, deg);
    auto fibre = fs_integrate(g, QuadOptions{.tol = 1e-7});
    QuadOptions o;
    o.tol = 1e-5;
    auto direct = fs_integrate_function(
        2,
        [&](const std::vector<std::complex<double>>& z) {
          return 0.5 * (std::log(std::norm(eval_complex(f, z).value)) - deg[0] * std::log1p(std::norm(z[0])) -
                        deg[1] * std::log1p(std::norm(z[1])));
        },
        o);
    INFO(text);
    CHECK(fibre.error_bound <= 1e-7);
    CHECK(std::fabs(fibre.estimate - direct.estimate) <= fibre.error_bound + direct.error_bound + 1e-9);
  }

  // three factors: the fibre leaves a two-factor cubature
  Integrand g3(3);
  g3.add_log_norm_sq(1, {parse_poly("(z1 - 2)*(z2 + 3)*(z3 - 1)", 3)}, {1, 1, 1});
  auto r3 = fs_integrate(g3, QuadOptions{.tol = 1e-6});
  CHECK(r3.method == QuadMethod::AdaptiveCubature);
  CHECK(std::fabs(r3.estimate - (std::log(5.0) + std::log(10.0) + std::log(2.0) - 3)) <= r3.error_bound + 1e-9);
}

TEST_CASE("three factors use quasi Monte Carlo") {
  Integrand g(3);
  g.add_log_sum_sq(Rational(1, 2), {parse_poly("z1 - 2", 3)});
  g.add_log_sum_sq(Rational(1, 2), {parse_poly("z2 + 1", 3)});
  g.add_log_sum_sq(Rational(1, 2), {parse_poly("z3 - 3", 3)});
  QuadOptions o;
  o.tol = 2e-3;
  auto r = fs_integrate(g, o);
  CHECK(r.method == QuadMethod::QuasiMonteCarlo);
  const double oracle = 0.5 * (std::log(5.0) + std::log(2.0) + std::log(10.0));
  CHECK(std::fabs(r.estimate - oracle) < 10 * o.tol);
  auto again = fs_integrate(g, o);
  CHECK(again.estimate == r.estimate);
}

TEST_CASE("exact reductions") {
  Integrand g(2);
  // content, degree shift and a constant tuple all leave nothing to integrate
  g.add_log_norm_sq(1, {MultiPoly::constant(2, 3), MultiPoly::constant(2, 4)}, {1, 0});
  auto r = fs_integrate(g, QuadOptions{});
  REQUIRE(r.symbolic);
  CHECK(*r.symbolic == LogLinear::log_of(Integer(25)) - LogLinear::rational(1));
  CHECK_THROWS_AS(g.add_log_norm_sq(1, {parse_poly("z1^2", 2)}, {1, 0}), Error);
}

TEST_CASE("halving the tolerance never increases the error bound") {
  Integrand g(1);
  g.add_log_norm_sq(Rational(1, 2), {parse_poly("z1^2 - 2", 1), parse_poly("3*z1 + 1", 1)}, {2});
  double prev = INFINITY;
  for (double tol = 1e-3; tol > 1e-9; tol /= 2) {
    auto r = fs_integrate(g, QuadOptions{.tol = tol});
    CHECK(r.error_bound <= prev);
    prev = r.error_bound;
  }
}

TEST_CASE("failure modes") {
  QuadOptions o;
  o.singular_limit = 10;
  CHECK_THROWS_AS(fs_integrate_function(1, [](const std::vector<std::complex<double>>&) { return NAN; }, o),
                  Error);
  QuadOptions tight;
  tight.tol = 1e-14;
  tight.max_evals = 200;
  Integrand g(1);
  g.add_log_norm_sq(1, {parse_poly("z1 - 5", 1), MultiPoly::constant(1, 1)}, {1});
  auto r = fs_integrate(g, tight);
  CHECK_FALSE(r.converged);
  CHECK(r.error_bound > tight.tol);
  tight.strict = true;
  try {
    fs_integrate(g, tight);
    FAIL("expected NoConvergence");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoConvergence);
  }
}

TEST_CASE("cache round trip and tolerance rule") {
  const fs::path dir = fresh_dir("cache1");
  QuadCache cache(dir.string());
  QuadResult r;
  r.estimate = 0.25;
  r.error_bound = 1e-4;
  r.method = QuadMethod::AdaptiveCubature;
  r.nodes = 17;
  cache.store("abc", 1e-3, r);
  auto hit = cache.lookup("abc", 1e-3);
  REQUIRE(hit);
  CHECK(hit->estimate == r.estimate);
  CHECK(hit->error_bound == r.error_bound);
  CHECK(hit->nodes == r.nodes);
  CHECK_FALSE(cache.lookup("missing", 1.0));
  CHECK_FALSE(cache.lookup("abc", 1e-6));

  // a second instance reads the same entry from disk
  QuadCache other(dir.string());
  auto disk = other.lookup("abc", 1e-2);
  REQUIRE(disk);
  CHECK(disk->estimate == 0.25);
  CHECK(other.disk_entries() == 1);

  // corrupt entries are ignored and rewritten
  { std::ofstream(dir / "bad.json") << "{not json"; }
  QuadCache third(dir.string());
  CHECK_FALSE(third.lookup("bad", 1.0));
  third.store("bad", 1e-3, r);
  CHECK(QuadCache(dir.string()).lookup("bad", 1e-3));
  fs::remove_all(dir);
}

TEST_CASE("integrator reuses cached results") {
  const fs::path dir = fresh_dir("cache2");
  auto cache = std::make_shared<QuadCache>(dir.string());
  FsIntegrator in(QuadOptions{.tol = 1e-7}, cache);
  Integrand g(1);
  g.add_log_norm_sq(Rational(1, 2), {parse_poly("z1^2 + z1 + 3", 1), parse_poly("2*z1", 1)}, {2});
  auto first = in.integrate(g);
  CHECK(cache->disk_entries() == 1);
  FsIntegrator fresh(QuadOptions{.tol = 1e-7}, std::make_shared<QuadCache>(dir.string()));
  auto second = fresh.integrate(g);
  CHECK(second.estimate == first.estimate);
  CHECK(second.nodes == first.nodes);
  CHECK(cache_key(g, in.options()) == cache_key(g, fresh.options()));
  fs::remove_all(dir);
}
