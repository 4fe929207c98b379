#include "doctest.h"

#include <cmath>
#include <random>

#include "arakheight/heights.hpp"
#include "arakheight/parse.hpp"
#include "support.hpp"

using namespace arak;

namespace {

ProjPoint point(const std::string& text, int d) { return normalize(parse_tuple(text, d)).point; }

bool exact_equals(const RigorousValue& v, const LogLinear& expected) {
  return v.symbolic && *v.symbolic == expected && v.error_bound == 0.0;
}

}  // namespace

TEST_CASE("point heights under the FS polarization") {
  const auto fs1 = Polarization::fs(1);
  CHECK(exact_equals(height_point(point("(1, 0)", 1), fs1), LogLinear()));
  auto h = height_point(point("(1, 2)", 1), fs1);
  CHECK(exact_equals(h, LogLinear::log_of(Integer(5), Rational(1, 2))));
  CHECK(std::fabs(h.numeric - 0.5 * std::log(5.0)) < 1e-12);
  auto diag = height_point(point("(1, z1)", 1), fs1);
  CHECK(std::fabs(diag.numeric - 0.5) < 1e-9);
  CHECK_THROWS_AS(height_point(point("(1, z1)", 1), Polarization::fs(2)), Error);
}

TEST_CASE("degenerate polarization gives e_i log 2 exactly") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 12; ++trial) {
    const int d = 1 + trial % 3;
    ProjPoint p = testing::random_point(rng, d, 1 + trial % 2, 3, 9, 3);
    for (int i = 0; i < d; ++i) {
      const auto pol = Polarization::degenerate(d, i, LogLinear::log_of(Integer(2)));
      auto h = height_point(p, pol);
      CHECK(exact_equals(h, LogLinear::log_of(Integer(2), p.multidegree()[static_cast<std::size_t>(i)])));
    }
  }
}

TEST_CASE("lambda constants come from the engine") {
  auto l = lambda_constant(0);
  CHECK(l.minus_log == LogLinear::rational(Rational(1, 2)));
  CHECK(std::fabs(l.value - std::exp(-0.5)) < 1e-15);
}

TEST_CASE("comparison identity for d = 2") {
  auto c = compare_prop21(point("(1, 2)", 2));
  CHECK(std::fabs(c.residual.numeric) <= 1e-8);
  auto z = compare_prop21(point("(1, 0)", 2));
  CHECK(exact_equals(z.residual, LogLinear()));
  IntersectionEngine engine(EngineOptions{.tol = 1e-5});
  auto r = compare_prop21(point("(1, z1*z2 + 1)", 2), engine);
  CHECK(std::fabs(r.residual.numeric) <= std::max(1e-4, r.residual.error_bound));
  CHECK(r.h_bij.size() == 2);
}

TEST_CASE("monomial sup norms") {
  CHECK(std::fabs(monomial_sup(1, 1) - 0.5) < 1e-15);
  CHECK(monomial_sup_sq(1, 1) == Rational(1, 4));
  CHECK(monomial_sup(3, 0) == 1.0);
  // brute-force maximization over |x0|^2 = t
  for (auto [a, b] : {std::pair{2, 1}, std::pair{3, 3}, std::pair{1, 4}}) {
    double best = 0;
    for (int k = 0; k <= 200000; ++k) {
      const double t = k / 200000.0;
      best = std::max(best, std::sqrt(std::pow(t, a) * std::pow(1 - t, b)));
    }
    CHECK(std::fabs(monomial_sup(a, b) - best) < 1e-8);
  }
}

TEST_CASE("fairly large certificates") {
  auto cert = certify_fairly_large(Polarization::fs(2));
  REQUIRE(cert.slots.size() == 2);
  CHECK(cert.exponents() == std::vector<Rational>{1, 1});
  CHECK(cert.slots[0].witness.sup_norm <= 1.0);

  auto b0 = certify_fairly_large(Polarization::b0(3));
  CHECK(b0.exponent_product() == 1);

  Polarization degenerate = Polarization::degenerate(2, 1, LogLinear::log_of(Integer(2)));
  try {
    certify_fairly_large(degenerate);
    FAIL("expected NotFairlyLarge");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotFairlyLarge);
    CHECK(std::string(e.what()).find("slot 2") != std::string::npos);
  }

  // O(2)_FS twisted by (O, 2|.|) is effective through X0 X1
  MetrizedBundle b = MetrizedBundle::fs_factor(1, 0, 2) + MetrizedBundle::twist(1, LogLinear::log_of(Integer(2), -1));
  auto w = effectivity_witness(b);
  REQUIRE(w);
  CHECK(w->exact_check);
  CHECK(w->monomial[0].alpha == 1);
  CHECK(w->monomial[0].beta == 1);
  CHECK(std::fabs(w->sup_norm - 1.0) < 1e-12);
  // one more unit of twist breaks it
  MetrizedBundle worse = MetrizedBundle::fs_factor(1, 0, 2) + MetrizedBundle::twist(1, LogLinear::log_of(Integer(3), -1));
  CHECK_FALSE(effectivity_witness(worse));

  // a slot O(3)_FS (x) (O, 2|.|) is fairly large via the same witness
  Polarization twisted;
  twisted.d = 1;
  twisted.bundles = {MetrizedBundle::fs_factor(1, 0, 3) + MetrizedBundle::twist(1, LogLinear::log_of(Integer(2), -1))};
  auto ct = certify_fairly_large(twisted);
  CHECK(ct.slots[0].exponent == 1);
  CHECK(ct.slots[0].witness.to_string() == "X0_1*X1_1");
}

TEST_CASE("presets") {
  CHECK(Polarization::preset("fs", 2).bundles.size() == 2);
  auto bij = Polarization::preset("bij:1,2", 2);
  CHECK(bij.bundles[1].constant == LogLinear::rational(Rational(1, 2)));
  auto deg = Polarization::preset("degenerate:1,1/2", 1);
  CHECK(deg.bundles[0].constant == LogLinear::log_of(Integer(2)));
  CHECK_THROWS_AS(Polarization::preset("bogus", 1), Error);
  CHECK_THROWS_AS(Polarization::preset("degenerate:1,2", 1), Error);
  CHECK_THROWS_AS(Polarization::preset("bij:1,1", 2), Error);
}

TEST_CASE("Gram determinant monotonicity") {
  Eigen::MatrixXd i2 = Eigen::MatrixXd::Identity(2, 2);
  auto r = gram_det_monotone(i2, 2 * i2);
  CHECK(r.holds);
  CHECK(r.det_g == doctest::Approx(1.0));
  CHECK(r.det_g_prime == doctest::Approx(4.0));

  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss;
  int violations = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + trial % 5;
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) a(i, j) = gauss(rng);
    }
    Eigen::MatrixXd g = a * a.transpose();
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = gauss(rng);
    auto same = gram_det_monotone(g, g);
    CHECK(same.holds);
    if (!gram_det_monotone(g, g + v * v.transpose()).holds) ++violations;
  }
  CHECK(violations == 0);

  Eigen::MatrixXd bad = i2;
  bad(0, 0) = 0.5;
  try {
    gram_det_monotone(i2, bad);
    FAIL("expected NotPSD");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotPSD);
  }
}

TEST_CASE("nef polarizations give nonnegative heights; slots scale linearly") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 8; ++trial) {
    ProjPoint p = testing::random_point(rng, 1, 1 + trial % 3, 3, 7, 3);
    auto h = height_point(p, Polarization::fs(1));
    CHECK(h.numeric >= -h.error_bound);
    Polarization scaled = Polarization::fs(1);
    scaled.bundles[0] *= Rational(3);
    auto h3 = height_point(p, scaled);
    CHECK(std::fabs(h3.numeric - 3 * h.numeric) <= h3.error_bound + 3 * h.error_bound + 1e-9);
    // the degree bound from the degenerate formula
    const double e = p.multidegree()[0];
    CHECK(e * std::log(2.0) <= 2 * h.numeric + h.error_bound + 1e-12);
  }
}

TEST_CASE("empirical comparison constants") {
  std::vector<ProjPoint> sample{point("(1, z1)", 1), point("(z1^2 + 1, 3)", 1), point("(2*z1 - 1, z1 + 5)", 1)};
  auto same = compare_corollary22(sample, Polarization::fs(1), Polarization::fs(1));
  CHECK(same.a == doctest::Approx(1.0));
  CHECK(same.b == doctest::Approx(1.0));
  CHECK(same.c1 == 0.0);
  CHECK(same.c2 == 0.0);

  std::vector<ProjPoint> plane{point("(1, z1)", 2), point("(1, z2 + z1)", 2), point("(z1, z2 + 2)", 2)};
  IntersectionEngine engine(EngineOptions{.tol = 1e-5});
  auto fit = compare_corollary22(plane, Polarization::b0(2), Polarization::fs(2), engine);
  CHECK(fit.a >= 2.0 - 1e-4);  // h_B0 = 2 h_B1 + nonnegative terms

  // a trivial twist slot: heights stay at zero while FS heights grow
  std::vector<ProjPoint> family;
  for (int n = 1; n <= 5; ++n) family.push_back(point("(1, z1^" + std::to_string(n) + ")", 1));
  auto flat = compare_corollary22(family, Polarization::degenerate(1, 0, LogLinear()), Polarization::fs(1));
  for (std::size_t k = 0; k < family.size(); ++k) {
    CHECK(flat.h[k].is_exact_zero());
    if (k > 0) CHECK(flat.h_prime[k].numeric > flat.h_prime[k - 1].numeric + 0.1);
  }
}

TEST_CASE("batch heights preserve order") {
  std::vector<ProjPoint> pts{point("(1, 2)", 1), point("(1, z1)", 1), point("(3, 4)", 1), point("(1, 0)", 1)};
  IntersectionEngine engine;
  auto hs = height_batch(pts, Polarization::fs(1), engine, 3);
  REQUIRE(hs.size() == 4);
  CHECK(hs[0].numeric == doctest::Approx(0.5 * std::log(5.0)));
  CHECK(hs[2].numeric == doctest::Approx(std::log(5.0)));
  CHECK(hs[3].is_exact_zero());
}
