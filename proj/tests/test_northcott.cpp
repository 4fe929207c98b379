#include "doctest.h"

#include <cmath>
#include <complex>
#include <map>
#include <random>
#include <set>

#include <Eigen/Dense>

#include "arakheight/northcott.hpp"
#include "arakheight/parse.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace arak;
using namespace arak::oracle;

namespace {

ProjPoint point(const std::string& text, int d) { return normalize(parse_tuple(text, d)).point; }

std::set<std::string> names(const std::vector<ProjPoint>& pts) {
  std::set<std::string> out;
  for (const auto& p : pts) out.insert(p.to_string());
  return out;
}

void check_against_oracle(double bound) {
  IntersectionEngine engine(EngineOptions{.tol = 1e-7});
  NorthcottOptions opts;
  opts.threads = 4;
  const Enumeration got = enumerate_bounded(1, 1, bound, Polarization::fs(1), opts, engine);
  const int D = got.box.degree_bounds[0] + 1;
  const long H = got.box.coeff_bound.get_si() + 1;
  const auto oracle = oracle_set(bound, D, H);
  const auto members = names(got.members());
  const auto undecided = names(got.undecided());
  std::set<std::string> oracle_in;
  for (const auto& hit : oracle) {
    const bool near = std::fabs(hit.height - bound) <= 1e-6;
    if (!near) {
      CHECK_MESSAGE(members.count(hit.name) == 1, hit.name, " h = ", hit.height);
      oracle_in.insert(hit.name);
    } else {
      CHECK(members.count(hit.name) + undecided.count(hit.name) == 1);
    }
  }
  for (const auto& m : members) {
    const bool found = std::any_of(oracle.begin(), oracle.end(), [&](const OracleHit& h) { return h.name == m; });
    CHECK_MESSAGE(found, m);
  }
  for (const auto& bp : got.points) {
    if (bp.status == PointStatus::In) CHECK(bp.height.numeric <= bound);
  }
}

}  // namespace

TEST_CASE("oracle sanity") {
  CHECK(std::fabs(oracle_height({1}, {0}) - 0.0) < 1e-12);
  CHECK(std::fabs(oracle_height({1}, {2}) - 0.5 * std::log(5.0)) < 1e-12);
  CHECK(std::fabs(oracle_height({1}, {0, 1}) - 0.5) < 1e-10);
  CHECK(std::fabs(fs_mahler({0, 1})) < 1e-12);
  CHECK(std::fabs(fs_mahler({-1, 1}) - 0.5 * std::log(2.0)) < 1e-12);
  // against the engine on a few generic points
  std::mt19937_64 rng(4);
  for (int t = 0; t < 6; ++t) {
    ProjPoint p = testing::random_point(rng, 1, 1, 3, 5, 3);
    Dense g0(4, 0), g1(4, 0);
    for (const auto& [ex, c] : p.coords()[0].terms()) g0[static_cast<std::size_t>(ex[0])] = c.get_si();
    for (const auto& [ex, c] : p.coords()[1].terms()) g1[static_cast<std::size_t>(ex[0])] = c.get_si();
    auto h = height_point(p, Polarization::fs(1));
    CHECK(std::fabs(h.numeric - oracle_height(g0, g1)) <= std::max(1e-7, 2 * h.error_bound));
  }
}

TEST_CASE("search boxes") {
  auto b = derive_box(1, 1, 0.4, Polarization::fs(1));
  CHECK(b.degree_bounds == std::vector<int>{1});
  CHECK(b.coeff_bound == 1);
  CHECK_FALSE(b.empty());
  CHECK(b.tuples() == 81);

  auto neg = derive_box(1, 1, -0.1, Polarization::fs(1));
  CHECK(neg.empty());
  CHECK(neg.tuples() == 0);

  auto plane = derive_box(2, 2, 1.0, Polarization::fs(2));
  CHECK(plane.degree_bounds == std::vector<int>{2, 2});
  CHECK(plane.coeff_bound == Integer(std::floor(4 * std::exp(1.0 + 1e-6))));

  CHECK(coefficient_factor({0}) == 1.0);
  CHECK(coefficient_factor({2}) == doctest::Approx(2.0));
  CHECK(coefficient_factor({3}) == doctest::Approx(std::sqrt(27.0 / 4.0)));

  try {
    derive_box(1, 1, 1.0, Polarization::degenerate(1, 0, LogLinear::log_of(Integer(2))));
    FAIL("expected NotFairlyLarge");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotFairlyLarge);
  }
  NorthcottOptions tiny;
  tiny.budget = 10;
  CHECK_THROWS_AS(enumerate_bounded(1, 1, 0.4, Polarization::fs(1), tiny), Error);
}

TEST_CASE("prefilter bound is below the height") {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 40; ++t) {
    const int d = 1 + t % 2;
    ProjPoint p = testing::random_point(rng, d, 1 + t % 2, 2, 6, 3);
    IntersectionEngine engine(EngineOptions{.tol = 1e-5});
    auto h = height_point(p, Polarization::fs(d), engine);
    CHECK(fs_height_lower_bound(p) <= h.numeric + h.error_bound + 1e-12);
  }
}

TEST_CASE("bounded points at M = 0.4 and below") {
  auto e = enumerate_bounded(1, 1, 0.4, Polarization::fs(1));
  CHECK(names(e.members()) == std::set<std::string>{"(1, 0)", "(0, 1)", "(1, 1)", "(1, -1)"});
  CHECK(e.undecided().empty());
  CHECK(e.distinct <= e.scanned);

  auto none = enumerate_bounded(1, 1, -0.1, Polarization::fs(1));
  CHECK(none.points.empty());
  CHECK(none.scanned == 0);
}

TEST_CASE("completeness against the brute-force oracle") {
  check_against_oracle(0.4);
  check_against_oracle(0.51);
  check_against_oracle(0.6);
}

TEST_CASE("completeness at M = 0.7" * doctest::timeout(600)) { check_against_oracle(0.7); }

TEST_CASE("reports are monotone and deterministic") {
  NorthcottOptions opts;
  opts.threads = 3;
  auto rows = northcott_report(1, 1, {0.0, 0.4, 0.51, 0.51}, Polarization::fs(1), opts);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].in == 2);
  CHECK(rows[1].in == 4);
  CHECK(rows[2].in >= 8);
  CHECK(rows[2].in == rows[3].in);
  for (std::size_t k = 1; k < rows.size(); ++k) CHECK(rows[k].in + rows[k].undecided >= rows[k - 1].in);
  CHECK(northcott_report(1, 1, {}, Polarization::fs(1)).empty());

  opts.threads = 1;
  auto a = enumerate_bounded(1, 1, 0.51, Polarization::fs(1), opts);
  opts.threads = 5;
  auto b = enumerate_bounded(1, 1, 0.51, Polarization::fs(1), opts);
  REQUIRE(a.points.size() == b.points.size());
  for (std::size_t k = 0; k < a.points.size(); ++k) {
    CHECK(a.points[k].point.to_string() == b.points[k].point.to_string());
    CHECK(a.points[k].height.numeric == b.points[k].height.numeric);
  }
}

TEST_CASE("random points of small height lie in the box") {
  std::mt19937_64 rng(99);
  IntersectionEngine engine(EngineOptions{.tol = 1e-5});
  int accepted = 0;
  for (int t = 0; t < 1000 && accepted < 200; ++t) {
    const int d = 1 + t % 2;
    const double bound = d == 1 ? 1.5 : 2.0;
    ProjPoint p = testing::random_point(rng, d, 1 + t % 2, 3 - d, 3, 2);
    if (fs_height_lower_bound(p) > bound) continue;
    auto h = height_point(p, Polarization::fs(d), engine);
    if (h.numeric > bound) continue;
    ++accepted;
    auto box = derive_box(p.dim(), d, bound, Polarization::fs(d));
    for (int i = 0; i < d; ++i) CHECK(p.multidegree()[static_cast<std::size_t>(i)] <= box.degree_bounds[static_cast<std::size_t>(i)]);
    for (const auto& f : p.coords()) {
      for (const auto& [ex, c] : f.terms()) CHECK(abs(c) <= box.coeff_bound);
    }
  }
  CHECK(accepted == 200);
}
