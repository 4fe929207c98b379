#include "arakheight/heights.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

namespace arak {

namespace {

Integer factorial(int n) {
  Integer f = 1;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

IntersectionProblem height_problem(const ProjPoint& p, const Polarization& pol) {
  if (p.num_vars() != pol.d) {
    throw Error(ErrorCode::VarMismatch, "point has " + std::to_string(p.num_vars()) + " variables, polarization " +
                                            std::to_string(pol.d));
  }
  IntersectionProblem prob;
  prob.m = pol.d;
  prob.classes.push_back(MetrizedBundle::pullback(p));
  for (const auto& b : pol.bundles) prob.classes.push_back(b);
  return prob;
}

Integer lcm_denominators(const std::vector<Rational>& v) {
  Integer l = 1;
  for (const auto& q : v) {
    mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), q.get_den_mpz_t());
  }
  return l;
}

// Decides R * exp(-2c) <= 1 exactly when c is an integer combination of
// logarithms; otherwise returns nullopt.
std::optional<bool> exact_norm_check(const Rational& r, const LogLinear& c) {
  if (c.rational_part() != 0) return std::nullopt;
  Rational lhs = r;
  for (const auto& [p, q] : c.log_terms()) {
    const Rational e = 2 * q;
    if (e.get_den() != 1 || !e.get_num().fits_slong_p()) return std::nullopt;
    Integer pw;
    const long k = e.get_num().get_si();
    mpz_pow_ui(pw.get_mpz_t(), p.get_mpz_t(), static_cast<unsigned long>(std::labs(k)));
    if (k > 0) {
      lhs /= Rational(pw);
    } else {
      lhs *= Rational(pw);
    }
  }
  return lhs <= 1;
}

}  // namespace

// ---- polarizations ---------------------------------------------------------

Polarization Polarization::fs(int d) {
  Polarization p;
  p.d = d;
  p.name = "B1";
  for (int i = 0; i < d; ++i) p.bundles.push_back(MetrizedBundle::fs_factor(d, i));
  return p;
}

Polarization Polarization::b0(int d) {
  Polarization p;
  p.d = d;
  p.name = "B0";
  p.bundles.assign(static_cast<std::size_t>(d), MetrizedBundle::fs_product(std::vector<Rational>(static_cast<std::size_t>(d), Rational(1))));
  return p;
}

Polarization Polarization::bij(int d, int i, int j, const IntersectionEngine& engine) {
  if (i < 0 || j < 0 || i >= d || j >= d || i == j) throw Error(ErrorCode::IndexOutOfRange, "B_{i,j} needs distinct slots");
  Polarization p = fs(d);
  p.bundles[static_cast<std::size_t>(j)] = MetrizedBundle::twist(d, lambda_constant(i, engine).minus_log);
  p.name = "B_{" + std::to_string(i + 1) + "," + std::to_string(j + 1) + "}";
  return p;
}

Polarization Polarization::degenerate(int d, int i, const LogLinear& c) {
  if (i < 0 || i >= d) throw Error(ErrorCode::IndexOutOfRange, "degenerate slot out of range");
  Polarization p = fs(d);
  p.bundles[static_cast<std::size_t>(i)] = MetrizedBundle::twist(d, c);
  p.name = "degenerate:" + std::to_string(i + 1);
  return p;
}

Polarization Polarization::preset(const std::string& spec, int d) {
  if (d < 1) throw Error(ErrorCode::InvalidArgument, "polarization needs d >= 1");
  const auto colon = spec.find(':');
  const std::string head = spec.substr(0, colon);
  const std::string args = colon == std::string::npos ? "" : spec.substr(colon + 1);
  auto split = [&]() {
    const auto comma = args.find(',');
    if (comma == std::string::npos) throw Error(ErrorCode::ParseError, "expected two arguments in '" + spec + "'");
    return std::make_pair(args.substr(0, comma), args.substr(comma + 1));
  };
  auto index = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v - 1;
    } catch (const std::exception&) {
      throw Error(ErrorCode::ParseError, "bad slot index '" + s + "'");
    }
  };
  Polarization p;
  if (head == "fs" || head == "b1") {
    p = fs(d);
  } else if (head == "b0") {
    p = b0(d);
  } else if (head == "bij") {
    const auto [a, b] = split();
    p = bij(d, index(a), index(b));
  } else if (head == "degenerate") {
    const auto [a, b] = split();
    Rational lambda;
    try {
      lambda = Rational(b);
      lambda.canonicalize();
    } catch (const std::exception&) {
      throw Error(ErrorCode::ParseError, "bad lambda '" + b + "'");
    }
    if (lambda <= 0) throw Error(ErrorCode::InvalidArgument, "lambda must be positive");
    p = degenerate(d, index(a), LogLinear::log_of(lambda, -1));
  } else {
    throw Error(ErrorCode::ParseError, "unknown polarization '" + spec + "'");
  }
  if (head != "fs" && head != "b1" && head != "b0") p.name = spec;
  p.validate();
  return p;
}

void Polarization::validate() const {
  if (static_cast<int>(bundles.size()) != d) throw Error(ErrorCode::InvalidArgument, "polarization needs d slots");
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    const auto& b = bundles[i];
    if (b.num_vars() != d) throw Error(ErrorCode::VarMismatch, "slot lives on a different base");
    if (b.section) throw Error(ErrorCode::InvalidArgument, "polarization slots carry no section pullback");
    if (!b.is_nef()) throw Error(ErrorCode::InvalidArgument, "slot " + std::to_string(i + 1) + " is not nef");
  }
}

LambdaConstant lambda_constant(int i, const IntersectionEngine& engine) {
  IntersectionProblem p;
  p.m = 1;
  p.classes = {MetrizedBundle::fs_factor(1, 0), MetrizedBundle::fs_factor(1, 0)};
  const RigorousValue self = engine.degree(p);
  if (!self.symbolic) throw Error(ErrorCode::InvalidArgument, "FS self-intersection is not exact");
  // the generic fibre degree of O(1) is 1
  LambdaConstant out;
  out.index = i;
  out.minus_log = *self.symbolic;
  out.value = std::exp(-out.minus_log.evaluate());
  return out;
}

// ---- heights ---------------------------------------------------------------

RigorousValue height_point(const ProjPoint& p, const Polarization& pol, const IntersectionEngine& engine,
                           TraceNode* trace) {
  pol.validate();
  return engine.degree(height_problem(p, pol), trace);
}

std::vector<RigorousValue> height_batch(const std::vector<ProjPoint>& points, const Polarization& pol,
                                        const IntersectionEngine& engine, int threads) {
  pol.validate();
  std::vector<RigorousValue> out(points.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&]() {
    for (std::size_t k = next++; k < points.size(); k = next++) {
      try {
        out[k] = engine.degree(height_problem(points[k], pol));
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min<int>(threads, static_cast<int>(points.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

Prop21Report compare_prop21(const ProjPoint& p, const IntersectionEngine& engine) {
  const int d = p.num_vars();
  if (d < 2) throw Error(ErrorCode::InvalidArgument, "the comparison identity needs d >= 2");
  Prop21Report r;
  r.lhs = height_point(p, Polarization::b0(d), engine);
  r.h_b1 = height_point(p, Polarization::fs(d), engine);
  const Rational dfact(factorial(d));
  r.rhs = r.h_b1 * dfact;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (i == j) continue;
      RigorousValue h = height_point(p, Polarization::bij(d, i, j, engine), engine);
      r.rhs += h * (dfact / 2);
      r.h_bij.push_back({{i, j}, h});
    }
  }
  r.residual = r.lhs - r.rhs;
  return r;
}

// ---- certificates ----------------------------------------------------------

Rational monomial_sup_sq(int alpha, int beta) {
  if (alpha < 0 || beta < 0) throw Error(ErrorCode::InvalidArgument, "negative monomial exponent");
  // attained at |x0|^2 = alpha/(alpha+beta)
  auto pw = [](int base, int e) {
    Integer r;
    mpz_ui_pow_ui(r.get_mpz_t(), static_cast<unsigned long>(base), static_cast<unsigned long>(e));
    return r;
  };
  if (alpha + beta == 0) return 1;
  return Rational(pw(alpha, alpha) * pw(beta, beta), pw(alpha + beta, alpha + beta));
}

double monomial_sup(int alpha, int beta) {
  auto xlogx = [](double x) { return x > 0 ? x * std::log(x) : 0.0; };
  return std::exp(0.5 * (xlogx(alpha) + xlogx(beta) - xlogx(alpha + beta)));
}

std::string EffectivityWitness::to_string() const {
  std::ostringstream os;
  bool any = false;
  for (std::size_t l = 0; l < monomial.size(); ++l) {
    const auto& m = monomial[l];
    auto put = [&](const char* name, int e) {
      if (e == 0) return;
      os << (any ? "*" : "") << name << "_" << l + 1 << (e > 1 ? "^" + std::to_string(e) : "");
      any = true;
    };
    put("X0", m.alpha);
    put("X1", m.beta);
  }
  if (!any) os << "1";
  if (scale != 1) os << " in degree " << scale;
  return os.str();
}

std::optional<EffectivityWitness> effectivity_witness(const MetrizedBundle& b) {
  if (b.section) return std::nullopt;
  if (std::any_of(b.fs.begin(), b.fs.end(), [](const Rational& q) { return q < 0; })) return std::nullopt;
  const Integer n = lcm_denominators(b.fs);
  if (!n.fits_sint_p()) return std::nullopt;
  EffectivityWitness w;
  w.scale = static_cast<int>(n.get_si());
  w.constant = b.constant * Rational(n);
  const bool nonneg_twist = w.constant.evaluate() >= 0;
  Rational sup_sq = 1;
  for (const auto& q : b.fs) {
    const Rational k = q * Rational(n);
    if (!k.get_num().fits_sint_p()) return std::nullopt;
    const int deg = static_cast<int>(k.get_num().get_si());
    // X0^k already has sup 1; a negative twist needs the flattest monomial
    MonomialFactor m = nonneg_twist ? MonomialFactor{deg, 0} : MonomialFactor{deg - deg / 2, deg / 2};
    w.monomial.push_back(m);
    sup_sq *= monomial_sup_sq(m.alpha, m.beta);
  }
  w.sup_norm = std::sqrt(mpq_get_d(sup_sq.get_mpq_t())) * std::exp(-w.constant.evaluate());
  if (auto exact = exact_norm_check(sup_sq, w.constant)) {
    w.exact_check = true;
    if (!*exact) return std::nullopt;
  } else if (w.sup_norm > 1.0 + 1e-12) {
    return std::nullopt;
  }
  return w;
}

std::vector<Rational> FairlyLargeCertificate::exponents() const {
  std::vector<Rational> out;
  for (const auto& s : slots) out.push_back(s.exponent);
  return out;
}

Rational FairlyLargeCertificate::exponent_product() const {
  Rational p = 1;
  for (const auto& s : slots) p *= s.exponent;
  return p;
}

FairlyLargeCertificate certify_fairly_large(const Polarization& pol) {
  if (static_cast<int>(pol.bundles.size()) != pol.d) throw Error(ErrorCode::InvalidArgument, "polarization needs d slots");
  FairlyLargeCertificate cert;
  for (int i = 0; i < pol.d; ++i) {
    const MetrizedBundle& b = pol.bundles[static_cast<std::size_t>(i)];
    const std::string slot = "slot " + std::to_string(i + 1);
    if (b.section) throw Error(ErrorCode::NotFairlyLarge, slot + " carries a section pullback");
    const Rational q = b.fs[static_cast<std::size_t>(i)];
    if (q <= 0) {
      throw Error(ErrorCode::NotFairlyLarge, slot + " has no positive Fubini-Study part on factor " +
                                                 std::to_string(i + 1) + ": " + b.to_string());
    }
    bool found = false;
    for (int k = 1; k <= 4 && !found; ++k) {
      const Rational a = Rational(k) / q;
      MetrizedBundle diff = b * a;
      diff.fs[static_cast<std::size_t>(i)] -= 1;
      if (auto w = effectivity_witness(diff)) {
        cert.slots.push_back(SlotCertificate{i, a, *w});
        found = true;
      }
    }
    if (!found) throw Error(ErrorCode::NotFairlyLarge, slot + " admits no monomial witness: " + b.to_string());
  }
  return cert;
}

// ---- Gram determinants -----------------------------------------------------

GramResult gram_det_monotone(const Eigen::MatrixXd& g, const Eigen::MatrixXd& g_prime, double psd_tol) {
  if (g.rows() != g.cols() || g_prime.rows() != g_prime.cols() || g.rows() != g_prime.rows()) {
    throw Error(ErrorCode::InvalidArgument, "Gram matrices must be square of equal size");
  }
  auto check = [&](const Eigen::MatrixXd& m, const char* what) {
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > psd_tol * scale) {
      throw Error(ErrorCode::NotPSD, std::string(what) + " is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    if (m.rows() > 0 && es.eigenvalues().minCoeff() < -psd_tol * scale) {
      throw Error(ErrorCode::NotPSD, std::string(what) + " is not positive semidefinite");
    }
  };
  check(g, "G");
  check(g_prime, "G'");
  check(g_prime - g, "G' - G");
  GramResult r;
  r.det_g = g.rows() == 0 ? 1.0 : g.determinant();
  r.det_g_prime = g_prime.rows() == 0 ? 1.0 : g_prime.determinant();
  // rounding slack relative to the larger determinant
  r.holds = r.det_g <= r.det_g_prime + 1e-9 * std::max(1.0, std::fabs(r.det_g_prime));
  return r;
}

// ---- comparison fits -------------------------------------------------------

Cor22Fit compare_corollary22(const std::vector<ProjPoint>& sample, const Polarization& pol_a,
                             const Polarization& pol_b, const IntersectionEngine& engine) {
  certify_fairly_large(pol_b);
  Cor22Fit fit;
  for (const auto& p : sample) {
    fit.h.push_back(height_point(p, pol_a, engine));
    fit.h_prime.push_back(height_point(p, pol_b, engine));
  }
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t k = 0; k < sample.size(); ++k) {
    const double hp = fit.h_prime[k].numeric;
    if (hp <= 1e-9) continue;
    lo = std::min(lo, fit.h[k].numeric / hp);
    hi = std::max(hi, fit.h[k].numeric / hp);
  }
  if (std::isfinite(lo)) {
    fit.a = lo;
    fit.b = hi;
  }
  fit.c1 = fit.c2 = 0.0;
  for (std::size_t k = 0; k < sample.size(); ++k) {
    const double h = fit.h[k].numeric, hp = fit.h_prime[k].numeric;
    fit.c1 = std::max(fit.c1, fit.a * hp - h);
    fit.c2 = std::max(fit.c2, h - fit.b * hp);
  }
  // ratios of identical numbers still leave rounding noise
  if (fit.c1 < 1e-12) fit.c1 = 0.0;
  if (fit.c2 < 1e-12) fit.c2 = 0.0;
  return fit;
}

}  // namespace arak
