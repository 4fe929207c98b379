#include "arakheight/fsquad.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <queue>
#include <random>
#include <set>
#include <thread>

#include <Eigen/Eigenvalues>

#include "json.hpp"

#include "arakheight/projpoint.hpp"

namespace arak {

namespace {

using cplx = std::complex<double>;
using json = nlohmann::json;

constexpr double kPi = std::numbers::pi;

std::vector<int> actual_degrees(const std::vector<MultiPoly>& tuple, int num_vars) {
  std::vector<int> e(static_cast<std::size_t>(num_vars), 0);
  for (int l = 0; l < num_vars; ++l) {
    const Degree d = max_partial_degree(tuple, l);
    e[static_cast<std::size_t>(l)] = d.is_neg_inf() ? 0 : d.value();
  }
  return e;
}

void check_tuple(const std::vector<MultiPoly>& tuple, const std::vector<int>& degrees, int num_vars) {
  if (degrees.size() != static_cast<std::size_t>(num_vars)) {
    throw Error(ErrorCode::VarMismatch, "degree vector length differs from the number of variables");
  }
  bool nonzero = false;
  for (const auto& f : tuple) {
    if (f.num_vars() != num_vars) throw Error(ErrorCode::VarMismatch, "integrand polynomial in the wrong ring");
    nonzero = nonzero || !f.is_zero();
  }
  if (!nonzero) throw Error(ErrorCode::AllZero, "log of an identically zero tuple");
  const auto e = actual_degrees(tuple, num_vars);
  for (std::size_t l = 0; l < e.size(); ++l) {
    if (e[l] > degrees[l]) throw Error(ErrorCode::InvalidArgument, "declared degree below the actual degree");
  }
}

json atom_json(const Atom& a) {
  json j;
  switch (a.kind) {
    case AtomKind::Constant:
      j["atom"] = "const";
      break;
    case AtomKind::LogOnePlusSq:
      j["atom"] = "log1p";
      j["var"] = a.var;
      break;
    case AtomKind::LogNormSq:
    case AtomKind::LogNormMax: {
      j["atom"] = a.kind == AtomKind::LogNormSq ? "lognormsq" : "lognormmax";
      json t = json::array();
      for (const auto& f : a.tuple) t.push_back(f.to_string());
      j["tuple"] = t;
      j["deg"] = a.degrees;
      break;
    }
  }
  return j;
}

// ---- reduction -------------------------------------------------------------

// Tuples of +-1 monomials whose normalized log vanishes identically. For the
// l2 variant they must be exactly the monomials of the box {0,1}^S (so the sum
// of squares factors as prod(|x0|^2 + |x1|^2) = 1); for the sup variant any
// set of +-1 monomials containing every corner of the box works.
bool unit_monomial_box(const std::vector<MultiPoly>& tuple, const std::vector<int>& e, bool l2) {
  std::set<Exponent> seen;
  for (const auto& f : tuple) {
    if (f.num_terms() != 1 || abs(f.terms().begin()->second) != 1) return false;
    if (!seen.insert(f.terms().begin()->first).second && l2) return false;
  }
  std::vector<std::size_t> support;
  for (std::size_t l = 0; l < e.size(); ++l) {
    if (e[l] == 0) continue;
    if (l2 && e[l] != 1) return false;
    support.push_back(l);
  }
  if (support.size() > 20) return false;
  const std::size_t corners = std::size_t{1} << support.size();
  if (l2 && seen.size() != corners) return false;
  for (std::size_t mask = 0; mask < corners; ++mask) {
    Exponent x(e.size(), 0);
    for (std::size_t j = 0; j < support.size(); ++j) {
      if ((mask >> j) & 1) x[support[j]] = e[support[j]];
    }
    if (!seen.count(x)) return false;
  }
  return true;
}

struct Reduced {
  LogLinear exact;
  Integrand numeric{0};
  bool has_numeric = false;
};

Reduced reduce(const Integrand& g, bool analytic) {
  const int m = g.num_vars();
  Reduced out;
  std::vector<std::pair<Rational, Atom>> pending;
  std::vector<bool> active(static_cast<std::size_t>(m), false);

  for (const auto& [c, atom] : g.terms()) {
    if (c == 0) continue;
    switch (atom.kind) {
      case AtomKind::Constant:
        out.exact += LogLinear::rational(c);
        break;
      case AtomKind::LogOnePlusSq:
        if (analytic) {
          out.exact += LogLinear::rational(c);
        } else {
          active[static_cast<std::size_t>(atom.var)] = true;
          pending.emplace_back(c, atom);
        }
        break;
      case AtomKind::LogNormSq:
      case AtomKind::LogNormMax: {
        const bool sq = atom.kind == AtomKind::LogNormSq;
        std::vector<MultiPoly> tuple;
        for (const auto& f : atom.tuple) {
          if (!f.is_zero()) tuple.push_back(f);
        }
        std::vector<int> degrees = atom.degrees;
        if (analytic) {
          Integer content = 0;
          for (const auto& f : tuple) content = gcd(content, f.content());
          if (content != 1) {
            out.exact += LogLinear::log_of(content, sq ? Rational(2) * c : c);
            for (auto& f : tuple) f = f.divexact(content);
          }
          const auto e = actual_degrees(tuple, m);
          int shift = 0;
          for (std::size_t l = 0; l < e.size(); ++l) shift += degrees[l] - e[l];
          if (shift != 0) {
            // log|x_0|^2 integrates to -1 (l2 chart), log|x_0| to -(log 2)/2 (sup chart)
            if (sq) {
              out.exact -= LogLinear::rational(c * shift);
            } else {
              out.exact -= LogLinear::log_of(Integer(2), c * shift / 2);
            }
          }
          degrees = e;
          if (unit_monomial_box(tuple, e, sq)) break;
          if (std::all_of(e.begin(), e.end(), [](int x) { return x == 0; })) {
            Integer acc = 0;
            for (const auto& f : tuple) {
              const Integer v = f.terms().begin()->second;
              acc = sq ? Integer(acc + v * v) : Integer(std::max(acc, Integer(abs(v))));
            }
            out.exact += LogLinear::log_of(acc, c);
            break;
          }
        }
        for (std::size_t l = 0; l < degrees.size(); ++l) {
          if (degrees[l] > 0) active[l] = true;
        }
        Atom a = atom;
        a.tuple = std::move(tuple);
        a.degrees = std::move(degrees);
        pending.emplace_back(c, std::move(a));
        break;
      }
    }
  }

  // Drop inert variables; the measure is a probability measure on each factor.
  std::vector<int> remap(static_cast<std::size_t>(m), -1);
  int k = 0;
  for (int l = 0; l < m; ++l) {
    if (active[static_cast<std::size_t>(l)]) remap[static_cast<std::size_t>(l)] = k++;
  }
  std::vector<std::pair<std::string, std::pair<Rational, Atom>>> keyed;
  for (auto& [c, a] : pending) {
    if (a.kind == AtomKind::LogOnePlusSq) {
      a.var = remap[static_cast<std::size_t>(a.var)];
    } else {
      for (auto& f : a.tuple) {
        for (int l = m - 1; l >= 0; --l) {
          if (remap[static_cast<std::size_t>(l)] < 0) f = f.remove_variable(l);
        }
      }
      std::vector<int> deg;
      for (int l = 0; l < m; ++l) {
        if (remap[static_cast<std::size_t>(l)] >= 0) deg.push_back(a.degrees[static_cast<std::size_t>(l)]);
      }
      a.degrees = std::move(deg);
    }
    std::string key = atom_json(a).dump();
    keyed.emplace_back(std::move(key), std::make_pair(c, std::move(a)));
  }
  // Merge identical atoms and sort so equal integrands share a cache key.
  std::sort(keyed.begin(), keyed.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  Integrand numeric(k);
  for (std::size_t i = 0; i < keyed.size();) {
    Rational c = 0;
    std::size_t j = i;
    for (; j < keyed.size() && keyed[j].first == keyed[i].first; ++j) c += keyed[j].second.first;
    if (c != 0) {
      const Atom& a = keyed[i].second.second;
      switch (a.kind) {
        case AtomKind::LogOnePlusSq: numeric.add_log_one_plus_sq(c, a.var); break;
        case AtomKind::LogNormSq: numeric.add_log_norm_sq(c, a.tuple, a.degrees); break;
        case AtomKind::LogNormMax: numeric.add_log_norm_max(c, a.tuple, a.degrees); break;
        case AtomKind::Constant: break;
      }
    }
    i = j;
  }
  out.has_numeric = !numeric.terms().empty();
  out.numeric = std::move(numeric);
  return out;
}

// ---- evaluation ------------------------------------------------------------

struct CompiledPoly {
  std::vector<double> coeffs;
  std::vector<int> exps;  // row-major, k entries per term
};

struct CompiledAtom {
  AtomKind kind;
  double coeff;
  std::vector<CompiledPoly> polys;
  std::vector<int> degrees;
  int var;
};

class Evaluator {
 public:
  explicit Evaluator(const Integrand& g) : k_(g.num_vars()) {
    max_deg_.assign(static_cast<std::size_t>(k_), 0);
    for (int l = 0; l < k_; ++l) shift_.push_back(std::fmod((l + 1) * std::numbers::phi, 1.0));
    for (const auto& [c, a] : g.terms()) {
      CompiledAtom ca{a.kind, to_double(c), {}, a.degrees, a.var};
      for (const auto& f : a.tuple) {
        CompiledPoly p;
        for (const auto& [e, coef] : f.terms()) {
          p.coeffs.push_back(coef.get_d());
          p.exps.insert(p.exps.end(), e.begin(), e.end());
        }
        ca.polys.push_back(std::move(p));
      }
      for (std::size_t l = 0; l < a.degrees.size(); ++l) {
        max_deg_[l] = std::max(max_deg_[l], a.degrees[l]);
      }
      if (a.kind == AtomKind::LogNormSq) need_l2_ = true;
      if (a.kind == AtomKind::LogNormMax) need_sup_ = true;
      atoms_.push_back(std::move(ca));
    }
  }

  int dims() const { return 2 * k_; }

  // Integrand times the density of the FS measure in the (v, t) chart.
  double operator()(const double* y) const {
    thread_local std::vector<cplx> p0, p1, s0, s1;
    thread_local std::vector<double> cosv;
    const std::size_t stride = static_cast<std::size_t>(max_stride());
    p0.resize(stride * k_);
    p1.resize(stride * k_);
    s0.resize(stride * k_);
    s1.resize(stride * k_);
    cosv.resize(static_cast<std::size_t>(k_));
    double weight = 1.0;
    for (int l = 0; l < k_; ++l) {
      const double v = y[2 * l];
      const double t = y[2 * l + 1];
      const double half = 0.5 * kPi * v;
      const double c = std::cos(half);
      const double s = std::sin(half);
      cosv[static_cast<std::size_t>(l)] = c;
      weight *= 0.5 * kPi * std::sin(kPi * v);
      const cplx phase = std::polar(1.0, 2.0 * kPi * (t + shift_[static_cast<std::size_t>(l)]));
      const std::size_t base = stride * static_cast<std::size_t>(l);
      const int dmax = max_deg_[static_cast<std::size_t>(l)];
      if (need_l2_) fill_powers(&p0[base], &p1[base], cplx(c, 0), s * phase, dmax);
      if (need_sup_) {
        const double mx = std::max(c, s);
        fill_powers(&s0[base], &s1[base], cplx(c / mx, 0), (s / mx) * phase, dmax);
      }
    }
    double total = 0.0;
    for (const auto& a : atoms_) {
      double val = 0.0;
      switch (a.kind) {
        case AtomKind::Constant:
          val = 1.0;
          break;
        case AtomKind::LogOnePlusSq:
          val = -2.0 * std::log(cosv[static_cast<std::size_t>(a.var)]);
          break;
        case AtomKind::LogNormSq: {
          double acc = 0.0;
          for (const auto& p : a.polys) acc += std::norm(eval_hom(p, a.degrees, p0, p1, stride));
          val = std::log(acc);
          break;
        }
        case AtomKind::LogNormMax: {
          double acc = 0.0;
          for (const auto& p : a.polys) acc = std::max(acc, std::abs(eval_hom(p, a.degrees, s0, s1, stride)));
          val = std::log(acc);
          break;
        }
      }
      total += a.coeff * val;
    }
    return total * weight;
  }

 private:
  int max_stride() const {
    int m = 0;
    for (int d : max_deg_) m = std::max(m, d);
    return m + 1;
  }

  static void fill_powers(cplx* a, cplx* b, cplx x0, cplx x1, int d) {
    a[0] = 1.0;
    b[0] = 1.0;
    for (int i = 1; i <= d; ++i) {
      a[i] = a[i - 1] * x0;
      b[i] = b[i - 1] * x1;
    }
  }

  cplx eval_hom(const CompiledPoly& p, const std::vector<int>& deg, const std::vector<cplx>& x0,
                const std::vector<cplx>& x1, std::size_t stride) const {
    cplx acc = 0.0;
    const std::size_t kk = static_cast<std::size_t>(k_);
    for (std::size_t t = 0; t < p.coeffs.size(); ++t) {
      cplx mono = p.coeffs[t];
      for (std::size_t l = 0; l < kk; ++l) {
        const int a = p.exps[t * kk + l];
        mono *= x1[l * stride + static_cast<std::size_t>(a)] * x0[l * stride + static_cast<std::size_t>(deg[l] - a)];
      }
      acc += mono;
    }
    return acc;
  }

  int k_;
  std::vector<int> max_deg_;
  std::vector<double> shift_;
  std::vector<CompiledAtom> atoms_;
  bool need_l2_ = false;
  bool need_sup_ = false;
};

// Counts nonfinite samples and replaces them by zero.
using Kernel = std::function<double(const double*)>;

class GuardedEval {
 public:
  GuardedEval(const Kernel& f, std::uint64_t limit) : f_(f), limit_(limit) {}
  double operator()(const double* y) {
    ++evals_;
    const double v = f_(y);
    if (std::isfinite(v)) return v;
    if (++bad_ > limit_) {
      throw Error(ErrorCode::SingularIntegrand,
                  "integrand was not finite at " + std::to_string(bad_) + " sample points");
    }
    return 0.0;
  }
  std::uint64_t evals() const { return evals_; }

 private:
  const Kernel& f_;
  std::uint64_t limit_;
  std::uint64_t evals_ = 0;
  std::uint64_t bad_ = 0;
};

// ---- adaptive cubature (degree 7 rule with embedded degree 5 rule) --------

struct Region {
  std::vector<double> center;
  std::vector<double> half;
  double estimate = 0.0;
  double error = 0.0;
  int split_dim = 0;
  bool operator<(const Region& o) const { return error < o.error; }
};

class GenzMalik {
 public:
  explicit GenzMalik(int n) : n_(n) {
    const double nd = n;
    w1_ = (12824.0 - 9120.0 * nd + 400.0 * nd * nd) / 19683.0;
    w2_ = 980.0 / 6561.0;
    w3_ = (1820.0 - 400.0 * nd) / 19683.0;
    w4_ = 200.0 / 19683.0;
    w5_ = 6859.0 / 19683.0 / std::ldexp(1.0, n);
    v1_ = (729.0 - 950.0 * nd + 50.0 * nd * nd) / 729.0;
    v2_ = 245.0 / 486.0;
    v3_ = (265.0 - 100.0 * nd) / 1458.0;
    v4_ = 25.0 / 729.0;
  }

  void apply(Region& r, GuardedEval& f) const {
    const std::size_t n = static_cast<std::size_t>(n_);
    std::vector<double> x = r.center;
    const double f1 = f(x.data());
    double f2 = 0, f3 = 0, f4 = 0, f5 = 0;
    double best_diff = -1.0;
    r.split_dim = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double c = r.center[i];
      x[i] = c - kL2 * r.half[i];
      const double a1 = f(x.data());
      x[i] = c + kL2 * r.half[i];
      const double a2 = f(x.data());
      x[i] = c - kL3 * r.half[i];
      const double b1 = f(x.data());
      x[i] = c + kL3 * r.half[i];
      const double b2 = f(x.data());
      x[i] = c;
      f2 += a1 + a2;
      f3 += b1 + b2;
      const double diff = std::fabs(a1 + a2 - 2 * f1 - kRatio * (b1 + b2 - 2 * f1));
      if (diff > best_diff * (1 + 1e-12)) {
        best_diff = diff;
        r.split_dim = static_cast<int>(i);
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        for (int si : {-1, 1}) {
          for (int sj : {-1, 1}) {
            x[i] = r.center[i] + si * kL4 * r.half[i];
            x[j] = r.center[j] + sj * kL4 * r.half[j];
            f4 += f(x.data());
          }
        }
        x[i] = r.center[i];
        x[j] = r.center[j];
      }
    }
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
      for (std::size_t i = 0; i < n; ++i) {
        x[i] = r.center[i] + (((mask >> i) & 1) ? kL5 : -kL5) * r.half[i];
      }
      f5 += f(x.data());
    }
    double vol = 1.0;
    for (double h : r.half) vol *= 2 * h;
    const double i7 = vol * (w1_ * f1 + w2_ * f2 + w3_ * f3 + w4_ * f4 + w5_ * f5);
    const double i5 = vol * (v1_ * f1 + v2_ * f2 + v3_ * f3 + v4_ * f4);
    r.estimate = i7;
    r.error = std::fabs(i7 - i5);
  }

 private:
  static constexpr double kL2 = 0.35856858280031809;  // sqrt(9/70)
  static constexpr double kL3 = 0.94868329805051380;  // sqrt(9/10)
  static constexpr double kL4 = 0.94868329805051380;
  static constexpr double kL5 = 0.68824720161168529;  // sqrt(9/19)
  static constexpr double kRatio = (kL2 * kL2) / (kL3 * kL3);

  int n_;
  double w1_, w2_, w3_, w4_, w5_, v1_, v2_, v3_, v4_;
};

QuadResult adaptive_cubature(const Kernel& ev, int n, const QuadOptions& opts) {
  GenzMalik rule(n);
  GuardedEval f(ev, opts.singular_limit);
  std::priority_queue<Region> heap;
  Region root{std::vector<double>(static_cast<std::size_t>(n), 0.5),
              std::vector<double>(static_cast<std::size_t>(n), 0.5)};
  rule.apply(root, f);
  double total = root.estimate;
  double err = root.error;
  heap.push(std::move(root));
  // A few forced splits so a lucky low-order agreement cannot stop the run.
  int forced = 4 * n;
  while ((err > opts.tol || forced > 0) && f.evals() < opts.max_evals) {
    Region r = heap.top();
    heap.pop();
    total -= r.estimate;
    err -= r.error;
    const std::size_t d = static_cast<std::size_t>(r.split_dim);
    Region a = r;
    Region b = r;
    a.half[d] = b.half[d] = r.half[d] / 2;
    a.center[d] = r.center[d] - r.half[d] / 2;
    b.center[d] = r.center[d] + r.half[d] / 2;
    rule.apply(a, f);
    rule.apply(b, f);
    total += a.estimate + b.estimate;
    err += a.error + b.error;
    heap.push(std::move(a));
    heap.push(std::move(b));
    --forced;
  }
  // Resum to shed accumulated rounding from the running totals.
  double sum = 0.0;
  double esum = 0.0;
  while (!heap.empty()) {
    sum += heap.top().estimate;
    esum += heap.top().error;
    heap.pop();
  }
  QuadResult out;
  out.estimate = sum;
  out.error_bound = esum + 64 * std::numeric_limits<double>::epsilon() * std::fabs(sum);
  out.method = QuadMethod::AdaptiveCubature;
  out.nodes = f.evals();
  out.converged = out.error_bound <= opts.tol;
  return out;
}

// ---- randomized quasi Monte Carlo -----------------------------------------

double radical_inverse(std::uint64_t i, unsigned base) {
  double inv = 1.0 / base;
  double f = inv;
  double r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

QuadResult randomized_qmc(const Kernel& ev, int n, const QuadOptions& opts) {
  static const unsigned kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61};
  if (n > static_cast<int>(std::size(kPrimes))) {
    throw Error(ErrorCode::InvalidArgument, "too many factors for quasi Monte Carlo integration");
  }
  constexpr int kReplicates = 16;
  std::mt19937_64 rng(opts.seed);
  std::vector<std::vector<double>> shifts(kReplicates, std::vector<double>(static_cast<std::size_t>(n)));
  for (auto& s : shifts) {
    for (auto& x : s) x = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  }
  std::vector<double> sums(kReplicates, 0.0);
  std::vector<std::uint64_t> bad(kReplicates, 0);
  std::uint64_t done = 0;
  std::uint64_t target = 1024;
  QuadResult out;
  out.method = QuadMethod::QuasiMonteCarlo;
  const int threads = std::max(1, std::min(opts.threads, kReplicates));

  auto run_replicate = [&](int r, std::uint64_t from, std::uint64_t to) {
    GuardedEval f(ev, opts.singular_limit);
    std::vector<double> y(static_cast<std::size_t>(n));
    double s = 0.0;
    for (std::uint64_t i = from; i < to; ++i) {
      for (int d = 0; d < n; ++d) {
        double u = radical_inverse(i + 1, kPrimes[d]) + shifts[static_cast<std::size_t>(r)][static_cast<std::size_t>(d)];
        if (u >= 1.0) u -= 1.0;
        y[static_cast<std::size_t>(d)] = u;
      }
      s += f(y.data());
    }
    sums[static_cast<std::size_t>(r)] += s;
  };

  for (;;) {
    if (threads == 1) {
      for (int r = 0; r < kReplicates; ++r) run_replicate(r, done, target);
    } else {
      std::vector<std::thread> pool;
      std::exception_ptr failure;
      std::mutex fail_mutex;
      for (int w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
          try {
            for (int r = w; r < kReplicates; r += threads) run_replicate(r, done, target);
          } catch (...) {
            std::lock_guard<std::mutex> lock(fail_mutex);
            if (!failure) failure = std::current_exception();
          }
        });
      }
      for (auto& t : pool) t.join();
      if (failure) std::rethrow_exception(failure);
    }
    done = target;
    double mean = 0.0;
    for (double s : sums) mean += s / static_cast<double>(done);
    mean /= kReplicates;
    double var = 0.0;
    for (double s : sums) {
      const double d = s / static_cast<double>(done) - mean;
      var += d * d;
    }
    var /= (kReplicates - 1);
    const double stderr_ = std::sqrt(var / kReplicates);
    out.estimate = mean;
    out.error_bound = 4.0 * stderr_;
    out.nodes = done * kReplicates;
    if (out.error_bound <= opts.tol || out.nodes * 2 > opts.max_evals) break;
    target *= 2;
  }
  out.converged = out.error_bound <= opts.tol;
  return out;
}

QuadResult integrate_kernel(const Kernel& ev, int m, const QuadOptions& opts) {
  if (m == 0) {
    QuadResult r;
    r.estimate = ev(nullptr);
    r.error_bound = 16 * std::numeric_limits<double>::epsilon() * std::fabs(r.estimate);
    r.method = QuadMethod::AdaptiveCubature;
    r.nodes = 1;
    return r;
  }
  QuadResult r = m <= 2 ? adaptive_cubature(ev, 2 * m, opts) : randomized_qmc(ev, 2 * m, opts);
  if (!r.converged && opts.strict) {
    throw Error(ErrorCode::NoConvergence, "quadrature stopped at error " + std::to_string(r.error_bound) +
                                              " above tolerance " + std::to_string(opts.tol));
  }
  return r;
}

// A lone log |f~|^2 is integrated over one P^1 factor in closed form:
// for g(x) = sum_a c_a x_0^(d-a) x_1^a with top coefficient c_e and roots
// alpha of g(1, z), the fibre integral is 2 log|c_e| + sum log(1 + |alpha|^2) - d.
bool fibre_reducible(const Integrand& g) {
  if (g.num_vars() < 2 || g.terms().size() != 1) return false;
  const Atom& a = g.terms().front().second;
  return a.kind == AtomKind::LogNormSq && a.tuple.size() == 1;
}

class FibreEvaluator {
 public:
  explicit FibreEvaluator(const Integrand& g) : k_(g.num_vars() - 1) {
    const auto& [c, atom] = g.terms().front();
    coeff_ = to_double(c);
    const auto& deg = atom.degrees;
    fibre_var_ = static_cast<int>(std::max_element(deg.begin(), deg.end()) - deg.begin());
    fibre_deg_ = deg[static_cast<std::size_t>(fibre_var_)];
    for (int l = 0; l <= k_; ++l) {
      if (l != fibre_var_) degrees_.push_back(deg[static_cast<std::size_t>(l)]);
    }
    std::vector<MultiPoly> cs = atom.tuple.front().coefficients_in(fibre_var_);
    cs.resize(static_cast<std::size_t>(fibre_deg_ + 1), MultiPoly(k_ + 1));
    for (auto& f : cs) {
      CompiledPoly p;
      const MultiPoly reduced = f.remove_variable(fibre_var_);
      for (const auto& [e, coef] : reduced.terms()) {
        p.coeffs.push_back(coef.get_d());
        p.exps.insert(p.exps.end(), e.begin(), e.end());
      }
      coeffs_.push_back(std::move(p));
    }
    for (int l = 0; l < k_; ++l) shift_.push_back(std::fmod((l + 1) * std::numbers::phi, 1.0));
    stride_ = 1 + (degrees_.empty() ? 0 : *std::max_element(degrees_.begin(), degrees_.end()));
  }

  int outer_vars() const { return k_; }

  double operator()(const double* y) const {
    thread_local std::vector<cplx> p0, p1, c;
    p0.resize(stride_ * static_cast<std::size_t>(k_));
    p1.resize(stride_ * static_cast<std::size_t>(k_));
    double weight = 1.0;
    for (int l = 0; l < k_; ++l) {
      const double half = 0.5 * kPi * y[2 * l];
      weight *= 0.5 * kPi * std::sin(kPi * y[2 * l]);
      const cplx x1 = std::sin(half) * std::polar(1.0, 2.0 * kPi * (y[2 * l + 1] + shift_[static_cast<std::size_t>(l)]));
      const std::size_t base = stride_ * static_cast<std::size_t>(l);
      p0[base] = p1[base] = 1.0;
      for (std::size_t i = 1; i < stride_; ++i) {
        p0[base + i] = p0[base + i - 1] * std::cos(half);
        p1[base + i] = p1[base + i - 1] * x1;
      }
    }
    c.resize(coeffs_.size());
    for (std::size_t a = 0; a < coeffs_.size(); ++a) {
      cplx acc = 0.0;
      const auto& p = coeffs_[a];
      for (std::size_t t = 0; t < p.coeffs.size(); ++t) {
        cplx mono = p.coeffs[t];
        for (std::size_t l = 0; l < static_cast<std::size_t>(k_); ++l) {
          const int e = p.exps[t * static_cast<std::size_t>(k_) + l];
          mono *= p1[l * stride_ + static_cast<std::size_t>(e)] * p0[l * stride_ + static_cast<std::size_t>(degrees_[l] - e)];
        }
        acc += mono;
      }
      c[a] = acc;
    }
    return coeff_ * fibre_integral(c) * weight;
  }

 private:
  double fibre_integral(const std::vector<cplx>& c) const {
    int lo = -1, hi = -1;
    for (int a = 0; a <= fibre_deg_; ++a) {
      if (c[static_cast<std::size_t>(a)] != 0.0) {
        if (lo < 0) lo = a;
        hi = a;
      }
    }
    if (hi < 0) return -std::numeric_limits<double>::infinity();
    // work in the chart where the leading coefficient is the larger end
    const bool forward = std::abs(c[static_cast<std::size_t>(hi)]) >= std::abs(c[static_cast<std::size_t>(lo)]);
    const int n = hi - lo;
    const cplx lead = c[static_cast<std::size_t>(forward ? hi : lo)];
    double total = 2.0 * std::log(std::abs(lead)) - fibre_deg_;
    auto coef = [&](int k) {  // coefficient of w^k in the chosen chart, after removing w^lo
      return forward ? c[static_cast<std::size_t>(lo + k)] : c[static_cast<std::size_t>(hi - k)];
    };
    if (n == 1) {
      total += std::log1p(std::norm(coef(0) / lead));
    } else if (n > 1) {
      Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(n, n);
      for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
      for (int i = 0; i < n; ++i) comp(i, n - 1) = -coef(i) / lead;
      Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(comp, false);
      for (int i = 0; i < n; ++i) total += std::log1p(std::norm(es.eigenvalues()(i)));
    }
    return total;
  }

  int k_;
  int fibre_var_ = 0;
  int fibre_deg_ = 0;
  double coeff_ = 1.0;
  std::vector<int> degrees_;
  std::vector<CompiledPoly> coeffs_;
  std::vector<double> shift_;
  std::size_t stride_ = 1;
};

QuadResult integrate_numeric(const Integrand& g, const QuadOptions& opts) {
  if (opts.analytic_reduction && fibre_reducible(g)) {
    FibreEvaluator fe(g);
    const Kernel k = [&fe](const double* y) { return fe(y); };
    return integrate_kernel(k, fe.outer_vars(), opts);
  }
  Evaluator ev(g);
  const Kernel k = [&ev](const double* y) { return ev(y); };
  return integrate_kernel(k, g.num_vars(), opts);
}

QuadResult combine(const LogLinear& exact, const std::optional<QuadResult>& numeric) {
  QuadResult out;
  if (!numeric) {
    out.symbolic = exact;
    out.estimate = exact.evaluate();
    out.method = QuadMethod::Exact;
    return out;
  }
  out = *numeric;
  out.symbolic.reset();
  out.estimate += exact.evaluate();
  return out;
}

}  // namespace

// ---- Integrand -------------------------------------------------------------

Integrand& Integrand::add_constant(const Rational& c) {
  terms_.emplace_back(c, Atom{});
  return *this;
}

Integrand& Integrand::add_log_norm_sq(const Rational& c, std::vector<MultiPoly> tuple, std::vector<int> degrees) {
  check_tuple(tuple, degrees, num_vars_);
  terms_.emplace_back(c, Atom{AtomKind::LogNormSq, std::move(tuple), std::move(degrees), -1});
  return *this;
}

Integrand& Integrand::add_log_sum_sq(const Rational& c, const std::vector<MultiPoly>& tuple) {
  const auto e = actual_degrees(tuple, num_vars_);
  add_log_norm_sq(c, tuple, e);
  for (int l = 0; l < num_vars_; ++l) {
    if (e[static_cast<std::size_t>(l)] > 0) add_log_one_plus_sq(c * e[static_cast<std::size_t>(l)], l);
  }
  return *this;
}

Integrand& Integrand::add_log_one_plus_sq(const Rational& c, int var) {
  if (var < 0 || var >= num_vars_) throw Error(ErrorCode::IndexOutOfRange, "integrand variable out of range");
  terms_.emplace_back(c, Atom{AtomKind::LogOnePlusSq, {}, {}, var});
  return *this;
}

Integrand& Integrand::add_log_norm_max(const Rational& c, std::vector<MultiPoly> tuple, std::vector<int> degrees) {
  check_tuple(tuple, degrees, num_vars_);
  terms_.emplace_back(c, Atom{AtomKind::LogNormMax, std::move(tuple), std::move(degrees), -1});
  return *this;
}

Integrand& Integrand::add_log_max_abs(const Rational& c, const std::vector<MultiPoly>& tuple) {
  const auto e = actual_degrees(tuple, num_vars_);
  add_log_norm_max(c, tuple, e);
  for (int l = 0; l < num_vars_; ++l) {
    if (e[static_cast<std::size_t>(l)] == 0) continue;
    MultiPoly one = MultiPoly::constant(num_vars_, 1);
    std::vector<int> deg(static_cast<std::size_t>(num_vars_), 0);
    deg[static_cast<std::size_t>(l)] = 1;
    // log max(1,|z_l|) = -log max|x~| for the tuple (1) homogenized to degree e_l = 1
    add_log_norm_max(-c * e[static_cast<std::size_t>(l)], {one}, deg);
  }
  return *this;
}

Integrand& Integrand::add(const Integrand& other, const Rational& scale) {
  if (other.num_vars_ != num_vars_) throw Error(ErrorCode::VarMismatch, "adding integrands on different bases");
  for (const auto& [c, a] : other.terms_) terms_.emplace_back(c * scale, a);
  return *this;
}

std::string Integrand::canonical() const {
  json j;
  j["m"] = num_vars_;
  json t = json::array();
  for (const auto& [c, a] : terms_) {
    json e = atom_json(a);
    e["c"] = c.get_str();
    t.push_back(e);
  }
  j["terms"] = t;
  return j.dump();
}

// ---- results ---------------------------------------------------------------

std::string_view to_string(QuadMethod m) {
  switch (m) {
    case QuadMethod::Exact: return "exact";
    case QuadMethod::AdaptiveCubature: return "adaptive-cubature";
    case QuadMethod::QuasiMonteCarlo: return "quasi-monte-carlo";
  }
  return "exact";
}

QuadMethod quad_method_from_string(std::string_view s) {
  if (s == "exact") return QuadMethod::Exact;
  if (s == "adaptive-cubature") return QuadMethod::AdaptiveCubature;
  if (s == "quasi-monte-carlo") return QuadMethod::QuasiMonteCarlo;
  throw Error(ErrorCode::ParseError, "unknown quadrature method '" + std::string(s) + "'");
}

RigorousValue QuadResult::value() const {
  if (symbolic) return RigorousValue::exact(*symbolic);
  return RigorousValue::approx(estimate, error_bound);
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string cache_key(const Integrand& g, const QuadOptions& opts) {
  std::string text = g.canonical();
  text += opts.analytic_reduction ? "|r1" : "|r0";
  if (g.num_vars() > 2) text += "|s" + std::to_string(opts.seed);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(text)));
  return buf;
}

QuadResult fs_integrate(const Integrand& g, const QuadOptions& opts) {
  if (!(opts.tol > 0)) throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");
  Reduced red = reduce(g, opts.analytic_reduction);
  std::optional<QuadResult> numeric;
  if (red.has_numeric) numeric = integrate_numeric(red.numeric, opts);
  return combine(red.exact, numeric);
}

QuadResult fs_integrate_function(int m, const std::function<double(const std::vector<std::complex<double>>&)>& f,
                                 const QuadOptions& opts) {
  if (!(opts.tol > 0)) throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");
  std::vector<double> shift;
  for (int l = 0; l < m; ++l) shift.push_back(std::fmod((l + 1) * std::numbers::phi, 1.0));
  const Kernel k = [&](const double* y) {
    thread_local std::vector<cplx> z;
    z.resize(static_cast<std::size_t>(m));
    double weight = 1.0;
    for (int l = 0; l < m; ++l) {
      const double v = y[2 * l];
      weight *= 0.5 * kPi * std::sin(kPi * v);
      z[static_cast<std::size_t>(l)] =
          std::polar(std::tan(0.5 * kPi * v), 2.0 * kPi * (y[2 * l + 1] + shift[static_cast<std::size_t>(l)]));
    }
    return f(z) * weight;
  };
  return integrate_kernel(k, m, opts);
}

QuadResult FsIntegrator::integrate(const Integrand& g) const { return integrate(g, opts_.tol); }

QuadResult FsIntegrator::integrate(const Integrand& g, double tol) const {
  QuadOptions opts = opts_;
  opts.tol = tol;
  if (!(opts.tol > 0)) throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");
  Reduced red = reduce(g, opts.analytic_reduction);
  std::optional<QuadResult> numeric;
  if (red.has_numeric) {
    const std::string key = cache_key(red.numeric, opts);
    if (cache_) numeric = cache_->lookup(key, opts.tol);
    if (!numeric) {
      numeric = integrate_numeric(red.numeric, opts);
      if (cache_) cache_->store(key, opts.tol, *numeric);
    }
  }
  return combine(red.exact, numeric);
}

}  // namespace arak
