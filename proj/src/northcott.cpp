#include "arakheight/northcott.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <thread>

namespace arak {

namespace {

double half_xlogx(int x) { return x > 0 ? 0.5 * x * std::log(static_cast<double>(x)) : 0.0; }

std::vector<Exponent> box_exponents(const std::vector<int>& bounds) {
  std::vector<Exponent> out{Exponent()};
  for (int b : bounds) {
    std::vector<Exponent> next;
    for (const auto& e : out) {
      for (int k = 0; k <= b; ++k) {
        Exponent f = e;
        f.push_back(k);
        next.push_back(f);
      }
    }
    out.swap(next);
  }
  return out;
}

const Integer& lex_extreme(const MultiPoly& f, bool largest) {
  const auto* best = &*f.terms().begin();
  for (const auto& t : f.terms()) {
    const bool less = std::lexicographical_compare(t.first.begin(), t.first.end(), best->first.begin(), best->first.end());
    if (largest ? (!less && t.first != best->first) : less) best = &t;
  }
  return best->second;
}

double log_abs(const Integer& c) {
  long exp = 0;
  const double mant = mpz_get_d_2exp(&exp, c.get_mpz_t());
  return std::log(std::fabs(mant)) + static_cast<double>(exp) * std::log(2.0);
}

}  // namespace

bool SearchBox::empty() const {
  return coeff_bound < 1 || std::any_of(degree_bounds.begin(), degree_bounds.end(), [](int x) { return x < 0; });
}

std::uint64_t SearchBox::monomials() const {
  if (empty()) return 0;
  std::uint64_t t = 1;
  for (int b : degree_bounds) t *= static_cast<std::uint64_t>(b + 1);
  return t;
}

std::uint64_t SearchBox::tuples() const {
  if (empty()) return 0;
  const double digits = static_cast<double>(monomials()) * (n + 1);
  const double base = 2.0 * coeff_bound.get_d() + 1.0;
  const double logc = digits * std::log(base);
  if (logc >= std::log(1.8e19)) return std::numeric_limits<std::uint64_t>::max();
  std::uint64_t c = 1;
  const std::uint64_t b = static_cast<std::uint64_t>(base);
  for (std::uint64_t k = 0; k < static_cast<std::uint64_t>(digits); ++k) c *= b;
  return c;
}

double coefficient_factor(const std::vector<int>& degree_bounds) {
  double logk = 0;
  for (int D : degree_bounds) {
    double best = 0;
    for (int e = 0; e <= D; ++e) {
      for (int l = 0; l <= e; ++l) best = std::max(best, half_xlogx(e) - half_xlogx(l) - half_xlogx(e - l));
    }
    logk += best;
  }
  return std::exp(logk);
}

SearchBox derive_box(int n, int d, double bound, const Polarization& pol, const NorthcottOptions& opts) {
  if (n < 1 || d < 1) throw Error(ErrorCode::InvalidArgument, "enumeration needs n >= 1 and d >= 1");
  if (pol.d != d) throw Error(ErrorCode::VarMismatch, "polarization dimension differs from d");
  const FairlyLargeCertificate cert = certify_fairly_large(pol);
  SearchBox box;
  box.n = n;
  box.d = d;
  box.bound = bound;
  box.epsilon = opts.epsilon < 0 ? 10 * opts.tol : opts.epsilon;
  box.margin = opts.margin;
  box.certificate_scale = cert.exponent_product();
  box.polarization = pol.name;
  // FS height of a point is at most prod(a_i) times its height under pol
  const double fs_bound = mpq_get_d(box.certificate_scale.get_mpq_t()) * bound + box.epsilon;
  const int D = static_cast<int>(std::floor((2 * fs_bound + box.margin) / std::log(2.0)));
  box.degree_bounds.assign(static_cast<std::size_t>(d), D);
  if (D < 0) return box;
  const double h = coefficient_factor(box.degree_bounds) * std::exp(fs_bound);
  box.coeff_bound = Integer(std::floor(h));
  return box;
}

namespace {

// A univariate f = c * prod (z - alpha) has integral of log|f| against the
// FS measure equal to log|c| + sum (1/2) log(1 + |alpha|^2), and
// prod (1 + |alpha|^2) >= sum_k |e_k(alpha)|^2 / binom(e, k).
double univariate_bound(const MultiPoly& f, int var) {
  const int e = f.partial_degree(var).value();
  Rational s = 0;
  Integer binom = 1;
  std::vector<Integer> c(static_cast<std::size_t>(e + 1), 0);
  for (const auto& [ex, a] : f.terms()) c[static_cast<std::size_t>(ex[static_cast<std::size_t>(var)])] = a;
  for (int k = 0; k <= e; ++k) {
    s += Rational(c[static_cast<std::size_t>(k)] * c[static_cast<std::size_t>(k)], binom);
    binom = binom * (e - k) / (k + 1);
  }
  return 0.5 * std::log(mpq_get_d(s.get_mpq_t()));
}

double coefficient_lower_bound(const ProjPoint& p) {
  double lb = 0;
  for (const auto& f : p.coords()) {
    if (f.is_zero()) continue;
    lb = std::max({lb, log_abs(lex_extreme(f, true)), log_abs(lex_extreme(f, false))});
    int var = -1;
    bool univariate = true;
    for (const auto& [ex, a] : f.terms()) {
      for (int i = 0; i < static_cast<int>(ex.size()); ++i) {
        if (ex[static_cast<std::size_t>(i)] == 0) continue;
        if (var >= 0 && var != i) univariate = false;
        var = i;
      }
    }
    if (univariate && var >= 0) lb = std::max(lb, univariate_bound(f, var) - 1e-12);
  }
  return lb;
}

int max_degree(const ProjPoint& p) {
  int emax = 0;
  for (int e : p.multidegree()) emax = std::max(emax, e);
  return emax;
}

}  // namespace

double fs_height_lower_bound(const ProjPoint& p) {
  return std::max(max_degree(p) * std::log(2.0) / 2, coefficient_lower_bound(p));
}

std::string_view to_string(PointStatus s) { return s == PointStatus::In ? "in" : "undecided"; }

std::vector<ProjPoint> Enumeration::members() const {
  std::vector<ProjPoint> out;
  for (const auto& p : points) {
    if (p.status == PointStatus::In) out.push_back(p.point);
  }
  return out;
}

std::vector<ProjPoint> Enumeration::undecided() const {
  std::vector<ProjPoint> out;
  for (const auto& p : points) {
    if (p.status == PointStatus::Undecided) out.push_back(p.point);
  }
  return out;
}

Enumeration enumerate_bounded(int n, int d, double bound, const Polarization& pol, const NorthcottOptions& opts,
                              const IntersectionEngine& engine) {
  Enumeration out;
  out.box = derive_box(n, d, bound, pol, opts);
  const SearchBox& box = out.box;
  if (box.empty()) return out;
  const std::uint64_t total = box.tuples();
  if (total > opts.budget) {
    throw Error(ErrorCode::BoxOverflow, "search box has " +
                                            (total == std::numeric_limits<std::uint64_t>::max() ? std::string("> 1.8e19")
                                                                                                : std::to_string(total)) +
                                            " coefficient tuples, budget " + std::to_string(opts.budget));
  }
  out.scanned = total;

  const std::vector<Exponent> monos = box_exponents(box.degree_bounds);
  const std::size_t slots = monos.size() * static_cast<std::size_t>(n + 1);
  const long hb = box.coeff_bound.get_si();
  const std::uint64_t radix = static_cast<std::uint64_t>(2 * hb + 1);

  // Scan: each worker takes a stride of tuple indices and keeps the distinct
  // normalized points it meets. Tuples with a negative first coefficient or
  // a common integer factor are skipped: their normalized points also arise
  // from a tuple that is kept.
  const int threads = std::max(1, opts.threads);
  std::vector<std::map<std::string, ProjPoint>> found(static_cast<std::size_t>(threads));
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto scan = [&](int t) {
    std::vector<long> digits(slots);
    try {
      for (std::uint64_t idx = static_cast<std::uint64_t>(t); idx < total; idx += static_cast<std::uint64_t>(threads)) {
        std::uint64_t r = idx;
        long g = 0;
        long first = 0;
        for (std::size_t s = 0; s < slots; ++s) {
          digits[s] = static_cast<long>(r % radix) - hb;
          r /= radix;
          if (digits[s] != 0) {
            if (first == 0) first = digits[s];
            g = std::gcd(g, std::labs(digits[s]));
          }
        }
        if (first <= 0 || g != 1) continue;
        std::vector<MultiPoly> coords(static_cast<std::size_t>(n + 1), MultiPoly(d));
        for (std::size_t s = 0; s < slots; ++s) {
          if (digits[s] != 0) coords[s / monos.size()].add_term(monos[s % monos.size()], Integer(digits[s]));
        }
        NormalizeResult nr = normalize(coords);
        found[static_cast<std::size_t>(t)].emplace(nr.point.to_string(), std::move(nr.point));
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };
  {
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(scan, t);
    scan(0);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  std::map<std::string, ProjPoint> merged;
  for (auto& m : found) merged.merge(m);
  std::vector<ProjPoint> distinct;
  for (auto& [k, p] : merged) distinct.push_back(std::move(p));
  std::sort(distinct.begin(), distinct.end(), canonical_less);
  out.distinct = distinct.size();

  // exact prefilter, then heights for the survivors
  const double scale = mpq_get_d(box.certificate_scale.get_mpq_t());
  std::vector<ProjPoint> survivors;
  for (auto& p : distinct) {
    const double deg_part = (max_degree(p) * std::log(2.0) - box.margin) / 2;
    const double lower = std::max(deg_part, coefficient_lower_bound(p)) / scale;
    if (lower > bound + 1e-12) {
      ++out.prefiltered;
      continue;
    }
    survivors.push_back(std::move(p));
  }
  const std::vector<RigorousValue> heights = height_batch(survivors, pol, engine, threads);
  out.evaluated = survivors.size();
  for (std::size_t k = 0; k < survivors.size(); ++k) {
    const RigorousValue& h = heights[k];
    const double err = h.error_bound;
    PointStatus status;
    if (std::fabs(h.numeric - bound) <= err && err > 0) {
      status = PointStatus::Undecided;
    } else if (h.numeric <= bound) {
      status = PointStatus::In;
    } else {
      continue;
    }
    out.points.push_back(BoundedPoint{std::move(survivors[k]), h, status});
  }
  return out;
}

std::vector<NorthcottRow> northcott_report(int n, int d, const std::vector<double>& ladder, const Polarization& pol,
                                           const NorthcottOptions& opts, const IntersectionEngine& engine) {
  std::vector<NorthcottRow> rows;
  for (double m : ladder) {
    const Enumeration e = enumerate_bounded(n, d, m, pol, opts, engine);
    NorthcottRow row;
    row.bound = m;
    row.in = e.members().size();
    row.undecided = e.undecided().size();
    row.box_points = e.distinct;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace arak
