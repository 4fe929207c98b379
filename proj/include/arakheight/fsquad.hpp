#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "arakheight/logval.hpp"
#include "arakheight/poly.hpp"

namespace arak {

/// Building blocks of an integrand on (P^1)^m. Tuples are polynomials in m
/// variables; `degrees` is the multidegree used to homogenize them and must
/// dominate the actual partial degrees.
///
///   Constant       1
///   LogNormSq      log sum_k |f~_k(x)|^2, x in l2-normalized coordinates
///                  = log sum_k |f_k(z)|^2 - sum_l e_l log(1 + |z_l|^2)
///   LogOnePlusSq   log(1 + |z_l|^2)
///   LogNormMax     log max_k |f~_k(x)|, x in sup-normalized coordinates
///                  = log max_k |f_k(z)| - sum_l e_l log max(1, |z_l|)
enum class AtomKind { Constant, LogNormSq, LogOnePlusSq, LogNormMax };

struct Atom {
  AtomKind kind = AtomKind::Constant;
  std::vector<MultiPoly> tuple;
  std::vector<int> degrees;
  int var = -1;
};

/// Rational linear combination of atoms.
class Integrand {
 public:
  explicit Integrand(int num_vars) : num_vars_(num_vars) {}

  int num_vars() const { return num_vars_; }
  const std::vector<std::pair<Rational, Atom>>& terms() const { return terms_; }

  Integrand& add_constant(const Rational& c);
  Integrand& add_log_norm_sq(const Rational& c, std::vector<MultiPoly> tuple, std::vector<int> degrees);
  /// log sum |f_k(z)|^2 without normalization: rewritten as LogNormSq plus
  /// LogOnePlusSq terms.
  Integrand& add_log_sum_sq(const Rational& c, const std::vector<MultiPoly>& tuple);
  Integrand& add_log_one_plus_sq(const Rational& c, int var);
  Integrand& add_log_norm_max(const Rational& c, std::vector<MultiPoly> tuple, std::vector<int> degrees);
  /// log max(|f_k(z)|) without normalization.
  Integrand& add_log_max_abs(const Rational& c, const std::vector<MultiPoly>& tuple);
  Integrand& add(const Integrand& other, const Rational& scale = 1);

  /// Deterministic text used for hashing and the cache.
  std::string canonical() const;

 private:
  int num_vars_;
  std::vector<std::pair<Rational, Atom>> terms_;
};

enum class QuadMethod { Exact, AdaptiveCubature, QuasiMonteCarlo };
std::string_view to_string(QuadMethod m);
QuadMethod quad_method_from_string(std::string_view s);

struct QuadResult {
  double estimate = 0.0;
  double error_bound = 0.0;
  QuadMethod method = QuadMethod::Exact;
  std::uint64_t nodes = 0;
  bool converged = true;
  /// Present when the whole integral was evaluated in closed form.
  std::optional<LogLinear> symbolic;

  RigorousValue value() const;
};

struct QuadOptions {
  double tol = 1e-6;
  std::uint64_t seed = 20240601;
  std::uint64_t max_evals = 5'000'000;
  /// Nonfinite integrand values tolerated before SingularIntegrand.
  std::uint64_t singular_limit = 1000;
  /// Integrate log(1+|z|^2), degree shifts, contents and inert variables in
  /// closed form. Disabled only to test the numerical path.
  bool analytic_reduction = true;
  /// Throw NoConvergence instead of returning a result with converged=false.
  bool strict = false;
  int threads = 1;
};

/// Uncached integration against the product Fubini-Study probability measure.
QuadResult fs_integrate(const Integrand& g, const QuadOptions& opts);

/// Integrates an arbitrary function of z in C^m (affine coordinates) against
/// the same measure. Used for moment checks and ad hoc integrands.
QuadResult fs_integrate_function(int m, const std::function<double(const std::vector<std::complex<double>>&)>& f,
                                 const QuadOptions& opts);

/// Persistent content-addressed store of quadrature results. One JSON file
/// per key under `dir`; an empty dir keeps everything in memory.
class QuadCache {
 public:
  explicit QuadCache(std::string dir = {});

  std::optional<QuadResult> lookup(const std::string& key, double tol) const;
  void store(const std::string& key, double tol, const QuadResult& result);
  /// Removes every entry, in memory and on disk. Returns the file count.
  std::size_t clear();
  std::size_t disk_entries() const;
  const std::string& dir() const { return dir_; }

  /// Directory from ARAKHEIGHT_CACHE_DIR, or empty.
  static std::string default_dir();

 private:
  struct Entry {
    double tol;
    QuadResult result;
  };
  std::string path_for(const std::string& key) const;

  std::string dir_;
  mutable std::mutex mutex_;
  mutable std::unordered_map<std::string, Entry> memo_;
};

std::string cache_key(const Integrand& g, const QuadOptions& opts);
std::uint64_t fnv1a64(std::string_view text);

/// Integration front end with an optional cache shared across calls.
class FsIntegrator {
 public:
  explicit FsIntegrator(QuadOptions opts = {}, std::shared_ptr<QuadCache> cache = nullptr)
      : opts_(opts), cache_(std::move(cache)) {}

  QuadResult integrate(const Integrand& g) const;
  QuadResult integrate(const Integrand& g, double tol) const;

  const QuadOptions& options() const { return opts_; }
  QuadOptions& options() { return opts_; }
  const std::shared_ptr<QuadCache>& cache() const { return cache_; }

 private:
  QuadOptions opts_;
  std::shared_ptr<QuadCache> cache_;
};

}  // namespace arak
