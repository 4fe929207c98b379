#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "arakheight/fsquad.hpp"
#include "arakheight/logval.hpp"
#include "arakheight/projpoint.hpp"

namespace arak {

/// Pullback of O(1)_FS along a tuple of polynomials. The metric weight is
/// (1/2) log sum |f~_k|^2 with f~ the multihomogenization to `degrees`, which
/// may exceed the actual degrees; coordinates need not be coprime.
struct SectionClass {
  std::vector<MultiPoly> tuple;
  std::vector<int> degrees;

  static SectionClass of(const ProjPoint& p);
  static SectionClass raw(std::vector<MultiPoly> tuple);
  int num_vars() const { return static_cast<int>(degrees.size()); }
};

/// Hermitian Q-line bundle on (P^1_Z)^m: (tensor_l p_l^* O(q_l)_FS) tensor
/// (O, lambda |.|_can) tensor (optional section pullback), with c = -log lambda.
struct MetrizedBundle {
  std::vector<Rational> fs;
  LogLinear constant;
  std::optional<SectionClass> section;

  static MetrizedBundle zero(int m);
  static MetrizedBundle fs_factor(int m, int i, const Rational& q = 1);
  static MetrizedBundle fs_product(std::vector<Rational> q);
  static MetrizedBundle twist(int m, const LogLinear& c);
  static MetrizedBundle pullback(const ProjPoint& p);
  static MetrizedBundle pullback(const SectionClass& s);

  int num_vars() const { return static_cast<int>(fs.size()); }
  /// fs part >= 0, constant >= 0; a section pullback is always nef.
  bool is_nef() const;
  bool has_positive_part() const;

  MetrizedBundle& operator+=(const MetrizedBundle& other);
  MetrizedBundle& operator*=(const Rational& t);
  friend MetrizedBundle operator+(MetrizedBundle a, const MetrizedBundle& b) { return a += b; }
  friend MetrizedBundle operator*(MetrizedBundle a, const Rational& t) { return a *= t; }

  std::string to_string() const;
};

/// What a factor of the base is replaced by.
struct FactorSpec {
  enum class Kind { Free, Point };
  Kind kind = Kind::Free;
  Integer a = 1;  // the point (a : b), affine coordinate z = b / a
  Integer b = 0;

  static FactorSpec free() { return {}; }
  static FactorSpec point(const Integer& a, const Integer& b);
};

struct IntersectionProblem {
  int m = 0;
  std::vector<MetrizedBundle> classes;
  std::vector<FactorSpec> factors;  // empty means all free
  std::optional<Integer> fiber;     // vertical fibre over this prime

  int free_factors() const;
  /// Number of classes the base cycle expects.
  int arithmetic_dim() const;
  void validate() const;
};

/// Permanent of the square matrix whose rows are the given multidegrees:
/// the mixed degree of the corresponding line bundles on (P^1)^m.
Rational mixed_degree(const std::vector<std::vector<Rational>>& rows);

/// One node of the --explain tree.
struct TraceNode {
  std::string label;
  RigorousValue value;
  std::vector<TraceNode> children;
};

struct EngineOptions {
  double tol = 1e-6;
  /// Factor priority for peeling; empty means ascending index.
  std::vector<int> peel_order;
};

struct RestrictionResult {
  IntersectionProblem problem;
  RigorousValue correction;
  CorrectionLedger ledger;
};

class IntersectionEngine {
 public:
  explicit IntersectionEngine(EngineOptions opts = {}, FsIntegrator integrator = FsIntegrator{});

  RigorousValue degree(const IntersectionProblem& prob, TraceNode* trace = nullptr) const;

  /// Restriction of the problem to the divisor z_i = infinity with the peeled
  /// class removed. The returned problem carries the re-normalized section;
  /// `correction` is what re-normalization removed (content, gcd, degree
  /// drops), so degree(problem) + correction is the restricted degree.
  RestrictionResult restrict_to_infinity(const IntersectionProblem& prob, int factor, int peeled_class = -1) const;

  const EngineOptions& options() const { return opts_; }
  const FsIntegrator& integrator() const { return integrator_; }

 private:
  EngineOptions opts_;
  FsIntegrator integrator_;
};

/// Convenience wrapper with a default engine.
RigorousValue intersection_degree(const IntersectionProblem& prob, double tol = 1e-6);

std::string problem_to_json(const IntersectionProblem& prob);
IntersectionProblem problem_from_json(const std::string& text);
std::string trace_to_json(const TraceNode& node, int indent = 2);

}  // namespace arak
