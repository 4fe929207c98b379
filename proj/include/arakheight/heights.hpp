#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "arakheight/arakelov.hpp"

namespace arak {

/// Ordered list of d nef bundles on (P^1_Z)^d, one per slot.
struct Polarization {
  int d = 0;
  std::vector<MetrizedBundle> bundles;
  std::string name = "custom";

  /// (p_1^* O(1)_FS, ..., p_d^* O(1)_FS)
  static Polarization fs(int d);
  /// every slot H = tensor of all p_l^* O(1)_FS
  static Polarization b0(int d);
  /// slot j replaced by (O, lambda_i |.|); indices are 0-based, i != j
  static Polarization bij(int d, int i, int j, const IntersectionEngine& engine = IntersectionEngine{});
  /// slot i replaced by the twist with constant c = -log lambda
  static Polarization degenerate(int d, int i, const LogLinear& c);
  /// fs | b0 | b1 | bij:i,j | degenerate:i,lambda  (1-based indices, lambda rational)
  static Polarization preset(const std::string& spec, int d);

  void validate() const;
};

/// lambda_i = exp(-deg(c1(M_i)^2) / deg(M_i)) for M_i = O(1)_FS, recomputed by
/// the engine. `minus_log` is -log lambda_i.
struct LambdaConstant {
  int index = 0;
  double value = 1.0;
  LogLinear minus_log;
};
LambdaConstant lambda_constant(int i, const IntersectionEngine& engine = IntersectionEngine{});

RigorousValue height_point(const ProjPoint& p, const Polarization& pol,
                           const IntersectionEngine& engine = IntersectionEngine{}, TraceNode* trace = nullptr);

/// Heights of many points, split over `threads` workers; order is preserved.
std::vector<RigorousValue> height_batch(const std::vector<ProjPoint>& points, const Polarization& pol,
                                        const IntersectionEngine& engine, int threads);

struct Prop21Report {
  RigorousValue lhs;  // h under B0
  RigorousValue rhs;  // d! h_B1 + (d!/2) sum h_Bij
  RigorousValue residual;
  RigorousValue h_b1;
  std::vector<std::pair<std::pair<int, int>, RigorousValue>> h_bij;
};
Prop21Report compare_prop21(const ProjPoint& p, const IntersectionEngine& engine = IntersectionEngine{});

/// Monomial X0^alpha X1^beta on one P^1 factor.
struct MonomialFactor {
  int alpha = 0;
  int beta = 0;
};

/// sup over P^1(C) of ||X0^alpha X1^beta||_FS.
double monomial_sup(int alpha, int beta);
/// Its square, exactly.
Rational monomial_sup_sq(int alpha, int beta);

/// A section of N * bundle whose sup norm is at most one, so the bundle is
/// Q-effective.
struct EffectivityWitness {
  int scale = 1;
  std::vector<MonomialFactor> monomial;
  LogLinear constant;  // N * c
  double sup_norm = 0.0;
  bool exact_check = false;  // sup_norm <= 1 decided exactly
  std::string to_string() const;
};
std::optional<EffectivityWitness> effectivity_witness(const MetrizedBundle& b);

struct SlotCertificate {
  int slot = 0;
  Rational exponent;  // a_i with a_i * H_i - p_i^* O(1)_FS effective
  EffectivityWitness witness;
};

struct FairlyLargeCertificate {
  std::vector<SlotCertificate> slots;
  std::vector<Rational> exponents() const;
  Rational exponent_product() const;
};

/// Throws NotFairlyLarge naming the first slot without a witness.
FairlyLargeCertificate certify_fairly_large(const Polarization& pol);

struct GramResult {
  bool holds = false;
  double det_g = 0.0;
  double det_g_prime = 0.0;
};
/// Throws NotPSD unless G, G' and G' - G are positive semidefinite.
GramResult gram_det_monotone(const Eigen::MatrixXd& g, const Eigen::MatrixXd& g_prime, double psd_tol = 1e-10);

/// Empirical constants with a h' - c1 <= h <= b h' + c2 on the sample
/// (h under pol_a, h' under pol_b). Not a proof of Cor 2.2.
struct Cor22Fit {
  double a = 1.0, b = 1.0, c1 = 0.0, c2 = 0.0;
  std::vector<RigorousValue> h, h_prime;
  std::string label = "empirical fit over the sample";
};
Cor22Fit compare_corollary22(const std::vector<ProjPoint>& sample, const Polarization& pol_a,
                             const Polarization& pol_b, const IntersectionEngine& engine = IntersectionEngine{});

}  // namespace arak
