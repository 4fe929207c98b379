#include "arakheight/projpoint.hpp"

#include <algorithm>
#include <sstream>

namespace arak {

bool ProjPoint::is_constant() const {
  return std::all_of(multidegree_.begin(), multidegree_.end(), [](int e) { return e == 0; });
}

std::string ProjPoint::to_string() const {
  std::ostringstream os;
  os << '(';
  for (std::size_t j = 0; j < coords_.size(); ++j) {
    if (j) os << ", ";
    os << coords_[j].to_string();
  }
  os << ')';
  return os.str();
}

bool canonical_less(const ProjPoint& a, const ProjPoint& b) {
  auto tdeg = [](const ProjPoint& p) {
    int d = 0;
    for (const auto& f : p.coords()) {
      if (!f.is_zero()) d = std::max(d, f.total_degree().value());
    }
    return d;
  };
  const int da = tdeg(a);
  const int db = tdeg(b);
  if (da != db) return da < db;
  if (a.dim() != b.dim()) return a.dim() < b.dim();
  return a.to_string() < b.to_string();
}

Degree max_partial_degree(const std::vector<MultiPoly>& coords, int var) {
  Degree best = Degree::neg_inf();
  for (const auto& f : coords) best = std::max(best, f.partial_degree(var));
  return best;
}

std::vector<MultiPoly> coefficient_tuple(const std::vector<MultiPoly>& coords, int var, int degree) {
  std::vector<MultiPoly> out;
  out.reserve(coords.size());
  for (const auto& f : coords) {
    auto parts = f.coefficients_in(var);
    MultiPoly c = degree < static_cast<int>(parts.size()) ? parts[static_cast<std::size_t>(degree)]
                                                         : MultiPoly(f.num_vars());
    out.push_back(c.remove_variable(var));
  }
  return out;
}

bool CorrectionLedger::trivial() const {
  return content == 1 && (gcd.is_zero() || gcd.is_constant()) &&
         std::all_of(degree_drop.begin(), degree_drop.end(), [](int d) { return d == 0; });
}

NormalizeResult normalize(const std::vector<MultiPoly>& raw) {
  if (raw.empty()) throw Error(ErrorCode::AllZero, "empty coordinate list");
  const int n = raw.front().num_vars();
  for (const auto& f : raw) {
    if (f.num_vars() != n) throw Error(ErrorCode::VarMismatch, "coordinates use different numbers of variables");
  }
  if (std::all_of(raw.begin(), raw.end(), [](const MultiPoly& f) { return f.is_zero(); })) {
    throw Error(ErrorCode::AllZero, "all coordinates are zero");
  }

  MultiPoly g(n);
  for (const auto& f : raw) {
    if (f.is_zero()) continue;
    g = gcd(g, f);
    if (g.is_constant() && g.leading_coefficient() == 1) break;
  }
  const Integer content = g.content();
  const MultiPoly primitive = g.divexact(content);

  ProjPoint p;
  p.num_vars_ = n;
  p.coords_.reserve(raw.size());
  for (const auto& f : raw) p.coords_.push_back(f.is_zero() ? f : divexact(f, g));

  bool negated = false;
  for (const auto& f : p.coords_) {
    if (f.is_zero()) continue;
    negated = f.leading_coefficient() < 0;
    break;
  }
  if (negated) {
    for (auto& f : p.coords_) f = -f;
  }

  p.multidegree_.assign(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) p.multidegree_[static_cast<std::size_t>(i)] = max_partial_degree(p.coords_, i).value();

  return NormalizeResult{std::move(p), content, primitive, negated};
}

Restriction leading_restriction(const ProjPoint& point, int var) {
  if (var < 0 || var >= point.num_vars()) {
    throw Error(ErrorCode::IndexOutOfRange, "restriction variable out of range");
  }
  const int e = point.multidegree()[static_cast<std::size_t>(var)];
  auto lead = coefficient_tuple(point.coords(), var, e);
  NormalizeResult norm = normalize(lead);

  CorrectionLedger ledger;
  ledger.content = norm.removed_content;
  ledger.gcd = norm.removed_gcd;
  const auto gcd_degrees = norm.removed_gcd.degree_vector();
  for (int l = 0, k = 0; l < point.num_vars(); ++l) {
    if (l == var) continue;
    const int declared = point.multidegree()[static_cast<std::size_t>(l)];
    const int kept = norm.point.multidegree()[static_cast<std::size_t>(k)] + gcd_degrees[static_cast<std::size_t>(k)];
    ledger.degree_drop.push_back(declared - kept);
    ++k;
  }
  return Restriction{std::move(norm.point), std::move(ledger), std::move(lead)};
}

std::vector<std::pair<Integer, int>> factor_integer(Integer n, unsigned long trial_limit) {
  std::vector<std::pair<Integer, int>> out;
  n = abs(n);
  if (n <= 1) return out;
  for (unsigned long p = 2; p <= trial_limit; p += (p == 2 ? 1 : 2)) {
    if (Integer(p) * p > n) break;
    int k = 0;
    while (mpz_divisible_ui_p(n.get_mpz_t(), p)) {
      mpz_divexact_ui(n.get_mpz_t(), n.get_mpz_t(), p);
      ++k;
    }
    if (k) out.emplace_back(Integer(p), k);
  }
  if (n > 1) out.emplace_back(n, 1);
  return out;
}

}  // namespace arak
