#pragma once

#include <random>
#include <vector>

#include "arakheight/poly.hpp"
#include "arakheight/projpoint.hpp"

namespace arak::testing {

inline MultiPoly random_poly(std::mt19937_64& rng, int num_vars, int max_deg, int max_coeff, int max_terms) {
  std::uniform_int_distribution<int> deg(0, max_deg);
  std::uniform_int_distribution<int> coeff(-max_coeff, max_coeff);
  std::uniform_int_distribution<int> nterms(1, max_terms);
  MultiPoly f(num_vars);
  const int k = nterms(rng);
  for (int t = 0; t < k; ++t) {
    Exponent e(static_cast<std::size_t>(num_vars));
    for (auto& x : e) x = deg(rng);
    f.add_term(e, coeff(rng));
  }
  return f;
}

// Random tuple that is not identically zero.
inline std::vector<MultiPoly> random_tuple(std::mt19937_64& rng, int num_vars, int n, int max_deg, int max_coeff,
                                           int max_terms = 3) {
  for (;;) {
    std::vector<MultiPoly> out;
    bool nonzero = false;
    for (int j = 0; j <= n; ++j) {
      out.push_back(random_poly(rng, num_vars, max_deg, max_coeff, max_terms));
      nonzero = nonzero || !out.back().is_zero();
    }
    if (nonzero) return out;
  }
}

inline ProjPoint random_point(std::mt19937_64& rng, int num_vars, int n, int max_deg, int max_coeff,
                              int max_terms = 3) {
  return normalize(random_tuple(rng, num_vars, n, max_deg, max_coeff, max_terms)).point;
}

}  // namespace arak::testing
