#ifndef MCLT_DPP_ALPHA_DET_HPP
#define MCLT_DPP_ALPHA_DET_HPP

#include <algorithm>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "mclt/errors.hpp"

namespace mclt::dpp {

/// Det_α[A] = Σ_{σ∈S_n} α^{n−ν(σ)} Π A_{iσ(i)}, ν(σ) = number of cycles.
/// Permutation sum, so n is capped at 10.
template <class Matrix>
typename Matrix::Scalar alpha_det(const Matrix& A, double alpha) {
  using S = typename Matrix::Scalar;
  if (A.rows() != A.cols()) throw ArgumentError("alpha_det: matrix must be square");
  const int n = static_cast<int>(A.rows());
  if (n > 10)
    throw CapabilityError("alpha_det: n = " + std::to_string(n) +
                          " exceeds the permutation-sum limit 10; use the Fredholm eigenvalue path");
  if (n == 0) return S(1);
  std::vector<double> apow(n + 1, 1.0);
  for (int k = 1; k <= n; ++k) apow[k] = apow[k - 1] * alpha;
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  std::vector<char> seen(n);
  S total(0);
  do {
    S prod(1);
    for (int i = 0; i < n && prod != S(0); ++i) prod *= A(i, p[i]);
    if (prod == S(0)) continue;
    std::fill(seen.begin(), seen.end(), 0);
    int cycles = 0;
    for (int i = 0; i < n; ++i) {
      if (seen[i]) continue;
      ++cycles;
      for (int j = i; !seen[j]; j = p[j]) seen[j] = 1;
    }
    total += apow[n - cycles] * prod;
  } while (std::next_permutation(p.begin(), p.end()));
  return total;
}

}  // namespace mclt::dpp

#endif  // MCLT_DPP_ALPHA_DET_HPP
