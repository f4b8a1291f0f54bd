#ifndef MCLT_NUMERIC_POLYNOMIAL_HPP
#define MCLT_NUMERIC_POLYNOMIAL_HPP

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "mclt/errors.hpp"

namespace mclt {

using cplx = std::complex<double>;

/// Horner evaluation of Σ c_k z^k (coefficients in ascending order) together
/// with the derivative.
inline std::pair<cplx, cplx> poly_eval(const std::vector<cplx>& c, cplx z) {
  cplx p = 0.0, dp = 0.0;
  for (std::size_t k = c.size(); k-- > 0;) {
    dp = dp * z + p;
    p = p * z + c[k];
  }
  return {p, dp};
}

/// All roots of Σ c_k z^k via companion-matrix eigenvalues, each polished by a
/// few Newton steps on the original polynomial.
inline std::vector<cplx> poly_roots(std::vector<cplx> c) {
  while (!c.empty() && c.back() == cplx(0.0)) c.pop_back();
  if (c.size() < 2) throw ArgumentError("poly_roots: polynomial has no roots");
  const int deg = static_cast<int>(c.size()) - 1;
  Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(deg, deg);
  for (int i = 1; i < deg; ++i) companion(i, i - 1) = 1.0;
  for (int i = 0; i < deg; ++i) companion(i, deg - 1) = -c[i] / c[deg];
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(companion, false);
  if (solver.info() != Eigen::Success) throw NumericalError("poly_roots: eigenvalue solver failed");

  std::vector<cplx> roots(solver.eigenvalues().data(), solver.eigenvalues().data() + deg);
  for (auto& z : roots) {
    for (int it = 0; it < 8; ++it) {
      const auto [p, dp] = poly_eval(c, z);
      if (dp == cplx(0.0)) break;
      const cplx step = p / dp;
      z -= step;
      if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(z))) break;
    }
  }
  return roots;
}

}  // namespace mclt

#endif  // MCLT_NUMERIC_POLYNOMIAL_HPP
