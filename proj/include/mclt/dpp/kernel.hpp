#ifndef MCLT_DPP_KERNEL_HPP
#define MCLT_DPP_KERNEL_HPP

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mclt/errors.hpp"

namespace mclt::dpp {

enum class KernelFamily { Gaussian, BallFourier, Projection, Custom };

inline std::string family_name(KernelFamily f) {
  switch (f) {
    case KernelFamily::Gaussian: return "gaussian";
    case KernelFamily::BallFourier: return "ball_fourier";
    case KernelFamily::Projection: return "projection";
    case KernelFamily::Custom: return "custom";
  }
  return "?";
}

using Point = std::span<const double>;

inline double distance(Point x, Point y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
  return std::sqrt(s);
}

/// Kernel K on ℝ^d with background density f, for an α-determinantal process.
struct KernelSpec {
  int dim = 1;
  KernelFamily family = KernelFamily::Custom;
  double alpha = -1.0;
  std::function<double(Point, Point)> kernel;
  /// K(x,y) = profile(‖x−y‖) for translation-invariant radial kernels.
  std::function<double(double)> profile;
  std::function<double(Point)> density;  // empty: f ≡ 1
  double density_lo = 1.0;               // c₁ ≤ f
  double density_hi = 1.0;               // f ≤ c₂
  double diag_bound = 1.0;               // K(x,x) ≤ b
  double scale = 1.0;                    // correlation length, sets default grids
  std::string description;

  double operator()(Point x, Point y) const { return kernel(x, y); }
  double f(Point x) const { return density ? density(x) : 1.0; }
  bool radial() const { return static_cast<bool>(profile); }
};

/// a·exp(−‖x−y‖²/s²). The default amplitude 0.5(πs²)^{−d/2} puts the
/// operator norm on L²(ℝ^d) (sup of the Fourier symbol) at 1/2, valid for
/// every α ≥ −2.
inline KernelSpec gaussian_kernel(int d, double s = 1.0, double alpha = -1.0,
                                  double amplitude = std::numeric_limits<double>::quiet_NaN()) {
  if (d < 1 || !(s > 0.0)) throw ArgumentError("gaussian_kernel: need d ≥ 1 and s > 0");
  const double a = std::isnan(amplitude) ? 0.5 * std::pow(std::numbers::pi * s * s, -0.5 * d) : amplitude;
  KernelSpec k;
  k.dim = d;
  k.family = KernelFamily::Gaussian;
  k.alpha = alpha;
  k.profile = [a, s](double r) { return a * std::exp(-r * r / (s * s)); };
  k.kernel = [p = k.profile](Point x, Point y) { return p(distance(x, y)); };
  k.diag_bound = a;
  k.scale = s;
  k.description = "gaussian(d=" + std::to_string(d) + ",s=" + std::to_string(s) + ")";
  return k;
}

/// amp·(2π)^{d/2} t^{−d/2} J_{d/2}(t), t = ‖x−y‖: amp = 1 is the Fourier
/// transform of the unit-ball indicator; its symbol is (2π)^d on the ball,
/// so amp = (2π)^{−d} (the default) makes it a projection.
inline KernelSpec ball_fourier_kernel(int d, double alpha = -1.0,
                                      double amplitude = std::numeric_limits<double>::quiet_NaN()) {
  if (d < 1) throw ArgumentError("ball_fourier_kernel: need d ≥ 1");
  const double amp = std::isnan(amplitude) ? std::pow(2.0 * std::numbers::pi, -d) : amplitude;
  const double nu = 0.5 * d;
  // value at 0: amp·(2π)^{d/2}·2^{−d/2}/Γ(d/2+1) = amp·Vol(B)
  const double k0 = amp * std::pow(std::numbers::pi, nu) / std::tgamma(nu + 1.0);
  KernelSpec k;
  k.dim = d;
  k.family = KernelFamily::BallFourier;
  k.alpha = alpha;
  k.profile = [amp, nu, k0](double t) {
    if (t < 1e-6) return k0 * (1.0 - t * t / (4.0 * (nu + 1.0)));
    return amp * std::pow(2.0 * std::numbers::pi, nu) * std::pow(t, -nu) * std::cyl_bessel_j(nu, t);
  };
  k.kernel = [p = k.profile](Point x, Point y) { return p(distance(x, y)); };
  k.diag_bound = k0;
  k.scale = 2.0 * std::numbers::pi;
  k.description = "ball_fourier(d=" + std::to_string(d) + ",amp=" + std::to_string(amp) + ")";
  return k;
}

/// Rank-r projection on the window [−ℓ, ℓ] (d = 1) spanned by the first r
/// cosine modes. The modes stay exactly orthonormal on any midpoint grid of
/// the window with more than r cells, so the discretization is an exact
/// projection too.
inline KernelSpec projection_kernel(int rank, double half_width = 1.0, double alpha = -1.0) {
  if (rank < 1 || !(half_width > 0.0)) throw ArgumentError("projection_kernel: need rank ≥ 1 and ℓ > 0");
  KernelSpec k;
  k.dim = 1;
  k.family = KernelFamily::Projection;
  k.alpha = alpha;
  const double l = half_width;
  k.kernel = [rank, l](Point x, Point y) {
    if (std::abs(x[0]) > l || std::abs(y[0]) > l) return 0.0;
    double s = 1.0 / (2.0 * l);
    for (int j = 1; j < rank; ++j)
      s += std::cos(std::numbers::pi * j * (x[0] + l) / (2.0 * l)) *
           std::cos(std::numbers::pi * j * (y[0] + l) / (2.0 * l)) / l;
    return s;
  };
  k.diag_bound = (2.0 * rank - 1.0) / (2.0 * l);
  k.scale = 2.0 * l / rank;
  k.description = "projection(rank=" + std::to_string(rank) + ",l=" + std::to_string(l) + ")";
  return k;
}

/// Symmetry and diagonal-positivity spot checks on random pairs.
inline void validate_kernel(const KernelSpec& k, double box = 5.0, int pairs = 200, std::uint64_t seed = 1) {
  if (!k.kernel) throw ArgumentError("KernelSpec: no kernel function");
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> u(-box, box);
  std::vector<double> x(k.dim), y(k.dim);
  for (int p = 0; p < pairs; ++p) {
    for (int i = 0; i < k.dim; ++i) {
      x[i] = u(g);
      y[i] = u(g);
    }
    const double a = k(x, y), b = k(y, x);
    if (std::abs(a - b) > 1e-12 * std::max({1.0, std::abs(a), std::abs(b)}))
      throw ArgumentError("KernelSpec: K(x,y) != K(y,x) for " + k.description);
    if (k(x, x) < -1e-14) throw ArgumentError("KernelSpec: K(x,x) < 0 for " + k.description);
  }
}

/// Test function φ supported in the cube [−1,1]^d; φ_L(x) = φ(x/L).
struct TestFunction {
  std::string name;
  std::function<double(Point)> fn;
  double sup_norm = 1.0;
  double operator()(Point x) const { return fn(x); }
};

inline TestFunction indicator() {
  return {"indicator", [](Point x) {
            for (double v : x)
              if (std::abs(v) > 1.0) return 0.0;
            return 1.0;
          },
          1.0};
}

/// exp(1 − 1/(1−‖x‖²)) on the unit ball, 1 at the origin.
inline TestFunction bump() {
  return {"bump", [](Point x) {
            double r2 = 0.0;
            for (double v : x) r2 += v * v;
            return r2 < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - r2)) : 0.0;
          },
          1.0};
}

/// Finite-rank stand-in for K on L²(μ): nodes x_i, weights w_i = f(x_i)·cell
/// volume and the symmetrized matrix M_ij = √w_i K(x_i,x_j) √w_j, with its
/// eigen-decomposition computed once at construction.
struct DiscretizedKernel {
  int dim = 1;
  double alpha = -1.0;
  Eigen::MatrixXd points;  // m × d
  Eigen::VectorXd weights;
  Eigen::MatrixXd matrix;
  Eigen::VectorXd eigenvalues;  // ascending
  Eigen::MatrixXd eigenvectors;

  int size() const { return static_cast<int>(weights.size()); }
  double kernel_value(int i, int j) const { return matrix(i, j) / std::sqrt(weights(i) * weights(j)); }
  double max_eigenvalue() const { return eigenvalues.size() ? eigenvalues(eigenvalues.size() - 1) : 0.0; }
  double trace() const { return matrix.trace(); }
  std::vector<double> point(int i) const {
    std::vector<double> p(dim);
    for (int k = 0; k < dim; ++k) p[k] = points(i, k);
    return p;
  }

  /// Validates symmetry, positive semi-definiteness and, for α < 0, the
  /// spectral condition Spec ⊂ [0, 1/|α|]; clips round-off negatives to 0.
  static DiscretizedKernel from_matrix(Eigen::MatrixXd pts, Eigen::VectorXd w, Eigen::MatrixXd m, double alpha) {
    const Eigen::Index n = w.size();
    if (m.rows() != n || m.cols() != n || pts.rows() != n)
      throw ArgumentError("DiscretizedKernel: inconsistent sizes");
    for (Eigen::Index i = 0; i < n; ++i)
      if (!(w(i) > 0.0)) throw ArgumentError("DiscretizedKernel: weights must be positive");
    const double scale = n ? m.cwiseAbs().maxCoeff() : 0.0;
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(scale, 1e-300))
      throw ArgumentError("DiscretizedKernel: matrix is not symmetric");
    DiscretizedKernel dk;
    dk.dim = static_cast<int>(pts.cols());
    dk.alpha = alpha;
    dk.points = std::move(pts);
    dk.weights = std::move(w);
    dk.matrix = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dk.matrix);
    if (es.info() != Eigen::Success) throw NumericalError("DiscretizedKernel: eigensolver failed", 0.0);
    dk.eigenvalues = es.eigenvalues();
    dk.eigenvectors = es.eigenvectors();
    const double top = n ? std::max(0.0, dk.eigenvalues(n - 1)) : 0.0;
    const double floor_tol = 1e-8 * std::max(top, 1.0);
    if (n && dk.eigenvalues(0) < -floor_tol)
      throw DomainError("DiscretizedKernel: kernel is not positive semi-definite (eigenvalue " +
                        std::to_string(dk.eigenvalues(0)) + ")");
    if (alpha < 0.0 && top > 1.0 / std::abs(alpha) + 1e-8)
      throw DomainError("DiscretizedKernel: eigenvalue " + std::to_string(top) + " exceeds 1/|alpha| = " +
                        std::to_string(1.0 / std::abs(alpha)) + "; no alpha-determinantal process exists");
    for (Eigen::Index i = 0; i < n; ++i) {
      dk.eigenvalues(i) = std::max(dk.eigenvalues(i), 0.0);
      if (alpha < 0.0) dk.eigenvalues(i) = std::min(dk.eigenvalues(i), 1.0 / std::abs(alpha));
    }
    return dk;
  }
};

/// Midpoint grid on the box [lo, hi] with the given number of cells per axis.
inline DiscretizedKernel discretize(const KernelSpec& k, const std::vector<double>& lo, const std::vector<double>& hi,
                                   const std::vector<int>& cells) {
  const int d = k.dim;
  if (static_cast<int>(lo.size()) != d || static_cast<int>(hi.size()) != d || static_cast<int>(cells.size()) != d)
    throw ArgumentError("discretize: box and cell counts must have the kernel's dimension");
  long m = 1;
  double vol = 1.0;
  for (int i = 0; i < d; ++i) {
    if (cells[i] < 1 || !(hi[i] > lo[i])) throw ArgumentError("discretize: empty box");
    m *= cells[i];
    vol *= (hi[i] - lo[i]) / cells[i];
  }
  if (m > 6000) throw CapabilityError("discretize: " + std::to_string(m) + " nodes exceed the dense limit 6000");
  Eigen::MatrixXd pts(m, d);
  Eigen::VectorXd w(m);
  std::vector<double> x(d);
  for (long idx = 0; idx < m; ++idx) {
    long r = idx;
    for (int i = 0; i < d; ++i) {
      const int c = static_cast<int>(r % cells[i]);
      r /= cells[i];
      x[i] = lo[i] + (c + 0.5) * (hi[i] - lo[i]) / cells[i];
      pts(idx, i) = x[i];
    }
    w(idx) = k.f(x) * vol;
  }
  Eigen::MatrixXd M(m, m);
  std::vector<double> a(d), b(d);
  for (long i = 0; i < m; ++i) {
    for (int t = 0; t < d; ++t) a[t] = pts(i, t);
    for (long j = i; j < m; ++j) {
      for (int t = 0; t < d; ++t) b[t] = pts(j, t);
      M(i, j) = M(j, i) = std::sqrt(w(i) * w(j)) * k(a, b);
    }
  }
  return DiscretizedKernel::from_matrix(std::move(pts), std::move(w), std::move(M), k.alpha);
}

/// Grid over the support [−L, L]^d of φ_L with spacing at most h. No margin
/// is added: the Laplace transform only involves K compressed to supp φ_L.
inline DiscretizedKernel discretize_window(const KernelSpec& k, double L, double h) {
  if (!(L > 0.0) || !(h > 0.0)) throw ArgumentError("discretize_window: need L > 0 and h > 0");
  const int n = static_cast<int>(std::ceil(2.0 * L / h - 1e-9));
  return discretize(k, std::vector<double>(k.dim, -L), std::vector<double>(k.dim, L), std::vector<int>(k.dim, n));
}

/// φ_L at the nodes.
inline Eigen::VectorXd phi_values(const DiscretizedKernel& dk, const TestFunction& phi, double L = 1.0) {
  Eigen::VectorXd v(dk.size());
  std::vector<double> x(dk.dim);
  for (int i = 0; i < dk.size(); ++i) {
    for (int t = 0; t < dk.dim; ++t) x[t] = dk.points(i, t) / L;
    v(i) = phi(x);
  }
  return v;
}

/// Tabulated kernel file:
///
///     # comment lines start with '#'
///     dim <d>
///     alpha <alpha>
///     points <m>
///     <x_1 .. x_d weight>      (m lines)
///     matrix
///     <K(x_i,x_1) .. K(x_i,x_m)>   (m lines, raw kernel values)
inline DiscretizedKernel read_kernel_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("read_kernel_file: cannot open " + path);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    for (std::string t; ls >> t;) tokens.push_back(t);
  }
  std::size_t pos = 0;
  auto next = [&]() -> const std::string& {
    if (pos >= tokens.size()) throw ArgumentError("read_kernel_file: unexpected end of " + path);
    return tokens[pos++];
  };
  auto number = [&]() {
    const std::string& t = next();
    try {
      std::size_t used = 0;
      const double v = std::stod(t, &used);
      if (used != t.size()) throw std::invalid_argument(t);
      return v;
    } catch (const std::exception&) {
      throw ArgumentError("read_kernel_file: expected a number, got '" + t + "'");
    }
  };
  auto expect = [&](const char* key) {
    if (next() != key) throw ArgumentError(std::string("read_kernel_file: expected '") + key + "'");
  };
  expect("dim");
  const int d = static_cast<int>(number());
  expect("alpha");
  const double alpha = number();
  expect("points");
  const int m = static_cast<int>(number());
  if (d < 1 || m < 1) throw ArgumentError("read_kernel_file: dim and points must be positive");
  Eigen::MatrixXd pts(m, d);
  Eigen::VectorXd w(m);
  for (int i = 0; i < m; ++i) {
    for (int t = 0; t < d; ++t) pts(i, t) = number();
    w(i) = number();
  }
  expect("matrix");
  Eigen::MatrixXd M(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) M(i, j) = std::sqrt(w(i) * w(j)) * number();
  if (pos != tokens.size()) throw ArgumentError("read_kernel_file: trailing data in " + path);
  return DiscretizedKernel::from_matrix(std::move(pts), std::move(w), std::move(M), alpha);
}

inline void write_kernel_file(const DiscretizedKernel& dk, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ArgumentError("write_kernel_file: cannot open " + path);
  out.precision(17);
  out << "dim " << dk.dim << "\nalpha " << dk.alpha << "\npoints " << dk.size() << "\n";
  for (int i = 0; i < dk.size(); ++i) {
    for (int t = 0; t < dk.dim; ++t) out << dk.points(i, t) << ' ';
    out << dk.weights(i) << "\n";
  }
  out << "matrix\n";
  for (int i = 0; i < dk.size(); ++i) {
    for (int j = 0; j < dk.size(); ++j) out << (j ? " " : "") << dk.kernel_value(i, j);
    out << "\n";
  }
}

}  // namespace mclt::dpp

#endif  // MCLT_DPP_KERNEL_HPP
