#ifndef MCLT_SPIN_MODEL_HPP
#define MCLT_SPIN_MODEL_HPP

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "mclt/errors.hpp"
#include "mclt/numeric/polynomial.hpp"

namespace mclt::spin {

enum class MeasureKind { Ising, Atomic, Circle, Sphere };

/// Single-spin a-priori measure μ₀ (unnormalized): counting measure on ±1
/// for Ising, weighted atoms for a general even atomic law, arc length on
/// S¹ (total 2π) and area on S² (total 4π).
struct SpinMeasure {
  MeasureKind kind = MeasureKind::Ising;
  std::vector<double> atoms;    // Atomic only
  std::vector<double> weights;  // Atomic only

  static SpinMeasure ising() { return {MeasureKind::Ising, {-1.0, 1.0}, {1.0, 1.0}}; }
  static SpinMeasure circle() { return {MeasureKind::Circle, {}, {}}; }
  static SpinMeasure sphere() { return {MeasureKind::Sphere, {}, {}}; }
  static SpinMeasure atomic(std::vector<double> atoms, std::vector<double> weights) {
    if (atoms.empty() || atoms.size() != weights.size())
      throw ArgumentError("SpinMeasure::atomic: atoms and weights must be nonempty and aligned");
    for (double w : weights)
      if (!(w > 0.0)) throw ArgumentError("SpinMeasure::atomic: weights must be positive");
    return {MeasureKind::Atomic, std::move(atoms), std::move(weights)};
  }

  int components() const {
    switch (kind) {
      case MeasureKind::Circle: return 2;
      case MeasureKind::Sphere: return 3;
      default: return 1;
    }
  }
  bool is_discrete() const { return kind == MeasureKind::Ising || kind == MeasureKind::Atomic; }

  /// Largest |σ| on the support.
  double support_bound() const {
    if (!is_discrete()) return 1.0;
    double b = 0.0;
    for (double a : atoms) b = std::max(b, std::abs(a));
    return b;
  }

  /// Evenness of a discrete measure (weights symmetric under σ ↦ −σ).
  bool is_even() const {
    if (!is_discrete()) return true;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      bool found = false;
      for (std::size_t j = 0; j < atoms.size(); ++j)
        if (std::abs(atoms[i] + atoms[j]) < 1e-12 && std::abs(weights[i] - weights[j]) < 1e-12 * weights[i])
          found = true;
      if (!found) return false;
    }
    return true;
  }

  std::string name() const {
    switch (kind) {
      case MeasureKind::Ising: return "ising";
      case MeasureKind::Atomic: return "atomic";
      case MeasureKind::Circle: return "xy";
      case MeasureKind::Sphere: return "heisenberg";
    }
    return "?";
  }
};

/// Cube Λ = {0..ℓ−1}^d with nearest-neighbour edges, free boundary by
/// default. Site index is x₀ + ℓ·x₁ + ℓ²·x₂ + …
struct Lattice {
  int dim = 1;
  int side = 1;
  bool periodic = false;
  std::vector<std::pair<int, int>> edges;
  std::vector<std::vector<std::pair<int, int>>> neighbours;  // (site, edge index)

  Lattice() = default;
  Lattice(int d, int l, bool periodic_bc = false) : dim(d), side(l), periodic(periodic_bc) {
    if (d < 1 || l < 1) throw ArgumentError("Lattice: dimension and side must be positive");
    const long n = sites_count(d, l);
    neighbours.assign(n, {});
    long stride = 1;
    for (int axis = 0; axis < d; ++axis) {
      for (long x = 0; x < n; ++x) {
        const long coord = (x / stride) % l;
        if (coord + 1 < l) add_edge(static_cast<int>(x), static_cast<int>(x + stride));
        else if (periodic && l > 2) add_edge(static_cast<int>(x), static_cast<int>(x - (l - 1) * stride));
      }
      stride *= l;
    }
  }

  int sites() const { return static_cast<int>(neighbours.size()); }
  int max_degree() const {
    std::size_t m = 0;
    for (const auto& nb : neighbours) m = std::max(m, nb.size());
    return static_cast<int>(m);
  }

private:
  static long sites_count(int d, int l) {
    long n = 1;
    for (int i = 0; i < d; ++i) {
      n *= l;
      if (n > (1L << 30)) throw CapabilityError("Lattice: too many sites");
    }
    return n;
  }
  void add_edge(int a, int b) {
    const int e = static_cast<int>(edges.size());
    edges.emplace_back(a, b);
    neighbours[a].emplace_back(b, e);
    neighbours[b].emplace_back(a, e);
  }
};

using Components = std::array<double, 3>;
using ComplexComponents = std::array<cplx, 3>;

/// Ferromagnetic lattice spin system with Gibbs weight e^{−βH} Π dμ₀ and
/// H = −Σ_edges Σ_i J^i σ_x^i σ_y^i − Σ_x Σ_i h_x^i σ_x^i.
struct SpinModel {
  Lattice lattice;
  SpinMeasure measure;
  std::vector<Components> couplings;     // per edge
  std::vector<ComplexComponents> field;  // per site
  double beta = 1.0;
  bool ferromagnetic = true;

  int components() const { return measure.components(); }
  int sites() const { return lattice.sites(); }

  /// True if every site carries the same field along e₁ only, with real value.
  bool uniform_real_e1_field() const {
    for (const auto& h : field) {
      if (h[0] != field[0][0] || h[0].imag() != 0.0 || h[1] != cplx(0.0) || h[2] != cplx(0.0)) return false;
    }
    return true;
  }
  bool real_field() const {
    for (const auto& h : field)
      for (const auto& c : h)
        if (c.imag() != 0.0) return false;
    return true;
  }

  /// Recomputes the ferromagnetic flag from the component conditions.
  void update_flags() {
    const int N = components();
    ferromagnetic = true;
    for (const auto& J : couplings) {
      if (N == 1) ferromagnetic = ferromagnetic && J[0] >= 0.0;
      if (N == 2) ferromagnetic = ferromagnetic && J[0] >= std::abs(J[1]);
      if (N == 3)
        ferromagnetic = ferromagnetic && J[0] >= std::max(std::abs(J[1]), std::abs(J[2])) && J[2] >= 0.0;
    }
    if (N == 1) ferromagnetic = ferromagnetic && measure.is_even();
  }
};

/// Uniform couplings J (per component) on every edge and uniform field h.
inline SpinModel make_model(int dim, int side, SpinMeasure measure, Components J, ComplexComponents h,
                            double beta, bool periodic = false) {
  if (!(beta > 0.0)) throw ArgumentError("make_model: beta must be positive");
  SpinModel m;
  m.lattice = Lattice(dim, side, periodic);
  m.measure = std::move(measure);
  const int N = m.components();
  for (int i = N; i < 3; ++i) {
    J[i] = 0.0;
    h[i] = 0.0;
  }
  m.couplings.assign(m.lattice.edges.size(), J);
  m.field.assign(m.lattice.sites(), h);
  m.beta = beta;
  m.update_flags();
  return m;
}

/// H(σ) for a configuration stored site-major: config[x·N + i] = σ_x^i.
inline cplx hamiltonian(const SpinModel& m, const std::vector<double>& config) {
  const int N = m.components();
  if (config.size() != static_cast<std::size_t>(m.sites()) * N)
    throw ArgumentError("hamiltonian: configuration has " + std::to_string(config.size()) +
                        " entries, expected " + std::to_string(m.sites() * N));
  cplx H = 0.0;
  for (std::size_t e = 0; e < m.lattice.edges.size(); ++e) {
    const auto [a, b] = m.lattice.edges[e];
    for (int i = 0; i < N; ++i) H -= m.couplings[e][i] * config[a * N + i] * config[b * N + i];
  }
  for (int x = 0; x < m.sites(); ++x)
    for (int i = 0; i < N; ++i) H -= m.field[x][i] * config[x * N + i];
  return H;
}

}  // namespace mclt::spin

#endif  // MCLT_SPIN_MODEL_HPP
