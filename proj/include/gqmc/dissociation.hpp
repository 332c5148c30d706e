#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <span>

#include "gqmc/phase_space.hpp"
#include "gqmc/sde.hpp"

namespace gqmc {

/// Atom statistics for the two dissociation product modes.
enum class StatisticsKind { bosonic, fermionic };

/// +1 for bosons, -1 for fermions.
inline double statistics_sign(StatisticsKind kind) noexcept {
  return kind == StatisticsKind::bosonic ? 1.0 : -1.0;
}

/// Phase-space point of one molecular mode (coherent amplitudes alpha,
/// alpha_plus) coupled to two atomic modes. n1, n2 estimate <b1+ b1>, <b2+ b2>;
/// m estimates <b1 b2> and m_plus its Hermitian partner <b2+ b1+>.
struct DissociationState {
  cplx alpha{};
  cplx alpha_plus{};
  cplx n1{};
  cplx n2{};
  cplx m{};
  cplx m_plus{};

  static constexpr std::size_t flat_size = 12;

  [[nodiscard]] std::array<double, flat_size> flatten() const;
  static DissociationState unflatten(std::span<const double> flat);

  /// Molecular coherent state with mean N: alpha = alpha_plus = sqrt(N), atoms empty.
  static DissociationState coherent(double n_mean);
};

/// Right-hand side of the stochastic phase-space equations for
/// H = a+ b1 b2 + h.c. (coupling 1). zeta1, zeta2 are complex white noises
/// with <zeta zeta*> = delta(t - t'), <zeta zeta> = 0.
DissociationState dissociation_derivative(const DissociationState& state, cplx zeta1, cplx zeta2,
                                          StatisticsKind kind);

struct DissociationRunConfig {
  int trajectories = 10000;
  double t_max = 1.0;
  IntegratorConfig integrator{0.001, 4, Scheme::stratonovich_midpoint};
  int record_interval = 10;
  int batches = 20;
  std::uint64_t seed = 1;
  /// The series stops at the first grid point where the batch error of n1
  /// exceeds this (or any trajectory diverges).
  double error_ceiling = 0.1;
  int threads = 0;

  void validate() const;
};

/// Real-time ensemble from a molecular coherent state. Estimates per grid
/// point: n1, n2, molecules (Re <alpha_plus alpha>), n1_imag, molecules_imag,
/// conserved (molecules + (n1 + n2)/2).
ObservableSeries run_realtime(StatisticsKind kind, double n_mean,
                              const DissociationRunConfig& config);

}  // namespace gqmc
