#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace gqmc {

/// Thrown when matrix shapes disagree with the lattice they are evaluated on.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Couplings and geometry of the single-band Hubbard model
///   H = -t sum_<ij>,s n_ij,s + U sum_j n_jj,up n_jj,dn - mu sum_j,s n_jj,s
struct HubbardParams {
  double t = 1.0;
  double U = 4.0;
  double mu = 0.0;
  int Lx = 1;
  int Ly = 1;
  bool periodic = true;

  /// Sign of U; +1 when U == 0.
  [[nodiscard]] double s() const noexcept { return U < 0.0 ? -1.0 : 1.0; }
  [[nodiscard]] double abs_U() const noexcept { return U < 0.0 ? -U : U; }
  [[nodiscard]] int sites() const noexcept { return Lx * Ly; }

  /// Throws std::invalid_argument on non-positive extents or non-finite couplings.
  void validate() const;
};

/// Nearest-neighbour structure of an Lx x Ly rectangular lattice.
///
/// Sites are numbered x + Lx*y. adjacency(i,j) counts directed bonds from i
/// to j, so every undirected bond appears in both (i,j) and (j,i). A periodic
/// dimension of extent 2 reaches the same neighbour both ways round and
/// therefore contributes 2; a dimension of extent 1 contributes nothing.
struct Lattice {
  int Lx = 1;
  int Ly = 1;
  bool periodic = true;
  Eigen::MatrixXi adjacency;
  /// Per site: (neighbour, multiplicity) pairs with non-zero adjacency.
  std::vector<std::vector<std::pair<int, int>>> neighbours;

  [[nodiscard]] int sites() const noexcept { return Lx * Ly; }
};

Lattice build_lattice(int Lx, int Ly, bool periodic);
Lattice build_lattice(const HubbardParams& params);

/// Hubbard energy evaluated on phase-space number matrices.
double hamiltonian_value(const Eigen::Ref<const Eigen::MatrixXd>& n_up,
                         const Eigen::Ref<const Eigen::MatrixXd>& n_dn,
                         const HubbardParams& params, const Lattice& lattice);

/// Same as hamiltonian_value with the chemical-potential term dropped.
double hamiltonian_value_without_mu(const Eigen::Ref<const Eigen::MatrixXd>& n_up,
                                    const Eigen::Ref<const Eigen::MatrixXd>& n_dn,
                                    const HubbardParams& params, const Lattice& lattice);

}  // namespace gqmc
