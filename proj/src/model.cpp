#include "gqmc/model.hpp"

#include <cmath>

namespace gqmc {

void HubbardParams::validate() const {
  if (Lx < 1 || Ly < 1) {
    throw std::invalid_argument("lattice extents must be >= 1");
  }
  if (!std::isfinite(t) || !std::isfinite(U) || !std::isfinite(mu)) {
    throw std::invalid_argument("Hubbard couplings must be finite");
  }
}

Lattice build_lattice(int Lx, int Ly, bool periodic) {
  if (Lx < 1 || Ly < 1) {
    throw std::invalid_argument("lattice extents must be >= 1");
  }
  Lattice lattice;
  lattice.Lx = Lx;
  lattice.Ly = Ly;
  lattice.periodic = periodic;
  const int M = Lx * Ly;
  lattice.adjacency = Eigen::MatrixXi::Zero(M, M);

  auto add_bond = [&](int i, int j) {
    lattice.adjacency(i, j) += 1;
    lattice.adjacency(j, i) += 1;
  };
  // One forward bond per site and direction; the reverse direction is added
  // alongside, giving the ordered-pair neighbour sum.
  for (int y = 0; y < Ly; ++y) {
    for (int x = 0; x < Lx; ++x) {
      const int i = x + Lx * y;
      if (Lx > 1 && (periodic || x + 1 < Lx)) {
        add_bond(i, (x + 1) % Lx + Lx * y);
      }
      if (Ly > 1 && (periodic || y + 1 < Ly)) {
        add_bond(i, x + Lx * ((y + 1) % Ly));
      }
    }
  }

  lattice.neighbours.resize(M);
  for (int i = 0; i < M; ++i) {
    for (int j = 0; j < M; ++j) {
      if (lattice.adjacency(i, j) != 0) {
        lattice.neighbours[i].emplace_back(j, lattice.adjacency(i, j));
      }
    }
  }
  return lattice;
}

Lattice build_lattice(const HubbardParams& params) {
  return build_lattice(params.Lx, params.Ly, params.periodic);
}

namespace {

void check_shape(const Eigen::Ref<const Eigen::MatrixXd>& n_up,
                 const Eigen::Ref<const Eigen::MatrixXd>& n_dn, const Lattice& lattice) {
  const int M = lattice.sites();
  if (n_up.rows() != M || n_up.cols() != M || n_dn.rows() != M || n_dn.cols() != M) {
    throw DimensionError("number matrices must be " + std::to_string(M) + "x" +
                         std::to_string(M));
  }
}

}  // namespace

double hamiltonian_value_without_mu(const Eigen::Ref<const Eigen::MatrixXd>& n_up,
                                    const Eigen::Ref<const Eigen::MatrixXd>& n_dn,
                                    const HubbardParams& params, const Lattice& lattice) {
  check_shape(n_up, n_dn, lattice);
  const int M = lattice.sites();
  double hopping = 0.0;
  double interaction = 0.0;
  for (int i = 0; i < M; ++i) {
    for (const auto& [j, count] : lattice.neighbours[i]) {
      hopping += count * (n_up(i, j) + n_dn(i, j));
    }
    interaction += n_up(i, i) * n_dn(i, i);
  }
  return -params.t * hopping + params.U * interaction;
}

double hamiltonian_value(const Eigen::Ref<const Eigen::MatrixXd>& n_up,
                         const Eigen::Ref<const Eigen::MatrixXd>& n_dn,
                         const HubbardParams& params, const Lattice& lattice) {
  const double base = hamiltonian_value_without_mu(n_up, n_dn, params, lattice);
  return base - params.mu * (n_up.trace() + n_dn.trace());
}

}  // namespace gqmc
