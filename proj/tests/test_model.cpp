#include <doctest.h>

#include <numeric>

#include "gqmc/model.hpp"
#include "gqmc/oracle.hpp"

using namespace gqmc;

namespace {

HubbardParams params_for(int Lx, int Ly, double t, double U, double mu, bool periodic = true) {
  HubbardParams p;
  p.Lx = Lx;
  p.Ly = Ly;
  p.t = t;
  p.U = U;
  p.mu = mu;
  p.periodic = periodic;
  return p;
}

}  // namespace

TEST_CASE("ring and torus row sums") {
  const Lattice ring = build_lattice(3, 1, true);
  for (int i = 0; i < 3; ++i) CHECK(ring.adjacency.row(i).sum() == 2);

  const Lattice torus = build_lattice(4, 4, true);
  for (int i = 0; i < 16; ++i) CHECK(torus.adjacency.row(i).sum() == 4);
}

TEST_CASE("open 2x2 square has two neighbours per site") {
  const Lattice sq = build_lattice(2, 2, false);
  for (int i = 0; i < 4; ++i) {
    CHECK(sq.adjacency.row(i).sum() == 2);
    CHECK(sq.neighbours[i].size() == 2);
  }
}

TEST_CASE("periodic extent two doubles bonds") {
  const Lattice sq = build_lattice(2, 2, true);
  CHECK(sq.adjacency(0, 1) == 2);
  CHECK(sq.adjacency(0, 2) == 2);
  CHECK(sq.adjacency(0, 3) == 0);
  const Lattice line = build_lattice(1, 1, true);
  CHECK(line.adjacency(0, 0) == 0);
}

TEST_CASE("adjacency is symmetric with zero diagonal") {
  for (const auto& [Lx, Ly, periodic] :
       std::vector<std::tuple<int, int, bool>>{{1, 1, true}, {5, 1, false}, {3, 4, true},
                                               {2, 3, true}, {4, 4, false}}) {
    const Lattice l = build_lattice(Lx, Ly, periodic);
    CHECK(l.adjacency == l.adjacency.transpose());
    CHECK(l.adjacency.diagonal().isZero());
    CHECK(l.adjacency.maxCoeff() <= 2);
  }
}

TEST_CASE("invalid extents rejected") {
  CHECK_THROWS_AS(build_lattice(0, 2, true), std::invalid_argument);
  HubbardParams p = params_for(1, 1, 1, std::numeric_limits<double>::infinity(), 0);
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("sign of U") {
  CHECK(params_for(1, 1, 0, -3, 0).s() == -1.0);
  CHECK(params_for(1, 1, 0, 0, 0).s() == 1.0);
  CHECK(params_for(1, 1, 0, 2, 0).s() == 1.0);
}

TEST_CASE("hamiltonian values") {
  const auto p = params_for(2, 2, 1, 4, 0, false);
  const Lattice l = build_lattice(p);
  const Eigen::MatrixXd half = 0.5 * Eigen::MatrixXd::Identity(4, 4);
  CHECK(hamiltonian_value(half, half, p, l) == doctest::Approx(4.0));
  CHECK(hamiltonian_value(Eigen::MatrixXd::Zero(4, 4), Eigen::MatrixXd::Zero(4, 4), p, l) == 0.0);

  const auto q = params_for(2, 2, 0, 0, 1);
  CHECK(hamiltonian_value(half, half, q, build_lattice(q)) == doctest::Approx(-4.0));
}

TEST_CASE("dimension mismatch") {
  const auto p = params_for(2, 2, 1, 4, 0);
  const Lattice l = build_lattice(p);
  const Eigen::MatrixXd small = Eigen::MatrixXd::Zero(3, 3);
  CHECK_THROWS_AS(hamiltonian_value(small, small, p, l), DimensionError);
}

TEST_CASE("diagonal states are independent of t and permutation invariant") {
  const auto p = params_for(3, 2, 1.7, 3, 0.4);
  const Lattice l = build_lattice(p);
  Eigen::MatrixXd up = Eigen::VectorXd::LinSpaced(6, 0.1, 0.9).asDiagonal();
  Eigen::MatrixXd dn = Eigen::VectorXd::LinSpaced(6, 0.8, 0.2).asDiagonal();
  auto q = p;
  q.t = -5.0;
  CHECK(hamiltonian_value(up, dn, p, l) == doctest::Approx(hamiltonian_value(up, dn, q, l)));

  // Relabel sites by a permutation; the relabeled lattice uses the same permutation.
  Eigen::MatrixXd full_up = up;
  full_up(0, 1) = full_up(1, 0) = 0.3;
  full_up(2, 4) = full_up(4, 2) = -0.2;
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(6);
  perm.indices() << 3, 0, 5, 1, 4, 2;
  Lattice relabeled = l;
  relabeled.adjacency = perm * l.adjacency * perm.transpose();
  relabeled.neighbours.assign(6, {});
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      if (relabeled.adjacency(i, j)) relabeled.neighbours[i].emplace_back(j, relabeled.adjacency(i, j));
  const Eigen::MatrixXd pu = perm * full_up * perm.transpose();
  const Eigen::MatrixXd pd = perm * dn * perm.transpose();
  CHECK(hamiltonian_value(pu, pd, p, relabeled) ==
        doctest::Approx(hamiltonian_value(full_up, dn, p, l)).epsilon(1e-14));
}

TEST_CASE("agrees with exact Hamiltonian on all 2x2 occupation states") {
  const auto p = params_for(2, 2, 1.3, 4, 0.7);
  const Lattice l = build_lattice(p);
  const int M = 4;
  const Eigen::MatrixXd dense = oracle::hubbard_hamiltonian(p, l);
  for (int b = 0; b < (1 << (2 * M)); ++b) {
    Eigen::MatrixXd up = Eigen::MatrixXd::Zero(M, M), dn = Eigen::MatrixXd::Zero(M, M);
    for (int j = 0; j < M; ++j) {
      up(j, j) = (b >> j) & 1;
      dn(j, j) = (b >> (j + M)) & 1;
    }
    CHECK(hamiltonian_value(up, dn, p, l) == doctest::Approx(dense(b, b)).epsilon(1e-13));
  }
}
