#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "gqmc/noise.hpp"
#include "gqmc/oracle.hpp"

using namespace gqmc;
using namespace gqmc::oracle;

namespace {

Eigen::MatrixXcd random_antisymmetric(int n, std::uint64_t index) {
  const auto v = gaussian_draws(NoiseStream{6, index, 0, NoiseDomain::auxiliary}, 2 * n * n, 1.0);
  Eigen::MatrixXcd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = cplx(v[2 * (i * n + j)], v[2 * (i * n + j) + 1]);
  return a - a.transpose().eval();
}

}  // namespace

TEST_CASE("ladder operators anticommute") {
  for (int M = 1; M <= 6; ++M) {
    const auto ops = annihilation_operators(M);
    const int dim = 1 << M;
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(dim, dim);
    for (int k = 0; k < M; ++k)
      for (int j = 0; j < M; ++j) {
        const Eigen::MatrixXd a = ops[k], b = ops[j];
        const Eigen::MatrixXd mixed = a * b.transpose() + b.transpose() * a;
        const Eigen::MatrixXd same = a * b + b * a;
        CHECK((mixed - (k == j ? I : Eigen::MatrixXd::Zero(dim, dim))).cwiseAbs().maxCoeff() == 0.0);
        CHECK(same.cwiseAbs().maxCoeff() == 0.0);
      }
  }
}

TEST_CASE("pfaffian closed forms") {
  Eigen::MatrixXcd two(2, 2);
  two << 0, cplx(1.5, -2), cplx(-1.5, 2), 0;
  CHECK(std::abs(pfaffian(two) - cplx(1.5, -2)) < 1e-15);

  const auto a = random_antisymmetric(4, 0);
  const cplx closed = a(0, 1) * a(2, 3) - a(0, 2) * a(1, 3) + a(0, 3) * a(1, 2);
  CHECK(std::abs(pfaffian(a) - closed) < 1e-12 * std::abs(closed));

  CHECK(pfaffian(Eigen::MatrixXcd::Zero(3, 3)) == cplx{});
}

TEST_CASE("pfaffian squared is the determinant") {
  for (std::uint64_t k = 1; k < 10; ++k) {
    const auto a = random_antisymmetric(6, k);
    const cplx pf = pfaffian(a);
    const cplx det = a.determinant();
    CHECK(std::abs(pf * pf - det) <= 1e-10 * std::abs(det));
  }
}

TEST_CASE("pfaffian rejects non-antisymmetric input") {
  Eigen::MatrixXcd a = random_antisymmetric(4, 20);
  a(0, 1) += 1e-6;
  CHECK_THROWS_AS(pfaffian(a), OracleError);
  CHECK_THROWS_AS(pfaffian(Eigen::MatrixXcd::Zero(2, 3)), OracleError);
}

TEST_CASE("single-mode kernels") {
  auto s = GeneralFermiState::vacuum(1);
  s.n(0, 0) = 0.3;
  const auto k = materialize_kernel(s);
  CHECK(std::abs(k.matrix(0, 0) - 0.7) < 1e-15);
  CHECK(std::abs(k.matrix(1, 1) - 0.3) < 1e-15);
  CHECK(std::abs(k.matrix(0, 1)) == 0.0);

  s.n(0, 0) = 0.5;
  const auto half = materialize_kernel(s);
  CHECK(half.matrix.isApprox(0.5 * Eigen::MatrixXcd::Identity(2, 2)));
}

TEST_CASE("kernel trace and moments on random states") {
  for (int M = 1; M <= 3; ++M)
    for (std::uint64_t k = 0; k < 5; ++k) {
      const auto s = random_state(M, 3, k);
      CHECK(std::abs(materialize_kernel(s).matrix.trace() - 1.0) < 1e-12);
      CHECK(moment_deviation(s) < 1e-10);
    }
}

TEST_CASE("random states respect their ranges") {
  for (std::uint64_t k = 0; k < 20; ++k) {
    const auto s = random_state(3, 5, k);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(s.n);
    CHECK(eig.eigenvalues().minCoeff() > 0.05);
    CHECK(eig.eigenvalues().maxCoeff() < 0.95);
    CHECK(s.m.norm() <= 0.2 + 1e-15);
    CHECK(s.m_plus.norm() <= 0.2 + 1e-15);
    CHECK_NOTHROW(s.validate(1e-15));
  }
}

TEST_CASE("singular covariance and size caps are rejected") {
  auto s = GeneralFermiState::vacuum(1);
  s.n(0, 0) = 1.0;
  CHECK_THROWS_AS(materialize_kernel(s), OracleError);
  CHECK_THROWS_AS(materialize_kernel(random_state(4, 1, 0)), OracleError);
}

TEST_CASE("pfaffian normalization against the trace") {
  // With m = 0 both reduce to det(I - n).
  for (std::uint64_t k = 0; k < 6; ++k) {
    auto s = random_state(1 + static_cast<int>(k % 3), 9, k);
    s.m.setZero();
    s.m_plus.setZero();
    const int M = s.modes();
    const cplx det = (Eigen::MatrixXcd::Identity(M, M) - s.n).determinant();
    CHECK(std::abs(trace_normalization(s) - det) < 1e-12);
    CHECK(std::abs(pfaffian_normalization(s) - det) < 1e-12);
  }
  // With pairing the two still agree up to sign; report the relation exactly.
  for (std::uint64_t k = 0; k < 6; ++k) {
    const auto s = random_state(2 + static_cast<int>(k % 2), 10, k);
    const cplx tr = trace_normalization(s);
    const cplx pf = pfaffian_normalization(s);
    CHECK(std::abs(tr - pf) < 1e-12);
  }
}

TEST_CASE("operator identities") {
  auto s = GeneralFermiState::vacuum(1);
  s.n(0, 0) = 0.3;
  auto dev = check_identities(s);
  CHECK(dev.omega_scaling < 1e-9);
  CHECK(dev.max() < 1e-6);

  for (std::uint64_t k = 0; k < 4; ++k) {
    auto r = random_state(2, 2, k);
    r.omega = cplx(1.3, -0.4);
    dev = check_identities(r);
    CHECK(dev.normal < 1e-6);
    CHECK(dev.mixed < 1e-6);
    CHECK(dev.antinormal < 1e-6);
    CHECK(dev.omega_scaling < 1e-6);
  }
  CHECK_THROWS_AS(check_identities(s, 0.0), OracleError);
}

TEST_CASE("kernel distinguishes n from its transpose") {
  // A transposed n gives a different kernel when n is not symmetric; the
  // normal-order identity must then fail, so the check has teeth.
  auto s = random_state(2, 4, 0);
  s.n(0, 1) += 0.2;
  const auto good = check_identities(s);
  auto flipped = s;
  flipped.n = s.n.transpose();
  const auto k_good = materialize_kernel(s).matrix;
  const auto k_flip = materialize_kernel(flipped).matrix;
  CHECK(good.max() < 1e-6);
  CHECK((k_good - k_flip).cwiseAbs().maxCoeff() > 1e-3);
}

TEST_CASE("single-site analytic values") {
  const auto zero = single_site_analytic(2, 1, 0);
  CHECK(zero.filling == doctest::Approx(0.5));
  CHECK(zero.g2 == doctest::Approx(1.0));
  for (double tau : {0.5, 1.0, 3.0, 6.0, 40.0}) {
    const auto v = single_site_analytic(2, 1, tau);
    CHECK(v.filling == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(v.g2 == doctest::Approx(2.0 / (1.0 + std::exp(tau))).epsilon(1e-12));
  }
  CHECK(single_site_analytic(2, 1, 4).g2 == doctest::Approx(0.03597).epsilon(1e-3));
}

TEST_CASE("ED single site reproduces the analytic curve") {
  HubbardParams p;
  p.t = 0;
  p.U = 2;
  p.mu = 1;
  const std::vector<double> grid{0, 0.5, 1, 2, 4, 6};
  const auto series = ed_hubbard(p, build_lattice(p), grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(series.points[i].at("g2").value == doctest::Approx(2.0 / (1.0 + std::exp(grid[i]))));
    CHECK(series.points[i].at("filling").value == doctest::Approx(0.5));
  }
}

TEST_CASE("ED at tau = 0 is the maximally mixed average") {
  for (const auto& [Lx, Ly, t, U, mu] : std::vector<std::tuple<int, int, double, double, double>>{
           {2, 2, 1, 4, 0}, {2, 2, 1, 4, 2}, {3, 1, 0.5, -2, 0.3}, {5, 1, 1, 4, 1}}) {
    HubbardParams p;
    p.Lx = Lx;
    p.Ly = Ly;
    p.t = t;
    p.U = U;
    p.mu = mu;
    const std::vector<double> grid{0.0};
    const auto pt = ed_hubbard(p, build_lattice(p), grid).points[0];
    CHECK(pt.at("energy_per_site").value == doctest::Approx(U / 4.0 - mu).epsilon(1e-12));
    CHECK(pt.at("filling").value == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("ED at t = 0 factorizes over sites") {
  HubbardParams p;
  p.Lx = 2;
  p.Ly = 2;
  p.t = 0;
  p.U = 3;
  p.mu = 0.7;
  const std::vector<double> grid{0.3, 1.1, 2.5};
  const auto series = ed_hubbard(p, build_lattice(p), grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto one = single_site_analytic(p.U, p.mu, grid[i]);
    const double energy = p.U * one.double_occupancy - 2.0 * p.mu * one.filling;
    CHECK(series.points[i].at("energy_per_site").value == doctest::Approx(energy).epsilon(1e-12));
    CHECK(series.points[i].at("filling").value == doctest::Approx(one.filling).epsilon(1e-12));
    CHECK(series.points[i].at("g2").value == doctest::Approx(one.g2).epsilon(1e-12));
  }
}

TEST_CASE("ED size cap") {
  HubbardParams p;
  p.Lx = 7;
  p.Ly = 1;
  const std::vector<double> grid{0.0};
  CHECK_THROWS_AS(ed_hubbard(p, build_lattice(p), grid), OracleError);
}

TEST_CASE("ED regression fixture, 2x2 U=4 t=1 mu=2") {
  std::ifstream in(std::string(GQMC_FIXTURE_DIR) + "/ed_2x2_u4_t1_mu2.csv");
  REQUIRE(in);
  const auto rows = read_fixture(in);
  REQUIRE_FALSE(rows.empty());
  HubbardParams p;
  p.Lx = 2;
  p.Ly = 2;
  p.t = 1;
  p.U = 4;
  p.mu = 2;
  std::vector<double> grid;
  for (const auto& r : rows)
    if (grid.empty() || grid.back() != r.tau) grid.push_back(r.tau);
  const auto series = ed_hubbard(p, build_lattice(p), grid);
  std::size_t g = 0;
  for (const auto& r : rows) {
    while (series.points[g].time != r.tau) ++g;
    CHECK(series.points[g].at(r.observable).value ==
          doctest::Approx(r.value).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("fixture round trip") {
  ObservableSeries s;
  ObservablePoint p;
  p.time = 0.1;
  p.estimates["x"] = {1.0 / 3.0, std::nullopt};
  s.points.push_back(p);
  std::stringstream buf;
  const std::vector<std::string> names{"x"};
  write_fixture(buf, s, names);
  CHECK(buf.str() == "# gqmc fixture v1\ntau,observable,value\n0.1,x,0.333333333333333\n");
  const auto rows = read_fixture(buf);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].observable == "x");
  std::stringstream bad("tau,value\n");
  CHECK_THROWS_AS(read_fixture(bad), OracleError);
}

TEST_CASE("dissociation oracle") {
  const std::vector<double> grid{0.0, 0.01, 0.05, 0.5, 1.0, 2.0, 3.0};
  const auto none = dissociation_oracle(StatisticsKind::fermionic, 0.0, 5, grid);
  for (double v : none.n1) CHECK(v == 0.0);

  const int cutoff = poisson_cutoff(9.0);
  const auto fermi = dissociation_oracle(StatisticsKind::fermionic, 9.0, cutoff, grid);
  CHECK(fermi.n1[1] == doctest::Approx(9.0 * 1e-4).epsilon(1e-3));
  for (double v : fermi.n1) CHECK(v <= 1.0);
  for (std::size_t i = 0; i < grid.size(); ++i)
    CHECK(fermi.molecules[i] + fermi.n1[i] == doctest::Approx(9.0));

  std::vector<double> fine;
  for (int k = 0; k <= 300; ++k) fine.push_back(0.01 * k);
  const auto bose = dissociation_oracle(StatisticsKind::bosonic, 9.0, cutoff, fine);
  CHECK(*std::max_element(bose.n1.begin(), bose.n1.end()) > 1.0);
  CHECK(bose.n1[1] == doctest::Approx(9.0 * 1e-4).epsilon(1e-2));

  CHECK_THROWS_AS(dissociation_oracle(StatisticsKind::fermionic, 9.0, 10, grid), OracleError);
}
