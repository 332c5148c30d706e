#include <doctest.h>

#include <cmath>

#include "gqmc/dissociation.hpp"
#include "gqmc/oracle.hpp"

using namespace gqmc;

TEST_CASE("flatten round trip") {
  DissociationState s{{1, 2}, {3, 4}, {5, 6}, {7, 8}, {9, 10}, {11, 12}};
  const auto f = s.flatten();
  CHECK(f[0] == 1);
  CHECK(f[11] == 12);
  const auto back = DissociationState::unflatten(f);
  CHECK(back.m_plus == cplx(11, 12));
  CHECK(back.n2 == cplx(7, 8));
  CHECK_THROWS(DissociationState::unflatten(std::vector<double>(5)));
}

TEST_CASE("vacuum is a fixed point") {
  for (auto kind : {StatisticsKind::bosonic, StatisticsKind::fermionic}) {
    const auto d = dissociation_derivative(DissociationState{}, 0.0, 0.0, kind);
    for (double x : d.flatten()) CHECK(x == 0.0);
  }
}

TEST_CASE("mean-field derivative from a coherent molecule") {
  const auto s = DissociationState::coherent(9.0);
  CHECK(s.alpha == cplx(3.0));
  const auto d = dissociation_derivative(s, 0.0, 0.0, StatisticsKind::fermionic);
  CHECK(std::abs(d.m - cplx(0, -3)) < 1e-15);
  CHECK(std::abs(d.m_plus - cplx(0, 3)) < 1e-15);
  CHECK(d.n1 == cplx{});
  CHECK(d.n2 == cplx{});
  CHECK(d.alpha == cplx{});
  CHECK_THROWS(DissociationState::coherent(-1.0));
}

TEST_CASE("blocking sign follows the statistics") {
  DissociationState s;
  s.alpha = 1.0;
  s.n1 = 0.5;
  s.n2 = 0.5;
  const auto b = dissociation_derivative(s, 0.0, 0.0, StatisticsKind::bosonic);
  const auto f = dissociation_derivative(s, 0.0, 0.0, StatisticsKind::fermionic);
  CHECK(std::abs(b.m - cplx(0, -2)) < 1e-15);
  CHECK(std::abs(f.m) < 1e-15);
}

TEST_CASE("noise enters the molecular amplitudes with sqrt(i)") {
  const cplx zeta{0.3, -0.7};
  const auto d = dissociation_derivative(DissociationState{}, zeta, 0.0, StatisticsKind::bosonic);
  const cplx sqrt_i = std::polar(1.0, M_PI / 4.0);
  CHECK(std::abs(d.alpha + sqrt_i * zeta) < 1e-15);
  CHECK(d.alpha_plus == cplx{});
}

TEST_CASE("empty molecule stays empty on average") {
  DissociationRunConfig cfg;
  cfg.trajectories = 2000;
  cfg.t_max = 0.5;
  cfg.record_interval = 100;
  const auto series = run_realtime(StatisticsKind::fermionic, 0.0, cfg);
  CHECK_FALSE(series.truncated);
  for (const auto& p : series.points) {
    for (const char* name : {"n1", "molecules", "n1_imag"}) {
      const auto& e = p.at(name);
      CHECK(std::abs(e.value) <= 3.0 * e.error.value_or(0.0));
    }
  }
}

TEST_CASE("short-time growth is 9 t^2") {
  DissociationRunConfig cfg;
  cfg.trajectories = 4000;
  cfg.t_max = 0.1;
  cfg.record_interval = 25;
  cfg.seed = 3;
  const auto series = run_realtime(StatisticsKind::fermionic, 9.0, cfg);
  REQUIRE(series.points.size() == 5);
  for (const auto& p : series.points) {
    const double t = p.time;
    const auto& n1 = p.at("n1");
    // Next term of the Rabi sum: -(1/3) <n^2> t^4 with <n^2> = 90.
    const double bound = 30.0 * std::pow(t, 4);
    CHECK(std::abs(n1.value - 9.0 * t * t) <= 3.0 * n1.error.value_or(0.0) + bound + 1e-12);
  }
}

TEST_CASE("run is reproducible and symmetric") {
  DissociationRunConfig cfg;
  cfg.trajectories = 500;
  cfg.t_max = 0.3;
  cfg.record_interval = 50;
  cfg.seed = 8;
  cfg.threads = 1;
  const auto a = run_realtime(StatisticsKind::bosonic, 9.0, cfg);
  cfg.threads = 3;
  const auto b = run_realtime(StatisticsKind::bosonic, 9.0, cfg);
  REQUIRE(a.points.size() == b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    CHECK(a.points[i].at("n1").value == b.points[i].at("n1").value);
    const auto& n1 = a.points[i].at("n1");
    const auto& n2 = a.points[i].at("n2");
    CHECK(std::abs(n1.value - n2.value) <= 3.0 * std::hypot(n1.error.value(), n2.error.value()) + 1e-12);
  }
}

TEST_CASE("fermionic ensemble follows the Rabi oracle early on") {
  DissociationRunConfig cfg;
  cfg.trajectories = 4000;
  cfg.t_max = 0.4;
  cfg.record_interval = 50;
  cfg.seed = 12;
  const auto series = run_realtime(StatisticsKind::fermionic, 9.0, cfg);
  std::vector<double> grid;
  for (const auto& p : series.points) grid.push_back(p.time);
  const auto exact = oracle::dissociation_oracle(StatisticsKind::fermionic, 9.0,
                                                 oracle::poisson_cutoff(9.0), grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& n1 = series.points[i].at("n1");
    CHECK(std::abs(n1.value - exact.n1[i]) <= 3.0 * n1.error.value_or(0.0) + 1e-12);
  }
}

TEST_CASE("error ceiling truncates") {
  DissociationRunConfig cfg;
  cfg.trajectories = 200;
  cfg.t_max = 2.0;
  cfg.record_interval = 50;
  cfg.error_ceiling = 0.01;
  const auto series = run_realtime(StatisticsKind::bosonic, 9.0, cfg);
  CHECK(series.truncated);
  REQUIRE(series.truncated_at.has_value());
  CHECK(*series.truncated_at < 2.0);
  CHECK(series.points.back().time < *series.truncated_at);
}

TEST_CASE("config checks") {
  DissociationRunConfig cfg;
  cfg.error_ceiling = 0.0;
  CHECK_THROWS(cfg.validate());
  cfg = DissociationRunConfig{};
  cfg.trajectories = 0;
  CHECK_THROWS(cfg.validate());
}
