#include "gqmc/phase_space.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gqmc {

GeneralFermiState GeneralFermiState::vacuum(int modes) {
  GeneralFermiState state;
  state.n = Eigen::MatrixXcd::Zero(modes, modes);
  state.m = Eigen::MatrixXcd::Zero(modes, modes);
  state.m_plus = Eigen::MatrixXcd::Zero(modes, modes);
  return state;
}

void GeneralFermiState::validate(double tolerance) const {
  const auto M = n.rows();
  if (n.cols() != M || m.rows() != M || m.cols() != M || m_plus.rows() != M ||
      m_plus.cols() != M) {
    throw std::invalid_argument("GeneralFermiState: inconsistent matrix shapes");
  }
  if ((m + m.transpose()).cwiseAbs().maxCoeff() > tolerance ||
      (m_plus + m_plus.transpose()).cwiseAbs().maxCoeff() > tolerance) {
    throw std::invalid_argument("GeneralFermiState: pairing matrices must be antisymmetric");
  }
}

namespace {

void check_index(const GeneralFermiState& state, int i) {
  if (i < 0 || i >= state.modes()) {
    throw std::out_of_range("mode index " + std::to_string(i) + " out of range");
  }
}

}  // namespace

cplx quadratic_moment(const GeneralFermiState& state, MomentKind kind, int i, int j) {
  check_index(state, i);
  check_index(state, j);
  switch (kind) {
    case MomentKind::n:
      return state.n(i, j);
    case MomentKind::m:
      return state.m(i, j);
    case MomentKind::m_plus:
      return state.m_plus(i, j);
  }
  throw std::invalid_argument("unknown moment kind");
}

cplx quartic_moment(const GeneralFermiState& state, int i, int j, int k, int l) {
  for (int idx : {i, j, k, l}) check_index(state, idx);
  const auto& n = state.n;
  return state.m_plus(i, j) * state.m(k, l) - n(i, k) * n(j, l) + n(i, l) * n(j, k);
}

HubbardTrajectory::HubbardTrajectory(int modes)
    : modes_(modes), values_(flat_size(modes), 0.0) {
  if (modes < 1) throw std::invalid_argument("HubbardTrajectory needs at least one mode");
}

bool HubbardTrajectory::finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

HubbardTrajectory init_infinite_temperature(int modes) {
  HubbardTrajectory traj(modes);
  traj.n_up().setIdentity();
  traj.n_up() *= 0.5;
  traj.n_dn().setIdentity();
  traj.n_dn() *= 0.5;
  traj.log_weight() = 0.0;
  return traj;
}

const Estimate& ObservablePoint::at(const std::string& name) const {
  auto it = estimates.find(name);
  if (it == estimates.end()) {
    throw std::out_of_range("no estimate named '" + name + "'");
  }
  return it->second;
}

}  // namespace gqmc
