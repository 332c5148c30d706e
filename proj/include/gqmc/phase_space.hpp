#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gqmc {

using cplx = std::complex<double>;

/// Phase-space point of a general fermionic Gaussian kernel over M modes.
///
/// n carries normal correlations <a+_i a_j> = n(i,j); m and m_plus carry the
/// pairing correlations <a_i a_j> = m(i,j) and <a+_i a+_j> = m_plus(i,j).
/// Both pairing matrices are antisymmetric.
struct GeneralFermiState {
  Eigen::MatrixXcd n;
  Eigen::MatrixXcd m;
  Eigen::MatrixXcd m_plus;
  cplx omega{1.0, 0.0};

  [[nodiscard]] int modes() const noexcept { return static_cast<int>(n.rows()); }

  static GeneralFermiState vacuum(int modes);

  /// Throws std::invalid_argument on shape mismatch or non-antisymmetric pairing matrices.
  void validate(double tolerance = 0.0) const;

  /// Number of independent complex covariance parameters, M(2M-1).
  [[nodiscard]] static long parameter_count(int modes) noexcept {
    return static_cast<long>(modes) * (2L * modes - 1);
  }
};

enum class MomentKind { n, m, m_plus };

/// Phase-space variable whose weighted average estimates <a+_i a_j>, <a_i a_j>
/// or <a+_i a+_j> depending on kind.
cplx quadratic_moment(const GeneralFermiState& state, MomentKind kind, int i, int j);

/// Wick combination estimating <a+_i a+_j a_k a_l>.
cplx quartic_moment(const GeneralFermiState& state, int i, int j, int k, int l);

/// One weighted Hubbard sample: real spin-up and spin-down number matrices
/// plus the log of the (positive) trajectory weight. Stored as one flat
/// buffer so the integrator can treat it as a plain vector.
class HubbardTrajectory {
 public:
  using MatrixMap = Eigen::Map<Eigen::MatrixXd>;
  using ConstMatrixMap = Eigen::Map<const Eigen::MatrixXd>;

  HubbardTrajectory() = default;
  explicit HubbardTrajectory(int modes);

  [[nodiscard]] int modes() const noexcept { return modes_; }

  MatrixMap n_up() { return {values_.data(), modes_, modes_}; }
  MatrixMap n_dn() { return {values_.data() + block(), modes_, modes_}; }
  [[nodiscard]] ConstMatrixMap n_up() const { return {values_.data(), modes_, modes_}; }
  [[nodiscard]] ConstMatrixMap n_dn() const {
    return {values_.data() + block(), modes_, modes_};
  }
  double& log_weight() { return values_.back(); }
  [[nodiscard]] double log_weight() const { return values_.back(); }

  std::span<double> values() { return values_; }
  [[nodiscard]] std::span<const double> values() const { return values_; }

  [[nodiscard]] bool finite() const;

  /// Flat length 2*M*M + 1.
  [[nodiscard]] static std::size_t flat_size(int modes) noexcept {
    return 2 * static_cast<std::size_t>(modes) * modes + 1;
  }

 private:
  [[nodiscard]] std::ptrdiff_t block() const noexcept {
    return static_cast<std::ptrdiff_t>(modes_) * modes_;
  }
  int modes_ = 0;
  std::vector<double> values_;
};

/// Unnormalised identity density operator: n_up = n_dn = I/2, log-weight 0.
HubbardTrajectory init_infinite_temperature(int modes);

/// Scalar estimate with an optional standard error (absent when the error is
/// undefined, e.g. a single batch).
struct Estimate {
  double value = 0.0;
  std::optional<double> error;
};

/// Named weighted estimates at one time on the output grid. `time` is the
/// inverse temperature for imaginary-time runs and real time for dynamics.
struct ObservablePoint {
  double time = 0.0;
  std::map<std::string, Estimate> estimates;
  std::size_t population = 0;
  double mean_log_weight = 0.0;

  [[nodiscard]] const Estimate& at(const std::string& name) const;
};

struct ObservableSeries {
  std::vector<ObservablePoint> points;
  /// Set when the series was cut short (e.g. sampling-error blowup).
  bool truncated = false;
  std::optional<double> truncated_at;
};

}  // namespace gqmc
