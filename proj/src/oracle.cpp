#include "gqmc/oracle.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "gqmc/noise.hpp"

namespace gqmc::oracle {

namespace {

constexpr int kMaxKernelModes = 3;

/// Element of the Grassmann algebra on G generators, indexed by bitmask.
/// A monomial's canonical form lists generators in increasing index.
class Grassmann {
 public:
  explicit Grassmann(int generators)
      : generators_(generators), coeff_(std::size_t{1} << generators, cplx{}) {}

  static Grassmann scalar(int generators, cplx value) {
    Grassmann g(generators);
    g.coeff_[0] = value;
    return g;
  }
  static Grassmann generator(int generators, int index) {
    Grassmann g(generators);
    g.coeff_[std::size_t{1} << index] = 1.0;
    return g;
  }

  cplx& operator[](std::size_t mask) { return coeff_[mask]; }
  [[nodiscard]] cplx operator[](std::size_t mask) const { return coeff_[mask]; }
  [[nodiscard]] std::size_t size() const noexcept { return coeff_.size(); }

  Grassmann& operator+=(const Grassmann& other) {
    for (std::size_t k = 0; k < coeff_.size(); ++k) coeff_[k] += other.coeff_[k];
    return *this;
  }
  Grassmann operator*(cplx factor) const {
    Grassmann out = *this;
    for (auto& c : out.coeff_) c *= factor;
    return out;
  }

  Grassmann operator*(const Grassmann& rhs) const {
    Grassmann out(generators_);
    for (std::size_t a = 0; a < coeff_.size(); ++a) {
      if (coeff_[a] == cplx{}) continue;
      for (std::size_t b = 0; b < rhs.coeff_.size(); ++b) {
        if ((a & b) != 0 || rhs.coeff_[b] == cplx{}) continue;
        out.coeff_[a | b] += reorder_sign(a, b) * coeff_[a] * rhs.coeff_[b];
      }
    }
    return out;
  }

 private:
  // Sign of sorting the concatenation (A, B) into canonical order: one flip
  // per pair (x in A, y in B) with x > y.
  static double reorder_sign(std::size_t a, std::size_t b) {
    int swaps = 0;
    for (std::size_t rest = b; rest != 0; rest &= rest - 1) {
      const int y = std::countr_zero(rest);
      swaps += std::popcount(a >> (y + 1));
    }
    return (swaps % 2 == 0) ? 1.0 : -1.0;
  }

  int generators_;
  std::vector<cplx> coeff_;
};

Eigen::MatrixXcd dense(const Eigen::SparseMatrix<double>& s) {
  return Eigen::MatrixXd(s).cast<cplx>();
}

void check_kernel_modes(int M) {
  if (M < 1 || M > kMaxKernelModes) {
    throw OracleError("kernel materialization supports 1.." + std::to_string(kMaxKernelModes) +
                      " modes, got " + std::to_string(M));
  }
}

FockOperator kernel_from_sigma(const Eigen::MatrixXcd& sigma, int M) {
  const int G = 2 * M;
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(sigma);
  if (!lu.isInvertible()) throw OracleError("generalized covariance is singular");
  const Eigen::MatrixXcd Q = extended_identity(M) - 0.5 * lu.inverse();

  // Extended row vector entry mu is a+_mu (mu < M) or a_{mu-M}; extended
  // column vector entry nu is a_nu (nu < M) or a+_{nu-M}. With generator g_k
  // = a+_k for k < M and a_{k-M} otherwise, these are g_mu and g_{(nu+M)%G}.
  Grassmann exponent(G);
  for (int mu = 0; mu < G; ++mu) {
    for (int nu = 0; nu < G; ++nu) {
      const int left = mu;
      const int right = (nu + M) % G;
      if (left == right) continue;
      exponent += (Grassmann::generator(G, left) * Grassmann::generator(G, right)) * (-Q(mu, nu));
    }
  }

  Grassmann series = Grassmann::scalar(G, 1.0);
  Grassmann term = Grassmann::scalar(G, 1.0);
  for (int k = 1; k <= M; ++k) {
    term = (term * exponent) * (1.0 / k);
    series += term;
  }

  const auto ops = annihilation_operators(M);
  const int dim = 1 << M;
  FockOperator kernel{M, Eigen::MatrixXcd::Zero(dim, dim)};
  for (std::size_t mask = 0; mask < series.size(); ++mask) {
    if (series[mask] == cplx{}) continue;
    Eigen::SparseMatrix<double> product(dim, dim);
    product.setIdentity();
    // Canonical order = creators by mode, then annihilators by mode: already normal.
    for (int g = 0; g < G; ++g) {
      if (((mask >> g) & 1u) == 0) continue;
      if (g < M) {
        product = Eigen::SparseMatrix<double>(product * ops[static_cast<std::size_t>(g)].transpose());
      } else {
        product = Eigen::SparseMatrix<double>(product * ops[static_cast<std::size_t>(g - M)]);
      }
    }
    kernel.matrix += series[mask] * dense(product);
  }
  return kernel;
}

Eigen::MatrixXcd random_matrix(int modes, std::vector<double>::const_iterator& it) {
  Eigen::MatrixXcd a(modes, modes);
  for (int i = 0; i < modes; ++i) {
    for (int j = 0; j < modes; ++j) {
      const double re = *it++;
      const double im = *it++;
      a(i, j) = cplx(re, im);
    }
  }
  return a;
}

Eigen::MatrixXcd random_pairing(int modes, std::vector<double>::const_iterator& it,
                                double norm) {
  Eigen::MatrixXcd a = random_matrix(modes, it);
  a = a - a.transpose().eval();
  const double current = a.norm();
  return current > 0.0 ? Eigen::MatrixXcd(a * (norm / current)) : a;
}

GeneralFermiState with_omega(const GeneralFermiState& s, cplx omega) {
  GeneralFermiState out = s;
  out.omega = omega;
  return out;
}

Eigen::MatrixXcd weighted_kernel(const GeneralFermiState& s) {
  return s.omega * materialize_kernel(s).matrix;
}

}  // namespace

std::vector<Eigen::SparseMatrix<double>> annihilation_operators(int modes) {
  if (modes < 1 || modes > 16) throw OracleError("annihilation_operators: 1..16 modes");
  const int dim = 1 << modes;
  std::vector<Eigen::SparseMatrix<double>> ops;
  ops.reserve(static_cast<std::size_t>(modes));
  for (int k = 0; k < modes; ++k) {
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(static_cast<std::size_t>(dim / 2));
    for (int state = 0; state < dim; ++state) {
      if (((state >> k) & 1) == 0) continue;
      const int below = std::popcount(static_cast<unsigned>(state) & ((1u << k) - 1u));
      entries.emplace_back(state ^ (1 << k), state, (below % 2 == 0) ? 1.0 : -1.0);
    }
    Eigen::SparseMatrix<double> a(dim, dim);
    a.setFromTriplets(entries.begin(), entries.end());
    ops.push_back(std::move(a));
  }
  return ops;
}

cplx pfaffian(Eigen::MatrixXcd A, double tolerance) {
  if (A.rows() != A.cols()) throw OracleError("pfaffian: matrix must be square");
  const Eigen::Index n = A.rows();
  if (n > 0 && (A + A.transpose()).cwiseAbs().maxCoeff() > tolerance) {
    throw OracleError("pfaffian: matrix is not antisymmetric");
  }
  if (n % 2 == 1) return 0.0;
  cplx pf = 1.0;
  for (Eigen::Index k = 0; k + 1 < n; k += 2) {
    Eigen::Index pivot;
    A.col(k).tail(n - k - 1).cwiseAbs().maxCoeff(&pivot);
    pivot += k + 1;
    if (pivot != k + 1) {
      A.row(k + 1).swap(A.row(pivot));
      A.col(k + 1).swap(A.col(pivot));
      pf = -pf;
    }
    if (A(k + 1, k) == cplx{}) return 0.0;
    pf *= A(k, k + 1);
    if (k + 2 < n) {
      const Eigen::Index rest = n - k - 2;
      const Eigen::VectorXcd tau = A.row(k).tail(rest).transpose() / A(k, k + 1);
      const Eigen::VectorXcd v = A.col(k + 1).tail(rest);
      A.bottomRightCorner(rest, rest) += tau * v.transpose() - v * tau.transpose();
    }
  }
  return pf;
}

Eigen::MatrixXcd extended_covariance(const GeneralFermiState& state) {
  const int M = state.modes();
  const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(M, M);
  Eigen::MatrixXcd sigma(2 * M, 2 * M);
  sigma << I - state.n.transpose(), -state.m, -state.m_plus, state.n - I;
  return sigma;
}

Eigen::MatrixXcd extended_identity(int modes) {
  Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(2 * modes, 2 * modes);
  I.bottomRightCorner(modes, modes) *= -1.0;
  return I;
}

Eigen::MatrixXcd antisymmetric_covariance(const GeneralFermiState& state) {
  const int M = state.modes();
  Eigen::MatrixXcd swap = Eigen::MatrixXcd::Zero(2 * M, 2 * M);
  swap.topRightCorner(M, M).setIdentity();
  swap.bottomLeftCorner(M, M).setIdentity();
  return extended_covariance(state) * swap;
}

FockOperator unnormalised_kernel(const GeneralFermiState& state) {
  state.validate(1e-12);
  check_kernel_modes(state.modes());
  return kernel_from_sigma(extended_covariance(state), state.modes());
}

FockOperator materialize_kernel(const GeneralFermiState& state) {
  FockOperator kernel = unnormalised_kernel(state);
  const cplx trace = kernel.matrix.trace();
  if (std::abs(trace) == 0.0) throw OracleError("kernel has zero trace");
  kernel.matrix /= trace;
  return kernel;
}

cplx trace_normalization(const GeneralFermiState& state) {
  return 1.0 / unnormalised_kernel(state).matrix.trace();
}

cplx pfaffian_normalization(const GeneralFermiState& state) {
  const int M = state.modes();
  const double sign = ((M * (M - 1) / 2) % 2 == 0) ? 1.0 : -1.0;
  return sign * pfaffian(antisymmetric_covariance(state), 1e-10);
}

cplx expectation(const Eigen::MatrixXcd& op, const FockOperator& kernel) {
  return (op * kernel.matrix).trace();
}

double IdentityDeviations::max() const noexcept {
  return std::max({omega_scaling, normal, mixed, antinormal});
}

IdentityDeviations check_identities(const GeneralFermiState& state, double step) {
  const int M = state.modes();
  check_kernel_modes(M);
  if (!(step > 1e-12)) throw OracleError("finite-difference step underflow");
  const int G = 2 * M;

  const Eigen::MatrixXcd L = weighted_kernel(state);
  const Eigen::MatrixXcd sigma = extended_covariance(state);
  const Eigen::MatrixXcd I_ext = extended_identity(M);
  const Eigen::MatrixXcd sigma_minus_I = sigma - I_ext;

  IdentityDeviations dev;

  {
    const double h = step * std::max(1.0, std::abs(state.omega));
    const Eigen::MatrixXcd forward = weighted_kernel(with_omega(state, state.omega + h));
    const Eigen::MatrixXcd backward = weighted_kernel(with_omega(state, state.omega - h));
    const Eigen::MatrixXcd scaled = state.omega * (forward - backward) / (2.0 * h);
    dev.omega_scaling = (scaled - L).cwiseAbs().maxCoeff();
  }

  // deriv[mu][nu] = dLambda / dsigma(nu, mu), moving along the manifold of
  // structured covariances: a perturbation of one sigma entry is carried by
  // the (n, m, m_plus) entry it encodes.
  std::vector<std::vector<Eigen::MatrixXcd>> deriv(
      static_cast<std::size_t>(G), std::vector<Eigen::MatrixXcd>(static_cast<std::size_t>(G)));
  const int dim = 1 << M;
  for (int nu = 0; nu < G; ++nu) {
    for (int mu = 0; mu < G; ++mu) {
      auto perturbed = [&](double e) -> std::optional<Eigen::MatrixXcd> {
        GeneralFermiState s = state;
        if (nu < M && mu < M) {
          s.n(mu, nu) -= e;
        } else if (nu >= M && mu >= M) {
          s.n(nu - M, mu - M) += e;
        } else if (nu < M) {
          const int i = nu, j = mu - M;
          if (i == j) return std::nullopt;
          s.m(i, j) -= e;
          s.m(j, i) += e;
        } else {
          const int i = nu - M, j = mu;
          if (i == j) return std::nullopt;
          s.m_plus(i, j) -= e;
          s.m_plus(j, i) += e;
        }
        return weighted_kernel(s);
      };
      auto& slot = deriv[static_cast<std::size_t>(mu)][static_cast<std::size_t>(nu)];
      const auto plus = perturbed(step);
      if (!plus) {
        slot = Eigen::MatrixXcd::Zero(dim, dim);
        continue;
      }
      slot = (*plus - *perturbed(-step)) / (2.0 * step);
    }
  }

  // (A dLambda/dsigma B)_{xy} = sum_{mu,nu} A(x,mu) deriv[mu][nu] B(nu,y)
  auto sandwich = [&](const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& B, int x, int y) {
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(dim, dim);
    for (int mu = 0; mu < G; ++mu) {
      if (A(x, mu) == cplx{}) continue;
      for (int nu = 0; nu < G; ++nu) {
        if (B(nu, y) == cplx{}) continue;
        acc += A(x, mu) * B(nu, y) * deriv[static_cast<std::size_t>(mu)][static_cast<std::size_t>(nu)];
      }
    }
    return acc;
  };

  const auto ladder = annihilation_operators(M);
  std::vector<Eigen::MatrixXcd> a(static_cast<std::size_t>(M)), ad(static_cast<std::size_t>(M));
  for (int k = 0; k < M; ++k) {
    a[static_cast<std::size_t>(k)] = dense(ladder[static_cast<std::size_t>(k)]);
    ad[static_cast<std::size_t>(k)] = a[static_cast<std::size_t>(k)].adjoint();
  }
  // Column vector (a, a+^T) and row vector (a+, a^T), with creator flags.
  auto column_op = [&](int x) -> const Eigen::MatrixXcd& {
    return x < M ? a[static_cast<std::size_t>(x)] : ad[static_cast<std::size_t>(x - M)];
  };
  auto row_op = [&](int y) -> const Eigen::MatrixXcd& {
    return y < M ? ad[static_cast<std::size_t>(y)] : a[static_cast<std::size_t>(y - M)];
  };

  for (int x = 0; x < G; ++x) {
    const auto& A = column_op(x);
    const bool a_creates = x >= M;
    for (int y = 0; y < G; ++y) {
      const auto& B = row_op(y);
      const bool b_creates = y < M;

      // Normal order around an even kernel: creators left, annihilators right,
      // one sign per swap of A and B.
      Eigen::MatrixXcd normal;
      if (a_creates && b_creates) normal = A * B * L;
      else if (!a_creates && !b_creates) normal = L * A * B;
      else if (a_creates) normal = A * L * B;
      else normal = -(B * L * A);
      const Eigen::MatrixXcd rhs_normal = -sigma(x, y) * L + sandwich(sigma, sigma, x, y);
      dev.normal = std::max(dev.normal, (normal - rhs_normal).cwiseAbs().maxCoeff());

      // Outer antinormal order around the odd block :B Lambda:.
      const Eigen::MatrixXcd inner = b_creates ? Eigen::MatrixXcd(B * L) : Eigen::MatrixXcd(L * B);
      const Eigen::MatrixXcd mixed = a_creates ? Eigen::MatrixXcd(-(inner * A)) : Eigen::MatrixXcd(A * inner);
      const Eigen::MatrixXcd rhs_mixed = sigma(x, y) * L - sandwich(sigma_minus_I, sigma, x, y);
      dev.mixed = std::max(dev.mixed, (mixed - rhs_mixed).cwiseAbs().maxCoeff());

      // Antinormal order around the kernel: annihilators left, creators right.
      Eigen::MatrixXcd anti;
      if (!a_creates && !b_creates) anti = A * B * L;
      else if (a_creates && b_creates) anti = L * A * B;
      else if (!a_creates) anti = A * L * B;
      else anti = -(B * L * A);
      const Eigen::MatrixXcd rhs_anti =
          -sigma_minus_I(x, y) * L + sandwich(sigma_minus_I, sigma_minus_I, x, y);
      dev.antinormal = std::max(dev.antinormal, (anti - rhs_anti).cwiseAbs().maxCoeff());
    }
  }
  return dev;
}

Eigen::SparseMatrix<double> hubbard_hamiltonian(const HubbardParams& params,
                                                const Lattice& lattice) {
  const int M = lattice.sites();
  const int orbitals = 2 * M;
  const int dim = 1 << orbitals;
  const auto ops = annihilation_operators(orbitals);

  Eigen::SparseMatrix<double> H(dim, dim);
  for (int spin = 0; spin < 2; ++spin) {
    for (int i = 0; i < M; ++i) {
      const auto& ai = ops[static_cast<std::size_t>(i + M * spin)];
      for (const auto& [j, count] : lattice.neighbours[static_cast<std::size_t>(i)]) {
        const auto& aj = ops[static_cast<std::size_t>(j + M * spin)];
        H += (-params.t * count) * Eigen::SparseMatrix<double>(ai.transpose() * aj);
      }
      H += (-params.mu) * Eigen::SparseMatrix<double>(ai.transpose() * ai);
    }
  }
  for (int j = 0; j < M; ++j) {
    const auto& up = ops[static_cast<std::size_t>(j)];
    const auto& dn = ops[static_cast<std::size_t>(j + M)];
    const Eigen::SparseMatrix<double> n_up = up.transpose() * up;
    const Eigen::SparseMatrix<double> n_dn = dn.transpose() * dn;
    H += params.U * Eigen::SparseMatrix<double>(n_up * n_dn);
  }

  return H;
}

ObservableSeries ed_hubbard(const HubbardParams& params, const Lattice& lattice,
                            std::span<const double> tau_grid) {
  const int M = lattice.sites();
  if (M < 1 || M > 6) {
    throw OracleError("ed_hubbard: 4^sites must not exceed 4096 (got " + std::to_string(M) +
                      " sites)");
  }
  const int orbitals = 2 * M;
  const int dim = 1 << orbitals;
  const Eigen::SparseMatrix<double> H = hubbard_hamiltonian(params, lattice);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver{Eigen::MatrixXd(H)};
  if (solver.info() != Eigen::Success) throw OracleError("ed_hubbard: eigensolver failed");
  const Eigen::VectorXd& E = solver.eigenvalues();
  const Eigen::MatrixXd weights = solver.eigenvectors().cwiseAbs2();  // (basis, eigenstate)

  // Diagonal observables in the occupation basis, projected onto eigenstates.
  auto occupation = [&](int orbital) {
    Eigen::VectorXd v(dim);
    for (int b = 0; b < dim; ++b) v(b) = (b >> orbital) & 1;
    return v;
  };
  Eigen::VectorXd number = Eigen::VectorXd::Zero(dim);
  std::vector<Eigen::VectorXd> up_k, dn_k, pair_k;
  for (int j = 0; j < M; ++j) {
    const Eigen::VectorXd u = occupation(j);
    const Eigen::VectorXd d = occupation(j + M);
    number += u + d;
    up_k.push_back(weights.transpose() * u);
    dn_k.push_back(weights.transpose() * d);
    pair_k.push_back(weights.transpose() * u.cwiseProduct(d));
  }
  const Eigen::VectorXd number_k = weights.transpose() * number;

  ObservableSeries series;
  const double e0 = E.minCoeff();
  for (double tau : tau_grid) {
    const Eigen::VectorXd boltzmann = (-(E.array() - e0) * tau).exp().matrix();
    const double Z = boltzmann.sum();
    auto thermal = [&](const Eigen::VectorXd& per_state) { return boltzmann.dot(per_state) / Z; };
    const double energy = boltzmann.dot(E) / Z;
    const double n_total = thermal(number_k);
    double g2 = 0.0;
    for (int j = 0; j < M; ++j) {
      const auto uj = static_cast<std::size_t>(j);
      g2 += thermal(pair_k[uj]) / (thermal(up_k[uj]) * thermal(dn_k[uj]));
    }
    ObservablePoint point;
    point.time = tau;
    point.estimates["energy_per_site"] = {energy / M, std::nullopt};
    point.estimates["energy_without_mu_per_site"] = {(energy + params.mu * n_total) / M,
                                                     std::nullopt};
    point.estimates["filling"] = {n_total / (2.0 * M), std::nullopt};
    point.estimates["g2"] = {g2 / M, std::nullopt};
    series.points.push_back(std::move(point));
  }
  return series;
}

SingleSiteValues single_site_analytic(double U, double mu, double tau) {
  // Boltzmann factors of |0>, |up>, |dn>, |up dn> relative to the largest.
  const double e_single = tau * mu;
  const double e_double = -tau * (U - 2.0 * mu);
  const double top = std::max({0.0, e_single, e_double});
  const double w0 = std::exp(-top);
  const double w1 = std::exp(e_single - top);
  const double w2 = std::exp(e_double - top);
  const double Z = w0 + 2.0 * w1 + w2;
  SingleSiteValues v;
  v.filling = (w1 + w2) / Z;
  v.double_occupancy = w2 / Z;
  v.g2 = v.double_occupancy / (v.filling * v.filling);
  return v;
}

namespace {

double poisson_pmf(int n, double mean) {
  if (mean == 0.0) return n == 0 ? 1.0 : 0.0;
  return std::exp(n * std::log(mean) - mean - std::lgamma(n + 1.0));
}

double poisson_tail(int cutoff, double mean) {
  double head = 0.0;
  for (int n = 0; n <= cutoff; ++n) head += poisson_pmf(n, mean);
  return std::max(0.0, 1.0 - head);
}

}  // namespace

int poisson_cutoff(double n_mean) {
  int cutoff = 0;
  while (poisson_tail(cutoff, n_mean) >= 1e-10 ||
         poisson_pmf(cutoff, n_mean) >= 1e-12 * std::max(1.0, n_mean)) {
    ++cutoff;
  }
  return cutoff;
}

DissociationReference dissociation_oracle(StatisticsKind kind, double n_mean, int cutoff,
                                          std::span<const double> t_grid) {
  if (!(n_mean >= 0.0)) throw OracleError("dissociation_oracle: negative mean");
  if (poisson_tail(cutoff, n_mean) >= 1e-10) {
    throw OracleError("dissociation_oracle: cutoff " + std::to_string(cutoff) +
                      " leaves a Poisson tail above 1e-10");
  }
  DissociationReference ref;
  ref.time.assign(t_grid.begin(), t_grid.end());
  ref.n1.assign(t_grid.size(), 0.0);
  ref.molecules.assign(t_grid.size(), 0.0);

  for (int n = 0; n <= cutoff; ++n) {
    const double p = poisson_pmf(n, n_mean);
    if (p == 0.0) continue;
    if (kind == StatisticsKind::fermionic || n == 0) {
      // Two-level Rabi problem |n,0,0> <-> |n-1,1,1> with coupling sqrt(n).
      for (std::size_t k = 0; k < t_grid.size(); ++k) {
        const double s = std::sin(std::sqrt(static_cast<double>(n)) * t_grid[k]);
        ref.n1[k] += p * s * s;
        ref.molecules[k] += p * (n - s * s);
      }
      continue;
    }
    // States |n-k, k, k>, k = 0..n; <k-1|H|k> = k sqrt(n-k+1).
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n + 1, n + 1);
    for (int k = 1; k <= n; ++k) {
      h(k - 1, k) = h(k, k - 1) = k * std::sqrt(static_cast<double>(n - k + 1));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
    const Eigen::MatrixXd& V = solver.eigenvectors();
    const Eigen::VectorXd& E = solver.eigenvalues();
    for (std::size_t k = 0; k < t_grid.size(); ++k) {
      Eigen::VectorXcd phase(n + 1);
      for (int j = 0; j <= n; ++j) {
        phase(j) = std::polar(V(0, j), -E(j) * t_grid[k]);
      }
      const Eigen::VectorXcd amplitude = V.cast<cplx>() * phase;
      double atoms = 0.0;
      for (int j = 0; j <= n; ++j) atoms += j * std::norm(amplitude(j));
      ref.n1[k] += p * atoms;
      ref.molecules[k] += p * (n - atoms);
    }
  }
  return ref;
}

GeneralFermiState random_state(int modes, std::uint64_t seed, std::uint64_t index) {
  const auto count = static_cast<std::size_t>(3 * 2 * modes * modes + modes);
  const std::vector<double> draws =
      gaussian_draws(NoiseStream{seed, index, 0, NoiseDomain::auxiliary}, count, 1.0);
  auto it = draws.cbegin();

  // n = V diag(lambda) V^-1 with V unitary from a QR factorization.
  const Eigen::MatrixXcd basis = random_matrix(modes, it);
  const Eigen::MatrixXcd V = Eigen::HouseholderQR<Eigen::MatrixXcd>(basis).householderQ();
  Eigen::VectorXcd lambda(modes);
  for (int k = 0; k < modes; ++k) {
    // Map a normal draw to (0.05, 0.95) through the logistic function.
    lambda(k) = 0.05 + 0.9 / (1.0 + std::exp(-*it++));
  }
  GeneralFermiState state;
  state.n = V * lambda.asDiagonal() * V.adjoint();
  const double scale = 0.2 * (0.5 + 0.5 / (1.0 + std::exp(-draws.back())));
  state.m = random_pairing(modes, it, scale);
  state.m_plus = random_pairing(modes, it, scale);
  state.omega = 1.0;
  return state;
}

double moment_deviation(const GeneralFermiState& state) {
  const int M = state.modes();
  const auto kernel = materialize_kernel(state);
  const auto ops = annihilation_operators(M);
  double worst = 0.0;
  double scale = 0.0;
  for (int i = 0; i < M; ++i) {
    const Eigen::MatrixXcd ai = Eigen::MatrixXd(ops[static_cast<std::size_t>(i)]).cast<cplx>();
    for (int j = 0; j < M; ++j) {
      const Eigen::MatrixXcd aj = Eigen::MatrixXd(ops[static_cast<std::size_t>(j)]).cast<cplx>();
      const cplx n = expectation(ai.adjoint() * aj, kernel);
      const cplx m = expectation(ai * aj, kernel);
      const cplx mp = expectation(ai.adjoint() * aj.adjoint(), kernel);
      worst = std::max({worst, std::abs(n - state.n(i, j)), std::abs(m - state.m(i, j)),
                        std::abs(mp - state.m_plus(i, j))});
      scale = std::max({scale, std::abs(state.n(i, j)), std::abs(state.m(i, j)),
                        std::abs(state.m_plus(i, j))});
    }
  }
  return scale > 0.0 ? worst / scale : worst;
}

void write_fixture(std::ostream& out, const ObservableSeries& series,
                   std::span<const std::string> observables) {
  out << "# gqmc fixture v1\n";
  out << "tau,observable,value\n";
  char buffer[64];
  for (const auto& point : series.points) {
    for (const auto& name : observables) {
      std::snprintf(buffer, sizeof buffer, "%.15g", point.time);
      out << buffer << ',' << name << ',';
      std::snprintf(buffer, sizeof buffer, "%.15g", point.at(name).value);
      out << buffer << '\n';
    }
  }
}

std::vector<FixtureRow> read_fixture(std::istream& in) {
  std::vector<FixtureRow> rows;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    if (!header_seen) {
      if (line != "tau,observable,value") throw OracleError("fixture: unexpected header");
      header_seen = true;
      continue;
    }
    std::istringstream fields(line);
    std::string tau, name, value;
    if (!std::getline(fields, tau, ',') || !std::getline(fields, name, ',') ||
        !std::getline(fields, value)) {
      throw OracleError("fixture: malformed row '" + line + "'");
    }
    rows.push_back({std::stod(tau), name, std::stod(value)});
  }
  return rows;
}

}  // namespace gqmc::oracle
