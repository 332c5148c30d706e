#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "gqmc/dissociation.hpp"
#include "gqmc/model.hpp"
#include "gqmc/phase_space.hpp"

namespace gqmc::oracle {

/// Thrown when an oracle precondition (size cap, invertibility, cutoff) fails.
struct OracleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dense operator on the 2^M fermionic occupation basis. Basis index bit k is
/// the occupation of mode k (mode 0 least significant).
struct FockOperator {
  int modes = 0;
  Eigen::MatrixXcd matrix;
};

/// Jordan-Wigner annihilation operators a_k = (prod_{l<k} (-1)^{n_l}) |0><1|_k.
std::vector<Eigen::SparseMatrix<double>> annihilation_operators(int modes);

/// Pfaffian of an antisymmetric matrix by skew Gaussian elimination with
/// pivoting. Rejects inputs with max|A + A^T| above `tolerance`.
cplx pfaffian(Eigen::MatrixXcd A, double tolerance = 1e-12);

/// Generalized covariance sigma = [[I - n^T, -m], [-m_plus, n - I]].
Eigen::MatrixXcd extended_covariance(const GeneralFermiState& state);
/// diag(I, -I).
Eigen::MatrixXcd extended_identity(int modes);
/// sigma * [[0, I], [I, 0]]; antisymmetric whenever m and m_plus are.
Eigen::MatrixXcd antisymmetric_covariance(const GeneralFermiState& state);

/// :exp[-a^dag (I - sigma^-1 / 2) a]: expanded in the Grassmann algebra of the
/// 2M ladder symbols and mapped to normally ordered Fock matrices. Not normalised.
FockOperator unnormalised_kernel(const GeneralFermiState& state);

/// Unit-trace Gaussian kernel for M <= 3 modes (the Omega factor is not applied).
FockOperator materialize_kernel(const GeneralFermiState& state);

/// 1 / Tr of the unnormalised kernel: the normalisation the trace contract forces.
cplx trace_normalization(const GeneralFermiState& state);

/// (-1)^{M(M-1)/2} Pf[sigma P]; reduces to det(I - n) when m = m_plus = 0.
cplx pfaffian_normalization(const GeneralFermiState& state);

/// Tr(op * kernel).
cplx expectation(const Eigen::MatrixXcd& op, const FockOperator& kernel);

/// Seeded random state: n = V diag(lambda) V^dag with V unitary and lambda in
/// (0.05, 0.95); m, m_plus independent random antisymmetric with Frobenius norm
/// in [0.1, 0.2]; omega = 1. Fixed by (seed, index).
GeneralFermiState random_state(int modes, std::uint64_t seed, std::uint64_t index);

/// Largest deviation of the materialized kernel's quadratic moments from
/// (n, m, m_plus), relative to the largest entry of the three.
double moment_deviation(const GeneralFermiState& state);

/// Maximum elementwise deviation of each line of the kernel operator identities:
///   Lambda = Omega dLambda/dOmega
///   :a a^dag Lambda:       = -sigma Lambda + sigma dLambda/dsigma sigma
///   {a :a^dag Lambda:}     =  sigma Lambda - (sigma - I) dLambda/dsigma sigma
///   {a a^dag Lambda}       = -(sigma - I) Lambda + (sigma - I) dLambda/dsigma (sigma - I)
/// Left sides are explicit operator products around the kernel; derivatives
/// are central differences with step `step`.
struct IdentityDeviations {
  double omega_scaling = 0.0;
  double normal = 0.0;
  double mixed = 0.0;
  double antinormal = 0.0;

  [[nodiscard]] double max() const noexcept;
};

IdentityDeviations check_identities(const GeneralFermiState& state, double step = 1e-5);

/// Hubbard Hamiltonian on 2*sites spin-orbitals (orbital = site + sites * spin,
/// spin up first), same neighbour convention as the model module.
Eigen::SparseMatrix<double> hubbard_hamiltonian(const HubbardParams& params,
                                                const Lattice& lattice);

/// Thermal Hubbard observables from exact diagonalization of a lattice with
/// 4^sites <= 4096. Estimates per grid point: energy_per_site,
/// energy_without_mu_per_site, filling, g2 (no errors).
ObservableSeries ed_hubbard(const HubbardParams& params, const Lattice& lattice,
                            std::span<const double> tau_grid);

struct SingleSiteValues {
  double filling = 0.0;
  double double_occupancy = 0.0;
  double g2 = 0.0;
};

/// Closed-form single-site (t = 0) thermal values per spin.
SingleSiteValues single_site_analytic(double U, double mu, double tau);

struct DissociationReference {
  std::vector<double> time;
  std::vector<double> n1;
  std::vector<double> molecules;
};

/// Number-state solution from a molecular coherent state, Poisson-averaged
/// over molecular Fock sectors up to `cutoff`.
DissociationReference dissociation_oracle(StatisticsKind kind, double n_mean, int cutoff,
                                          std::span<const double> t_grid);

/// Smallest cutoff whose Poisson tail is below 1e-10.
int poisson_cutoff(double n_mean);

/// Versioned text fixture rows: tau,observable,value with 15 significant digits.
struct FixtureRow {
  double tau = 0.0;
  std::string observable;
  double value = 0.0;
};

void write_fixture(std::ostream& out, const ObservableSeries& series,
                   std::span<const std::string> observables);
std::vector<FixtureRow> read_fixture(std::istream& in);

}  // namespace gqmc::oracle
