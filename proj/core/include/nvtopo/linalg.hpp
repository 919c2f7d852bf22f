#pragma once

// Small dense complex linear algebra used throughout the library.
//
// Matrices here are tiny (dim <= 16): Hamiltonians of the quantum wire and of
// the NV spin pair, propagators, and reduced density matrices. Everything is
// a pure function of its arguments.

#include <array>
#include <complex>

#include <Eigen/Dense>

namespace nvtopo::linalg {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using StateVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Vec3 = std::array<double, 3>;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// Relative tolerance on max|A - A^dagger| accepted as Hermitian.
inline constexpr double kHermitianTol = 1e-12;
// Relative tolerance on max|A + A^T| accepted as antisymmetric.
inline constexpr double kAntisymmetricTol = 1e-10;
// Tolerance on trace / positivity of density matrices.
inline constexpr double kDensityTol = 1e-10;

struct EigenDecomposition {
  RealVector eigenvalues;     // ascending
  ComplexMatrix eigenvectors; // column j belongs to eigenvalues[j]
};

double max_abs(const ComplexMatrix& a);
double hermiticity_violation(const ComplexMatrix& a);
bool is_hermitian(const ComplexMatrix& a);

// Eigenvalues ascending. Every eigenvector is phase-fixed so that its
// largest-magnitude component is real positive; inside a degenerate cluster
// vectors are ordered by the index of that component, then lexicographically.
// Throws InvalidInput for non-Hermitian input.
EigenDecomposition hermitian_eigen(const ComplexMatrix& a);

// exp(-i 2 pi H t). H in frequency units, t in the reciprocal unit.
ComplexMatrix expm_unitary(const ComplexMatrix& h, double t);
ComplexMatrix expm_unitary(const EigenDecomposition& eig, double t);

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);
StateVector kron(const StateVector& a, const StateVector& b);

// The 4-dim space is spin (sigma) x particle-hole (tau), sigma the slow index.
enum class Sector { Spin, ParticleHole };

// Reduces a 4x4 density matrix to the kept 2x2 sector.
ComplexMatrix partial_trace_spin(const ComplexMatrix& rho, Sector keep);

// Throws InvalidInput unless rho is Hermitian, unit trace and PSD.
void validate_density_matrix(const ComplexMatrix& rho);

// Pfaffian of a 4x4 antisymmetric matrix.
Complex pfaffian4(const ComplexMatrix& a);

// Bloch vector (<x>, <y>, <z>) of a 2x2 density matrix.
Vec3 bloch_vector(const ComplexMatrix& rho2);
double norm(const Vec3& v);
double angle_between(const Vec3& a, const Vec3& b);

ComplexMatrix density(const StateVector& psi);

namespace pauli {
ComplexMatrix identity();
ComplexMatrix x();
ComplexMatrix y();
ComplexMatrix z();
ComplexMatrix hadamard();
}  // namespace pauli

}  // namespace nvtopo::linalg
