#include "nvtopo/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "nvtopo/errors.hpp"

namespace nvtopo::linalg {

namespace {

// Degenerate-cluster width relative to the matrix scale.
constexpr double kDegeneracyTol = 1e-10;

Eigen::Index dominant_index(const StateVector& v) {
  double best = -1.0;
  Eigen::Index idx = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    // first index wins among (numerically) equal magnitudes
    const double m = std::abs(v[i]);
    if (m > best * (1.0 + 1e-12) + 1e-300) {
      best = m;
      idx = i;
    }
  }
  return idx;
}

void fix_phase(Eigen::Ref<StateVector> v) {
  const Complex c = v[dominant_index(v)];
  if (std::abs(c) > 0.0) v *= std::conj(c) / std::abs(c);
}

bool lexicographic_less(const StateVector& a, const StateVector& b) {
  const auto ia = dominant_index(a);
  const auto ib = dominant_index(b);
  if (ia != ib) return ia < ib;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i].real() != b[i].real()) return a[i].real() > b[i].real();
    if (a[i].imag() != b[i].imag()) return a[i].imag() > b[i].imag();
  }
  return false;
}

}  // namespace

double max_abs(const ComplexMatrix& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

double hermiticity_violation(const ComplexMatrix& a) {
  if (a.rows() != a.cols()) return std::numeric_limits<double>::infinity();
  return max_abs(a - a.adjoint());
}

bool is_hermitian(const ComplexMatrix& a) {
  return a.rows() == a.cols() && hermiticity_violation(a) <= kHermitianTol * max_abs(a);
}

EigenDecomposition hermitian_eigen(const ComplexMatrix& a) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw InvalidInput("hermitian_eigen: matrix must be square and non-empty");
  }
  const double scale = max_abs(a);
  const double violation = hermiticity_violation(a);
  if (violation > kHermitianTol * scale) {
    std::ostringstream msg;
    msg << "hermitian_eigen: matrix is not Hermitian, max|A - A^H| = " << violation
        << " (scale " << scale << ")";
    throw InvalidInput(msg.str());
  }
  // Symmetrize away the residual rounding so the solver sees exact Hermitian input.
  const ComplexMatrix h = 0.5 * (a + a.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceError("hermitian_eigen: eigensolver did not converge");
  }

  EigenDecomposition out{solver.eigenvalues(), solver.eigenvectors()};
  const Eigen::Index n = a.rows();
  for (Eigen::Index j = 0; j < n; ++j) fix_phase(out.eigenvectors.col(j));

  const double gap_tol = kDegeneracyTol * std::max(scale, 1e-300);
  Eigen::Index start = 0;
  while (start < n) {
    Eigen::Index stop = start + 1;
    while (stop < n && out.eigenvalues[stop] - out.eigenvalues[stop - 1] <= gap_tol) ++stop;
    if (stop - start > 1) {
      std::vector<StateVector> cluster;
      for (Eigen::Index j = start; j < stop; ++j) cluster.emplace_back(out.eigenvectors.col(j));
      std::stable_sort(cluster.begin(), cluster.end(), lexicographic_less);
      for (Eigen::Index j = start; j < stop; ++j) out.eigenvectors.col(j) = cluster[j - start];
    }
    start = stop;
  }
  return out;
}

ComplexMatrix expm_unitary(const EigenDecomposition& eig, double t) {
  const Eigen::Index n = eig.eigenvalues.size();
  Eigen::VectorXcd phases(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    phases[j] = std::polar(1.0, -kTwoPi * eig.eigenvalues[j] * t);
  }
  return eig.eigenvectors * phases.asDiagonal() * eig.eigenvectors.adjoint();
}

ComplexMatrix expm_unitary(const ComplexMatrix& h, double t) {
  if (t == 0.0) {
    if (!is_hermitian(h)) throw InvalidInput("expm_unitary: Hamiltonian is not Hermitian");
    return ComplexMatrix::Identity(h.rows(), h.cols());
  }
  return expm_unitary(hermitian_eigen(h), t);
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

StateVector kron(const StateVector& a, const StateVector& b) {
  StateVector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a[i] * b;
  return out;
}

void validate_density_matrix(const ComplexMatrix& rho) {
  if (rho.rows() != rho.cols()) throw InvalidInput("density matrix must be square");
  const double violation = hermiticity_violation(rho);
  if (violation > kDensityTol) {
    std::ostringstream msg;
    msg << "density matrix is not Hermitian (violation " << violation << ")";
    throw InvalidInput(msg.str());
  }
  const Complex tr = rho.trace();
  if (std::abs(tr - 1.0) > kDensityTol) {
    std::ostringstream msg;
    msg << "density matrix trace is " << tr << ", expected 1";
    throw InvalidInput(msg.str());
  }
  const ComplexMatrix h = 0.5 * (rho + rho.adjoint());
  const double min_eig = Eigen::SelfAdjointEigenSolver<ComplexMatrix>(h, Eigen::EigenvaluesOnly)
                             .eigenvalues()
                             .minCoeff();
  if (min_eig < -kDensityTol) {
    std::ostringstream msg;
    msg << "density matrix is not positive semidefinite (min eigenvalue " << min_eig << ")";
    throw InvalidInput(msg.str());
  }
}

ComplexMatrix partial_trace_spin(const ComplexMatrix& rho, Sector keep) {
  if (rho.rows() != 4 || rho.cols() != 4) {
    throw InvalidInput("partial_trace_spin: expected a 4x4 density matrix");
  }
  validate_density_matrix(rho);
  ComplexMatrix out = ComplexMatrix::Zero(2, 2);
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      for (int k = 0; k < 2; ++k) {
        out(a, b) += keep == Sector::ParticleHole ? rho(2 * k + a, 2 * k + b)
                                                  : rho(2 * a + k, 2 * b + k);
      }
    }
  }
  return out;
}

Complex pfaffian4(const ComplexMatrix& a) {
  if (a.rows() != 4 || a.cols() != 4) throw InvalidInput("pfaffian4: expected a 4x4 matrix");
  const double violation = max_abs(a + a.transpose());
  if (violation > kAntisymmetricTol * max_abs(a)) {
    std::ostringstream msg;
    msg << "pfaffian4: matrix is not antisymmetric, max|A + A^T| = " << violation;
    throw InvalidInput(msg.str());
  }
  return a(0, 1) * a(2, 3) - a(0, 2) * a(1, 3) + a(0, 3) * a(1, 2);
}

Vec3 bloch_vector(const ComplexMatrix& rho2) {
  if (rho2.rows() != 2 || rho2.cols() != 2) throw InvalidInput("bloch_vector: expected 2x2");
  return {2.0 * rho2(0, 1).real(), -2.0 * rho2(0, 1).imag(), (rho2(0, 0) - rho2(1, 1)).real()};
}

double norm(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

double angle_between(const Vec3& a, const Vec3& b) {
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  const double c = (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]) / (na * nb);
  return std::acos(std::clamp(c, -1.0, 1.0));
}

ComplexMatrix density(const StateVector& psi) { return psi * psi.adjoint(); }

namespace pauli {

ComplexMatrix identity() { return ComplexMatrix::Identity(2, 2); }

ComplexMatrix x() {
  ComplexMatrix m(2, 2);
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}

ComplexMatrix y() {
  ComplexMatrix m(2, 2);
  m << 0.0, Complex(0.0, -1.0), Complex(0.0, 1.0), 0.0;
  return m;
}

ComplexMatrix z() {
  ComplexMatrix m(2, 2);
  m << 1.0, 0.0, 0.0, -1.0;
  return m;
}

ComplexMatrix hadamard() {
  ComplexMatrix m(2, 2);
  const double s = 1.0 / std::sqrt(2.0);
  m << s, s, s, -s;
  return m;
}

}  // namespace pauli

}  // namespace nvtopo::linalg
