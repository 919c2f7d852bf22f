#include "nvtopo/qw_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nvtopo/errors.hpp"

namespace nvtopo::qw {

using linalg::Complex;
using linalg::kron;
namespace pauli = linalg::pauli;

void QwParams::validate() const {
  if (!std::isfinite(mu) || !std::isfinite(delta) || !std::isfinite(bx)) {
    throw InvalidInput("wire parameters must be finite");
  }
  if (!(mu < 0.0)) throw InvalidInput("wire parameters: mu must be negative");
  if (delta < 0.0) throw InvalidInput("wire parameters: delta must be non-negative");
  if (bx < 0.0) throw InvalidInput("wire parameters: bx must be non-negative");
}

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::SC: return "SC";
    case Phase::TP: return "TP";
    case Phase::Critical: return "CRITICAL";
  }
  return "?";
}

std::string_view to_string(TrajectoryShape shape) {
  switch (shape) {
    case TrajectoryShape::Closed: return "closed";
    case TrajectoryShape::OpenPoleToPole: return "open, pole-to-pole";
    case TrajectoryShape::Indeterminate: return "indeterminate";
  }
  return "?";
}

ComplexMatrix build_hqw(const QwParams& params, double p) {
  const ComplexMatrix id = pauli::identity();
  return p * kron(pauli::z(), pauli::z()) + (p * p - params.mu) * kron(id, pauli::z()) +
         params.delta * kron(id, pauli::x()) + params.bx * kron(pauli::x(), id);
}

double critical_zeeman(const QwParams& params) { return std::hypot(params.delta, params.mu); }

double phi_energy(const QwParams& params) { return -params.bx + critical_zeeman(params); }

Phase classify_phase(const QwParams& params, double critical_width) {
  const double boundary = critical_zeeman(params);
  if (params.bx < boundary - critical_width) return Phase::SC;
  if (params.bx > boundary + critical_width) return Phase::TP;
  return Phase::Critical;
}

BandTable dispersion(const QwParams& params, std::span<const double> p_grid) {
  BandTable table;
  table.momenta.assign(p_grid.begin(), p_grid.end());
  table.energies.reserve(p_grid.size());
  for (double p : p_grid) {
    const auto eig = linalg::hermitian_eigen(build_hqw(params, p));
    table.energies.push_back({eig.eigenvalues[0], eig.eigenvalues[1], eig.eigenvalues[2],
                              eig.eigenvalues[3]});
  }
  return table;
}

namespace {

constexpr double kMajoranaRealTol = 1e-9;

ComplexMatrix make_majorana_basis() {
  // gamma_1 = psi_up + psi_up^dagger, gamma_2 = -i (psi_up - psi_up^dagger), same for down,
  // expressed in Nambu components; rows ordered (gamma_2, gamma_1, gamma_3, gamma_4).
  const double s = 1.0 / std::sqrt(2.0);
  const Complex i(0.0, 1.0);
  ComplexMatrix w(4, 4);
  w << -i * s, 0.0, 0.0, -i * s,
       s, 0.0, 0.0, -s,
       0.0, s, s, 0.0,
       0.0, -i * s, i * s, 0.0;

  if (linalg::max_abs(w * w.adjoint() - ComplexMatrix::Identity(4, 4)) > 1e-14) {
    throw std::logic_error("Majorana basis is not unitary");
  }
  const ComplexMatrix probe = build_hqw(QwParams{-0.8, 0.45, 0.7}, 0.0);
  const ComplexMatrix a = Complex(0.0, -1.0) * w * probe * w.adjoint();
  if (a.imag().cwiseAbs().maxCoeff() > kMajoranaRealTol ||
      linalg::max_abs(a + a.transpose()) > kMajoranaRealTol) {
    throw std::logic_error("Majorana basis does not antisymmetrize the BdG Hamiltonian");
  }
  return w;
}

}  // namespace

const ComplexMatrix& majorana_basis() {
  static const ComplexMatrix w = make_majorana_basis();
  return w;
}

double hamiltonian_pfaffian(const ComplexMatrix& h) {
  if (h.rows() != 4 || h.cols() != 4) throw InvalidInput("hamiltonian_pfaffian: expected 4x4");
  const ComplexMatrix& w = majorana_basis();
  const ComplexMatrix a = Complex(0.0, -1.0) * w * h * w.adjoint();
  const ComplexMatrix antisym = 0.5 * (a - a.transpose());
  const double scale = std::max(linalg::max_abs(a), 1.0);
  if (antisym.imag().cwiseAbs().maxCoeff() > kMajoranaRealTol * scale) {
    throw InvalidInput("hamiltonian_pfaffian: Hamiltonian is not of particle-hole symmetric form");
  }
  const ComplexMatrix real_part = antisym.real().cast<Complex>();
  return linalg::pfaffian4(real_part).real();
}

int topological_number(const QwParams& params, double p_inf) {
  params.validate();
  const double scale = std::max({std::abs(params.mu), params.delta, params.bx});
  if (p_inf * p_inf < 100.0 * scale) {
    std::ostringstream msg;
    msg << "topological_number: p_inf = " << p_inf << " too small for parameter scale " << scale;
    throw InvalidInput(msg.str());
  }
  const double pf0 = hamiltonian_pfaffian(build_hqw(params, 0.0));
  if (std::abs(pf0) < kPfaffianFloor) {
    std::ostringstream msg;
    msg << "topological_number: Pf(H(0)) = " << pf0 << " vanishes; parameters are critical";
    throw CriticalPointError(msg.str());
  }
  const double pf_inf = hamiltonian_pfaffian(build_hqw(params, p_inf));
  return (pf0 > 0.0 ? 1 : -1) * (pf_inf > 0.0 ? 1 : -1);
}

double rotation_angle(const QwParams& params, double p) {
  const double xi = p * p - params.mu;
  if (xi == 0.0) return params.delta == 0.0 ? 0.0 : std::copysign(M_PI / 4.0, params.delta);
  return 0.5 * std::atan(params.delta / xi);
}

ComplexMatrix up_rotation(const QwParams& params, double p) {
  const double theta = rotation_angle(params, p);
  // exp(i theta tau_y) = cos(theta) + i sin(theta) tau_y, which is real.
  ComplexMatrix u(2, 2);
  u << std::cos(theta), std::sin(theta), -std::sin(theta), std::cos(theta);
  return kron(pauli::identity(), u);
}

ComplexMatrix transform_up(const QwParams& params, double p) {
  const ComplexMatrix u = up_rotation(params, p);
  return u * build_hqw(params, p) * u.adjoint();
}

BlochTrajectory bloch_trajectory(const QwParams& params, std::span<const double> p_grid,
                                 double critical_width) {
  if (p_grid.empty() || p_grid.front() != 0.0) {
    throw InvalidInput("bloch_trajectory: momentum grid must start at 0");
  }
  if (!std::is_sorted(p_grid.begin(), p_grid.end())) {
    throw InvalidInput("bloch_trajectory: momentum grid must be ascending");
  }
  const double scale = std::max({std::abs(params.mu), params.delta, params.bx});
  const double p_max = p_grid.back();
  if (p_max * p_max < 100.0 * scale) {
    std::ostringstream msg;
    msg << "bloch_trajectory: p_max = " << p_max << " too small for parameter scale " << scale;
    throw InvalidInput(msg.str());
  }
  if (classify_phase(params, critical_width) == Phase::Critical) {
    throw CriticalPointError("bloch_trajectory: parameters lie in the critical band");
  }

  BlochTrajectory out;
  out.momenta.assign(p_grid.begin(), p_grid.end());
  for (double p : p_grid) {
    const auto eig = linalg::hermitian_eigen(transform_up(params, p));
    const double gap = eig.eigenvalues[2] - eig.eigenvalues[1];
    if (gap <= critical_width) {
      std::ostringstream msg;
      msg << "bloch_trajectory: bands 2 and 3 are degenerate at p = " << p << " (gap " << gap
          << ")";
      throw CriticalPointError(msg.str());
    }
    const StateVector third = eig.eigenvectors.col(2);
    const ComplexMatrix reduced =
        linalg::partial_trace_spin(linalg::density(third), linalg::Sector::ParticleHole);
    const Vec3 r = linalg::bloch_vector(reduced);
    const double length = linalg::norm(r);
    if (length < 1e-12) {
      std::ostringstream msg;
      msg << "bloch_trajectory: reduced state is maximally mixed at p = " << p;
      throw CriticalPointError(msg.str());
    }
    out.raw_lengths.push_back(length);
    out.directions.push_back({r[0] / length, r[1] / length, r[2] / length});
  }
  return out;
}

TrajectoryShape classify_trajectory(const BlochTrajectory& trajectory, double angular_tolerance) {
  if (trajectory.directions.size() < 2) return TrajectoryShape::Indeterminate;
  const Vec3& start = trajectory.directions.front();
  const Vec3& end = trajectory.directions.back();
  if (linalg::angle_between(start, end) <= angular_tolerance) return TrajectoryShape::Closed;
  const Vec3 north{0.0, 0.0, 1.0};
  const Vec3 south{0.0, 0.0, -1.0};
  const bool south_to_north = linalg::angle_between(start, south) <= angular_tolerance &&
                              linalg::angle_between(end, north) <= angular_tolerance;
  const bool north_to_south = linalg::angle_between(start, north) <= angular_tolerance &&
                              linalg::angle_between(end, south) <= angular_tolerance;
  return south_to_north || north_to_south ? TrajectoryShape::OpenPoleToPole
                                          : TrajectoryShape::Indeterminate;
}

StateVector phi_state(const QwParams& params) {
  params.validate();
  const double r = critical_zeeman(params);
  if (r == 0.0) throw InvalidInput("phi_state: mu and delta cannot both vanish");
  // eigenvector of -mu tau_z + Delta tau_x for eigenvalue +r: (r - mu, Delta), mu < 0.
  double alpha = r - params.mu;
  double beta = params.delta;
  const double n = std::hypot(alpha, beta);
  alpha /= n;
  beta /= n;
  StateVector spin(2);
  spin << 1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0);
  StateVector tau(2);
  tau << alpha, beta;
  return kron(spin, tau);
}

std::vector<double> momentum_grid(double p_max, int n) {
  if (n < 2) throw InvalidInput("momentum_grid: need at least 2 points");
  std::vector<double> grid(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) grid[static_cast<std::size_t>(k)] = p_max * k / (n - 1);
  grid.back() = p_max;
  return grid;
}

}  // namespace nvtopo::qw
