#pragma once

// Quantum-wire Bogoliubov-de Gennes model in the Nambu basis
// (psi_up, psi_down, psi_down^dagger, -psi_up^dagger), written as
// spin (sigma) x particle-hole (tau):
//
//   H(p) = p sigma_z tau_z + (p^2 - mu) tau_z + Delta tau_x + B_x sigma_x
//
// All quantities are dimensionless wire units.

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include "nvtopo/linalg.hpp"

namespace nvtopo::qw {

using linalg::ComplexMatrix;
using linalg::StateVector;
using linalg::Vec3;

struct QwParams {
  double mu = -1.0;    // chemical potential, negative by convention
  double delta = 0.0;  // pairing amplitude
  double bx = 0.0;     // Zeeman energy

  // Throws InvalidInput unless delta >= 0, bx >= 0 and mu < 0.
  void validate() const;
};

enum class Phase { SC, TP, Critical };
std::string_view to_string(Phase phase);

inline constexpr double kDefaultCriticalWidth = 1e-9;
inline constexpr double kDefaultPInf = 50.0;
// Below this |Pf(H(0))| the invariant is reported as ill-defined.
inline constexpr double kPfaffianFloor = 1e-9;

ComplexMatrix build_hqw(const QwParams& params, double p);

// sqrt(Delta^2 + mu^2): the Zeeman energy at which the gap closes.
double critical_zeeman(const QwParams& params);

// Eigenenergy of |Phi> at p = 0: -B_x + sqrt(mu^2 + Delta^2).
double phi_energy(const QwParams& params);

Phase classify_phase(const QwParams& params, double critical_width = kDefaultCriticalWidth);

struct BandTable {
  std::vector<double> momenta;
  std::vector<std::array<double, 4>> energies;  // bands 1..4, bottom to top
};

BandTable dispersion(const QwParams& params, std::span<const double> p_grid);

// Unitary mapping Nambu components onto Majorana operators. Fixed once; its
// defining property is that -i W H(0) W^dagger is real antisymmetric.
const ComplexMatrix& majorana_basis();

// Pfaffian of a wire Hamiltonian in the Majorana basis. Terms even under
// particle-hole conjugation at fixed momentum (the p sigma_z tau_z term) land
// in the symmetric part of -i W H W^dagger and are projected out.
double hamiltonian_pfaffian(const ComplexMatrix& h);

// sgn Pf(H(0)) * sgn Pf(H(p_inf)). Throws CriticalPointError when
// |Pf(H(0))| < kPfaffianFloor, InvalidInput when p_inf is too small.
int topological_number(const QwParams& params, double p_inf = kDefaultPInf);

// theta_p = 1/2 arctan(Delta / (p^2 - mu)).
double rotation_angle(const QwParams& params, double p);

// U_p = exp(i theta_p tau_y) acting on the particle-hole sector.
ComplexMatrix up_rotation(const QwParams& params, double p);

// U_p H U_p^dagger.
ComplexMatrix transform_up(const QwParams& params, double p);

struct BlochTrajectory {
  std::vector<double> momenta;
  std::vector<Vec3> directions;     // unit vectors
  std::vector<double> raw_lengths;  // |r| of the reduced (mixed) state
};

BlochTrajectory bloch_trajectory(const QwParams& params, std::span<const double> p_grid,
                                 double critical_width = kDefaultCriticalWidth);

enum class TrajectoryShape { Closed, OpenPoleToPole, Indeterminate };
std::string_view to_string(TrajectoryShape shape);

TrajectoryShape classify_trajectory(const BlochTrajectory& trajectory,
                                    double angular_tolerance = 0.1);

// |<-| x (alpha|p> + beta|h>), the p = 0 eigenstate whose energy sign is nu.
StateVector phi_state(const QwParams& params);

// Uniform grid [0, p_max] with n points.
std::vector<double> momentum_grid(double p_max, int n);

}  // namespace nvtopo::qw
