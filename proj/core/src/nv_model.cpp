#include "nvtopo/nv_model.hpp"

#include <cmath>
#include <sstream>

#include "nvtopo/errors.hpp"

namespace nvtopo::nv {

using linalg::kron;
namespace pauli = linalg::pauli;

void NvDriveConfig::validate() const {
  if (!(tau > 0.0)) throw InvalidInput("drive config: tau must be positive");
  if (!(scale > 0.0)) throw InvalidInput("drive config: scale must be positive");
  if (std::abs(omega_mw1 + omega_mw2) > 1e-12 * std::max(1.0, std::abs(omega_mw1))) {
    std::ostringstream msg;
    msg << "drive config: wire simulation requires omega_mw1 = -omega_mw2 (got " << omega_mw1
        << ", " << omega_mw2 << ")";
    throw InvalidInput(msg.str());
  }
}

int level_index(int label) {
  if (label < 1 || label > 9) throw InvalidInput("NV level label must be in 1..9");
  return label - 1;
}

const Level& LevelMap::level(int label) const {
  return levels[static_cast<std::size_t>(level_index(label))];
}

int LevelMap::subspace_index(int label) const {
  for (std::size_t k = 0; k < simulation.size(); ++k) {
    if (simulation[k] == label) return static_cast<int>(k);
  }
  std::ostringstream msg;
  msg << "level |" << label << "> is not in the simulation subspace";
  throw InvalidInput(msg.str());
}

LevelMap nv_basis_map() {
  LevelMap map;
  constexpr std::array<int, 3> electron{+1, 0, -1};
  constexpr std::array<int, 3> nuclear{+1, 0, -1};
  for (int e = 0; e < 3; ++e) {
    for (int n = 0; n < 3; ++n) {
      const int label = 3 * e + n + 1;
      map.levels[static_cast<std::size_t>(label - 1)] = Level{label, electron[e], nuclear[n]};
    }
  }
  return map;
}

double level_energy(const NvConstants& c, int m_e, int m_n) {
  const double se = m_e;
  const double sn = m_n;
  return -c.gamma_e * c.b0 * se - c.gamma_n * c.b0 * sn + c.d_zfs * se * se +
         c.q_quad * sn * sn + c.a_hf * se * sn;
}

ComplexMatrix build_hnv_lab(const NvConstants& constants) {
  const LevelMap map = nv_basis_map();
  ComplexMatrix h = ComplexMatrix::Zero(9, 9);
  for (const Level& l : map.levels) {
    const int i = level_index(l.label);
    h(i, i) = level_energy(constants, l.m_e, l.m_n);
  }
  return h;
}

ComplexMatrix build_hrot(const NvDriveConfig& c) {
  const ComplexMatrix id = pauli::identity();
  return (c.omega_mw1 - c.omega_mw2) / 4.0 * kron(pauli::x(), pauli::z()) -
         0.5 * c.delta_rf * kron(id, pauli::z()) +
         (c.omega_mw1 + c.omega_mw2) / 4.0 * kron(pauli::x(), id) +
         0.5 * c.omega_rf * kron(id, pauli::x()) - 0.5 * c.delta_mw * kron(pauli::z(), id);
}

NvDriveConfig qw_to_nv(const qw::QwParams& params, double p, double scale, double tau) {
  if (!(scale > 0.0)) throw InvalidInput("qw_to_nv: scale must be positive");
  NvDriveConfig c;
  const double omega_mw = 2.0 * p * scale;
  c.omega_mw1 = omega_mw;
  c.omega_mw2 = -omega_mw;
  c.delta_rf = -2.0 * (p * p - params.mu) * scale;
  c.omega_rf = 2.0 * params.delta * scale;
  c.delta_mw = -2.0 * params.bx * scale;
  c.scale = scale;
  c.tau = tau;
  return c;
}

QwPoint nv_to_qw(const NvDriveConfig& c) {
  QwPoint out;
  out.p = c.omega_mw1 / (2.0 * c.scale);
  const double xi = -c.delta_rf / (2.0 * c.scale);
  out.params.mu = out.p * out.p - xi;
  out.params.delta = c.omega_rf / (2.0 * c.scale);
  out.params.bx = -c.delta_mw / (2.0 * c.scale);
  return out;
}

ComplexMatrix hadamard_conjugate(const ComplexMatrix& h) {
  if (h.rows() != 4 || h.cols() != 4) throw InvalidInput("hadamard_conjugate: expected 4x4");
  const ComplexMatrix u = kron(pauli::hadamard(), pauli::identity());
  return u * h * u;
}

NvDriveConfig reverse_mw_detuning(NvDriveConfig config) {
  config.delta_mw = -config.delta_mw;
  return config;
}

StateVector qw_state_of_level(int label) {
  const int k = nv_basis_map().subspace_index(label);
  StateVector nv = StateVector::Zero(4);
  nv[k] = 1.0;
  return kron(pauli::hadamard(), pauli::identity()) * nv;
}

}  // namespace nvtopo::nv
