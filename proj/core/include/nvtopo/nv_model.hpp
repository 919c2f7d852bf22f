#pragma once

// NV-center electron spin (S = 1) coupled to the 14N nuclear spin (I = 1).
//
// Frequencies are in MHz and times in microseconds, so 2 pi f t is a phase.
// Levels |1>..|9> are the product states |m_e, m_n>, grouped by electron
// manifold m_e = +1, 0, -1 and inside each manifold m_n = +1, 0, -1:
//
//   |1> |2> |3>   m_e = +1
//   |4> |5> |6>   m_e =  0
//   |7> |8> |9>   m_e = -1
//
// The simulation subspace {|4>,|5>,|7>,|8>} is the pseudo-spin pair
// sigma (m_e = 0 -> 0, m_e = -1 -> 1) x tau (m_n = +1 -> 0, m_n = 0 -> 1).
// |6> is the interferometric reference.

#include <array>
#include <optional>

#include "nvtopo/linalg.hpp"
#include "nvtopo/qw_model.hpp"

namespace nvtopo::nv {

using linalg::ComplexMatrix;
using linalg::StateVector;

struct NvConstants {
  double gamma_e = -28.03e3;  // MHz/T
  double gamma_n = 3.077;     // MHz/T
  double d_zfs = 2.87e3;      // MHz
  double q_quad = -4.945;     // MHz
  double a_hf = -2.16;        // MHz
  double b0 = 0.050;          // T
};

inline constexpr double kDefaultScale = 1.0 / 11.0;

struct NvDriveConfig {
  double omega_mw1 = 0.0;  // Rabi frequency of |4>-|7> (m_n = +1), MHz
  double omega_mw2 = 0.0;  // Rabi frequency of |5>-|8> (m_n = 0), MHz
  double omega_rf = 0.0;   // shared Rabi frequency of |4>-|5> and |7>-|8>, MHz
  double delta_mw = 0.0;   // common MW detuning, MHz
  double delta_rf = 0.0;   // common RF detuning, MHz
  double scale = kDefaultScale;
  double tau = 1.0;        // sample interval, microseconds

  // QW simulation mode requires omega_mw1 == -omega_mw2 and tau > 0.
  void validate() const;
};

struct Level {
  int label = 0;  // 1..9
  int m_e = 0;
  int m_n = 0;
};

struct LevelMap {
  std::array<Level, 9> levels{};
  std::array<int, 4> simulation{4, 5, 7, 8};  // ordered as the (sigma, tau) basis
  int reference = 6;

  const Level& level(int label) const;
  // Index of a simulation label inside the 4-dim (sigma, tau) basis.
  int subspace_index(int label) const;
};

LevelMap nv_basis_map();

// 0-based index of label |l> in the 9-level product basis.
int level_index(int label);

// Diagonal lab-frame Hamiltonian in MHz.
ComplexMatrix build_hnv_lab(const NvConstants& constants);
double level_energy(const NvConstants& constants, int m_e, int m_n);

// Rotating-frame Hamiltonian on the (sigma, tau) subspace, MHz.
ComplexMatrix build_hrot(const NvDriveConfig& config);

NvDriveConfig qw_to_nv(const qw::QwParams& params, double p, double scale, double tau);

struct QwPoint {
  qw::QwParams params;
  double p = 0.0;
};
QwPoint nv_to_qw(const NvDriveConfig& config);

// (Hd x I) H (Hd x I) with Hd the electron Hadamard.
ComplexMatrix hadamard_conjugate(const ComplexMatrix& h);

// Same config with delta_mw -> -delta_mw.
NvDriveConfig reverse_mw_detuning(NvDriveConfig config);

// The wire state represented by NV simulation level |label>: (Hd x I)|label>.
StateVector qw_state_of_level(int label);

}  // namespace nvtopo::nv
