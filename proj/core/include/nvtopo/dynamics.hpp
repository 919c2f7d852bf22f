#pragma once

// State propagation in three fidelity tiers:
//
//   1. ideal wire evolution under H_QW (dimensionless units),
//   2. the NV spin pair in the rotating frame, optionally averaged over a
//      quasi-static electron detuning,
//   3. the full nine-level NV system in the lab (interaction) frame driven by
//      four explicit tones, which reproduces tier 2 when only the addressed
//      transitions are coupled and adds pulse crosstalk otherwise.
//
// plus the optical readout model.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "nvtopo/linalg.hpp"
#include "nvtopo/nv_model.hpp"
#include "nvtopo/qw_model.hpp"

namespace nvtopo::dynamics {

using linalg::ComplexMatrix;
using linalg::StateVector;

inline constexpr double kDefaultT2Star = 3.0;  // microseconds

// Quasi-static Gaussian detuning of the electron transition. Each realization
// draws one epsilon ~ N(0, sigma_b) that is constant during the evolution and
// enters as epsilon/2 sigma_z on the simulation block.
struct NoiseModel {
  double sigma_b = 0.0;  // MHz
  int n_realizations = 1;
  std::uint64_t seed = 0;
  bool crosstalk = false;

  void validate() const;
  bool noiseless() const { return sigma_b == 0.0; }
};

// sigma_b such that the electron coherence decays as exp(-(t / T2*)^2).
double sigma_b_from_t2star(double t2star);
double t2star_from_sigma_b(double sigma_b);

// The epsilon drawn for realization k of a noise model.
double detuning_sample(const NoiseModel& noise, int realization);

struct ReadoutModel {
  // Mean photoluminescence of the pure states |4>..|8>, per shot.
  std::array<double, 5> pl{1.00, 0.97, 0.97, 0.70, 0.70};
  long long shots = 100000;
  bool shot_noise = false;

  // PL4 > PL5 and |PL5 - PL6| <= 0.02 PL5.
  void validate() const;
  // PL of any of the nine levels; dark m_e != 0 spectators |1>,|2>,|3>,|9>
  // read as PL8.
  double pl_of_level(int label) const;
};

struct PulseSegment {
  std::string name;
  nv::NvDriveConfig drive;
  double duration = 0.0;  // microseconds
};

struct PulseSchedule {
  std::vector<PulseSegment> segments;
  double total_duration() const;
};

// One simulation segment of length m * tau.
PulseSchedule simulation_schedule(const nv::NvDriveConfig& drive, int m);

// exp(-i 2 pi H_QW(p) t) psi0.
StateVector evolve_ideal_qw(const qw::QwParams& params, double p, const StateVector& psi0, double t);

// Ensemble-averaged 4x4 density matrix in the rotating frame after time t.
ComplexMatrix evolve_rot_nv(const nv::NvDriveConfig& config, const StateVector& psi0, double t,
                            const NoiseModel& noise);

// Working space {|4>,|5>,|6>,|7>,|8>} in label order; |6> is idle.
inline constexpr std::array<int, 5> kWorkingLevels{4, 5, 6, 7, 8};
int working_index(int label);

// Averaged working-space density matrices at t = m tau for m = 0..m_max.
std::vector<ComplexMatrix> working_space_series(const nv::NvDriveConfig& config,
                                                const StateVector& psi0, int m_max,
                                                const NoiseModel& noise);

// Embeds a working-space (5x5) or simulation-block (4x4) operator into the
// nine-level space.
ComplexMatrix embed_working_space(const ComplexMatrix& rho5);

struct LabFrameOptions {
  double dt_max = 0.005;            // microseconds
  bool crosstalk = true;            // couple every same-type transition within the cutoff
  double crosstalk_cutoff = 30.0;   // MHz, transitions further off-resonance are dropped
  double convergence_tol = 1e-6;    // allowed change of fidelity under step halving
  bool check_convergence = true;
};

struct LabFrameResult {
  ComplexMatrix rho;         // 9x9, rotating frame of the simulation tones
  double halving_infidelity = 0.0;
  long long steps = 0;
};

// Nine-level propagation of `psi0` (rotating-frame amplitudes at t = 0)
// through `schedule`. Throws InvalidInput when dt_max violates the
// 0.05-cycle rule and ConvergenceError when step halving moves the final
// state by more than convergence_tol.
LabFrameResult evolve_lab_nv(const PulseSchedule& schedule, const nv::NvConstants& constants,
                             const StateVector& psi0, const NoiseModel& noise,
                             const LabFrameOptions& options = {});

// Nine-level density matrices in the rotating frame at t = m tau, m = 0..m_max,
// from a single propagation of the simulation drive.
std::vector<ComplexMatrix> lab_frame_series(const nv::NvDriveConfig& drive,
                                            const nv::NvConstants& constants,
                                            const StateVector& psi0, int m_max,
                                            const NoiseModel& noise,
                                            const LabFrameOptions& options = {});

// Highest frequency (MHz) the stepper must resolve for this drive.
double lab_frame_max_frequency(const nv::NvDriveConfig& drive, const nv::NvConstants& constants,
                               const LabFrameOptions& options);

// Mean PL per shot of a nine-level density matrix.
double mean_pl(const ComplexMatrix& rho9, const ReadoutModel& readout);

// Total counts over readout.shots; Poisson-distributed when shot noise is on.
double simulate_pl(const ComplexMatrix& rho9, const ReadoutModel& readout, std::uint64_t rng_seed);

}  // namespace nvtopo::dynamics
