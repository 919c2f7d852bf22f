#include "nvtopo/dynamics.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "nvtopo/errors.hpp"
#include "nvtopo/random.hpp"

namespace nvtopo::dynamics {

using linalg::Complex;
using linalg::kTwoPi;

namespace {

// Block {4,5,7,8} positions inside the working space {4,5,6,7,8}.
constexpr std::array<int, 4> kBlockInWorking{0, 1, 3, 4};
constexpr int kReferenceInWorking = 2;

ComplexMatrix sigma_z_block() {
  return linalg::kron(linalg::pauli::z(), linalg::pauli::identity());
}

}  // namespace

void NoiseModel::validate() const {
  if (!(sigma_b >= 0.0) || !std::isfinite(sigma_b)) {
    throw InvalidInput("noise model: sigma_b must be finite and non-negative");
  }
  if (n_realizations < 1) throw InvalidInput("noise model: n_realizations must be positive");
}

double sigma_b_from_t2star(double t2star) {
  if (!(t2star > 0.0)) throw InvalidInput("T2* must be positive");
  return 1.0 / (std::sqrt(2.0) * M_PI * t2star);
}

double t2star_from_sigma_b(double sigma_b) {
  if (!(sigma_b > 0.0)) throw InvalidInput("sigma_b must be positive");
  return 1.0 / (std::sqrt(2.0) * M_PI * sigma_b);
}

double detuning_sample(const NoiseModel& noise, int realization) {
  if (noise.noiseless()) return 0.0;
  auto rng = substream(noise.seed, static_cast<std::uint64_t>(realization));
  std::normal_distribution<double> gauss(0.0, noise.sigma_b);
  return gauss(rng);
}

double PulseSchedule::total_duration() const {
  double t = 0.0;
  for (const auto& s : segments) t += s.duration;
  return t;
}

PulseSchedule simulation_schedule(const nv::NvDriveConfig& drive, int m) {
  if (m < 0) throw InvalidInput("simulation_schedule: m must be non-negative");
  if (!(drive.tau > 0.0)) throw InvalidInput("simulation_schedule: tau must be positive");
  return PulseSchedule{{PulseSegment{"simulate", drive, m * drive.tau}}};
}

StateVector evolve_ideal_qw(const qw::QwParams& params, double p, const StateVector& psi0,
                            double t) {
  if (psi0.size() != 4) throw InvalidInput("evolve_ideal_qw: expected a 4-component state");
  if (t == 0.0) return psi0;
  return linalg::expm_unitary(qw::build_hqw(params, p), t) * psi0;
}

ComplexMatrix evolve_rot_nv(const nv::NvDriveConfig& config, const StateVector& psi0, double t,
                            const NoiseModel& noise) {
  noise.validate();
  if (psi0.size() != 4) throw InvalidInput("evolve_rot_nv: expected a 4-component state");
  const ComplexMatrix h = nv::build_hrot(config);
  const ComplexMatrix sz = sigma_z_block();
  const int n = noise.noiseless() ? 1 : noise.n_realizations;
  ComplexMatrix rho = ComplexMatrix::Zero(4, 4);
  for (int k = 0; k < n; ++k) {
    const double eps = detuning_sample(noise, k);
    const StateVector psi = linalg::expm_unitary(h + 0.5 * eps * sz, t) * psi0;
    rho += psi * psi.adjoint();
  }
  return rho / static_cast<double>(n);
}

int working_index(int label) {
  for (std::size_t k = 0; k < kWorkingLevels.size(); ++k) {
    if (kWorkingLevels[k] == label) return static_cast<int>(k);
  }
  throw InvalidInput("level is not part of the working space {4,5,6,7,8}");
}

std::vector<ComplexMatrix> working_space_series(const nv::NvDriveConfig& config,
                                                const StateVector& psi0, int m_max,
                                                const NoiseModel& noise) {
  noise.validate();
  if (psi0.size() != 5) throw InvalidInput("working_space_series: expected a 5-component state");
  if (m_max < 0) throw InvalidInput("working_space_series: m_max must be non-negative");
  const ComplexMatrix h = nv::build_hrot(config);
  const ComplexMatrix sz = sigma_z_block();

  StateVector block0(4);
  for (int j = 0; j < 4; ++j) block0[j] = psi0[kBlockInWorking[static_cast<std::size_t>(j)]];
  const Complex ref0 = psi0[kReferenceInWorking];

  std::vector<ComplexMatrix> series(static_cast<std::size_t>(m_max) + 1,
                                    ComplexMatrix::Zero(5, 5));
  const int n = noise.noiseless() ? 1 : noise.n_realizations;
  StateVector psi(5);
  Eigen::VectorXcd phased(4);
  for (int k = 0; k < n; ++k) {
    const double eps = detuning_sample(noise, k);
    const auto eig = linalg::hermitian_eigen(h + 0.5 * eps * sz);
    const Eigen::VectorXcd w = eig.eigenvectors.adjoint() * block0;
    for (int m = 0; m <= m_max; ++m) {
      const double t = m * config.tau;
      for (int j = 0; j < 4; ++j) phased[j] = w[j] * std::polar(1.0, -kTwoPi * eig.eigenvalues[j] * t);
      const StateVector block = eig.eigenvectors * phased;
      for (int j = 0; j < 4; ++j) psi[kBlockInWorking[static_cast<std::size_t>(j)]] = block[j];
      psi[kReferenceInWorking] = ref0;
      series[static_cast<std::size_t>(m)].noalias() += psi * psi.adjoint();
    }
  }
  for (auto& rho : series) rho /= static_cast<double>(n);
  return series;
}

ComplexMatrix embed_working_space(const ComplexMatrix& op) {
  ComplexMatrix out = ComplexMatrix::Zero(9, 9);
  if (op.rows() == 5 && op.cols() == 5) {
    for (int a = 0; a < 5; ++a) {
      for (int b = 0; b < 5; ++b) {
        out(nv::level_index(kWorkingLevels[static_cast<std::size_t>(a)]),
            nv::level_index(kWorkingLevels[static_cast<std::size_t>(b)])) = op(a, b);
      }
    }
    return out;
  }
  if (op.rows() == 4 && op.cols() == 4) {
    constexpr std::array<int, 4> block{4, 5, 7, 8};
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 4; ++b) {
        out(nv::level_index(block[static_cast<std::size_t>(a)]),
            nv::level_index(block[static_cast<std::size_t>(b)])) = op(a, b);
      }
    }
    return out;
  }
  throw InvalidInput("embed_working_space: expected a 4x4 or 5x5 operator");
}

}  // namespace nvtopo::dynamics
