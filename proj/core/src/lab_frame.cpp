#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "nvtopo/dynamics.hpp"
#include "nvtopo/errors.hpp"

namespace nvtopo::dynamics {

using linalg::Complex;
using linalg::kTwoPi;

namespace {

enum class ToneKind { Electron, Nuclear };

struct Tone {
  ToneKind kind;
  int lower;  // addressed transition, 0-based
  int upper;
  double rabi;
  double frequency;  // MHz, signed E_upper - E_lower - detuning
};

// One co-rotating term amp * exp(i 2 pi freq t) |hi><lo| + h.c. in the frame
// rotating with the simulation tones.
struct Coupling {
  int hi;
  int lo;
  double amp;
  double freq;
};

struct Frame {
  std::array<double, 9> d{};
  std::vector<Coupling> couplings;
  double max_frequency = 0.0;
};

bool same_kind(const nv::Level& a, const nv::Level& b, ToneKind kind) {
  if (kind == ToneKind::Electron) return a.m_n == b.m_n && std::abs(a.m_e - b.m_e) == 1;
  return a.m_e == b.m_e && std::abs(a.m_n - b.m_n) == 1;
}

Frame build_frame(const nv::NvDriveConfig& drive, const nv::NvConstants& constants,
                  const LabFrameOptions& options) {
  const nv::LevelMap map = nv::nv_basis_map();
  std::array<double, 9> energy{};
  for (const auto& l : map.levels) {
    energy[static_cast<std::size_t>(nv::level_index(l.label))] =
        nv::level_energy(constants, l.m_e, l.m_n);
  }
  auto e = [&](int label) { return energy[static_cast<std::size_t>(nv::level_index(label))]; };

  Frame frame;
  const double dmw = drive.delta_mw;
  const double drf = drive.delta_rf;
  frame.d[static_cast<std::size_t>(nv::level_index(4))] = -0.5 * (dmw + drf);
  frame.d[static_cast<std::size_t>(nv::level_index(5))] = -0.5 * dmw + 0.5 * drf;
  frame.d[static_cast<std::size_t>(nv::level_index(7))] = 0.5 * dmw - 0.5 * drf;
  frame.d[static_cast<std::size_t>(nv::level_index(8))] = 0.5 * (dmw + drf);

  const std::array<Tone, 4> tones{
      Tone{ToneKind::Electron, nv::level_index(4), nv::level_index(7), drive.omega_mw1,
           e(7) - e(4) - dmw},
      Tone{ToneKind::Electron, nv::level_index(5), nv::level_index(8), drive.omega_mw2,
           e(8) - e(5) - dmw},
      Tone{ToneKind::Nuclear, nv::level_index(4), nv::level_index(5), drive.omega_rf,
           e(5) - e(4) - drf},
      Tone{ToneKind::Nuclear, nv::level_index(7), nv::level_index(8), drive.omega_rf,
           e(8) - e(7) - drf},
  };

  double fmax = std::max({std::abs(dmw), std::abs(drf)});
  for (const Tone& tone : tones) {
    if (tone.rabi == 0.0) continue;
    fmax = std::max(fmax, std::abs(tone.rabi));
    const double nu = std::abs(tone.frequency);
    for (int a = 0; a < 9; ++a) {
      for (int b = a + 1; b < 9; ++b) {
        const bool addressed = (a == tone.lower && b == tone.upper) ||
                               (b == tone.lower && a == tone.upper);
        if (!addressed) {
          if (!options.crosstalk) continue;
          if (!same_kind(map.levels[static_cast<std::size_t>(a)],
                         map.levels[static_cast<std::size_t>(b)], tone.kind)) {
            continue;
          }
        }
        const int hi = energy[static_cast<std::size_t>(a)] >= energy[static_cast<std::size_t>(b)] ? a : b;
        const int lo = hi == a ? b : a;
        const double splitting = energy[static_cast<std::size_t>(hi)] - energy[static_cast<std::size_t>(lo)];
        if (!addressed && std::abs(splitting - nu) > options.crosstalk_cutoff) continue;
        const double freq = splitting - nu - (frame.d[static_cast<std::size_t>(hi)] -
                                              frame.d[static_cast<std::size_t>(lo)]);
        frame.couplings.push_back(Coupling{hi, lo, 0.5 * tone.rabi, freq});
        fmax = std::max(fmax, std::abs(freq));
      }
    }
  }
  frame.max_frequency = fmax;
  return frame;
}

ComplexMatrix frame_hamiltonian(const Frame& frame, const std::array<double, 9>& diag, double t) {
  ComplexMatrix h = ComplexMatrix::Zero(9, 9);
  for (int k = 0; k < 9; ++k) h(k, k) = diag[static_cast<std::size_t>(k)];
  for (const Coupling& c : frame.couplings) {
    const Complex v = c.amp * std::polar(1.0, kTwoPi * c.freq * t);
    h(c.hi, c.lo) += v;
    h(c.lo, c.hi) += std::conj(v);
  }
  return h;
}

class Stepper {
 public:
  Stepper(const Frame& frame, double eps) : frame_(frame) {
    diag_ = frame.d;
    for (int label : {4, 5}) diag_[static_cast<std::size_t>(nv::level_index(label))] += 0.5 * eps;
    for (int label : {7, 8}) diag_[static_cast<std::size_t>(nv::level_index(label))] -= 0.5 * eps;
    static_ = frame.couplings.empty() ||
              std::all_of(frame.couplings.begin(), frame.couplings.end(),
                          [](const Coupling& c) { return c.freq == 0.0; });
  }

  // Midpoint exponential steps of at most h from t0 to t1.
  void advance(StateVector& psi, double t0, double t1, double h, long long& steps) {
    if (t1 <= t0) return;
    const auto n = static_cast<long long>(std::ceil((t1 - t0) / h - 1e-9));
    const double dt = (t1 - t0) / static_cast<double>(n);
    for (long long k = 0; k < n; ++k) {
      const double tm = t0 + (static_cast<double>(k) + 0.5) * dt;
      if (!static_ || !cached_ || cached_dt_ != dt) {
        const ComplexMatrix hm = frame_hamiltonian(frame_, diag_, tm);
        solver_.compute(hm);
        const Eigen::VectorXd& w = solver_.eigenvalues();
        Eigen::VectorXcd ph(9);
        for (int j = 0; j < 9; ++j) ph[j] = std::polar(1.0, -kTwoPi * w[j] * dt);
        step_ = solver_.eigenvectors() * ph.asDiagonal() * solver_.eigenvectors().adjoint();
        cached_ = true;
        cached_dt_ = dt;
      }
      psi = step_ * psi;
    }
    steps += n;
  }

 private:
  const Frame& frame_;
  std::array<double, 9> diag_{};
  bool static_ = false;
  bool cached_ = false;
  double cached_dt_ = 0.0;
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver_;
  ComplexMatrix step_;
};

void check_step(double fmax, const LabFrameOptions& options) {
  if (!(options.dt_max > 0.0)) throw InvalidInput("lab frame: dt_max must be positive");
  if (fmax * options.dt_max > 0.05) {
    std::ostringstream msg;
    msg << "lab frame: dt_max = " << options.dt_max << " us resolves only "
        << 0.05 / options.dt_max << " MHz but the drive contains " << fmax
        << " MHz (need f_max * dt_max <= 0.05)";
    throw InvalidInput(msg.str());
  }
}

StateVector frame_shift(const std::array<double, 9>& from, const std::array<double, 9>& to,
                        double t, const StateVector& psi) {
  StateVector out = psi;
  for (int k = 0; k < 9; ++k) {
    const double dd = to[static_cast<std::size_t>(k)] - from[static_cast<std::size_t>(k)];
    out[k] *= std::polar(1.0, -kTwoPi * dd * t);
  }
  return out;
}

StateVector run_schedule(const std::vector<Frame>& frames, const PulseSchedule& schedule,
                         const StateVector& psi0, double eps, double h, long long& steps) {
  StateVector psi = psi0;
  double t = 0.0;
  for (std::size_t s = 0; s < schedule.segments.size(); ++s) {
    if (s > 0) psi = frame_shift(frames[s - 1].d, frames[s].d, t, psi);
    Stepper stepper(frames[s], eps);
    const double t1 = t + schedule.segments[s].duration;
    stepper.advance(psi, t, t1, h, steps);
    t = t1;
  }
  return psi;
}

double infidelity(const StateVector& a, const StateVector& b) {
  return 1.0 - std::norm(a.dot(b));
}

void require_converged(double infid, const LabFrameOptions& options) {
  if (infid > options.convergence_tol) {
    std::ostringstream msg;
    msg << "lab frame: step halving changed the state by 1 - F = " << infid
        << " (tolerance " << options.convergence_tol << "); reduce dt_max";
    throw ConvergenceError(msg.str());
  }
}

StateVector embed_initial(const StateVector& psi0) {
  if (psi0.size() == 9) return psi0;
  if (psi0.size() == 5) {
    StateVector out = StateVector::Zero(9);
    for (std::size_t k = 0; k < kWorkingLevels.size(); ++k) {
      out[nv::level_index(kWorkingLevels[k])] = psi0[static_cast<Eigen::Index>(k)];
    }
    return out;
  }
  throw InvalidInput("lab frame: initial state must have 5 or 9 components");
}

}  // namespace

double lab_frame_max_frequency(const nv::NvDriveConfig& drive, const nv::NvConstants& constants,
                               const LabFrameOptions& options) {
  return build_frame(drive, constants, options).max_frequency;
}

LabFrameResult evolve_lab_nv(const PulseSchedule& schedule, const nv::NvConstants& constants,
                             const StateVector& psi0, const NoiseModel& noise,
                             const LabFrameOptions& options) {
  noise.validate();
  if (schedule.segments.empty()) throw InvalidInput("lab frame: empty pulse schedule");
  const StateVector start = embed_initial(psi0);
  std::vector<Frame> frames;
  for (const auto& seg : schedule.segments) {
    if (!(seg.duration >= 0.0)) throw InvalidInput("lab frame: negative segment duration");
    frames.push_back(build_frame(seg.drive, constants, options));
    check_step(frames.back().max_frequency, options);
  }

  LabFrameResult result;
  result.rho = ComplexMatrix::Zero(9, 9);
  const int n = noise.noiseless() ? 1 : noise.n_realizations;
  for (int k = 0; k < n; ++k) {
    const double eps = detuning_sample(noise, k);
    const StateVector psi = run_schedule(frames, schedule, start, eps, options.dt_max, result.steps);
    if (k == 0 && options.check_convergence) {
      long long extra = 0;
      const StateVector fine =
          run_schedule(frames, schedule, start, eps, 0.5 * options.dt_max, extra);
      result.halving_infidelity = infidelity(psi, fine);
      require_converged(result.halving_infidelity, options);
    }
    result.rho.noalias() += psi * psi.adjoint();
  }
  result.rho /= static_cast<double>(n);
  return result;
}

std::vector<ComplexMatrix> lab_frame_series(const nv::NvDriveConfig& drive,
                                            const nv::NvConstants& constants,
                                            const StateVector& psi0, int m_max,
                                            const NoiseModel& noise,
                                            const LabFrameOptions& options) {
  noise.validate();
  if (m_max < 0) throw InvalidInput("lab frame: m_max must be non-negative");
  if (!(drive.tau > 0.0)) throw InvalidInput("lab frame: tau must be positive");
  const StateVector start = embed_initial(psi0);
  const Frame frame = build_frame(drive, constants, options);
  check_step(frame.max_frequency, options);

  std::vector<ComplexMatrix> series(static_cast<std::size_t>(m_max) + 1,
                                    ComplexMatrix::Zero(9, 9));
  const int n = noise.noiseless() ? 1 : noise.n_realizations;
  for (int k = 0; k < n; ++k) {
    const double eps = detuning_sample(noise, k);
    Stepper coarse(frame, eps);
    StateVector psi = start;
    long long steps = 0;
    series[0].noalias() += psi * psi.adjoint();
    for (int m = 1; m <= m_max; ++m) {
      coarse.advance(psi, (m - 1) * drive.tau, m * drive.tau, options.dt_max, steps);
      series[static_cast<std::size_t>(m)].noalias() += psi * psi.adjoint();
    }
    if (k == 0 && options.check_convergence && m_max > 0) {
      Stepper fine(frame, eps);
      StateVector ref = start;
      for (int m = 1; m <= m_max; ++m) {
        fine.advance(ref, (m - 1) * drive.tau, m * drive.tau, 0.5 * options.dt_max, steps);
      }
      require_converged(infidelity(psi, ref), options);
    }
  }
  for (auto& rho : series) rho /= static_cast<double>(n);
  return series;
}

}  // namespace nvtopo::dynamics
