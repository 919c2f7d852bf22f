#include "nvtopo/spectroscopy.hpp"

#include <fftw3.h>

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <sstream>

#include "nvtopo/errors.hpp"
#include "nvtopo/random.hpp"

namespace nvtopo::spectroscopy {

using linalg::kTwoPi;

std::string to_string(Window w) { return w == Window::Hann ? "hann" : "rect"; }

Window window_from_string(const std::string& name) {
  if (name == "rect" || name == "rectangular") return Window::Rect;
  if (name == "hann") return Window::Hann;
  throw InvalidInput("unknown window '" + name + "' (expected rect or hann)");
}

std::string to_string(SeriesMode m) { return m == SeriesMode::Ideal ? "ideal" : "emulated"; }

double default_tau(const qw::QwParams& params, double p) {
  const auto eig = linalg::hermitian_eigen(qw::build_hqw(params, p));
  const double e_max = eig.eigenvalues.cwiseAbs().maxCoeff();
  if (!(e_max > 0.0)) throw InvalidInput("default_tau: spectrum is identically zero");
  return 1.0 / (8.0 * e_max);
}

void check_aliasing(const qw::QwParams& params, double p, double tau) {
  if (!(tau > 0.0)) throw InvalidInput("sample interval tau must be positive");
  const auto eig = linalg::hermitian_eigen(qw::build_hqw(params, p));
  const double nyquist = 0.5 / tau;
  for (Eigen::Index j = 0; j < eig.eigenvalues.size(); ++j) {
    if (std::abs(eig.eigenvalues[j]) >= nyquist) {
      std::ostringstream msg;
      msg << "tau = " << tau << " aliases eigenvalue E_" << j << " = " << eig.eigenvalues[j]
          << " (Nyquist limit " << nyquist << ")";
      throw InvalidInput(msg.str());
    }
  }
}

StateVector initial_superposition(int label) {
  if (label != 4 && label != 5 && label != 7 && label != 8) {
    throw InvalidInput("probe level must be one of |4>, |5>, |7>, |8>");
  }
  StateVector psi = StateVector::Zero(5);
  psi[dynamics::working_index(6)] = 1.0 / std::sqrt(2.0);
  psi[dynamics::working_index(label)] = 1.0 / std::sqrt(2.0);
  return psi;
}

qw::QwParams probe_params(const qw::QwParams& params, const Probe& probe) {
  qw::QwParams out = params;
  if (probe.reverse_mw) out.bx = -out.bx;
  return out;
}

StateVector probe_state(const Probe& probe) { return nv::qw_state_of_level(probe.label); }

TimeSeries sample_series_ideal(const qw::QwParams& params, double p, const Probe& probe,
                               int m_max, double tau) {
  if (m_max < 0) throw InvalidInput("m_max must be non-negative");
  check_aliasing(params, p, tau);
  const auto eig = linalg::hermitian_eigen(qw::build_hqw(probe_params(params, probe), p));
  const Eigen::VectorXcd c = eig.eigenvectors.adjoint() * probe_state(probe);

  TimeSeries out;
  out.tau = tau;
  out.probe = probe;
  out.mode = SeriesMode::Ideal;
  out.values.resize(static_cast<std::size_t>(m_max) + 1);
  for (int m = 0; m <= m_max; ++m) {
    Complex a = 0.0;
    for (Eigen::Index j = 0; j < c.size(); ++j) {
      a += std::norm(c[j]) * std::polar(1.0, -kTwoPi * eig.eigenvalues[j] * m * tau);
    }
    out.values[static_cast<std::size_t>(m)] = a;
  }
  return out;
}

std::vector<double> uniform_theta_grid(int n) {
  if (n < 1) throw InvalidInput("theta grid needs at least one point");
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = kTwoPi * k / n;
  return out;
}

CosineFit fit_cosine(const std::vector<double>& thetas, const std::vector<double>& values) {
  const auto n = static_cast<Eigen::Index>(thetas.size());
  if (thetas.size() != values.size()) throw InvalidInput("fit_cosine: size mismatch");
  if (n < 4) throw InvalidInput("fit_cosine: need at least 4 points");
  Eigen::MatrixXd design(n, 3);
  Eigen::VectorXd y(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double th = thetas[static_cast<std::size_t>(k)];
    design(k, 0) = 1.0;
    design(k, 1) = std::cos(th);
    design(k, 2) = std::sin(th);
    y[k] = values[static_cast<std::size_t>(k)];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < 3) {
    throw InvalidInput("fit_cosine: degenerate phase grid (need >= 3 distinct phases mod pi)");
  }
  const Eigen::Vector3d coef = qr.solve(y);
  CosineFit fit;
  fit.y0 = coef[0];
  fit.amplitude = std::hypot(coef[1], coef[2]);
  fit.rms = std::sqrt((design * coef - y).squaredNorm() / static_cast<double>(n));
  const double scale = std::max({1.0, std::abs(fit.y0), y.cwiseAbs().maxCoeff()});
  if (fit.amplitude <= 1e-14 * scale) {
    fit.theta0 = 0.0;
    fit.indeterminate = true;
  } else {
    fit.theta0 = std::atan2(coef[2], coef[1]);
    if (fit.theta0 <= -M_PI) fit.theta0 = M_PI;
  }
  return fit;
}

ComplexMatrix readback_rotation(int label, double theta) {
  if (label != 4 && label != 5 && label != 7 && label != 8) {
    throw InvalidInput("readback: probe level must be one of |4>, |5>, |7>, |8>");
  }
  ComplexMatrix r = ComplexMatrix::Identity(9, 9);
  const int i6 = nv::level_index(6);
  const int il = nv::level_index(label);
  const double h = 1.0 / std::sqrt(2.0);
  r(i6, i6) = h;
  r(i6, il) = -h * std::polar(1.0, -theta);
  r(il, i6) = h * std::polar(1.0, theta);
  r(il, il) = h;
  return r;
}

double effective_probe_pl(int label, const dynamics::ReadoutModel& readout) {
  return readout.pl_of_level(label == 5 ? 4 : label);
}

std::vector<double> pl_curve(const ComplexMatrix& rho9, int label,
                             const dynamics::ReadoutModel& readout,
                             const std::vector<double>& thetas, std::uint64_t seed) {
  std::vector<double> out;
  out.reserve(thetas.size());
  ComplexMatrix swap = ComplexMatrix::Identity(9, 9);
  if (label == 5) {
    const int i4 = nv::level_index(4);
    const int i5 = nv::level_index(5);
    swap(i4, i4) = 0.0;
    swap(i5, i5) = 0.0;
    swap(i4, i5) = 1.0;
    swap(i5, i4) = 1.0;
  }
  for (std::size_t k = 0; k < thetas.size(); ++k) {
    const ComplexMatrix u = swap * readback_rotation(label, thetas[k]);
    const ComplexMatrix rho = u * rho9 * u.adjoint();
    const std::uint64_t shot_seed = substream(seed, k)();
    out.push_back(dynamics::simulate_pl(rho, readout, shot_seed) /
                  static_cast<double>(readout.shots));
  }
  return out;
}

Complex reconstruct_coherence(const CosineFit& fit, double pl_psi, double pl6) {
  const double contrast = pl_psi - pl6;
  if (contrast == 0.0) throw InvalidInput("readout contrast PL_psi - PL_6 is zero");
  return 2.0 * fit.amplitude * std::polar(1.0, fit.theta0) / contrast;
}

EmulatedSeries sample_series_emulated(const qw::QwParams& params, double p, const Probe& probe,
                                      int m_max, double tau, const EmulationOptions& options) {
  if (probe.label != 4 && probe.label != 5) {
    throw InvalidInput("emulated series: probe must be |4> or |5>");
  }
  if (m_max < 0) throw InvalidInput("m_max must be non-negative");
  if (options.theta_grid.size() < 4) throw InvalidInput("theta grid needs at least 4 phases");
  const auto [lo, hi] = std::minmax_element(options.theta_grid.begin(), options.theta_grid.end());
  if (*hi - *lo < 0.75 * kTwoPi - 1e-12) {
    throw InvalidInput("theta grid must span at least 3/4 of a full turn");
  }
  options.readout.validate();
  check_aliasing(params, p, tau);

  nv::NvDriveConfig drive = nv::qw_to_nv(params, p, options.scale, tau / options.scale);
  if (probe.reverse_mw) drive = nv::reverse_mw_detuning(drive);
  const StateVector psi0 = initial_superposition(probe.label);

  std::vector<ComplexMatrix> rhos;
  if (options.lab_frame) {
    rhos = dynamics::lab_frame_series(drive, options.constants, psi0, m_max, options.noise,
                                      options.lab);
  } else {
    for (const auto& r : dynamics::working_space_series(drive, psi0, m_max, options.noise)) {
      rhos.push_back(dynamics::embed_working_space(r));
    }
  }

  const double pl_psi = effective_probe_pl(probe.label, options.readout);
  const double pl6 = options.readout.pl_of_level(6);
  EmulatedSeries out;
  out.series.tau = tau;
  out.series.probe = probe;
  out.series.mode = SeriesMode::Emulated;
  for (int m = 0; m <= m_max; ++m) {
    auto curve = pl_curve(rhos[static_cast<std::size_t>(m)], probe.label, options.readout,
                          options.theta_grid, substream(options.seed, static_cast<std::uint64_t>(m))());
    const CosineFit fit = fit_cosine(options.theta_grid, curve);
    out.series.values.push_back(reconstruct_coherence(fit, pl_psi, pl6));
    out.series.low_confidence.push_back(fit.rms > options.low_confidence_rms);
    out.pl.push_back(std::move(curve));
  }
  return out;
}

namespace {

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

double window_weight(Window w, int m, int n) {
  if (w == Window::Rect) return 1.0;
  const double s = std::sin(M_PI * (m + 1) / (n + 1));
  return s * s;
}

}  // namespace

EnergySpectrum spectrum(const TimeSeries& series, Window window, int zero_pad) {
  const int n = static_cast<int>(series.values.size());
  if (n < 9) throw InvalidInput("spectrum: need m_max >= 8");
  if (zero_pad < 1) throw InvalidInput("spectrum: zero_pad must be >= 1");
  if (!(series.tau > 0.0)) throw InvalidInput("spectrum: tau must be positive");
  const int nfft = n * zero_pad;

  fftw_complex* buf = fftw_alloc_complex(static_cast<std::size_t>(nfft));
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft_1d(nfft, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  double wsum = 0.0;
  for (int k = 0; k < nfft; ++k) {
    buf[k][0] = 0.0;
    buf[k][1] = 0.0;
  }
  for (int m = 0; m < n; ++m) {
    const double w = window_weight(window, m, n);
    wsum += w;
    buf[m][0] = w * series.values[static_cast<std::size_t>(m)].real();
    buf[m][1] = w * series.values[static_cast<std::size_t>(m)].imag();
  }
  fftw_execute(plan);

  EnergySpectrum out;
  out.tau = series.tau;
  out.n_samples = n;
  out.n_fft = nfft;
  out.window = window;
  out.energies.resize(static_cast<std::size_t>(nfft));
  out.amplitude.resize(static_cast<std::size_t>(nfft));
  const int k0 = -(nfft - 1) / 2;
  for (int i = 0; i < nfft; ++i) {
    const int k = k0 + i;
    const int src = ((k % nfft) + nfft) % nfft;
    out.energies[static_cast<std::size_t>(i)] = k / (nfft * series.tau);
    out.amplitude[static_cast<std::size_t>(i)] = std::hypot(buf[src][0], buf[src][1]) / wsum;
  }
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(buf);
  return out;
}

EnergySpectrum combine_spectra(const std::vector<EnergySpectrum>& parts) {
  if (parts.empty()) throw InvalidInput("combine_spectra: nothing to combine");
  EnergySpectrum out = parts.front();
  out.peaks.clear();
  for (std::size_t k = 1; k < parts.size(); ++k) {
    const auto& s = parts[k];
    if (s.n_fft != out.n_fft || s.n_samples != out.n_samples ||
        std::abs(s.tau - out.tau) > 1e-12 * out.tau) {
      throw InvalidInput("combine_spectra: spectra are on different grids");
    }
    for (std::size_t i = 0; i < out.amplitude.size(); ++i) out.amplitude[i] += s.amplitude[i];
  }
  return out;
}

std::vector<int> find_peak_indices(const EnergySpectrum& spec, const PeakSearch& search) {
  const auto& a = spec.amplitude;
  const int n = static_cast<int>(a.size());
  std::vector<int> out;
  if (n < 3) return out;
  const double thr_rel = search.rel_threshold > 0.0
                             ? search.rel_threshold
                             : (spec.window == Window::Hann ? 0.05 : 0.25);
  const double gmax = *std::max_element(a.begin(), a.end());
  if (!(gmax > 0.0)) return out;
  for (int i = 1; i + 1 < n; ++i) {
    const double v = a[static_cast<std::size_t>(i)];
    if (!(v > a[static_cast<std::size_t>(i - 1)] && v >= a[static_cast<std::size_t>(i + 1)])) continue;
    if (v < thr_rel * gmax) continue;
    double left_min = v;
    for (int j = i - 1; j >= 0 && a[static_cast<std::size_t>(j)] <= v; --j) {
      left_min = std::min(left_min, a[static_cast<std::size_t>(j)]);
    }
    double right_min = v;
    for (int j = i + 1; j < n && a[static_cast<std::size_t>(j)] <= v; ++j) {
      right_min = std::min(right_min, a[static_cast<std::size_t>(j)]);
    }
    if (v - std::max(left_min, right_min) >= search.min_prominence * v) out.push_back(i);
  }
  if (!search.sidelobe_guard) return out;
  const double reach = 2.0 * spec.lobe_half_width() * spec.bin_width();
  const double ratio = spec.window == Window::Hann ? 0.05 : 0.45;
  std::vector<int> kept;
  for (int i : out) {
    const double v = a[static_cast<std::size_t>(i)];
    const bool sidelobe = std::any_of(out.begin(), out.end(), [&](int j) {
      const double w = a[static_cast<std::size_t>(j)];
      return w > v && v < ratio * w &&
             std::abs(spec.energies[static_cast<std::size_t>(j)] -
                      spec.energies[static_cast<std::size_t>(i)]) <= reach;
    });
    if (!sidelobe) kept.push_back(i);
  }
  return kept;
}

std::vector<Peak> detect_peaks(EnergySpectrum& spec, const PeakSearch& search) {
  const auto idx = find_peak_indices(spec, search);
  std::vector<Peak> peaks;
  spec.failed_fits = 0;
  const double half = spec.lobe_half_width() * spec.bin_width();
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const double e = spec.energies[static_cast<std::size_t>(idx[k])];
    double lo = e - half;
    double hi = e + half;
    if (k > 0) lo = std::max(lo, 0.5 * (e + spec.energies[static_cast<std::size_t>(idx[k - 1])]));
    if (k + 1 < idx.size()) {
      hi = std::min(hi, 0.5 * (e + spec.energies[static_cast<std::size_t>(idx[k + 1])]));
    }
    try {
      peaks.push_back(fit_peak(spec, lo, hi));
    } catch (const FitError&) {
      ++spec.failed_fits;
    }
  }
  spec.peaks = peaks;
  return peaks;
}

double sign_average(double e_c, double sigma) {
  if (!(sigma > 0.0)) throw InvalidInput("sign_average: sigma must be positive");
  return std::erf(e_c / (sigma * std::sqrt(2.0)));
}

std::vector<BandMatch> match_peaks_to_bands(const std::vector<Peak>& peaks,
                                            const std::vector<double>& eigenvalues, double gate) {
  std::vector<BandMatch> out;
  for (const Peak& pk : peaks) {
    BandMatch best;
    best.distance = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < eigenvalues.size(); ++j) {
      const double d = std::abs(pk.center - eigenvalues[j]);
      if (d < best.distance) {
        best.distance = d;
        best.band = static_cast<int>(j);
      }
    }
    if (best.distance > gate) best.band = -1;
    out.push_back(best);
  }
  return out;
}

TimeSeries protocol_series(const qw::QwParams& params, double p, const Probe& probe,
                           const Protocol& protocol, double tau,
                           std::vector<std::vector<double>>* pl) {
  if (!protocol.emulated) return sample_series_ideal(params, p, probe, protocol.m_max, tau);
  auto em = sample_series_emulated(params, p, probe, protocol.m_max, tau, protocol.emulation);
  if (pl != nullptr) *pl = std::move(em.pl);
  return em.series;
}

TopologicalMeasurement measure_topological_number(const qw::QwParams& params,
                                                  const Protocol& protocol) {
  const Probe probe{4, true};
  const double tau = protocol.tau > 0.0 ? protocol.tau : default_tau(params, 0.0);
  const TimeSeries series = protocol_series(params, 0.0, probe, protocol, tau);
  const EnergySpectrum spec = spectrum(series, protocol.window, protocol.zero_pad);

  const auto it = std::max_element(spec.amplitude.begin(), spec.amplitude.end());
  const double e_peak = spec.energies[static_cast<std::size_t>(it - spec.amplitude.begin())];
  const double half = 2.0 * spec.lobe_half_width() * spec.bin_width();
  const Peak peak = fit_peak(spec, e_peak - half, e_peak + half);

  TopologicalMeasurement out;
  out.e_c = peak.center;
  out.sigma = std::max(peak.fit_error, 1e-9 * spec.bin_width());
  out.nu_bar = sign_average(out.e_c, out.sigma);
  out.height = peak.height;
  out.tau = tau;
  out.low_confidence_samples = static_cast<int>(
      std::count(series.low_confidence.begin(), series.low_confidence.end(), true));
  return out;
}

}  // namespace nvtopo::spectroscopy
