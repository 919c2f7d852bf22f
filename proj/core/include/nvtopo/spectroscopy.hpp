#pragma once

// Eigenvalue spectroscopy: the reference superposition (|6> + |Psi>)/sqrt(2)
// is evolved for m tau, the overlap a(m) = <Psi|U(m tau)|Psi> is read out
// interferometrically and Fourier transformed. With U = exp(-i 2 pi H t)
// a line at energy E appears at +E on the spectrum axis.
//
// Energies and tau in this module are in wire units; the NV emulation uses
// tau_nv = tau / scale.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nvtopo/dynamics.hpp"
#include "nvtopo/linalg.hpp"
#include "nvtopo/nv_model.hpp"
#include "nvtopo/qw_model.hpp"

namespace nvtopo::spectroscopy {

using linalg::Complex;
using linalg::ComplexMatrix;
using linalg::StateVector;

inline constexpr int kDefaultMMax = 64;
inline constexpr int kDefaultZeroPad = 8;

enum class Window { Rect, Hann };
std::string to_string(Window w);
Window window_from_string(const std::string& name);

enum class SeriesMode { Ideal, Emulated };
std::string to_string(SeriesMode m);

// A probe |Psi> together with the optional delta_MW sign reversal.
struct Probe {
  int label = 5;
  bool reverse_mw = false;
};

struct TimeSeries {
  double tau = 0.0;
  std::vector<Complex> values;  // m = 0..m_max
  Probe probe;
  SeriesMode mode = SeriesMode::Ideal;
  std::vector<bool> low_confidence;  // emulated mode, per sample
};

// 1 / (8 E_max) with E_max the largest |eigenvalue| of H_QW(p).
double default_tau(const qw::QwParams& params, double p);

// Throws InvalidInput naming the offending eigenvalue when some |E_j| does
// not lie strictly inside the Nyquist band 1/(2 tau).
void check_aliasing(const qw::QwParams& params, double p, double tau);

// (|6> + |label>)/sqrt(2) in the working space {4,5,6,7,8}.
StateVector initial_superposition(int label);

// Wire parameters and state that the probe evolves under in the ideal tier.
qw::QwParams probe_params(const qw::QwParams& params, const Probe& probe);
StateVector probe_state(const Probe& probe);

TimeSeries sample_series_ideal(const qw::QwParams& params, double p, const Probe& probe,
                               int m_max, double tau);

struct CosineFit {
  double y0 = 0.0;
  double amplitude = 0.0;
  double theta0 = 0.0;  // (-pi, pi]
  double rms = 0.0;
  bool indeterminate = false;
};

// Linear least squares y = y0 + B cos(theta) + C sin(theta).
CosineFit fit_cosine(const std::vector<double>& thetas, const std::vector<double>& values);

std::vector<double> uniform_theta_grid(int n);

// Readback pi/2 rotation on (|6>, |label>) with phase theta, 9x9.
ComplexMatrix readback_rotation(int label, double theta);

// PL per shot the readout model reports for |label> after the readback;
// |5> is swapped onto |4> by an extra pi pulse, so it reads with PL4.
double effective_probe_pl(int label, const dynamics::ReadoutModel& readout);

// PL(theta) per shot for each readback phase.
std::vector<double> pl_curve(const ComplexMatrix& rho9, int label,
                             const dynamics::ReadoutModel& readout,
                             const std::vector<double>& thetas, std::uint64_t seed);

// a = 2 A exp(i theta0) / (PL_psi - PL_6).
Complex reconstruct_coherence(const CosineFit& fit, double pl_psi, double pl6);

struct EmulationOptions {
  dynamics::NoiseModel noise;
  dynamics::ReadoutModel readout;
  std::vector<double> theta_grid = uniform_theta_grid(8);
  bool lab_frame = false;
  dynamics::LabFrameOptions lab;
  nv::NvConstants constants;
  double scale = nv::kDefaultScale;
  std::uint64_t seed = 0;  // shot noise
  double low_confidence_rms = 0.01;
};

struct EmulatedSeries {
  TimeSeries series;
  std::vector<std::vector<double>> pl;  // [m][theta]
};

EmulatedSeries sample_series_emulated(const qw::QwParams& params, double p, const Probe& probe,
                                      int m_max, double tau, const EmulationOptions& options);

struct Peak {
  double center = 0.0;
  double sigma = 0.0;
  double height = 0.0;      // spectrum maximum inside the fit window
  double fit_error = 0.0;   // standard error of center
  double amplitude = 0.0;   // Gaussian amplitude above baseline
  double baseline = 0.0;
  int iterations = 0;
};

struct EnergySpectrum {
  std::vector<double> energies;  // ascending, one Nyquist window
  std::vector<double> amplitude;
  double tau = 0.0;
  int n_samples = 0;
  int n_fft = 0;
  Window window = Window::Rect;
  std::vector<Peak> peaks;
  int failed_fits = 0;  // detected maxima whose Gaussian fit did not converge

  double grid_spacing() const { return 1.0 / (n_fft * tau); }
  // Resolution 1/(N tau) of the unpadded series; "one bin" in tolerances.
  double bin_width() const { return 1.0 / (n_samples * tau); }
  // Half width of the window's main lobe in bins.
  double lobe_half_width() const { return window == Window::Hann ? 2.0 : 1.0; }
};

// Windowed, zero-padded DFT normalized so an on-bin unit phasor has height 1.
EnergySpectrum spectrum(const TimeSeries& series, Window window, int zero_pad);

// Incoherent sum of magnitudes of spectra sharing one grid.
EnergySpectrum combine_spectra(const std::vector<EnergySpectrum>& parts);

struct PeakSearch {
  double rel_threshold = 0.0;   // 0: 0.25 (rect) or 0.05 (Hann) of the global maximum
  double min_prominence = 0.1;  // relative to the peak height
  // Drop maxima within two main-lobe half widths of a stronger line that are
  // no taller than that line's sidelobes could make them.
  bool sidelobe_guard = true;
};

std::vector<int> find_peak_indices(const EnergySpectrum& spec, const PeakSearch& search = {});

// Gaussian + baseline least-squares fit to the peak inside [e_lo, e_hi].
Peak fit_peak(const EnergySpectrum& spec, double e_lo, double e_hi);

// Finds and fits every peak; the result is also stored in spec.peaks.
// Maxima whose fit fails are counted in spec.failed_fits.
std::vector<Peak> detect_peaks(EnergySpectrum& spec, const PeakSearch& search = {});

// erf(E_c / (sigma sqrt 2)).
double sign_average(double e_c, double sigma);

struct BandMatch {
  int band = -1;  // -1: unmatched
  double distance = 0.0;
};
std::vector<BandMatch> match_peaks_to_bands(const std::vector<Peak>& peaks,
                                            const std::vector<double>& eigenvalues, double gate);

struct Protocol {
  int m_max = kDefaultMMax;
  int zero_pad = kDefaultZeroPad;
  Window window = Window::Rect;
  double tau = 0.0;  // 0: default_tau
  bool emulated = false;
  EmulationOptions emulation;
};

struct TopologicalMeasurement {
  double nu_bar = 0.0;
  double e_c = 0.0;
  double sigma = 0.0;
  double height = 0.0;
  double tau = 0.0;
  int low_confidence_samples = 0;
};

TopologicalMeasurement measure_topological_number(const qw::QwParams& params,
                                                  const Protocol& protocol);

// Series of one probe at (params, p) under the protocol, ideal or emulated.
TimeSeries protocol_series(const qw::QwParams& params, double p, const Probe& probe,
                           const Protocol& protocol, double tau,
                           std::vector<std::vector<double>>* pl = nullptr);

}  // namespace nvtopo::spectroscopy
