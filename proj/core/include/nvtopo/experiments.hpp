#pragma once

// End-to-end runs driven by a JSON run configuration. Every run writes
// tab-separated tables with a commented header and a manifest.json holding
// the resolved configuration and per-file SHA-256 checksums.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "nvtopo/dynamics.hpp"
#include "nvtopo/qw_model.hpp"
#include "nvtopo/spectroscopy.hpp"

namespace nvtopo::experiments {

enum class Experiment { Dispersion, Bloch, Spectrum, NuSweep, Emulate };
std::string to_string(Experiment e);
Experiment experiment_from_string(const std::string& name);

struct SweepRange {
  double start = -1.6;
  double stop = -0.98;
  double step = 0.02;
};

struct RunConfig {
  Experiment experiment = Experiment::Spectrum;
  qw::QwParams params{-1.6, 0.165, 1.3};

  double p = 0.0;  // spectrum / emulate
  double p_max = 2.0;
  int p_points = 21;
  SweepRange mu_sweep;
  double bloch_p_max = 20.0;
  int bloch_points = 2001;

  spectroscopy::SeriesMode mode = spectroscopy::SeriesMode::Ideal;
  int m_max = spectroscopy::kDefaultMMax;
  double tau = 0.0;  // 0: automatic
  spectroscopy::Window window = spectroscopy::Window::Rect;
  int zero_pad = spectroscopy::kDefaultZeroPad;
  int theta_points = 8;
  int probe = 5;
  bool reverse_mw = false;

  bool noise = true;
  double t2star = dynamics::kDefaultT2Star;  // microseconds
  int n_realizations = 2000;
  bool crosstalk = false;
  double dt_max = 0.005;
  double crosstalk_cutoff = 30.0;

  dynamics::ReadoutModel readout;
  double scale = nv::kDefaultScale;
  std::uint64_t seed = 1;

  // Output-invariant knobs, excluded from the config hash.
  unsigned workers = 0;  // 0: machine parallelism
  std::string out = "out";

  void validate() const;
};

// Strict parsing: unknown keys, wrong types and invalid values raise
// ConfigError naming the field (and line for syntax errors). A manifest
// produced by a previous run is accepted and its "config" member is used.
RunConfig parse_config(std::string_view json_text);
RunConfig load_config(const std::filesystem::path& path);

// Canonical JSON of the resolved configuration without out/workers.
std::string config_json(const RunConfig& config);
std::string config_hash(const RunConfig& config);

std::string sha256_hex(std::string_view data);

std::vector<double> sweep_values(const SweepRange& range);

// Per-point seed derived from (master seed, point index, stream).
std::uint64_t point_seed(std::uint64_t master, std::uint64_t index, std::uint64_t stream);

struct OutputFile {
  std::string name;
  std::string sha256;
};

struct RunResult {
  std::filesystem::path out_dir;
  std::vector<OutputFile> files;
  std::map<std::string, std::string> summary;
  double wall_seconds = 0.0;
};

// Spectroscopy protocol assembled from the config for one sweep point.
spectroscopy::Protocol make_protocol(const RunConfig& config, std::uint64_t point_index);

RunResult run_dispersion(const RunConfig& config);
RunResult run_nu_sweep(const RunConfig& config);
RunResult run_bloch(const RunConfig& config);
RunResult run_spectrum(const RunConfig& config);
RunResult run(const RunConfig& config);

}  // namespace nvtopo::experiments
