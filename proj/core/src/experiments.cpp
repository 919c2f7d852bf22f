#include "nvtopo/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <sstream>

#include "nvtopo/errors.hpp"
#include "nvtopo/parallel.hpp"

#ifndef NVTOPO_VERSION
#define NVTOPO_VERSION "0.0.0"
#endif

namespace nvtopo::experiments {

using nlohmann::json;
namespace sp = spectroscopy;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

class Table {
 public:
  Table(const RunConfig& config, std::string title, std::vector<std::string> columns)
      : columns_(std::move(columns)) {
    head_ << "# nvtopo " << NVTOPO_VERSION << " " << to_string(config.experiment) << ": " << title
          << "\n# config-sha256 " << config_hash(config) << "\n";
  }

  void comment(const std::string& line) { head_ << "# " << line << "\n"; }

  void row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_.size()) throw Error("table row width mismatch");
    for (std::size_t k = 0; k < cells.size(); ++k) body_ << (k ? "\t" : "") << cells[k];
    body_ << "\n";
  }

  std::string str() const {
    std::ostringstream out;
    out << head_.str() << "#";
    for (std::size_t k = 0; k < columns_.size(); ++k) out << (k ? "\t" : " ") << columns_[k];
    out << "\n" << body_.str();
    return out.str();
  }

 private:
  std::vector<std::string> columns_;
  std::ostringstream head_;
  std::ostringstream body_;
};

class Output {
 public:
  explicit Output(const RunConfig& config) : config_(config), start_(std::chrono::steady_clock::now()) {
    result_.out_dir = config.out;
    std::filesystem::create_directories(result_.out_dir);
  }

  void write(const std::string& name, const std::string& content) {
    const auto path = result_.out_dir / name;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path.string());
    f << content;
    if (!f) throw Error("failed writing " + path.string());
    result_.files.push_back({name, sha256_hex(content)});
  }

  void summary(const std::string& key, const std::string& value) { result_.summary[key] = value; }

  RunResult finish() {
    result_.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    json m;
    m["version"] = NVTOPO_VERSION;
    m["experiment"] = to_string(config_.experiment);
    m["config"] = json::parse(config_json(config_));
    m["config_sha256"] = config_hash(config_);
    m["wall_clock_seconds"] = result_.wall_seconds;
    json outputs = json::object();
    for (const auto& f : result_.files) outputs[f.name] = f.sha256;
    m["outputs"] = outputs;
    m["summary"] = result_.summary;
    std::ofstream f(result_.out_dir / "manifest.json", std::ios::binary);
    f << m.dump(2) << "\n";
    if (!f) throw Error("cannot write manifest.json");
    return result_;
  }

 private:
  const RunConfig& config_;
  std::chrono::steady_clock::time_point start_;
  RunResult result_;
};

unsigned workers_of(const RunConfig& config) {
  return config.workers == 0 ? default_workers() : config.workers;
}

double tau_for(const RunConfig& config, const qw::QwParams& params, double p) {
  return config.tau > 0.0 ? config.tau : sp::default_tau(params, p);
}

std::vector<double> eigenvalues_at(const qw::QwParams& params, double p) {
  const auto eig = linalg::hermitian_eigen(qw::build_hqw(params, p));
  return {eig.eigenvalues.data(), eig.eigenvalues.data() + eig.eigenvalues.size()};
}

struct PeakRow {
  sp::Peak peak;
  sp::BandMatch match;
};

// Both probes that together cover all four bands at low momentum:
// |5> and |4> with the MW detuning reversed (standing in for |7>).
std::vector<PeakRow> combined_peaks(const qw::QwParams& params, double p, double tau,
                                    const sp::Protocol& protocol) {
  std::vector<sp::EnergySpectrum> parts;
  for (const sp::Probe probe : {sp::Probe{5, false}, sp::Probe{4, true}}) {
    parts.push_back(sp::spectrum(sp::protocol_series(params, p, probe, protocol, tau),
                                 protocol.window, protocol.zero_pad));
  }
  auto spec = sp::combine_spectra(parts);
  const auto peaks = sp::detect_peaks(spec);
  const auto eig = eigenvalues_at(params, p);
  std::vector<PeakRow> rows;
  for (const auto& pk : peaks) {
    const double gate = std::max(0.5 * spec.bin_width(), std::sqrt(2.0 * std::log(2.0)) * pk.sigma);
    rows.push_back({pk, sp::match_peaks_to_bands({pk}, eig, gate).front()});
  }
  return rows;
}

std::vector<std::string> peak_cells(const PeakRow& r) {
  return {num(r.peak.center), num(r.peak.sigma), num(r.peak.height), num(r.peak.fit_error),
          std::to_string(r.match.band < 0 ? 0 : r.match.band + 1), num(r.match.distance)};
}

}  // namespace

sp::Protocol make_protocol(const RunConfig& config, std::uint64_t point_index) {
  sp::Protocol pr;
  pr.m_max = config.m_max;
  pr.zero_pad = config.zero_pad;
  pr.window = config.window;
  pr.tau = config.tau;
  pr.emulated = config.mode == sp::SeriesMode::Emulated;
  auto& em = pr.emulation;
  em.noise.sigma_b = config.noise ? dynamics::sigma_b_from_t2star(config.t2star) : 0.0;
  em.noise.n_realizations = config.n_realizations;
  em.noise.seed = point_seed(config.seed, point_index, 0);
  em.noise.crosstalk = config.crosstalk;
  em.readout = config.readout;
  em.theta_grid = sp::uniform_theta_grid(config.theta_points);
  em.lab_frame = config.crosstalk;
  em.lab.dt_max = config.dt_max;
  em.lab.crosstalk = true;
  em.lab.crosstalk_cutoff = config.crosstalk_cutoff;
  em.scale = config.scale;
  em.seed = point_seed(config.seed, point_index, 1);
  return pr;
}

RunResult run_dispersion(const RunConfig& config) {
  config.validate();
  Output out(config);
  const auto grid = qw::momentum_grid(config.p_max, config.p_points);
  const auto bands = qw::dispersion(config.params, grid);
  const bool noisy = config.noise;

  struct Point {
    std::vector<PeakRow> ideal;
    std::vector<PeakRow> noisy;
    std::string ideal_status = "ok";
    std::string noisy_status = "ok";
  };
  std::vector<Point> points(grid.size());
  parallel_for(grid.size(), workers_of(config), [&](std::size_t i) {
    const double p = grid[i];
    const double tau = tau_for(config, config.params, p);
    sp::Protocol ideal = make_protocol(config, i);
    ideal.emulated = false;
    try {
      points[i].ideal = combined_peaks(config.params, p, tau, ideal);
    } catch (const FitError& e) {
      points[i].ideal_status = "fit-failed";
    }
    if (noisy) {
      sp::Protocol em = make_protocol(config, i);
      em.emulated = true;
      try {
        points[i].noisy = combined_peaks(config.params, p, tau, em);
      } catch (const FitError& e) {
        points[i].noisy_status = "fit-failed";
      }
    }
  });

  Table bt(config, "exact bands", {"p", "mirrored", "E1", "E2", "E3", "E4", "gap23"});
  bt.comment("energies and momenta in wire units; rows with mirrored=1 are copies of p>0");
  double min_gap = std::numeric_limits<double>::infinity();
  double min_gap_p = 0.0;
  auto band_row = [&](std::size_t i, bool mirrored) {
    const auto& e = bands.energies[i];
    const double gap = e[2] - e[1];
    bt.row({num(mirrored ? -grid[i] : grid[i]), mirrored ? "1" : "0", num(e[0]), num(e[1]),
            num(e[2]), num(e[3]), num(gap)});
  };
  for (std::size_t i = grid.size(); i-- > 0;) {
    if (grid[i] > 0.0) band_row(i, true);
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    band_row(i, false);
    const double gap = bands.energies[i][2] - bands.energies[i][1];
    if (gap < min_gap) {
      min_gap = gap;
      min_gap_p = grid[i];
    }
  }
  out.write("bands.tsv", bt.str());

  Table pt(config, "spectroscopy peaks",
           {"p", "mirrored", "tier", "center", "sigma", "height", "fit_error", "band", "distance"});
  pt.comment("peaks of the combined |5> and reversed-|4> spectra; band 0 = unmatched");
  auto peak_rows = [&](std::size_t i, bool mirrored) {
    const std::string p = num(mirrored ? -grid[i] : grid[i]);
    const std::string flag = mirrored ? "1" : "0";
    for (const auto& r : points[i].ideal) {
      auto cells = peak_cells(r);
      cells.insert(cells.begin(), {p, flag, "ideal"});
      pt.row(cells);
    }
    if (points[i].ideal_status != "ok") {
      pt.row({p, flag, "ideal", "nan", "nan", "nan", "nan", "0", "nan"});
    }
    for (const auto& r : points[i].noisy) {
      auto cells = peak_cells(r);
      cells.insert(cells.begin(), {p, flag, "noisy"});
      pt.row(cells);
    }
    if (noisy && points[i].noisy_status != "ok") {
      pt.row({p, flag, "noisy", "nan", "nan", "nan", "nan", "0", "nan"});
    }
  };
  for (std::size_t i = grid.size(); i-- > 0;) {
    if (grid[i] > 0.0) peak_rows(i, true);
  }
  for (std::size_t i = 0; i < grid.size(); ++i) peak_rows(i, false);
  out.write("peaks.tsv", pt.str());

  out.summary("phase", std::string(qw::to_string(qw::classify_phase(config.params))));
  out.summary("min_gap23", num(min_gap));
  out.summary("min_gap23_p", num(min_gap_p));
  return out.finish();
}

RunResult run_nu_sweep(const RunConfig& config) {
  config.validate();
  Output out(config);
  const auto mus = sweep_values(config.mu_sweep);
  struct Point {
    sp::TopologicalMeasurement m;
    int nu_exact = 0;
    std::string status = "ok";
  };
  std::vector<Point> points(mus.size());
  parallel_for(mus.size(), workers_of(config), [&](std::size_t i) {
    qw::QwParams params = config.params;
    params.mu = mus[i];
    try {
      points[i].nu_exact = qw::topological_number(params);
    } catch (const CriticalPointError&) {
      points[i].nu_exact = 0;
    }
    try {
      points[i].m = sp::measure_topological_number(params, make_protocol(config, i));
    } catch (const FitError&) {
      points[i].status = "fit-failed";
      points[i].m.nu_bar = kNaN;
      points[i].m.e_c = kNaN;
      points[i].m.sigma = kNaN;
    }
  });

  Table t(config, "topological number", {"mu", "nu_bar", "E_c", "sigma", "nu_exact", "status"});
  t.comment(std::string("mode ") + sp::to_string(config.mode) + "; E_c and sigma in wire units");
  for (std::size_t i = 0; i < mus.size(); ++i) {
    const auto& p = points[i];
    t.row({num(mus[i]), num(p.m.nu_bar), num(p.m.e_c), num(p.m.sigma), std::to_string(p.nu_exact),
           p.status});
  }
  out.write("nu_sweep.tsv", t.str());

  std::ostringstream crossings;
  int count = 0;
  for (std::size_t i = 1; i < mus.size(); ++i) {
    const double a = points[i - 1].m.e_c;
    const double b = points[i].m.e_c;
    if (std::isnan(a) || std::isnan(b) || (a > 0) == (b > 0)) continue;
    const double mu = mus[i - 1] + (mus[i] - mus[i - 1]) * a / (a - b);
    crossings << (count++ ? "," : "") << num(mu);
  }
  out.summary("sign_changes", crossings.str());
  out.summary("critical_mu", num(-std::sqrt(std::max(0.0, config.params.bx * config.params.bx -
                                                            config.params.delta * config.params.delta))));
  return out.finish();
}

RunResult run_bloch(const RunConfig& config) {
  config.validate();
  Output out(config);
  const auto grid = qw::momentum_grid(config.bloch_p_max, config.bloch_points);
  const auto traj = qw::bloch_trajectory(config.params, grid);
  const auto shape = qw::classify_trajectory(traj);
  Table t(config, "Bloch trajectory", {"p", "x", "y", "z", "raw_length"});
  t.comment("classification " + std::string(qw::to_string(shape)));
  for (std::size_t i = 0; i < traj.momenta.size(); ++i) {
    const auto& d = traj.directions[i];
    t.row({num(traj.momenta[i]), num(d[0]), num(d[1]), num(d[2]), num(traj.raw_lengths[i])});
  }
  out.write("bloch.tsv", t.str());
  out.summary("phase", std::string(qw::to_string(qw::classify_phase(config.params))));
  out.summary("trajectory", std::string(qw::to_string(shape)));
  return out.finish();
}

RunResult run_spectrum(const RunConfig& config) {
  config.validate();
  Output out(config);
  sp::Protocol protocol = make_protocol(config, 0);
  if (config.experiment == Experiment::Emulate) protocol.emulated = true;
  const sp::Probe probe{config.probe, config.reverse_mw};
  const double tau = tau_for(config, config.params, config.p);

  std::vector<std::vector<double>> pl;
  const auto series = sp::protocol_series(config.params, config.p, probe, protocol, tau, &pl);
  auto spec = sp::spectrum(series, protocol.window, protocol.zero_pad);
  const auto peaks = sp::detect_peaks(spec);
  if (peaks.empty()) {
    throw FitError("spectrum: no line could be fitted (" + std::to_string(spec.failed_fits) +
                   " failed fits)");
  }
  const auto eig = eigenvalues_at(config.params, config.p);

  const std::string mode = protocol.emulated ? "emulated" : "ideal";
  Table st(config, "time series", {"m", "t", "t_nv_us", "re_a", "im_a", "abs_a", "low_confidence"});
  st.comment("probe |" + std::to_string(probe.label) + ">" + (probe.reverse_mw ? " reversed MW detuning" : "") +
             "; mode " + mode + "; tau " + num(tau) + " wire units");
  for (std::size_t m = 0; m < series.values.size(); ++m) {
    const auto a = series.values[m];
    const bool low = m < series.low_confidence.size() && series.low_confidence[m];
    st.row({std::to_string(m), num(m * tau), num(m * tau / config.scale), num(a.real()),
            num(a.imag()), num(std::abs(a)), low ? "1" : "0"});
  }
  out.write("series.tsv", st.str());

  Table ft(config, "energy spectrum", {"E", "amplitude"});
  ft.comment("window " + sp::to_string(protocol.window) + "; bin width " + num(spec.bin_width()));
  for (std::size_t i = 0; i < spec.energies.size(); ++i) {
    ft.row({num(spec.energies[i]), num(spec.amplitude[i])});
  }
  out.write("spectrum.tsv", ft.str());

  Table pt(config, "peak fits", {"center", "sigma", "height", "fit_error", "band", "distance"});
  std::ostringstream eigs;
  for (std::size_t j = 0; j < eig.size(); ++j) eigs << (j ? " " : "") << num(eig[j]);
  pt.comment("exact eigenvalues " + eigs.str() + "; band 0 = unmatched");
  for (const auto& pk : peaks) {
    const double gate = std::max(0.5 * spec.bin_width(), std::sqrt(2.0 * std::log(2.0)) * pk.sigma);
    pt.row(peak_cells({pk, sp::match_peaks_to_bands({pk}, eig, gate).front()}));
  }
  out.write("peaks.tsv", pt.str());

  if (protocol.emulated) {
    Table lt(config, "readout curves", {"m", "theta", "pl"});
    lt.comment("PL per shot after the readback rotation");
    for (std::size_t m = 0; m < pl.size(); ++m) {
      for (std::size_t k = 0; k < pl[m].size(); ++k) {
        lt.row({std::to_string(m), num(protocol.emulation.theta_grid[k]), num(pl[m][k])});
      }
    }
    out.write("pl.tsv", lt.str());
  }
  out.summary("peaks", std::to_string(peaks.size()));
  out.summary("mode", mode);
  return out.finish();
}

RunResult run(const RunConfig& config) {
  switch (config.experiment) {
    case Experiment::Dispersion: return run_dispersion(config);
    case Experiment::Bloch: return run_bloch(config);
    case Experiment::NuSweep: return run_nu_sweep(config);
    case Experiment::Spectrum:
    case Experiment::Emulate: return run_spectrum(config);
  }
  throw ConfigError("unknown experiment");
}

}  // namespace nvtopo::experiments
