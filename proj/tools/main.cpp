#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "nvtopo/errors.hpp"
#include "nvtopo/experiments.hpp"

namespace ex = nvtopo::experiments;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitConvergence = 3;
constexpr int kExitFit = 4;

struct Flags {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::optional<std::string> noise;
  std::optional<std::string> crosstalk;
  std::optional<long long> shots;
  bool ideal = false;
};

bool on_off(const std::string& v) { return v == "on"; }

ex::RunConfig resolve(const std::string& command, const Flags& f) {
  ex::RunConfig config = f.config.empty() ? ex::RunConfig{} : ex::load_config(f.config);
  config.experiment = ex::experiment_from_string(command);
  if (f.out) config.out = *f.out;
  if (f.seed) config.seed = *f.seed;
  if (f.workers) config.workers = *f.workers;
  if (f.noise) config.noise = on_off(*f.noise);
  if (f.crosstalk) config.crosstalk = on_off(*f.crosstalk);
  if (f.shots) {
    config.readout.shots = *f.shots;
    config.readout.shot_noise = true;
  }
  // Noise, crosstalk and shot noise only exist in the emulated tier.
  const bool imperfect = (f.noise && on_off(*f.noise)) || (f.crosstalk && on_off(*f.crosstalk)) || f.shots;
  if (imperfect) config.mode = nvtopo::spectroscopy::SeriesMode::Emulated;
  if (f.ideal) {
    config.mode = nvtopo::spectroscopy::SeriesMode::Ideal;
    config.noise = false;
    config.crosstalk = false;
  }
  config.validate();
  return config;
}

void print_result(const ex::RunResult& r) {
  std::cout << "wrote " << r.out_dir.string() << "/manifest.json\n";
  for (const auto& f : r.files) std::cout << "  " << f.name << "  " << f.sha256 << "\n";
  for (const auto& [k, v] : r.summary) std::cout << k << ": " << v << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum-wire topology on an emulated NV-center simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", NVTOPO_VERSION_STRING);

  Flags flags;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"dispersion", "band structure and spectroscopy peaks over a momentum grid"},
      {"bloch", "Bloch-sphere trajectory of the particle-hole pseudospin"},
      {"spectrum", "time series, spectrum and peak fits at one (params, p) point"},
      {"nu-sweep", "averaged-sign topological number across a chemical-potential sweep"},
      {"emulate", "spectrum run through the emulated NV experiment and PL readout"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", flags.config, "JSON run configuration or manifest")->check(CLI::ExistingFile);
    sub->add_option("--out", flags.out, "output directory");
    sub->add_option("--seed", flags.seed, "master seed");
    sub->add_option("--workers", flags.workers, "worker threads (0: all cores)");
    sub->add_option("--noise", flags.noise, "quasi-static dephasing")->check(CLI::IsMember({"on", "off"}));
    sub->add_option("--crosstalk", flags.crosstalk, "nine-level drive crosstalk")
        ->check(CLI::IsMember({"on", "off"}));
    sub->add_option("--shots", flags.shots, "readout shots per phase (enables shot noise)")
        ->check(CLI::PositiveNumber);
    sub->add_flag("--ideal", flags.ideal, "ideal tier: no noise, no crosstalk, exact series");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const ex::RunConfig config = resolve(command, flags);
    print_result(ex::run(config));
    return 0;
  } catch (const nvtopo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const nvtopo::InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const nvtopo::CriticalPointError& e) {
    std::cerr << "critical point: " << e.what() << "\n";
    return kExitConfig;
  } catch (const nvtopo::ConvergenceError& e) {
    std::cerr << "convergence error: " << e.what() << "\n";
    return kExitConvergence;
  } catch (const nvtopo::FitError& e) {
    std::cerr << "fit failure: " << e.what() << "\n";
    return kExitFit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
