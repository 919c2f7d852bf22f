#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "nvtopo/errors.hpp"
#include "nvtopo/experiments.hpp"

namespace fs = std::filesystem;
namespace ex = nvtopo::experiments;

namespace {

const fs::path kData = NVTOPO_TEST_DATA;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("nvtopo_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string config_error(const std::string& text) {
  try {
    ex::parse_config(text);
  } catch (const nvtopo::ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, Defaults) {
  const auto c = ex::parse_config("{}");
  EXPECT_EQ(c.experiment, ex::Experiment::Spectrum);
  EXPECT_EQ(c.m_max, 64);
  EXPECT_EQ(c.zero_pad, 8);
  EXPECT_EQ(c.window, nvtopo::spectroscopy::Window::Rect);
  EXPECT_DOUBLE_EQ(c.t2star, 3.0);
  EXPECT_DOUBLE_EQ(c.scale, 1.0 / 11.0);
}

TEST(Config, StrictKeysAndTypes) {
  EXPECT_NE(config_error(slurp(kData / "bad_unknown_key.json")).find("params.gamma"), std::string::npos);
  EXPECT_NE(config_error(R"({"protocol": {"m_max": "many"}})").find("protocol.m_max"), std::string::npos);
  EXPECT_NE(config_error(R"({"noise": {"t2star": -1}})").find("noise.t2star"), std::string::npos);
  EXPECT_NE(config_error(R"({"experiment": "fourier"})").find("experiment"), std::string::npos);
  EXPECT_NE(config_error("{\n  \"p\": 0.1,\n  \"seed\": \n}").find("line 4"), std::string::npos);
  EXPECT_NE(config_error(R"({"protocol": {"mode": "emulated", "probe": 7}})").find("protocol.probe"),
            std::string::npos);
}

TEST(Config, EmptySweepRejected) {
  EXPECT_NE(config_error(R"({"mu_sweep": {"start": -1.0, "stop": -1.5, "step": 0.02}})").find("mu_sweep"),
            std::string::npos);
  EXPECT_FALSE(config_error(R"({"mu_sweep": {"step": 0}})").empty());
}

TEST(Config, CanonicalRoundTrip) {
  for (const char* name : {"spectrum_ideal.json", "emulate_noisy.json", "nu_sweep_ideal.json",
                           "dispersion_sc.json", "bloch_tp.json"}) {
    const auto c = ex::load_config(kData / name);
    const auto again = ex::parse_config(ex::config_json(c));
    EXPECT_EQ(ex::config_json(c), ex::config_json(again)) << name;
    EXPECT_EQ(ex::config_hash(c), ex::config_hash(again));
  }
  auto c = ex::load_config(kData / "spectrum_ideal.json");
  const auto h = ex::config_hash(c);
  c.workers = 3;
  c.out = "elsewhere";
  EXPECT_EQ(ex::config_hash(c), h);
  c.seed = 2;
  EXPECT_NE(ex::config_hash(c), h);
}

TEST(Config, Sha256KnownVector) {
  EXPECT_EQ(ex::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Config, SweepValuesAndSeeds) {
  const auto v = ex::sweep_values({-1.6, -0.98, 0.02});
  ASSERT_EQ(v.size(), 32u);
  EXPECT_DOUBLE_EQ(v.front(), -1.6);
  EXPECT_NEAR(v.back(), -0.98, 1e-12);
  EXPECT_EQ(ex::point_seed(1, 3, 0), ex::point_seed(1, 3, 0));
  EXPECT_NE(ex::point_seed(1, 3, 0), ex::point_seed(1, 4, 0));
  EXPECT_NE(ex::point_seed(1, 3, 0), ex::point_seed(1, 3, 1));
}

TEST(Runs, ReproducibleAcrossWorkersAndFromManifest) {
  auto c = ex::load_config(kData / "emulate_noisy.json");
  c.out = scratch("repro_a").string();
  c.workers = 1;
  const auto a = ex::run(c);
  c.out = scratch("repro_b").string();
  c.workers = 4;
  const auto b = ex::run(c);
  ASSERT_EQ(a.files.size(), b.files.size());
  for (std::size_t i = 0; i < a.files.size(); ++i) {
    EXPECT_EQ(a.files[i].name, b.files[i].name);
    EXPECT_EQ(a.files[i].sha256, b.files[i].sha256);
    EXPECT_EQ(slurp(a.out_dir / a.files[i].name), slurp(b.out_dir / b.files[i].name));
  }

  auto again = ex::load_config(a.out_dir / "manifest.json");
  again.out = scratch("repro_c").string();
  const auto r = ex::run(again);
  for (std::size_t i = 0; i < a.files.size(); ++i) EXPECT_EQ(a.files[i].sha256, r.files[i].sha256);
}

TEST(Runs, ManifestChecksumsAndHeaders) {
  auto c = ex::load_config(kData / "spectrum_ideal.json");
  c.out = scratch("manifest").string();
  const auto r = ex::run(c);
  const auto manifest = nlohmann::json::parse(slurp(r.out_dir / "manifest.json"));
  const std::string hash = manifest.at("config_sha256");
  EXPECT_EQ(hash, ex::config_hash(c));
  ASSERT_EQ(manifest.at("outputs").size(), r.files.size());
  for (const auto& f : r.files) {
    const std::string body = slurp(r.out_dir / f.name);
    EXPECT_EQ(ex::sha256_hex(body), f.sha256);
    EXPECT_EQ(body.rfind("#", 0), 0u);
    EXPECT_NE(body.substr(0, body.find("\n# col")).find(hash), std::string::npos) << f.name;
  }
}

TEST(Runs, NuSweepIdealBoundary) {
  auto c = ex::load_config(kData / "nu_sweep_ideal.json");
  c.out = scratch("nu").string();
  const auto r = ex::run(c);
  const std::string changes = r.summary.at("sign_changes");
  ASSERT_EQ(changes.find(','), std::string::npos) << changes;
  EXPECT_NEAR(std::stod(changes), -1.2894, 0.02);
}

TEST(Runs, BlochAndDispersion) {
  auto c = ex::load_config(kData / "bloch_tp.json");
  c.out = scratch("bloch").string();
  EXPECT_EQ(ex::run(c).summary.at("trajectory"), "open, pole-to-pole");
  c.params = {-1.2, 0.165, std::hypot(1.2, 0.165)};
  EXPECT_THROW(ex::run(c), nvtopo::CriticalPointError);

  auto d = ex::load_config(kData / "dispersion_sc.json");
  d.out = scratch("disp").string();
  d.n_realizations = 20;
  const auto r = ex::run(d);
  const std::string bands = slurp(r.out_dir / "bands.tsv");
  EXPECT_NE(bands.find("mirrored"), std::string::npos);
  std::istringstream lines(bands);
  std::string line;
  while (std::getline(lines, line) && line[0] == '#') {
  }
  EXPECT_EQ(line.rfind("-2", 0), 0u) << line;
}

#ifdef NVTOPO_CLI
namespace {

int cli(const std::string& args) {
  const std::string cmd = std::string(NVTOPO_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Cli, ExitCodes) {
  const std::string out = scratch("cli").string();
  EXPECT_EQ(cli("bloch --config " + (kData / "bloch_tp.json").string() + " --out " + out), 0);
  EXPECT_TRUE(fs::exists(fs::path(out) / "bloch.tsv"));
  EXPECT_EQ(cli("spectrum --config " + (kData / "bad_unknown_key.json").string() + " --out " + out), 2);
  EXPECT_EQ(cli("spectrum --config /nonexistent.json"), 2);
  EXPECT_EQ(cli("spectrum --noise maybe"), 2);
  EXPECT_EQ(cli("frobnicate"), 2);
}

TEST(Cli, FlagsOverrideConfig) {
  const std::string out = scratch("cli_flags").string();
  ASSERT_EQ(cli("emulate --config " + (kData / "emulate_noisy.json").string() +
                " --noise off --shots 1000 --seed 9 --out " + out),
            0);
  const auto manifest = nlohmann::json::parse(slurp(fs::path(out) / "manifest.json"));
  EXPECT_EQ(manifest.at("config").at("noise").at("enabled"), false);
  EXPECT_EQ(manifest.at("config").at("readout").at("shots"), 1000);
  EXPECT_EQ(manifest.at("config").at("seed"), 9);
  EXPECT_EQ(manifest.at("experiment"), "emulate");
}
#endif
