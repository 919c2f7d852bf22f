#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <set>
#include <sstream>

#include "nvtopo/errors.hpp"
#include "nvtopo/experiments.hpp"
#include "nvtopo/random.hpp"

namespace nvtopo::experiments {

using nlohmann::json;

namespace {

class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("", "expected an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void get(const char* key, double& out) {
    if (const json* v = child(key)) {
      if (!v->is_number()) fail(key, "expected a number");
      out = v->get<double>();
      if (!std::isfinite(out)) fail(key, "must be finite");
    }
  }

  void get(const char* key, int& out) {
    if (const json* v = child(key)) {
      if (!v->is_number_integer()) fail(key, "expected an integer");
      out = v->get<int>();
    }
  }

  void get(const char* key, long long& out) {
    if (const json* v = child(key)) {
      if (!v->is_number_integer()) fail(key, "expected an integer");
      out = v->get<long long>();
    }
  }

  void get(const char* key, std::uint64_t& out) {
    if (const json* v = child(key)) {
      if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0)) {
        fail(key, "expected a non-negative integer");
      }
      out = v->get<std::uint64_t>();
    }
  }

  void get(const char* key, unsigned& out) {
    std::uint64_t tmp = out;
    get(key, tmp);
    out = static_cast<unsigned>(tmp);
  }

  void get(const char* key, bool& out) {
    if (const json* v = child(key)) {
      if (!v->is_boolean()) fail(key, "expected true or false");
      out = v->get<bool>();
    }
  }

  void get(const char* key, std::string& out) {
    if (const json* v = child(key)) {
      if (!v->is_string()) fail(key, "expected a string");
      out = v->get<std::string>();
    }
  }

  std::string field(const char* key) const {
    return path_.empty() ? std::string(key) : path_ + "." + key;
  }

  [[noreturn]] void fail(const char* key, const std::string& what) const {
    const std::string where = *key ? field(key) : (path_.empty() ? "<root>" : path_);
    throw ConfigError(where + ": " + what);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(field(it.key().c_str()) + ": unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_config(const json& root, RunConfig& c) {
  ObjectReader r(root, "");
  std::string name = to_string(c.experiment);
  r.get("experiment", name);
  try {
    c.experiment = experiment_from_string(name);
  } catch (const Error& e) {
    r.fail("experiment", e.what());
  }

  if (const json* v = r.child("params")) {
    ObjectReader o(*v, "params");
    o.get("mu", c.params.mu);
    o.get("delta", c.params.delta);
    o.get("bx", c.params.bx);
    o.finish();
  }
  r.get("p", c.p);
  if (const json* v = r.child("p_grid")) {
    ObjectReader o(*v, "p_grid");
    o.get("max", c.p_max);
    o.get("points", c.p_points);
    o.finish();
  }
  if (const json* v = r.child("mu_sweep")) {
    ObjectReader o(*v, "mu_sweep");
    o.get("start", c.mu_sweep.start);
    o.get("stop", c.mu_sweep.stop);
    o.get("step", c.mu_sweep.step);
    o.finish();
  }
  if (const json* v = r.child("bloch")) {
    ObjectReader o(*v, "bloch");
    o.get("p_max", c.bloch_p_max);
    o.get("points", c.bloch_points);
    o.finish();
  }
  if (const json* v = r.child("protocol")) {
    ObjectReader o(*v, "protocol");
    std::string mode = spectroscopy::to_string(c.mode);
    o.get("mode", mode);
    if (mode == "ideal") {
      c.mode = spectroscopy::SeriesMode::Ideal;
    } else if (mode == "emulated") {
      c.mode = spectroscopy::SeriesMode::Emulated;
    } else {
      o.fail("mode", "expected \"ideal\" or \"emulated\"");
    }
    o.get("m_max", c.m_max);
    if (const json* t = o.child("tau")) {
      if (t->is_string() && t->get<std::string>() == "auto") {
        c.tau = 0.0;
      } else if (t->is_number()) {
        c.tau = t->get<double>();
        if (!(c.tau > 0.0)) o.fail("tau", "must be positive or \"auto\"");
      } else {
        o.fail("tau", "expected a number or \"auto\"");
      }
    }
    std::string window = spectroscopy::to_string(c.window);
    o.get("window", window);
    try {
      c.window = spectroscopy::window_from_string(window);
    } catch (const Error& e) {
      o.fail("window", e.what());
    }
    o.get("zero_pad", c.zero_pad);
    o.get("theta_points", c.theta_points);
    o.get("probe", c.probe);
    o.get("reverse_mw", c.reverse_mw);
    o.finish();
  }
  if (const json* v = r.child("noise")) {
    ObjectReader o(*v, "noise");
    o.get("enabled", c.noise);
    o.get("t2star", c.t2star);
    o.get("n_realizations", c.n_realizations);
    o.get("crosstalk", c.crosstalk);
    o.get("dt_max", c.dt_max);
    o.get("crosstalk_cutoff", c.crosstalk_cutoff);
    o.finish();
  }
  if (const json* v = r.child("readout")) {
    ObjectReader o(*v, "readout");
    if (const json* pl = o.child("pl")) {
      ObjectReader q(*pl, "readout.pl");
      for (int label = 4; label <= 8; ++label) {
        const std::string key = std::to_string(label);
        q.get(key.c_str(), c.readout.pl[static_cast<std::size_t>(label - 4)]);
      }
      q.finish();
    }
    o.get("shots", c.readout.shots);
    o.get("shot_noise", c.readout.shot_noise);
    o.finish();
  }
  r.get("scale", c.scale);
  r.get("seed", c.seed);
  r.get("workers", c.workers);
  r.get("out", c.out);
  r.finish();
}

json to_json(const RunConfig& c) {
  json j;
  j["experiment"] = to_string(c.experiment);
  j["params"] = {{"mu", c.params.mu}, {"delta", c.params.delta}, {"bx", c.params.bx}};
  j["p"] = c.p;
  j["p_grid"] = {{"max", c.p_max}, {"points", c.p_points}};
  j["mu_sweep"] = {{"start", c.mu_sweep.start}, {"stop", c.mu_sweep.stop}, {"step", c.mu_sweep.step}};
  j["bloch"] = {{"p_max", c.bloch_p_max}, {"points", c.bloch_points}};
  json tau = c.tau > 0.0 ? json(c.tau) : json("auto");
  j["protocol"] = {{"mode", spectroscopy::to_string(c.mode)},
                   {"m_max", c.m_max},
                   {"tau", tau},
                   {"window", spectroscopy::to_string(c.window)},
                   {"zero_pad", c.zero_pad},
                   {"theta_points", c.theta_points},
                   {"probe", c.probe},
                   {"reverse_mw", c.reverse_mw}};
  j["noise"] = {{"enabled", c.noise},
                {"t2star", c.t2star},
                {"n_realizations", c.n_realizations},
                {"crosstalk", c.crosstalk},
                {"dt_max", c.dt_max},
                {"crosstalk_cutoff", c.crosstalk_cutoff}};
  json pl;
  for (int label = 4; label <= 8; ++label) {
    pl[std::to_string(label)] = c.readout.pl[static_cast<std::size_t>(label - 4)];
  }
  j["readout"] = {{"pl", pl}, {"shots", c.readout.shots}, {"shot_noise", c.readout.shot_noise}};
  j["scale"] = c.scale;
  j["seed"] = c.seed;
  return j;
}

int line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

}  // namespace

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::Dispersion: return "dispersion";
    case Experiment::Bloch: return "bloch";
    case Experiment::Spectrum: return "spectrum";
    case Experiment::NuSweep: return "nu-sweep";
    case Experiment::Emulate: return "emulate";
  }
  return "?";
}

Experiment experiment_from_string(const std::string& name) {
  if (name == "dispersion") return Experiment::Dispersion;
  if (name == "bloch") return Experiment::Bloch;
  if (name == "spectrum") return Experiment::Spectrum;
  if (name == "nu-sweep") return Experiment::NuSweep;
  if (name == "emulate") return Experiment::Emulate;
  throw ConfigError("unknown experiment '" + name +
                    "' (expected dispersion, bloch, spectrum, nu-sweep or emulate)");
}

void RunConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& what) {
    throw ConfigError(field + ": " + what);
  };
  try {
    params.validate();
  } catch (const InvalidInput& e) {
    fail("params", e.what());
  }
  if (!std::isfinite(p)) fail("p", "must be finite");
  if (!(p_max >= 0.0)) fail("p_grid.max", "must be >= 0");
  if (p_points < 2) fail("p_grid.points", "must be >= 2");
  if (!(mu_sweep.step > 0.0)) fail("mu_sweep.step", "must be positive");
  if (mu_sweep.stop < mu_sweep.start) fail("mu_sweep", "empty sweep range (stop < start)");
  if (mu_sweep.stop >= 0.0) fail("mu_sweep.stop", "chemical potential must stay negative");
  if (!(bloch_p_max > 0.0)) fail("bloch.p_max", "must be positive");
  if (bloch_points < 2) fail("bloch.points", "must be >= 2");
  if (m_max < 8) fail("protocol.m_max", "must be >= 8");
  if (tau < 0.0) fail("protocol.tau", "must be positive or \"auto\"");
  if (zero_pad < 1) fail("protocol.zero_pad", "must be >= 1");
  if (theta_points < 4) fail("protocol.theta_points", "must be >= 4");
  if (probe != 4 && probe != 5 && probe != 7 && probe != 8) {
    fail("protocol.probe", "must be 4, 5, 7 or 8");
  }
  if (mode == spectroscopy::SeriesMode::Emulated && probe != 4 && probe != 5) {
    fail("protocol.probe", "emulated mode supports probes 4 and 5 only");
  }
  if (!(t2star > 0.0)) fail("noise.t2star", "must be positive");
  if (n_realizations < 1) fail("noise.n_realizations", "must be >= 1");
  if (!(dt_max > 0.0)) fail("noise.dt_max", "must be positive");
  if (!(crosstalk_cutoff > 0.0)) fail("noise.crosstalk_cutoff", "must be positive");
  try {
    readout.validate();
  } catch (const InvalidInput& e) {
    fail("readout", e.what());
  }
  if (!(scale > 0.0)) fail("scale", "must be positive");
}

RunConfig parse_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    std::ostringstream msg;
    msg << "line " << line_of_offset(text, e.byte) << ": " << e.what();
    throw ConfigError(msg.str());
  }
  if (root.is_object() && root.contains("config") && root.contains("outputs")) {
    root = root["config"];
  }
  RunConfig config;
  read_config(root, config);
  config.validate();
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string config_json(const RunConfig& config) { return to_json(config).dump(2); }

std::string config_hash(const RunConfig& config) { return sha256_hex(to_json(config).dump()); }

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return hex.str();
}

std::vector<double> sweep_values(const SweepRange& range) {
  if (!(range.step > 0.0) || range.stop < range.start) {
    throw ConfigError("mu_sweep: empty sweep range");
  }
  const auto n = static_cast<int>(std::floor((range.stop - range.start) / range.step + 1e-9)) + 1;
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(range.start + i * range.step);
  return out;
}

std::uint64_t point_seed(std::uint64_t master, std::uint64_t index, std::uint64_t stream) {
  auto rng = substream(master, index * 4 + stream);
  return rng();
}

}  // namespace nvtopo::experiments
