// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "nvtopo/dynamics.hpp"
#include "nvtopo/errors.hpp"
#include "nvtopo/experiments.hpp"
#include "nvtopo/nv_model.hpp"
#include "nvtopo/qw_model.hpp"
#include "nvtopo/spectroscopy.hpp"
#include "test_oracles.hpp"

namespace la = nvtopo::linalg;
namespace qw = nvtopo::qw;
namespace nv = nvtopo::nv;
namespace dyn = nvtopo::dynamics;
namespace sp = nvtopo::spectroscopy;
namespace ex = nvtopo::experiments;
namespace ot = nvtopo::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_s;  // 0: no runtime bound
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

const std::vector<double> kPaperMus{-1.6, -1.44, -1.29, -1.14, -0.98};

Outcome phase_boundary() {
  ex::RunConfig c;
  c.experiment = ex::Experiment::NuSweep;
  c.params = {-1.6, 0.165, 1.3};
  c.mu_sweep = {-1.6, -0.98, 0.02};
  c.mode = sp::SeriesMode::Ideal;
  c.noise = false;
  c.out = (std::filesystem::temp_directory_path() / "nvtopo_acceptance_c1").string();
  const auto r = ex::run(c);
  const std::string s = r.summary.at("sign_changes");
  if (s.empty() || s.find(',') != std::string::npos) return {false, "sign changes: '" + s + "'"};
  const double mu = std::stod(s);
  return {std::abs(mu + 1.2894) <= 0.01, "sign change at mu = " + fmt("%.5f", mu) + " (target -1.2894 +- 0.01)"};
}

Outcome invariant_values() {
  const int expect[4] = {1, 1, -1, -1};
  const qw::QwParams pts[4] = {ot::kPaperSc1, ot::kPaperSc2, ot::kPaperTp1, ot::kPaperTp2};
  std::ostringstream d;
  bool ok = true;
  for (int i = 0; i < 4; ++i) {
    const int nu = qw::topological_number(pts[i]);
    ok &= nu == expect[i];
    d << "nu(" << pts[i].mu << ")=" << nu << " ";
  }
  std::mt19937_64 rng(2001);
  int mismatches = 0;
  for (int k = 0; k < 1000; ++k) {
    const auto q = ot::random_params(rng);
    const double pf0 = -q.bx * q.bx + q.mu * q.mu + q.delta * q.delta;
    if (qw::topological_number(q) != (pf0 > 0 ? 1 : -1)) ++mismatches;
  }
  ok &= mismatches == 0;
  d << "; " << mismatches << "/1000 sign mismatches";
  return {ok, d.str()};
}

Outcome pfaffian_anchors() {
  std::mt19937_64 rng(3001);
  double worst0 = 0.0, worst_inf = 0.0;
  const double p_inf = qw::kDefaultPInf;
  for (int k = 0; k < 100; ++k) {
    const auto q = ot::random_params(rng);
    const double pf0 = qw::hamiltonian_pfaffian(qw::build_hqw(q, 0.0));
    worst0 = std::max(worst0, std::abs(pf0 - (-q.bx * q.bx + q.mu * q.mu + q.delta * q.delta)));
    const double pfi = qw::hamiltonian_pfaffian(qw::build_hqw(q, p_inf));
    worst_inf = std::max(worst_inf, std::abs(pfi / std::pow(p_inf, 4) - 1.0));
  }
  const bool a = worst0 <= 1e-9;
  const bool b = worst_inf <= 1e-4;
  return {a && b, "max|Pf(0) - closed form| = " + fmt("%.2e", worst0) + (a ? " ok" : " FAIL") +
                      "; max|Pf(50)/50^4 - 1| = " + fmt("%.2e", worst_inf) + (b ? " ok" : " FAIL") +
                      " (Pf(p) = (p^2-mu)^2+Delta^2-B_x^2 deviates by ~2|mu|/p^2)"};
}

Outcome mapping() {
  std::mt19937_64 rng(4001);
  std::uniform_real_distribution<double> pd(-3.0, 3.0), sd(0.01, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const auto q = ot::random_params(rng);
    const double p = pd(rng);
    const double s = k % 2 == 0 ? nv::kDefaultScale : sd(rng);
    const auto lhs = nv::hadamard_conjugate(nv::build_hrot(nv::qw_to_nv(q, p, s, 0.1)));
    worst = std::max(worst, (lhs - s * qw::build_hqw(q, p)).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-12, "max entry error " + fmt("%.2e", worst) + " over 1000 draws"};
}

Outcome spectroscopy_fidelity() {
  const auto grid = qw::momentum_grid(2.0, 21);
  double worst_pos = 0.0, worst_height = 0.0;
  int peaks_total = 0, heights_checked = 0, failed = 0;
  for (double mu : kPaperMus) {
    const qw::QwParams q{mu, 0.165, 1.3};
    for (double p : grid) {
      const auto eig = la::hermitian_eigen(qw::build_hqw(q, p));
      const double tau = sp::default_tau(q, p);
      const auto series = sp::sample_series_ideal(q, p, {5, false}, sp::kDefaultMMax, tau);

      auto rect = sp::spectrum(series, sp::Window::Rect, sp::kDefaultZeroPad);
      const auto peaks = sp::detect_peaks(rect);
      failed += rect.failed_fits;
      for (const auto& pk : peaks) {
        const double d = (eig.eigenvalues.array() - pk.center).abs().minCoeff() / rect.bin_width();
        worst_pos = std::max(worst_pos, d);
        ++peaks_total;
      }

      const Eigen::VectorXd w =
          (eig.eigenvectors.adjoint() * nv::qw_state_of_level(5)).cwiseAbs2();
      auto hann = sp::spectrum(series, sp::Window::Hann, sp::kDefaultZeroPad);
      const double bin = hann.bin_width();
      for (int i : sp::find_peak_indices(hann)) {
        const double e = hann.energies[static_cast<std::size_t>(i)];
        Eigen::Index j = 0;
        (eig.eigenvalues.array() - e).abs().minCoeff(&j);
        double sep = 1e300;
        for (Eigen::Index k = 0; k < 4; ++k) {
          if (k != j) sep = std::min(sep, std::abs(eig.eigenvalues[k] - eig.eigenvalues[j]));
        }
        if (sep < 3.0 * bin) continue;
        worst_height = std::max(worst_height, std::abs(hann.amplitude[static_cast<std::size_t>(i)] - w[j]) / w[j]);
        ++heights_checked;
      }
    }
  }
  const bool ok = worst_pos <= 0.5 && worst_height <= 0.05 && failed == 0 && heights_checked > 0;
  return {ok, std::to_string(peaks_total) + " peaks, worst distance " + fmt("%.3f", worst_pos) +
                  " bin, " + std::to_string(failed) + " failed fits; " + std::to_string(heights_checked) +
                  " heights, worst relative error " + fmt("%.4f", worst_height)};
}

int doublet_peaks(double t2star) {
  const qw::QwParams q = ot::kPaperTp1;
  sp::EmulationOptions opt;
  opt.noise = {dyn::sigma_b_from_t2star(t2star), 10000, 6001, false};
  opt.readout.shot_noise = false;
  opt.seed = 6002;
  const int m_max = 256;
  const double tau = sp::default_tau(q, 0.0);
  std::vector<sp::EnergySpectrum> parts;
  for (const sp::Probe probe : {sp::Probe{5, false}, sp::Probe{4, true}}) {
    const auto em = sp::sample_series_emulated(q, 0.0, probe, m_max, tau, opt);
    parts.push_back(sp::spectrum(em.series, sp::Window::Rect, sp::kDefaultZeroPad));
  }
  auto combined = sp::combine_spectra(parts);
  int n = 0;
  for (const auto& pk : sp::detect_peaks(combined)) {
    if (std::abs(pk.center) <= 0.6) ++n;
  }
  return n;
}

Outcome gap_smearing() {
  const int merged = doublet_peaks(dyn::kDefaultT2Star);
  const int resolved = doublet_peaks(10.0 * dyn::kDefaultT2Star);
  return {merged == 1 && resolved == 2, "peaks in |E| <= 0.6: T2* = 3 us -> " + std::to_string(merged) +
                                            ", T2* = 30 us -> " + std::to_string(resolved) +
                                            " (splitting " +
                                            fmt("%.4f", 2.0 * std::abs(1.3 - qw::critical_zeeman(ot::kPaperTp1))) + ")"};
}

Outcome readout_round_trip() {
  std::mt19937_64 rng(7001);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  dyn::ReadoutModel readout;
  readout.shot_noise = false;
  const auto th = sp::uniform_theta_grid(8);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const int label = k % 2 == 0 ? 5 : 4;
    const la::Complex a = std::polar(std::sqrt(u(rng)), la::kTwoPi * u(rng));
    la::StateVector psi = la::StateVector::Zero(9);
    psi[nv::level_index(6)] = 1.0 / std::sqrt(2.0);
    psi[nv::level_index(label)] = a / std::sqrt(2.0);
    psi[nv::level_index(8)] = std::sqrt(0.5 * (1.0 - std::norm(a)));
    const auto curve = sp::pl_curve(la::density(psi), label, readout, th, 0);
    const auto back = sp::reconstruct_coherence(sp::fit_cosine(th, curve), sp::effective_probe_pl(label, readout),
                                                readout.pl_of_level(6));
    worst = std::max(worst, std::abs(back - a));
  }
  return {worst <= 1e-9, "max |a_rec - a| = " + fmt("%.2e", worst) + " over 100 draws"};
}

Outcome erf_oracle() {
  std::mt19937_64 rng(8001);
  std::uniform_real_distribution<double> ed(-2.0, 2.0), sd(0.01, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const double e = ed(rng), s = sd(rng);
    worst = std::max(worst, std::abs(sp::sign_average(e, s) - ot::sign_average_quadrature(e, s)));
  }
  return {worst <= 1e-12, "max deviation from Gauss-Kronrod quadrature " + fmt("%.2e", worst)};
}

Outcome bloch_geometry() {
  const auto grid = qw::momentum_grid(20.0, 2001);
  std::ostringstream d;
  bool ok = true;
  for (const auto& q : {ot::kPaperSc1, ot::kPaperSc2, ot::kPaperTp1, ot::kPaperTp2}) {
    const auto shape = qw::classify_trajectory(qw::bloch_trajectory(q, grid));
    const auto want = q.mu < -1.3 ? qw::TrajectoryShape::Closed : qw::TrajectoryShape::OpenPoleToPole;
    ok &= shape == want;
    d << q.mu << ": " << qw::to_string(shape) << "; ";
  }
  return {ok, d.str()};
}

Outcome noise_law() {
  nv::NvDriveConfig c;
  c.delta_mw = 0.4;
  la::StateVector psi0 = la::StateVector::Zero(4);
  psi0[0] = psi0[2] = 1.0 / std::sqrt(2.0);
  const dyn::NoiseModel noise{dyn::sigma_b_from_t2star(dyn::kDefaultT2Star), 10000, 10001, false};
  double worst = 0.0;
  for (double t = 0.25; t <= 6.0; t += 0.25) {
    const auto rho = dyn::evolve_rot_nv(c, psi0, t, noise);
    const double law = std::exp(-2.0 * M_PI * M_PI * noise.sigma_b * noise.sigma_b * t * t);
    worst = std::max(worst, std::abs(2.0 * std::abs(rho(0, 2)) - law));
  }
  return {worst <= 0.02, "max |coherence - exp(-2 pi^2 sigma_b^2 t^2)| = " + fmt("%.4f", worst) +
                             " over t in [0.25, 6] us, n = 10^4"};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "phase boundary", 10.0, phase_boundary},
      {2, "invariant values", 5.0, invariant_values},
      {3, "Pfaffian anchors", 0.0, pfaffian_anchors},
      {4, "mapping theorem", 0.0, mapping},
      {5, "spectroscopy fidelity", 60.0, spectroscopy_fidelity},
      {6, "gap smearing", 300.0, gap_smearing},
      {7, "readout round-trip", 0.0, readout_round_trip},
      {8, "sign average oracle", 0.0, erf_oracle},
      {9, "Bloch geometry", 0.0, bloch_geometry},
      {10, "noise law", 0.0, noise_law},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0.0 && dt > c.budget_s) {
      o.pass = false;
      o.detail += "; runtime over budget " + fmt("%.0f s", c.budget_s);
    }
    if (!o.pass) ++failures;
    std::printf("[%s] %2d %-22s %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name.c_str(), o.detail.c_str(), dt);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
