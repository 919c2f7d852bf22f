#include <unsupported/Eigen/LevenbergMarquardt>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nvtopo/errors.hpp"
#include "nvtopo/spectroscopy.hpp"

namespace nvtopo::spectroscopy {

namespace {

// amplitude * exp(-(E - center)^2 / (2 sigma^2)) + baseline,
// x = (amplitude, center, sigma, baseline).
struct GaussianResidual : Eigen::DenseFunctor<double> {
  GaussianResidual(Eigen::VectorXd e, Eigen::VectorXd y)
      : Eigen::DenseFunctor<double>(4, static_cast<int>(e.size())), e_(std::move(e)), y_(std::move(y)) {}

  int operator()(const InputType& x, ValueType& f) const {
    for (Eigen::Index i = 0; i < e_.size(); ++i) {
      const double u = (e_[i] - x[1]) / x[2];
      f[i] = x[0] * std::exp(-0.5 * u * u) + x[3] - y_[i];
    }
    return 0;
  }

  int df(const InputType& x, JacobianType& j) const {
    for (Eigen::Index i = 0; i < e_.size(); ++i) {
      const double u = (e_[i] - x[1]) / x[2];
      const double g = std::exp(-0.5 * u * u);
      j(i, 0) = g;
      j(i, 1) = x[0] * g * u / x[2];
      j(i, 2) = x[0] * g * u * u / x[2];
      j(i, 3) = 1.0;
    }
    return 0;
  }

  Eigen::VectorXd e_;
  Eigen::VectorXd y_;
};

double median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  return m;
}

}  // namespace

Peak fit_peak(const EnergySpectrum& spec, double e_lo, double e_hi) {
  const auto& e = spec.energies;
  const auto& a = spec.amplitude;
  const int n = static_cast<int>(e.size());
  int first = static_cast<int>(std::lower_bound(e.begin(), e.end(), e_lo) - e.begin());
  int last = static_cast<int>(std::upper_bound(e.begin(), e.end(), e_hi) - e.begin()) - 1;
  if (first > last) throw FitError("no peak found: search window is empty");

  // Highest local maximum inside the window.
  int imax = -1;
  for (int i = std::max(first, 1); i <= std::min(last, n - 2); ++i) {
    const double v = a[static_cast<std::size_t>(i)];
    if (v > a[static_cast<std::size_t>(i - 1)] && v >= a[static_cast<std::size_t>(i + 1)] &&
        (imax < 0 || v > a[static_cast<std::size_t>(imax)])) {
      imax = i;
    }
  }
  if (imax < 0 || !(a[static_cast<std::size_t>(imax)] > 0.0)) {
    std::ostringstream msg;
    msg << "no peak found in [" << e_lo << ", " << e_hi << "]";
    throw FitError(msg.str());
  }
  const double amax = a[static_cast<std::size_t>(imax)];

  // Monotone flanks of the peak, out to the half maximum or the main lobe
  // edge, whichever is further.
  const double lobe = spec.lobe_half_width() * spec.bin_width();
  const double e0 = e[static_cast<std::size_t>(imax)];
  auto inside = [&](int j) {
    return a[static_cast<std::size_t>(j)] >= 0.5 * amax ||
           std::abs(e[static_cast<std::size_t>(j)] - e0) <= lobe * (1.0 + 1e-9);
  };
  int lo = imax;
  while (lo > first && inside(lo - 1) &&
         a[static_cast<std::size_t>(lo - 1)] <= a[static_cast<std::size_t>(lo)]) {
    --lo;
  }
  int hi = imax;
  while (hi < last && inside(hi + 1) &&
         a[static_cast<std::size_t>(hi + 1)] <= a[static_cast<std::size_t>(hi)]) {
    ++hi;
  }
  const int count = hi - lo + 1;
  if (count < 5) throw FitError("peak fit window holds fewer than 5 points");

  Eigen::VectorXd ew(count);
  Eigen::VectorXd yw(count);
  for (int i = 0; i < count; ++i) {
    ew[i] = e[static_cast<std::size_t>(lo + i)];
    yw[i] = a[static_cast<std::size_t>(lo + i)];
  }
  const double baseline = median(std::vector<double>(yw.data(), yw.data() + count));

  Eigen::VectorXd x(4);
  x << amax - baseline, e[static_cast<std::size_t>(imax)], spec.bin_width(), baseline;
  if (!(x[0] > 0.0)) x[0] = amax;

  GaussianResidual functor(ew, yw);
  Eigen::LevenbergMarquardt<GaussianResidual> lm(functor);
  lm.setXtol(1e-10);
  lm.setFtol(1e-14);
  lm.setMaxfev(200);
  const auto status = lm.minimize(x);
  if (status == Eigen::LevenbergMarquardtSpace::ImproperInputParameters) {
    throw FitError("peak fit: improper input parameters");
  }
  if (!x.allFinite() || x[2] == 0.0) throw FitError("peak fit diverged");
  x[2] = std::abs(x[2]);
  if (x[1] < ew[0] || x[1] > ew[count - 1]) {
    std::ostringstream msg;
    msg << "peak fit center " << x[1] << " left the fit window [" << ew[0] << ", "
        << ew[count - 1] << "]";
    throw FitError(msg.str());
  }

  Eigen::VectorXd resid(count);
  functor(x, resid);
  Eigen::MatrixXd jac(count, 4);
  functor.df(x, jac);
  const Eigen::Matrix4d jtj = jac.transpose() * jac;
  Eigen::FullPivLU<Eigen::Matrix4d> lu(jtj);
  if (!lu.isInvertible()) throw FitError("peak fit: singular normal matrix");
  const double s2 = count > 4 ? resid.squaredNorm() / (count - 4) : 0.0;
  const Eigen::Matrix4d cov = s2 * lu.inverse();

  Peak out;
  out.amplitude = x[0];
  out.center = x[1];
  out.sigma = x[2];
  out.baseline = x[3];
  out.height = amax;
  out.fit_error = std::sqrt(std::max(cov(1, 1), 0.0));
  out.iterations = static_cast<int>(lm.iterations());
  return out;
}

}  // namespace nvtopo::spectroscopy
