#include <cmath>
#include <random>
#include <sstream>

#include "nvtopo/dynamics.hpp"
#include "nvtopo/errors.hpp"
#include "nvtopo/random.hpp"

namespace nvtopo::dynamics {

void ReadoutModel::validate() const {
  for (double v : pl) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidInput("readout: PL values must be >= 0");
  }
  const double pl4 = pl[0];
  const double pl5 = pl[1];
  const double pl6 = pl[2];
  if (!(pl4 > pl5)) throw InvalidInput("readout: PL4 must exceed PL5");
  if (std::abs(pl5 - pl6) > 0.02 * pl5) {
    throw InvalidInput("readout: PL5 and PL6 must agree within 2%");
  }
  if (shots < 1) throw InvalidInput("readout: shots must be positive");
}

double ReadoutModel::pl_of_level(int label) const {
  if (label >= 4 && label <= 8) return pl[static_cast<std::size_t>(label - 4)];
  if (label >= 1 && label <= 9) return pl[4];
  throw InvalidInput("readout: level label must be in 1..9");
}

double mean_pl(const ComplexMatrix& rho9, const ReadoutModel& readout) {
  if (rho9.rows() != 9 || rho9.cols() != 9) {
    throw InvalidInput("mean_pl: expected a 9-level density matrix");
  }
  double total = 0.0;
  for (int label = 1; label <= 9; ++label) {
    total += rho9(label - 1, label - 1).real() * readout.pl_of_level(label);
  }
  return total;
}

double simulate_pl(const ComplexMatrix& rho9, const ReadoutModel& readout,
                   std::uint64_t rng_seed) {
  const double mean = mean_pl(rho9, readout) * static_cast<double>(readout.shots);
  if (!readout.shot_noise) return mean;
  // The sum of per-shot Poisson counts is Poisson with the summed mean.
  auto rng = substream(rng_seed, 0);
  std::poisson_distribution<long long> poisson(std::max(mean, 0.0));
  return static_cast<double>(poisson(rng));
}

}  // namespace nvtopo::dynamics
