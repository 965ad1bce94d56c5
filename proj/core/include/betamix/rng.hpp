#pragma once

#include <cstdint>
#include <random>

namespace betamix {

// splitmix64 step; used to derive well separated sub-seeds for chains and
// replicates from one base seed.
std::uint64_t split_seed(std::uint64_t base, std::uint64_t stream);

// Random source for every sampler in the library.  All variate generation is
// implemented on top of a single mt19937_64 stream so that a run is fully
// reproducible from its seed, independent of the platform's std::*_distribution
// implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // strictly inside (0,1)
  double uniform();
  double uniform(double lo, double hi);

  // standard normal, Marsaglia polar method with one cached variate
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }

  // shape/rate parameterisation, mean = shape/rate
  double gamma(double shape, double rate);

  double beta(double a, double b);
  double chi_square(double dof) { return gamma(0.5 * dof, 0.5); }
  double exponential(double rate);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace betamix
