#include "aos/rng.hpp"

#include <cmath>
#include <numbers>

namespace aos::rng {

double irwin_hall_normal(std::uint64_t bits) {
  // Sum of four U(0,1) has mean 2 and variance 1/3.
  double sum = 0.0;
  for (int i = 0; i < 4; ++i) {
    sum += (static_cast<double>(bits & 0xFFFFu) + 0.5) * (1.0 / 65536.0);
    bits >>= 16;
  }
  return (sum - 2.0) * std::sqrt(3.0);
}

double CounterRng::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double CounterRng::exponential() { return -std::log(1.0 - uniform()); }

std::uint64_t CounterRng::poisson(double mean) {
  if (!(mean > 0.0)) return 0;
  std::uint64_t n = 0;
  double t = exponential();
  while (t <= mean) {
    ++n;
    t += exponential();
  }
  return n;
}

}  // namespace aos::rng
