#include "gccg/random.hpp"

#include <cmath>
#include <sstream>

#include "gccg/errors.hpp"
#include "gccg/log_math.hpp"

namespace gccg {

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

std::size_t uniform_index(Rng& rng, std::size_t n) {
  const std::uint64_t range = n;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t x;
  do x = rng();
  while (x >= limit);
  return static_cast<std::size_t>(x % range);
}

std::size_t sample_linear(Rng& rng, std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) return weights.size();
  const double u = uniform01(rng) * total;
  double acc = 0.0;
  std::size_t last = weights.size();
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last = i;
    if (u < acc) return i;
  }
  return last;
}

std::size_t sample_log(Rng& rng, std::span<const double> log_weights) {
  double m = kLogZero;
  for (double x : log_weights) m = x > m ? x : m;
  if (m == kLogZero) return log_weights.size();
  double total = 0.0;
  for (double x : log_weights) total += std::exp(x - m);
  const double u = uniform01(rng) * total;
  double acc = 0.0;
  std::size_t last = log_weights.size();
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    if (log_weights[i] == kLogZero) continue;
    acc += std::exp(log_weights[i] - m);
    last = i;
    if (u < acc) return i;
  }
  return last;
}

std::string rng_state(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

void restore_rng_state(Rng& rng, const std::string& state) {
  std::istringstream is(state);
  is >> rng;
  if (!is) throw DataError("corrupt rng state");
}

double log_gamma(double x) {
  int sign = 0;
  return ::lgamma_r(x, &sign);
}

}  // namespace gccg
