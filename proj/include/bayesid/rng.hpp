#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace bayesid {

/// splitmix64 finalizer. Used both as a seed scrambler and for stream splitting.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
	x += 0x9E3779B97F4A7C15ull;
	x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
	x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
	return x ^ (x >> 31);
}

/// Child seed for stream `index` under `tag`, derived from `root`.
///
///   child = mix64(mix64(mix64(root) ^ tag) ^ index)
///
/// The mapping depends only on (root, tag, index), so adding streams never
/// perturbs existing ones.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t tag, std::uint64_t index) noexcept {
	return mix64(mix64(mix64(root) ^ tag) ^ index);
}

/// mt19937_64 (sequence fixed by the standard) with hand-written uniform and
/// normal transforms, since the std distributions are implementation-defined.
class Rng {
  public:
	explicit Rng(std::uint64_t seed) : m_engine(mix64(seed)) {}

	std::uint64_t next_u64() { return m_engine(); }

	/// Uniform on [0, 1) with 53 random bits.
	double uniform() { return static_cast<double>(m_engine() >> 11) * 0x1.0p-53; }

	double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

	/// Standard normal, Marsaglia polar method.
	double normal() {
		if (m_has_spare) {
			m_has_spare = false;
			return m_spare;
		}
		double u = 0.0, v = 0.0, s = 0.0;
		do {
			u = 2.0 * uniform() - 1.0;
			v = 2.0 * uniform() - 1.0;
			s = u * u + v * v;
		} while (s >= 1.0 || s == 0.0);
		const double f = std::sqrt(-2.0 * std::log(s) / s);
		m_spare = v * f;
		m_has_spare = true;
		return u * f;
	}

	double normal(double mean, double stddev) { return mean + stddev * normal(); }

  private:
	std::mt19937_64 m_engine;
	double m_spare = 0.0;
	bool m_has_spare = false;
};

} // namespace bayesid
