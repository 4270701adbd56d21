#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "errors.hpp"

namespace bayesid {

/// Two uniformly sampled real channels of odd length 2K+1.
struct ChannelSeries {
	double dt = 0.0;
	std::array<std::vector<double>, 2> ch;
	std::array<std::string, 2> labels{"ch1", "ch2"};

	ChannelSeries() = default;
	ChannelSeries(double dt_, std::size_t n) : dt(dt_), ch{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)} {}
	ChannelSeries(double dt_, std::vector<double> a, std::vector<double> b)
		: dt(dt_), ch{std::move(a), std::move(b)} {}

	std::size_t size() const noexcept { return ch[0].size(); }
	/// K, where size() == 2K+1.
	std::size_t half_length() const noexcept { return (size() - 1) / 2; }

	void validate() const {
		if (!(dt > 0.0) || !std::isfinite(dt)) fail(ErrorKind::Data, "series: dt must be positive");
		if (ch[0].size() != ch[1].size()) fail(ErrorKind::Data, "series: channel lengths differ");
		if (size() < 3 || size() % 2 == 0) fail(ErrorKind::Data, "series: sample count must be odd and >= 3");
		for (const auto& c : ch)
			for (double x : c)
				if (!std::isfinite(x)) fail(ErrorKind::Data, "series: non-finite sample");
	}
};

inline double rms(const std::vector<double>& x) {
	if (x.empty()) return 0.0;
	double acc = 0.0;
	for (double v : x) acc += v * v;
	return std::sqrt(acc / static_cast<double>(x.size()));
}

} // namespace bayesid
