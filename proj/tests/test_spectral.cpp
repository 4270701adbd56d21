#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "bayesid/rng.hpp"
#include "bayesid/spectral.hpp"

using namespace bayesid;

namespace {

ChannelSeries random_series(std::size_t K, double dt, std::uint64_t seed) {
	ChannelSeries ts(dt, 2 * K + 1);
	Rng rng(seed);
	for (auto& c : ts.ch)
		for (double& x : c) x = rng.normal();
	return ts;
}

double energy(const std::vector<double>& x) {
	double acc = 0.0;
	for (double v : x) acc += v * v;
	return acc;
}

} // namespace

TEST(FreqGrid, BinsAndSpacing) {
	const auto g = FreqGrid::for_record(2001, 0.02);
	ASSERT_EQ(g.size(), 1001u);
	EXPECT_DOUBLE_EQ(g.omegas[0], 0.0);
	EXPECT_NEAR(g.spacing(), 2.0 * std::numbers::pi / 40.02, 1e-15);
	EXPECT_NEAR(g.omegas[1000], 1000.0 * g.spacing(), 1e-12);
	// highest bin sits just below Nyquist
	EXPECT_LT(g.omegas.back(), std::numbers::pi / 0.02);
}

TEST(Dft, MatchesLongDoubleDirectSum) {
	const auto ts = random_series(20, 0.1, 3);
	const auto sp = dft(ts);
	const std::size_t n = ts.size();
	for (std::size_t c = 0; c < 2; ++c)
		for (std::size_t k = 0; k < sp.size(); ++k) {
			long double re = 0, im = 0;
			for (std::size_t m = 0; m < n; ++m) {
				const long double a = -2.0L * std::numbers::pi_v<long double> * static_cast<long double>(k * m) /
					static_cast<long double>(n);
				re += ts.ch[c][m] * std::cos(a);
				im += ts.ch[c][m] * std::sin(a);
			}
			EXPECT_NEAR(sp.coeffs[c][k].real(), static_cast<double>(re), 1e-12);
			EXPECT_NEAR(sp.coeffs[c][k].imag(), static_cast<double>(im), 1e-12);
		}
}

TEST(Dft, CosineLandsInOneBin) {
	const std::size_t K = 50, n = 2 * K + 1, bin = 7;
	ChannelSeries ts(0.05, n);
	for (std::size_t m = 0; m < n; ++m) {
		const double a = 2.0 * std::numbers::pi * static_cast<double>(bin * m) / static_cast<double>(n);
		ts.ch[0][m] = 0.3 * std::cos(a + 0.4);
		ts.ch[1][m] = 1.0;
	}
	const auto sp = dft(ts);
	for (std::size_t k = 0; k < sp.size(); ++k) {
		const double expect = k == bin ? 0.3 * static_cast<double>(n) / 2.0 : 0.0;
		EXPECT_NEAR(std::abs(sp.coeffs[0][k]), expect, 1e-11);
	}
	EXPECT_NEAR(std::arg(sp.coeffs[0][bin]), 0.4, 1e-12);
	EXPECT_NEAR(sp.coeffs[1][0].real(), static_cast<double>(n), 1e-11);
}

class SpectralProperty : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(SpectralProperty, Parseval) {
	const auto ts = random_series(200, 0.02, GetParam());
	const auto sp = dft(ts);
	const double n = static_cast<double>(ts.size());
	for (std::size_t c = 0; c < 2; ++c) {
		double spec = std::norm(sp.coeffs[c][0]);
		for (std::size_t k = 1; k < sp.size(); ++k) spec += 2.0 * std::norm(sp.coeffs[c][k]);
		const double time = energy(ts.ch[c]);
		EXPECT_LE(std::abs(spec / n - time) / time, 1e-10);
	}
}

TEST_P(SpectralProperty, RoundTrip) {
	const auto ts = random_series(150, 0.02, GetParam());
	const auto back = idft(dft(ts));
	ASSERT_EQ(back.size(), ts.size());
	double err = 0.0, scale = 0.0;
	for (std::size_t c = 0; c < 2; ++c)
		for (std::size_t m = 0; m < ts.size(); ++m) {
			err = std::max(err, std::abs(back.ch[c][m] - ts.ch[c][m]));
			scale = std::max(scale, std::abs(ts.ch[c][m]));
		}
	EXPECT_LE(err / scale, 1e-10);
	EXPECT_DOUBLE_EQ(back.dt, ts.dt);
}

TEST_P(SpectralProperty, PsdIntegratesToMeanSquare) {
	const auto ts = random_series(100, 0.05, GetParam());
	const auto sp = dft(ts);
	for (std::size_t c = 0; c < 2; ++c) {
		const auto p = psd(sp, c);
		double acc = 0.0;
		for (double v : p) acc += v;
		const double n = static_cast<double>(ts.size());
		EXPECT_NEAR(acc / (n * ts.dt), energy(ts.ch[c]) / n, 1e-12);
		for (double v : p) EXPECT_GE(v, 0.0);
	}
}

TEST_P(SpectralProperty, Linearity) {
	const auto a = random_series(40, 0.02, GetParam());
	const auto b = random_series(40, 0.02, GetParam() + 100);
	ChannelSeries sum(0.02, a.size());
	for (std::size_t c = 0; c < 2; ++c)
		for (std::size_t m = 0; m < a.size(); ++m) sum.ch[c][m] = 2.0 * a.ch[c][m] - b.ch[c][m];
	const auto A = dft(a), B = dft(b), S = dft(sum);
	for (std::size_t c = 0; c < 2; ++c)
		for (std::size_t k = 0; k < S.size(); ++k)
			EXPECT_LE(std::abs(S.coeffs[c][k] - (2.0 * A.coeffs[c][k] - B.coeffs[c][k])), 1e-11);
}

INSTANTIATE_TEST_SUITE_P(Seeds, SpectralProperty, ::testing::Values(1u, 2u, 17u, 12345u));

TEST(Dft, RejectsEvenOrTinyRecords) {
	EXPECT_THROW(dft(ChannelSeries(0.1, 4)), Error);
	EXPECT_THROW(dft(ChannelSeries(0.1, 1)), Error);
	EXPECT_THROW(dft(ChannelSeries(0.0, 5)), Error);
	auto bad = ChannelSeries(0.1, 5);
	bad.ch[1][2] = std::nan("");
	EXPECT_THROW(dft(bad), Error);
}

TEST(Psd, ChannelIndexChecked) {
	const auto sp = dft(random_series(3, 0.1, 1));
	EXPECT_THROW(psd(sp, 2), Error);
}
