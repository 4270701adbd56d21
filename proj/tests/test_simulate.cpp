#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "bayesid/simulate.hpp"

using namespace bayesid;

namespace {

const double kTheta[] = {0.25, 1.0, 1.0, 0.01};

double stddev(const std::vector<double>& x) {
	double m = 0.0;
	for (double v : x) m += v;
	m /= static_cast<double>(x.size());
	double ss = 0.0;
	for (double v : x) ss += (v - m) * (v - m);
	return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

} // namespace

TEST(AmbientInput, ShapeLevelAndDeterminism) {
	const auto u = ambient_input(1000, 0.02, 0.01, 7);
	ASSERT_EQ(u.size(), 2001u);
	EXPECT_EQ(u.labels[0], "V");
	EXPECT_EQ(u.labels[1], "theta");
	for (const auto& c : u.ch) EXPECT_NEAR(stddev(c), 0.01, 0.001);
	const auto again = ambient_input(1000, 0.02, 0.01, 7);
	EXPECT_EQ(u.ch, again.ch);
	EXPECT_NE(u.ch[0], ambient_input(1000, 0.02, 0.01, 8).ch[0]);
	EXPECT_THROW(ambient_input(0, 0.02, 0.01, 1), Error);
	EXPECT_THROW(ambient_input(10, -0.02, 0.01, 1), Error);
}

TEST(Synthesize, SingleToneMatchesAdmittance) {
	const GeneratorModel model;
	const std::size_t K = 60, n = 2 * K + 1, bin = 9;
	const double dt = 0.05;
	ChannelSeries u(dt, n);
	for (std::size_t m = 0; m < n; ++m) {
		const double a = 2.0 * std::numbers::pi * static_cast<double>(bin * m) / static_cast<double>(n);
		u.ch[0][m] = 0.01 * std::cos(a);
		u.ch[1][m] = 0.02 * std::sin(a);
	}
	const auto y = synthesize_output(model, kTheta, u);
	const double w = 2.0 * std::numbers::pi * static_cast<double>(bin) / (static_cast<double>(n) * dt);
	const Admittance Y = model.bind(kTheta)(w);
	// u = Re(U e^{j w t}) with U = (0.01, -0.02 j)
	const Eigen::Vector2cd U(0.01, std::complex<double>(0.0, -0.02));
	const Eigen::Vector2cd out = Y * U;
	for (std::size_t c = 0; c < 2; ++c)
		for (std::size_t m = 0; m < n; ++m) {
			const double t = static_cast<double>(m) * dt;
			const double expect = (out(static_cast<Eigen::Index>(c)) * std::polar(1.0, w * t)).real();
			EXPECT_NEAR(y.ch[c][m], expect, 1e-12);
		}
}

TEST(Synthesize, LinearAndZeroMean) {
	const GeneratorModel model;
	const auto u1 = ambient_input(100, 0.02, 0.01, 1);
	const auto u2 = ambient_input(100, 0.02, 0.01, 2);
	ChannelSeries mix(0.02, u1.size());
	for (std::size_t c = 0; c < 2; ++c)
		for (std::size_t m = 0; m < u1.size(); ++m) mix.ch[c][m] = 3.0 * u1.ch[c][m] - u2.ch[c][m];
	const auto y1 = synthesize_output(model, kTheta, u1);
	const auto y2 = synthesize_output(model, kTheta, u2);
	const auto ym = synthesize_output(model, kTheta, mix);
	for (std::size_t c = 0; c < 2; ++c) {
		double mean = 0.0;
		for (std::size_t m = 0; m < u1.size(); ++m) {
			EXPECT_NEAR(ym.ch[c][m], 3.0 * y1.ch[c][m] - y2.ch[c][m], 1e-13);
			mean += y1.ch[c][m];
		}
		EXPECT_NEAR(mean / static_cast<double>(u1.size()), 0.0, 1e-15);
	}
}

TEST(AddNoise, LevelFollowsSnr) {
	const auto u = ambient_input(5000, 0.02, 0.01, 3);
	const auto noisy = add_noise(u, {4.0, 99});
	for (std::size_t c = 0; c < 2; ++c) {
		EXPECT_DOUBLE_EQ(noisy.sigma[c], rms(u.ch[c]) / 4.0);
		std::vector<double> diff(u.size());
		for (std::size_t m = 0; m < u.size(); ++m) diff[m] = noisy.noisy.ch[c][m] - u.ch[c][m];
		EXPECT_NEAR(stddev(diff) / noisy.sigma[c], 1.0, 0.03);
	}
	EXPECT_EQ(noisy.noisy.ch, add_noise(u, {4.0, 99}).noisy.ch);
}

TEST(AddNoise, ZeroSignalRejected) {
	ChannelSeries z(0.02, 11);
	z.ch[0][3] = 1.0;
	try {
		add_noise(z, {10.0, 1});
		FAIL() << "expected ZeroSignal";
	} catch (const Error& e) {
		EXPECT_EQ(e.kind(), ErrorKind::ZeroSignal);
	}
}

TEST(FundamentalPhasor, RecoversKnownTone) {
	const double dt = 1e-3, w = 5.0;
	std::vector<double> x(20000);
	for (std::size_t i = 0; i < x.size(); ++i) {
		const double t = static_cast<double>(i) * dt;
		x[i] = 0.7 + 0.3 * std::cos(w * t - 1.1);
	}
	const auto A = fundamental_phasor(x, dt, w, 2.0);
	EXPECT_NEAR(std::abs(A), 0.3, 1e-10);
	EXPECT_NEAR(std::arg(A), -1.1, 1e-10);
}

TEST(MotorSimulation, HoldsEquilibriumWithoutInput) {
	const MotorParams p;
	const std::vector<double> mag(2001, 1.0), phase(2001, 0.0);
	const auto res = simulate_motor_nonlinear(p, mag, phase, 0.02, 1e-3);
	for (const auto& c : res.currents.ch)
		for (double v : c) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(MotorSimulation, AgreesWithAdmittanceAtOneHertz) {
	const MotorParams p;
	const double w = 2.0 * std::numbers::pi;
	SineProbeSettings cfg;
	cfg.settle = 3.0;
	const Admittance Y = motor_admittance(p, w, 0.02);
	for (std::size_t input = 0; input < 2; ++input) {
		const auto col = sine_probe_motor(p, 0.02, w, input, cfg);
		const Eigen::Vector2cd ref = Y.col(static_cast<Eigen::Index>(input));
		EXPECT_LE((col - ref).norm() / ref.norm(), 1e-3);
	}
}

TEST(MotorSimulation, StallRaisesStateBlowup) {
	const MotorParams p;
	const std::size_t n = 8000;
	std::vector<double> mag(n, 0.3), phase(n, 0.0);
	mag[0] = 1.0;
	try {
		simulate_motor_nonlinear(p, mag, phase, 0.02, 1e-3);
		FAIL() << "expected StateBlowup";
	} catch (const Error& e) {
		EXPECT_EQ(e.kind(), ErrorKind::StateBlowup);
	}
}

TEST(GeneratorSimulation, HoldsEquilibriumWithoutInput) {
	const GenParams p{0.25, 1.0, 1.0, 0.01};
	const auto op = gen_steady_state(p, 1.0, 0.2, 0.5);
	const std::vector<double> mag(1000, 1.0), phase(1000, 0.2);
	const auto out = simulate_generator_nonlinear(p, op, mag, phase, 1e-3);
	for (const auto& c : out.ch)
		for (double v : c) EXPECT_NEAR(v, 0.0, 1e-10);
}
