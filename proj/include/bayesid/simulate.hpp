#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "model.hpp"
#include "rng.hpp"
#include "series.hpp"
#include "spectral.hpp"

namespace bayesid {

struct NoiseSpec {
	double snr = 10.0; ///< RMS(signal) / RMS(noise), per channel
	std::uint64_t rng_seed = 0;
};

struct NoisySeries {
	ChannelSeries noisy;
	std::array<double, 2> sigma{}; ///< noise std actually used, per channel
};

/// White Gaussian voltage fluctuations: 2K+1 samples per channel, std sigma_u.
inline ChannelSeries ambient_input(std::size_t K, double dt, double sigma_u, std::uint64_t seed) {
	require(K >= 1, "ambient_input: K must be >= 1");
	require(dt > 0.0, "ambient_input: dt must be positive");
	require(sigma_u > 0.0, "ambient_input: sigma_u must be positive");
	ChannelSeries u(dt, 2 * K + 1);
	u.labels = {"V", "theta"};
	Rng rng(seed);
	for (auto& c : u.ch)
		for (double& x : c) x = sigma_u * rng.normal();
	return u;
}

/// Multiply the input spectrum bin by bin with Y(Omega_k, theta) and return
/// to the time domain. The DC bin of the output is zero.
template <AdmittanceModel Model>
ChannelSeries synthesize_output(const Model& model, std::span<const double> theta, const ChannelSeries& u) {
	const Spectrum U = dft(u);
	const auto Y = model.bind(theta);
	Spectrum out;
	out.grid = U.grid;
	for (auto& c : out.coeffs) c.assign(U.size(), cplx{});
	for (std::size_t k = 1; k < U.size(); ++k) {
		const Admittance Yk = Y(U.grid.omegas[k]);
		const cplx u0 = U.coeffs[0][k];
		const cplx u1 = U.coeffs[1][k];
		out.coeffs[0][k] = Yk(0, 0) * u0 + Yk(0, 1) * u1;
		out.coeffs[1][k] = Yk(1, 0) * u0 + Yk(1, 1) * u1;
	}
	ChannelSeries y = idft(out);
	y.labels = {"out1", "out2"};
	return y;
}

/// Adds white Gaussian noise with std RMS(channel)/snr to each channel.
inline NoisySeries add_noise(const ChannelSeries& ts, const NoiseSpec& spec) {
	require(spec.snr > 0.0, "add_noise: snr must be positive");
	NoisySeries out{ts, {}};
	Rng rng(spec.rng_seed);
	for (std::size_t c = 0; c < 2; ++c) {
		const double level = rms(ts.ch[c]);
		if (level < 1e-15) fail(ErrorKind::ZeroSignal, "add_noise: channel " + std::to_string(c + 1) + " has zero RMS");
		const double s = level / spec.snr;
		out.sigma[c] = s;
		for (double& x : out.noisy.ch[c]) x += s * rng.normal();
	}
	return out;
}

// ---------------------------------------------------------------------------
// Nonlinear time-domain simulators (validation oracles)
// ---------------------------------------------------------------------------

namespace detail {

inline double lerp_sample(const std::vector<double>& x, std::size_t i, double frac) {
	if (i + 1 >= x.size()) return x.back();
	return x[i] + frac * (x[i + 1] - x[i]);
}

} // namespace detail

struct MotorState {
	double omega_m = 0.0; ///< rotor speed, rad/s
	double z = 0.0;       ///< filtered-derivative auxiliary state, rad
};

struct MotorSimResult {
	ChannelSeries currents; ///< (i_d, i_q) minus the steady value
	std::vector<MotorState> states;
};

/// Fixed-step RK4 integration of the per-unit motor swing equation with the
/// electrical frequency taken from a filtered derivative of the voltage phase:
///
///   (2H/we0) dwm/dt = (we0/we) pe - pm,  we = we0 + (z + theta)/tau,
///   dz/dt = -(z + theta)/tau,  sigma = 1 - wm/we.
///
/// Inputs are linearly interpolated between samples.
inline MotorSimResult simulate_motor_nonlinear(const MotorParams& p, const std::vector<double>& v_mag,
											   const std::vector<double>& v_phase, double tau, double dt,
											   std::optional<MotorState> initial = std::nullopt) {
	require(tau > 0.0, "simulate_motor_nonlinear: tau must be positive");
	require(dt > 0.0, "simulate_motor_nonlinear: dt must be positive");
	require(!v_mag.empty() && v_mag.size() == v_phase.size(), "simulate_motor_nonlinear: input series mismatch");
	const double sigma0 = motor_steady_state(p);
	const std::complex<double> j{0.0, 1.0};
	const std::complex<double> I0 = p.V0 * sigma0 / (p.R + j * sigma0 * p.X);

	MotorState x = initial.value_or(MotorState{(1.0 - sigma0) * p.we0, -v_phase.front()});

	auto slip = [&](const MotorState& s, double th) {
		const double we = p.we0 + (s.z + th) / tau;
		return 1.0 - s.omega_m / we;
	};
	auto rhs = [&](const MotorState& s, double u, double th) {
		const double we = p.we0 + (s.z + th) / tau;
		const double sg = 1.0 - s.omega_m / we;
		const double pe = p.electric_power(sg, u);
		return MotorState{p.we0 / (2.0 * p.H) * (p.we0 / we * pe - p.pm), -(s.z + th) / tau};
	};
	auto axpy = [](const MotorState& a, double h, const MotorState& k) {
		return MotorState{a.omega_m + h * k.omega_m, a.z + h * k.z};
	};

	const std::size_t n = v_mag.size();
	MotorSimResult out;
	out.currents = ChannelSeries(dt, n);
	out.currents.labels = {"i_d", "i_q"};
	out.states.reserve(n);
	for (std::size_t i = 0; i < n; ++i) {
		const double sg = slip(x, v_phase[i]);
		if (!(std::abs(sg) <= 1.0) || !std::isfinite(x.omega_m) || !std::isfinite(x.z))
			fail(ErrorKind::StateBlowup, "motor simulation: slip left [-1, 1] at step " + std::to_string(i));
		const std::complex<double> I = std::polar(v_mag[i], v_phase[i]) * sg / (p.R + j * sg * p.X) - I0;
		out.currents.ch[0][i] = I.real();
		out.currents.ch[1][i] = I.imag();
		out.states.push_back(x);
		if (i + 1 == n) break;
		const double um = detail::lerp_sample(v_mag, i, 0.5), tm = detail::lerp_sample(v_phase, i, 0.5);
		const auto k1 = rhs(x, v_mag[i], v_phase[i]);
		const auto k2 = rhs(axpy(x, 0.5 * dt, k1), um, tm);
		const auto k3 = rhs(axpy(x, 0.5 * dt, k2), um, tm);
		const auto k4 = rhs(axpy(x, dt, k3), v_mag[i + 1], v_phase[i + 1]);
		x.omega_m += dt / 6.0 * (k1.omega_m + 2.0 * k2.omega_m + 2.0 * k3.omega_m + k4.omega_m);
		x.z += dt / 6.0 * (k1.z + 2.0 * k2.z + 2.0 * k3.z + k4.z);
	}
	return out;
}

struct GenState {
	double delta = 0.0;
	double omega = 0.0;
};

/// RK4 integration of the classical generator model driven by terminal
/// voltage magnitude and phase. Emits polar current perturbations
/// (|I| - |I0|, arg I - arg I0).
inline ChannelSeries simulate_generator_nonlinear(const GenParams& p, const GenOperatingPoint& op,
												  const std::vector<double>& v_mag,
												  const std::vector<double>& v_phase, double dt) {
	require(dt > 0.0, "simulate_generator_nonlinear: dt must be positive");
	require(!v_mag.empty() && v_mag.size() == v_phase.size(), "simulate_generator_nonlinear: input series mismatch");
	const std::complex<double> j{0.0, 1.0};
	auto rhs = [&](const GenState& s, double v, double th) {
		const double pe = p.E_prime * v * std::sin(s.delta - th) / p.Xd_prime;
		return GenState{s.omega, (op.Pm - p.D * s.omega - pe) / p.M};
	};
	auto axpy = [](const GenState& a, double h, const GenState& k) {
		return GenState{a.delta + h * k.delta, a.omega + h * k.omega};
	};
	const double mag0 = std::abs(op.I0);
	const double arg0 = std::arg(op.I0);
	const std::size_t n = v_mag.size();
	ChannelSeries out(dt, n);
	out.labels = {"I", "phi"};
	GenState x{op.delta0, 0.0};
	for (std::size_t i = 0; i < n; ++i) {
		if (!std::isfinite(x.delta) || !std::isfinite(x.omega))
			fail(ErrorKind::StateBlowup, "generator simulation diverged at step " + std::to_string(i));
		const auto I = (p.E_prime * std::polar(1.0, x.delta) - std::polar(v_mag[i], v_phase[i])) / (j * p.Xd_prime);
		out.ch[0][i] = std::abs(I) - mag0;
		out.ch[1][i] = std::remainder(std::arg(I) - arg0, 2.0 * std::numbers::pi);
		if (i + 1 == n) break;
		const double vm = detail::lerp_sample(v_mag, i, 0.5), tm = detail::lerp_sample(v_phase, i, 0.5);
		const auto k1 = rhs(x, v_mag[i], v_phase[i]);
		const auto k2 = rhs(axpy(x, 0.5 * dt, k1), vm, tm);
		const auto k3 = rhs(axpy(x, 0.5 * dt, k2), vm, tm);
		const auto k4 = rhs(axpy(x, dt, k3), v_mag[i + 1], v_phase[i + 1]);
		x.delta += dt / 6.0 * (k1.delta + 2.0 * k2.delta + 2.0 * k3.delta + k4.delta);
		x.omega += dt / 6.0 * (k1.omega + 2.0 * k2.omega + 2.0 * k3.omega + k4.omega);
	}
	return out;
}

/// Least-squares phasor A of x(t) ~ Re(A e^{j omega t}) + c over samples
/// with t >= t_start.
inline std::complex<double> fundamental_phasor(const std::vector<double>& x, double dt, double omega, double t_start) {
	Eigen::Matrix3d N = Eigen::Matrix3d::Zero();
	Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
	for (std::size_t i = 0; i < x.size(); ++i) {
		const double t = static_cast<double>(i) * dt;
		if (t < t_start) continue;
		const Eigen::Vector3d phi(std::cos(omega * t), std::sin(omega * t), 1.0);
		N += phi * phi.transpose();
		rhs += phi * x[i];
	}
	const Eigen::Vector3d c = N.ldlt().solve(rhs);
	// a cos + b sin = Re((a - j b) e^{j w t})
	return {c(0), -c(1)};
}

struct SineProbeSettings {
	double amplitude = 1e-4;
	double dt = 1e-3;
	double settle = 5.0; ///< seconds discarded before fitting
	double cycles = 3.0; ///< periods fitted after settling
};

namespace detail {

template <class Sim>
Eigen::Vector2cd sine_probe(double omega, std::size_t input, double V0, const SineProbeSettings& cfg, Sim&& sim) {
	require(omega > 0.0, "sine probe: omega must be positive");
	const double period = 2.0 * std::numbers::pi / omega;
	const double t_end = cfg.settle + cfg.cycles * period;
	const auto n = static_cast<std::size_t>(std::ceil(t_end / cfg.dt)) + 1;
	std::vector<double> mag(n, V0), phase(n, 0.0);
	auto& driven = input == 0 ? mag : phase;
	for (std::size_t i = 0; i < n; ++i) driven[i] += cfg.amplitude * std::sin(omega * static_cast<double>(i) * cfg.dt);
	const ChannelSeries out = sim(mag, phase);
	// sin(w t) = Re(-j e^{j w t}); rectangular q-axis input is V0 * dtheta
	const std::complex<double> in_phasor = std::complex<double>(0.0, -cfg.amplitude);
	Eigen::Vector2cd col;
	for (std::size_t c = 0; c < 2; ++c) col(c) = fundamental_phasor(out.ch[c], cfg.dt, omega, cfg.settle) / in_phasor;
	return col;
}

} // namespace detail

/// Column `input` of the generator admittance measured by driving the
/// nonlinear simulator with a small sinusoid.
inline Eigen::Vector2cd sine_probe_generator(const GenParams& p, const GenOperatingPoint& op, double omega,
											 std::size_t input, const SineProbeSettings& cfg = {}) {
	return detail::sine_probe(omega, input, op.V0, cfg, [&](const auto& mag, const auto& phase) {
		auto ph = phase;
		for (double& x : ph) x += op.theta0;
		return simulate_generator_nonlinear(p, op, mag, ph, cfg.dt);
	});
}

/// Column `input` of the motor admittance (rectangular channels) measured on
/// the nonlinear simulator. Input 1 drives the phase so that v_q = V0 dtheta.
inline Eigen::Vector2cd sine_probe_motor(const MotorParams& p, double tau, double omega, std::size_t input,
										 const SineProbeSettings& cfg = {}) {
	auto col = detail::sine_probe(omega, input, p.V0, cfg, [&](const auto& mag, const auto& phase) {
		return simulate_motor_nonlinear(p, mag, phase, tau, cfg.dt).currents;
	});
	if (input == 1) col /= p.V0;
	return col;
}

} // namespace bayesid
