#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <concepts>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace bayesid {

/// 2x2 complex transfer from input perturbations to output perturbations.
using Admittance = Eigen::Matrix2cd;

inline constexpr double pole_threshold = 1e-14;

enum class ChannelConvention {
	Polar,       ///< inputs (dV, dtheta), outputs (dI, dphi)
	Rectangular, ///< inputs (v_d, v_q), outputs (i_d, i_q), frame aligned with the steady voltage
};

// ---------------------------------------------------------------------------
// Synchronous generator, classical second-order model
//
//   M dw/dt  = Pm - D w - E' V sin(delta - theta) / Xd'
//   ddelta/dt = w
//   I = (E' e^{j delta} - V e^{j theta}) / (j Xd')
//
// Linearized around the equilibrium, observed in polar channels. See
// docs/generator_admittance.md for the derivation.
// ---------------------------------------------------------------------------

struct GenParams {
	double D = 0.0;        ///< damping, p.u. torque per p.u. speed
	double E_prime = 0.0;  ///< internal EMF magnitude, p.u.
	double M = 0.0;        ///< inertia constant, s
	double Xd_prime = 0.0; ///< transient reactance, p.u.

	static GenParams from(std::span<const double> theta) {
		require(theta.size() == 4, "generator expects 4 parameters [D, E', M, Xd']");
		return {theta[0], theta[1], theta[2], theta[3]};
	}

	void validate() const {
		if (!(E_prime > 0.0 && M > 0.0 && Xd_prime > 0.0 && D >= 0.0) ||
			!std::isfinite(D + E_prime + M + Xd_prime))
			fail(ErrorKind::Infeasible, "generator parameters out of domain (need E'>0, M>0, Xd'>0, D>=0)");
	}
};

struct GenOperatingPoint {
	double V0 = 1.0;
	double theta0 = 0.0;
	double delta0 = 0.0;
	double Pm = 0.0;
	std::complex<double> I0{};
};

/// Equilibrium of the classical model at terminal voltage V0 e^{j theta0}
/// delivering mechanical power Pm.
inline GenOperatingPoint gen_steady_state(const GenParams& p, double V0, double theta0, double Pm) {
	p.validate();
	if (!(V0 > 0.0)) fail(ErrorKind::Infeasible, "generator: terminal voltage must be positive");
	const double load = Pm * p.Xd_prime / (p.E_prime * V0);
	if (!(std::abs(load) < 1.0)) fail(ErrorKind::Infeasible, "generator: no equilibrium, |Pm Xd'/(E' V0)| >= 1");
	GenOperatingPoint op;
	op.V0 = V0;
	op.theta0 = theta0;
	op.Pm = Pm;
	op.delta0 = theta0 + std::asin(load);
	const std::complex<double> j{0.0, 1.0};
	op.I0 = (p.E_prime * std::polar(1.0, op.delta0) - V0 * std::polar(1.0, theta0)) / (j * p.Xd_prime);
	return op;
}

/// Linearization coefficients that do not depend on frequency.
struct GenSmallSignal {
	GenParams p;
	GenOperatingPoint op;
	double Ks = 0.0; ///< dPe/ddelta
	double Kv = 0.0; ///< dPe/dV
	// Projections of the complex current sensitivities onto the polar
	// output channels: index 0 = rotor angle, 1 = V, 2 = theta.
	std::array<double, 3> dI{};
	std::array<double, 3> dphi{};

	static GenSmallSignal make(const GenParams& p, const GenOperatingPoint& op) {
		GenSmallSignal g;
		g.p = p;
		g.op = op;
		const double ang = op.delta0 - op.theta0;
		g.Ks = p.E_prime * op.V0 * std::cos(ang) / p.Xd_prime;
		g.Kv = p.E_prime * std::sin(ang) / p.Xd_prime;
		const double mag = std::abs(op.I0);
		if (!(mag > 1e-12))
			fail(ErrorKind::Infeasible, "generator: zero steady current, polar current channels undefined");
		const std::complex<double> j{0.0, 1.0};
		const std::complex<double> dI_ddelta = p.E_prime * std::polar(1.0, op.delta0) / p.Xd_prime;
		const std::complex<double> dI_dV = -std::polar(1.0, op.theta0) / (j * p.Xd_prime);
		const std::complex<double> dI_dtheta = -op.V0 * std::polar(1.0, op.theta0) / p.Xd_prime;
		const std::complex<double> unit_conj = std::conj(op.I0) / mag;
		const std::array<std::complex<double>, 3> w{dI_ddelta, dI_dV, dI_dtheta};
		for (std::size_t i = 0; i < 3; ++i) {
			const auto z = unit_conj * w[i];
			g.dI[i] = z.real();
			g.dphi[i] = z.imag() / mag;
		}
		return g;
	}

	Admittance operator()(double omega) const {
		const std::complex<double> s{0.0, omega};
		const std::complex<double> den = s * s * p.M + s * p.D + Ks;
		if (std::abs(den) < pole_threshold) fail(ErrorKind::SingularFrequency, "generator: swing-mode pole on grid");
		// rotor angle response per unit dV and dtheta
		const std::complex<double> ang_v = -Kv / den;
		const std::complex<double> ang_t = Ks / den;
		Admittance Y;
		Y(0, 0) = dI[1] + dI[0] * ang_v;
		Y(0, 1) = dI[2] + dI[0] * ang_t;
		Y(1, 0) = dphi[1] + dphi[0] * ang_v;
		Y(1, 1) = dphi[2] + dphi[0] * ang_t;
		return Y;
	}
};

inline Admittance gen_admittance(const GenParams& p, const GenOperatingPoint& op, double omega) {
	return GenSmallSignal::make(p, op)(omega);
}

// ---------------------------------------------------------------------------
// Induction motor
// ---------------------------------------------------------------------------

struct MotorParams {
	double H = 0.5;   ///< inertia time constant, s
	double R = 0.08;  ///< rotor resistance, p.u.
	double X = 0.2;   ///< reactance, p.u.
	double pm = 0.5;  ///< mechanical load, p.u.
	double V0 = 1.0;  ///< voltage magnitude, p.u.
	double we0 = 2.0 * std::numbers::pi * 50.0;

	/// Electrical power drawn at slip sigma and voltage v.
	double electric_power(double sigma, double v) const {
		return sigma * R * v * v / (R * R + sigma * sigma * X * X);
	}

	void validate() const {
		if (!(H > 0.0 && R > 0.0 && X > 0.0 && V0 > 0.0 && we0 > 0.0 && pm >= 0.0) ||
			!std::isfinite(H + R + X + V0 + we0 + pm))
			fail(ErrorKind::Infeasible, "motor parameters out of domain");
	}
};

/// Stable-branch steady slip: smaller root of Pe(sigma) = pm on (0, R/X).
inline double motor_steady_state(const MotorParams& p) {
	p.validate();
	if (p.pm == 0.0) return 0.0;
	double lo = 0.0;
	double hi = p.R / p.X; // Pe is increasing on (0, R/X), peak V0^2/(2X) at R/X
	if (!(p.pm < p.electric_power(hi, p.V0)))
		fail(ErrorKind::Infeasible, "motor: load exceeds pull-out power V0^2/(2X)");
	while (hi - lo > 1e-12 * std::max(1.0, hi)) {
		const double mid = 0.5 * (lo + hi);
		if (p.electric_power(mid, p.V0) < p.pm)
			lo = mid;
		else
			hi = mid;
	}
	// Polish with Newton on the bracketed monotone branch; keeps the power
	// residual at rounding level rather than at the bisection width.
	double s = 0.5 * (lo + hi);
	for (int i = 0; i < 3; ++i) {
		const double d = p.R * p.R + s * s * p.X * p.X;
		const double f = p.electric_power(s, p.V0) - p.pm;
		const double df = p.R * p.V0 * p.V0 * (p.R * p.R - s * s * p.X * p.X) / (d * d);
		const double next = s - f / df;
		if (!(next > lo - 1e-12 && next < hi + 1e-12)) break;
		s = next;
	}
	return s;
}

/// Small-signal motor model with the slip response driven through a filtered
/// derivative of the voltage phase, s/(tau s + 1). tau = 0 is the ideal
/// derivative.
struct MotorSmallSignal {
	MotorParams p;
	double sigma0 = 0.0;
	double tau = 0.0;
	double g = 0.0, b = 0.0;  ///< steady conductance / susceptance, P0/V0^2 and Q0/V0^2
	double Rd = 0.0, Rq = 0.0; ///< current sensitivity to slip, d and q parts
	double beta0 = 0.0;        ///< static part of beta(s)

	static MotorSmallSignal make(const MotorParams& p, double tau = 0.0) {
		MotorSmallSignal m;
		m.p = p;
		m.tau = tau;
		require(tau >= 0.0, "motor: filter time constant must be >= 0");
		m.sigma0 = motor_steady_state(p);
		if (!(m.sigma0 > 0.0)) fail(ErrorKind::Infeasible, "motor: zero slip, small-signal slip dynamics undefined");
		const double s0 = m.sigma0;
		const double d = p.R * p.R + s0 * s0 * p.X * p.X;
		m.g = s0 * p.R / d;
		m.b = s0 * s0 * p.X / d;
		m.Rd = p.R * (p.R * p.R - s0 * s0 * p.X * p.X) * p.V0 / (d * d);
		m.Rq = 2.0 * s0 * p.R * p.R * p.X * p.V0 / (d * d);
		const double dpe_dsigma = p.R * p.V0 * p.V0 * (p.R * p.R - s0 * s0 * p.X * p.X) / (d * d);
		m.beta0 = p.we0 * dpe_dsigma;
		return m;
	}

	std::complex<double> beta(std::complex<double> s) const { return 2.0 * p.H * p.we0 * s + beta0; }

	/// Steady reactive power Q0 from P + jQ = V0 conj(I0).
	double reactive_power() const { return b * p.V0 * p.V0; }

	Admittance operator()(double omega) const {
		const std::complex<double> s{0.0, omega};
		const auto bt = beta(s);
		if (std::abs(bt) < pole_threshold) fail(ErrorKind::SingularFrequency, "motor: beta(s) vanishes on grid");
		const double pe0 = p.pm;
		const std::complex<double> filt = 1.0 / (1.0 + tau * s);
		// slip response per unit v_d and v_q
		const std::complex<double> slip_d = -2.0 * p.we0 * pe0 / (p.V0 * bt);
		const std::complex<double> slip_q = (2.0 * p.H * (1.0 - sigma0) * s + pe0) * s * filt / (p.V0 * bt);
		Admittance Y;
		Y(0, 0) = g + Rd * slip_d;
		Y(0, 1) = b + Rd * slip_q;
		Y(1, 0) = -b - Rq * slip_d;
		Y(1, 1) = g - Rq * slip_q;
		return Y;
	}
};

inline Admittance motor_admittance(const MotorParams& p, double omega, double tau = 0.0) {
	return MotorSmallSignal::make(p, tau)(omega);
}

// ---------------------------------------------------------------------------
// Parameterized models consumed by simulation and inference
// ---------------------------------------------------------------------------

/// A model maps a parameter vector to a frequency evaluator.
template <class M>
concept AdmittanceModel = requires(const M& m, std::span<const double> theta, double omega) {
	{ m.bind(theta)(omega) } -> std::convertible_to<Admittance>;
	{ m.param_names() } -> std::convertible_to<std::vector<std::string>>;
};

/// Generator with Theta = [D, E', M, Xd'] at a fixed terminal operating condition.
struct GeneratorModel {
	double V0 = 1.0;
	double theta0 = 0.0;
	double Pm = 0.5;

	static constexpr ChannelConvention channels = ChannelConvention::Polar;

	std::vector<std::string> param_names() const { return {"D", "E_prime", "M", "Xd_prime"}; }

	GenSmallSignal bind(std::span<const double> theta) const {
		const auto p = GenParams::from(theta);
		return GenSmallSignal::make(p, gen_steady_state(p, V0, theta0, Pm));
	}
};

/// Induction motor with Theta = [H, R, X, pm]; V0, we0 and the phase filter
/// constant are fixed.
struct MotorModel {
	double V0 = 1.0;
	double we0 = 2.0 * std::numbers::pi * 50.0;
	double tau = 0.0;

	static constexpr ChannelConvention channels = ChannelConvention::Rectangular;

	std::vector<std::string> param_names() const { return {"H", "R", "X", "pm"}; }

	MotorParams params(std::span<const double> theta) const {
		require(theta.size() == 4, "motor expects 4 parameters [H, R, X, pm]");
		MotorParams p;
		p.H = theta[0];
		p.R = theta[1];
		p.X = theta[2];
		p.pm = theta[3];
		p.V0 = V0;
		p.we0 = we0;
		return p;
	}

	MotorSmallSignal bind(std::span<const double> theta) const { return MotorSmallSignal::make(params(theta), tau); }
};

} // namespace bayesid
