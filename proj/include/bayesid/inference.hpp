#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "model.hpp"
#include "spectral.hpp"

namespace bayesid {

/// Gaussian prior with diagonal covariance.
struct Prior {
	Eigen::VectorXd mean;
	Eigen::VectorXd variances;

	void validate() const {
		require(mean.size() == variances.size(), "prior: mean and variance dimensions differ");
		for (Eigen::Index i = 0; i < variances.size(); ++i)
			require(variances(i) > 0.0 && std::isfinite(variances(i)), "prior: variances must be positive");
	}
};

struct ObjectiveValue {
	double total = 0.0;
	double misfit = 0.0;
	double prior_penalty = 0.0;
};

/// Real 4x4 form of a complex 2x2 matrix acting on [z1_r, z1_i, z2_r, z2_i].
inline Eigen::Matrix4d real_block(const Admittance& Y) {
	Eigen::Matrix4d B;
	for (int i = 0; i < 2; ++i)
		for (int j = 0; j < 2; ++j) {
			const double re = Y(i, j).real(), im = Y(i, j).imag();
			B(2 * i, 2 * j) = re;
			B(2 * i, 2 * j + 1) = -im;
			B(2 * i + 1, 2 * j) = im;
			B(2 * i + 1, 2 * j + 1) = re;
		}
	return B;
}

inline Eigen::Vector4d real_vector(const Eigen::Vector2cd& z) {
	return {z(0).real(), z(0).imag(), z(1).real(), z(1).imag()};
}

/// Measured spectra, noise levels, model and prior: everything the MAP
/// objective needs. Spectra are stored whitened, i.e. divided channelwise by
/// sigma * sqrt((2K+1)/2), so each measurement-noise coefficient has unit
/// variance in its real and imaginary part.
template <AdmittanceModel Model>
class PosteriorProblem {
  public:
	PosteriorProblem(const Spectrum& u, const Spectrum& y, Model model, std::array<double, 2> noise_std_u,
					 std::array<double, 2> noise_std_y, Prior prior)
		: m_grid(u.grid), m_model(std::move(model)), m_noise_u(noise_std_u), m_noise_y(noise_std_y),
		  m_prior(std::move(prior)) {
		require(u.size() == y.size() && u.grid.n_samples == y.grid.n_samples && u.grid.dt == y.grid.dt,
				"posterior: input and output spectra must share one grid");
		for (int c = 0; c < 2; ++c)
			require(noise_std_u[c] > 0.0 && noise_std_y[c] > 0.0, "posterior: noise stds must be positive");
		m_prior.validate();
		require(static_cast<std::size_t>(m_prior.mean.size()) == m_model.param_names().size(),
				"posterior: prior dimension does not match model");
		const double root = std::sqrt(static_cast<double>(m_grid.n_samples) / 2.0);
		for (int c = 0; c < 2; ++c) {
			m_scale_u[c] = noise_std_u[c] * root;
			m_scale_y[c] = noise_std_y[c] * root;
		}
		const std::size_t bins = m_grid.size();
		m_u.resize(bins);
		m_y.resize(bins);
		for (std::size_t k = 0; k < bins; ++k) {
			m_u[k] = Eigen::Vector2cd(u.coeffs[0][k] / m_scale_u[0], u.coeffs[1][k] / m_scale_u[1]);
			m_y[k] = Eigen::Vector2cd(y.coeffs[0][k] / m_scale_y[0], y.coeffs[1][k] / m_scale_y[1]);
		}
		m_active.clear();
		for (std::size_t k = 1; k < bins; ++k) m_active.push_back(k);
	}

	const Model& model() const noexcept { return m_model; }
	const Prior& prior() const noexcept { return m_prior; }
	const FreqGrid& grid() const noexcept { return m_grid; }
	const std::vector<std::size_t>& active_bins() const noexcept { return m_active; }
	std::array<double, 2> noise_std_u() const noexcept { return m_noise_u; }
	std::array<double, 2> noise_std_y() const noexcept { return m_noise_y; }
	std::size_t dim() const noexcept { return static_cast<std::size_t>(m_prior.mean.size()); }

	/// Restrict the misfit to a subset of bins. DC (k = 0) is never allowed.
	void set_active_bins(std::vector<std::size_t> bins) {
		for (auto k : bins) require(k >= 1 && k < m_grid.size(), "posterior: active bin out of range (DC excluded)");
		m_active = std::move(bins);
	}

	const Eigen::Vector2cd& whitened_u(std::size_t k) const { return m_u.at(k); }
	const Eigen::Vector2cd& whitened_y(std::size_t k) const { return m_y.at(k); }

	/// Y expressed in whitened units: Y_w(i, j) = Y(i, j) * scale_u[j] / scale_y[i].
	Admittance whiten(const Admittance& Y) const {
		Admittance W;
		for (int i = 0; i < 2; ++i)
			for (int j = 0; j < 2; ++j) W(i, j) = Y(i, j) * (m_scale_u[j] / m_scale_y[i]);
		return W;
	}

	/// Measured spectra, unwhitened, for reporting.
	Eigen::Vector2cd measured_u(std::size_t k) const {
		return {m_u.at(k)(0) * m_scale_u[0], m_u.at(k)(1) * m_scale_u[1]};
	}
	Eigen::Vector2cd measured_y(std::size_t k) const {
		return {m_y.at(k)(0) * m_scale_y[0], m_y.at(k)(1) * m_scale_y[1]};
	}

  private:
	FreqGrid m_grid;
	Model m_model;
	std::array<double, 2> m_noise_u{}, m_noise_y{};
	std::array<double, 2> m_scale_u{}, m_scale_y{};
	Prior m_prior;
	std::vector<Eigen::Vector2cd> m_u, m_y;
	std::vector<std::size_t> m_active;
};

namespace detail {

inline void check_bin(const FreqGrid& g, std::size_t k) {
	require(k >= 1 && k < g.size(), "bin index out of range (DC excluded)");
}

inline Eigen::Matrix4d covariance_from_whitened(const Admittance& Yw) {
	const Eigen::Matrix4d B = real_block(Yw);
	Eigen::Matrix4d G = B * B.transpose();
	G.diagonal().array() += 1.0;
	return G;
}

} // namespace detail

/// Whitened residual r_k = y_m - Y(Omega_k, theta) u_m.
template <AdmittanceModel Model>
Eigen::Vector2cd residual(const PosteriorProblem<Model>& pp, std::span<const double> theta, std::size_t k) {
	detail::check_bin(pp.grid(), k);
	const Admittance Yw = pp.whiten(pp.model().bind(theta)(pp.grid().omegas[k]));
	return pp.whitened_y(k) - Yw * pp.whitened_u(k);
}

/// Covariance of the real 4-vector of q = eta - Y eps at bin k, whitened:
/// I + B B^T with B the real block form of the whitened Y.
template <AdmittanceModel Model>
Eigen::Matrix4d noise_covariance(const PosteriorProblem<Model>& pp, std::span<const double> theta, std::size_t k) {
	detail::check_bin(pp.grid(), k);
	return detail::covariance_from_whitened(pp.whiten(pp.model().bind(theta)(pp.grid().omegas[k])));
}

inline double prior_penalty(const Prior& prior, std::span<const double> theta) {
	require(theta.size() == static_cast<std::size_t>(prior.mean.size()), "prior: dimension mismatch");
	double acc = 0.0;
	for (std::size_t i = 0; i < theta.size(); ++i) {
		const double d = theta[i] - prior.mean(static_cast<Eigen::Index>(i));
		acc += d * d / prior.variances(static_cast<Eigen::Index>(i));
	}
	return acc;
}

/// MAP objective: sum over active bins of r^T Gamma_q^{-1} r (per-bin
/// Cholesky) plus the prior quadratic. The log-determinant is omitted.
/// Bins are summed in ascending order.
template <AdmittanceModel Model>
ObjectiveValue objective(const PosteriorProblem<Model>& pp, std::span<const double> theta) {
	const auto Y = pp.model().bind(theta);
	double misfit = 0.0;
	for (std::size_t k : pp.active_bins()) {
		const Admittance Yw = pp.whiten(Y(pp.grid().omegas[k]));
		const Eigen::Vector4d r = real_vector(pp.whitened_y(k) - Yw * pp.whitened_u(k));
		const Eigen::LLT<Eigen::Matrix4d> llt(detail::covariance_from_whitened(Yw));
		if (llt.info() != Eigen::Success) fail(ErrorKind::NonFiniteObjective, "noise covariance not positive definite");
		const Eigen::Vector4d w = llt.matrixL().solve(r);
		misfit += w.squaredNorm();
	}
	ObjectiveValue v;
	v.misfit = misfit;
	v.prior_penalty = prior_penalty(pp.prior(), theta);
	v.total = v.misfit + v.prior_penalty;
	if (!std::isfinite(v.total)) fail(ErrorKind::NonFiniteObjective, "objective is not finite");
	return v;
}

template <AdmittanceModel Model>
ObjectiveValue objective(const PosteriorProblem<Model>& pp, const Eigen::VectorXd& theta) {
	return objective(pp, std::span<const double>(theta.data(), static_cast<std::size_t>(theta.size())));
}

/// Same misfit through an explicit 4x4 inverse; used to cross-check the
/// Cholesky path.
template <AdmittanceModel Model>
double misfit_explicit_inverse(const PosteriorProblem<Model>& pp, std::span<const double> theta) {
	const auto Y = pp.model().bind(theta);
	double misfit = 0.0;
	for (std::size_t k : pp.active_bins()) {
		const Admittance Yw = pp.whiten(Y(pp.grid().omegas[k]));
		const Eigen::Vector4d r = real_vector(pp.whitened_y(k) - Yw * pp.whitened_u(k));
		misfit += r.dot(detail::covariance_from_whitened(Yw).inverse() * r);
	}
	return misfit;
}

/// sum_k log det Gamma_q(k). Diagnostic only; never part of the objective.
template <AdmittanceModel Model>
double log_det_covariance(const PosteriorProblem<Model>& pp, std::span<const double> theta) {
	const auto Y = pp.model().bind(theta);
	double acc = 0.0;
	for (std::size_t k : pp.active_bins()) {
		const Eigen::LLT<Eigen::Matrix4d> llt(detail::covariance_from_whitened(pp.whiten(Y(pp.grid().omegas[k]))));
		acc += 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
	}
	return acc;
}

} // namespace bayesid
