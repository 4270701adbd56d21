#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

#include "errors.hpp"
#include "series.hpp"

namespace bayesid {

using cplx = std::complex<double>;

/// Nonnegative DFT bin frequencies of a 2K+1 sample record.
struct FreqGrid {
	std::vector<double> omegas; ///< rad/s, omegas[k] = 2 pi k / ((2K+1) dt)
	double dt = 0.0;
	std::size_t n_samples = 0;  ///< 2K+1
	bool dc_excluded = true;

	static FreqGrid for_record(std::size_t n_samples, double dt) {
		FreqGrid g;
		g.dt = dt;
		g.n_samples = n_samples;
		const std::size_t bins = (n_samples - 1) / 2 + 1;
		g.omegas.resize(bins);
		for (std::size_t k = 0; k < bins; ++k)
			g.omegas[k] = 2.0 * std::numbers::pi * static_cast<double>(k) / (static_cast<double>(n_samples) * dt);
		return g;
	}

	std::size_t size() const noexcept { return omegas.size(); }
	double spacing() const noexcept { return 2.0 * std::numbers::pi / (static_cast<double>(n_samples) * dt); }
};

/// Two channels of complex coefficients over a FreqGrid (bins 0..K).
struct Spectrum {
	FreqGrid grid;
	std::array<std::vector<cplx>, 2> coeffs;

	std::size_t size() const noexcept { return grid.size(); }
};

namespace detail {

// e^{-j 2 pi m / n}, m = 0..n-1. Indexing by (k*n_idx) mod n keeps every
// twiddle exact to one rounding instead of accumulating phase error.
inline std::vector<cplx> twiddles(std::size_t n) {
	std::vector<cplx> w(n);
	for (std::size_t m = 0; m < n; ++m) {
		const double a = -2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(n);
		w[m] = cplx(std::cos(a), std::sin(a));
	}
	return w;
}

} // namespace detail

/// Unnormalized forward DFT, nonnegative bins only:
/// X_k = sum_n x_n e^{-j 2 pi k n / N}, k = 0..K.
inline Spectrum dft(const ChannelSeries& ts) {
	ts.validate();
	const std::size_t n = ts.size();
	Spectrum sp;
	sp.grid = FreqGrid::for_record(n, ts.dt);
	const std::size_t bins = sp.grid.size();
	const auto w = detail::twiddles(n);
	for (std::size_t c = 0; c < 2; ++c) {
		auto& out = sp.coeffs[c];
		out.assign(bins, cplx{});
		const auto& x = ts.ch[c];
		for (std::size_t k = 0; k < bins; ++k) {
			double re = 0.0, im = 0.0;
			std::size_t idx = 0;
			for (std::size_t m = 0; m < n; ++m) {
				re += x[m] * w[idx].real();
				im += x[m] * w[idx].imag();
				idx += k;
				if (idx >= n) idx -= n;
			}
			out[k] = cplx(re, im);
		}
	}
	return sp;
}

/// Inverse of dft for real series; the negative bins are the conjugates of
/// the stored ones. The imaginary part of the DC coefficient is ignored.
inline ChannelSeries idft(const Spectrum& sp) {
	const std::size_t n = sp.grid.n_samples;
	require(n >= 3 && n % 2 == 1, "idft: grid must describe an odd record");
	require(sp.coeffs[0].size() == sp.size() && sp.coeffs[1].size() == sp.size(), "idft: coefficient count mismatch");
	const auto w = detail::twiddles(n);
	ChannelSeries ts(sp.grid.dt, n);
	const double inv_n = 1.0 / static_cast<double>(n);
	for (std::size_t c = 0; c < 2; ++c) {
		const auto& X = sp.coeffs[c];
		for (std::size_t m = 0; m < n; ++m) {
			double acc = 0.0;
			std::size_t idx = 0;
			for (std::size_t k = 1; k < X.size(); ++k) {
				idx += m;
				if (idx >= n) idx -= n;
				// Re(X_k e^{+j theta}) with w = e^{-j theta}
				acc += X[k].real() * w[idx].real() + X[k].imag() * w[idx].imag();
			}
			ts.ch[c][m] = (X[0].real() + 2.0 * acc) * inv_n;
		}
	}
	return ts;
}

/// One-sided PSD: |X_k|^2 dt / N, doubled for k >= 1.
inline std::vector<double> psd(const Spectrum& sp, std::size_t channel) {
	require(channel < 2, "psd: channel index must be 0 or 1");
	const auto& X = sp.coeffs[channel];
	const double scale = sp.grid.dt / static_cast<double>(sp.grid.n_samples);
	std::vector<double> out(X.size());
	for (std::size_t k = 0; k < X.size(); ++k) out[k] = std::norm(X[k]) * scale * (k == 0 ? 1.0 : 2.0);
	return out;
}

} // namespace bayesid
