#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "rng.hpp"

namespace bayesid {

template <class F>
concept Objective = std::invocable<const F&, const Eigen::VectorXd&> &&
	std::convertible_to<std::invoke_result_t<const F&, const Eigen::VectorXd&>, double>;

enum class Termination { Converged, MaxIter, Degenerate };

inline const char* to_string(Termination t) noexcept {
	switch (t) {
	case Termination::Converged: return "Converged";
	case Termination::MaxIter: return "MaxIter";
	case Termination::Degenerate: return "Degenerate";
	}
	return "Unknown";
}

/// Box constraints; an empty box is unbounded.
struct Bounds {
	Eigen::VectorXd lower;
	Eigen::VectorXd upper;

	bool empty() const noexcept { return lower.size() == 0; }

	void validate(Eigen::Index dim) const {
		if (empty()) return;
		require(lower.size() == dim && upper.size() == dim, "bounds: dimension mismatch");
		for (Eigen::Index i = 0; i < dim; ++i) require(lower(i) < upper(i), "bounds: need lo < hi componentwise");
	}

	Eigen::VectorXd clip(Eigen::VectorXd x) const {
		if (empty()) return x;
		return x.cwiseMax(lower).cwiseMin(upper);
	}

	bool contains(const Eigen::VectorXd& x) const {
		if (empty()) return true;
		return (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
	}
};

struct CEConfig {
	std::size_t n_samples = 200;
	std::size_t n_elite = 20;
	double alpha = 0.7;
	double eps = 1e-4;
	std::size_t max_iter = 200;
	std::uint64_t seed = 0;
	Bounds bounds;
	std::size_t threads = 1; ///< objective evaluations per iteration may run in parallel

	void validate(Eigen::Index dim) const {
		require(n_elite >= 1 && n_elite <= n_samples, "cross_entropy: need 1 <= n_elite <= n_samples");
		require(alpha > 0.0 && alpha <= 1.0, "cross_entropy: alpha must lie in (0, 1]");
		require(eps > 0.0, "cross_entropy: eps must be positive");
		require(max_iter >= 1, "cross_entropy: max_iter must be >= 1");
		bounds.validate(dim);
	}
};

struct TraceEntry {
	std::size_t iter = 0;
	Eigen::VectorXd mean;
	Eigen::VectorXd sigma;
	double best_f = 0.0;
	double mean_f_elite = 0.0;
	double sigma_max = 0.0;
};

struct OptResult {
	Eigen::VectorXd theta_post;
	double objective_final = std::numeric_limits<double>::infinity();
	std::size_t iterations = 0;
	Eigen::VectorXd sigma_final;
	std::vector<TraceEntry> trace;
	Termination termination = Termination::MaxIter;
	std::size_t evaluations = 0;
};

namespace detail {

/// Library errors and NaN both map to +inf so that ranking stays total.
template <Objective F>
double safe_eval(const F& f, const Eigen::VectorXd& x) {
	try {
		const double v = f(x);
		return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
	} catch (const Error&) {
		return std::numeric_limits<double>::infinity();
	}
}

template <Objective F>
void evaluate_batch(const F& f, const std::vector<Eigen::VectorXd>& xs, std::vector<double>& out, std::size_t threads) {
	out.resize(xs.size());
	if (threads <= 1 || xs.size() < 2) {
		for (std::size_t i = 0; i < xs.size(); ++i) out[i] = safe_eval(f, xs[i]);
		return;
	}
	threads = std::min(threads, xs.size());
	std::vector<std::thread> pool;
	pool.reserve(threads);
	for (std::size_t t = 0; t < threads; ++t)
		pool.emplace_back([&, t] {
			for (std::size_t i = t; i < xs.size(); i += threads) out[i] = safe_eval(f, xs[i]);
		});
	for (auto& th : pool) th.join();
}

} // namespace detail

/// Cross-entropy minimization with componentwise Gaussian sampling.
///
/// Each iteration draws n_samples points from N(mean, sigma^2) (clipped to
/// the bounds), keeps the n_elite lowest objective values (ties broken by
/// sample index), refits mean and standard deviation to the elite set and
/// smooths both with factor alpha. Stops once max(sigma) < eps after an
/// iteration, or at max_iter. The best point ever evaluated is returned.
template <Objective F>
OptResult cross_entropy(const F& f, const Eigen::VectorXd& theta0, const Eigen::VectorXd& sigma0, const CEConfig& cfg) {
	const Eigen::Index n = theta0.size();
	require(n >= 1, "cross_entropy: empty parameter vector");
	require(sigma0.size() == n, "cross_entropy: sigma0 dimension mismatch");
	require((sigma0.array() > 0.0).all(), "cross_entropy: sigma0 must be positive");
	cfg.validate(n);
	require(cfg.bounds.contains(theta0), "cross_entropy: theta0 outside bounds");

	Rng rng(cfg.seed);
	Eigen::VectorXd mean = theta0;
	Eigen::VectorXd sigma = sigma0;
	const double inf = std::numeric_limits<double>::infinity();

	OptResult res;
	res.theta_post = theta0;
	res.objective_final = inf;
	bool have_best = false;
	int nonfinite_streak = 0;

	std::vector<Eigen::VectorXd> xs(cfg.n_samples, Eigen::VectorXd(n));
	std::vector<double> fx;
	std::vector<std::size_t> order(cfg.n_samples);

	for (std::size_t t = 1;; ++t) {
		// all draws for the iteration happen before any evaluation
		for (auto& x : xs) {
			for (Eigen::Index j = 0; j < n; ++j) x(j) = mean(j) + sigma(j) * rng.normal();
			x = cfg.bounds.clip(x);
		}
		detail::evaluate_batch(f, xs, fx, cfg.threads);
		res.evaluations += xs.size();

		TraceEntry entry;
		entry.iter = t;
		const bool any_finite = std::any_of(fx.begin(), fx.end(), [](double v) { return std::isfinite(v); });
		if (!any_finite) {
			++nonfinite_streak;
			entry.mean_f_elite = inf;
		} else {
			nonfinite_streak = 0;
			std::iota(order.begin(), order.end(), std::size_t{0});
			std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fx[a] < fx[b]; });
			Eigen::VectorXd elite_mean = Eigen::VectorXd::Zero(n);
			double f_elite = 0.0;
			for (std::size_t e = 0; e < cfg.n_elite; ++e) {
				elite_mean += xs[order[e]];
				f_elite += fx[order[e]];
			}
			elite_mean /= static_cast<double>(cfg.n_elite);
			Eigen::VectorXd elite_var = Eigen::VectorXd::Zero(n);
			for (std::size_t e = 0; e < cfg.n_elite; ++e) elite_var += (xs[order[e]] - elite_mean).array().square().matrix();
			elite_var /= static_cast<double>(cfg.n_elite);
			mean = cfg.alpha * elite_mean + (1.0 - cfg.alpha) * mean;
			sigma = cfg.alpha * elite_var.cwiseSqrt() + (1.0 - cfg.alpha) * sigma;
			entry.mean_f_elite = f_elite / static_cast<double>(cfg.n_elite);

			const std::size_t top = order.front();
			if (fx[top] < res.objective_final) {
				res.objective_final = fx[top];
				res.theta_post = xs[top];
				have_best = true;
			}
		}
		entry.mean = mean;
		entry.sigma = sigma;
		entry.best_f = res.objective_final;
		entry.sigma_max = sigma.maxCoeff();
		res.trace.push_back(std::move(entry));
		res.iterations = t;

		if (nonfinite_streak >= 3) {
			res.termination = Termination::Degenerate;
			break;
		}
		if (sigma.maxCoeff() < cfg.eps) {
			res.termination = Termination::Converged;
			break;
		}
		if (t >= cfg.max_iter) {
			res.termination = Termination::MaxIter;
			break;
		}
	}
	if (!have_best) res.objective_final = detail::safe_eval(f, res.theta_post);
	res.sigma_final = sigma;
	return res;
}

/// Central differences with step h_rel * max(|theta_j|, 1e-8).
template <Objective F>
Eigen::VectorXd fd_gradient(const F& f, const Eigen::VectorXd& theta, double h_rel = 1e-6) {
	require(h_rel > 0.0, "fd_gradient: h_rel must be positive");
	Eigen::VectorXd g(theta.size());
	Eigen::VectorXd x = theta;
	for (Eigen::Index j = 0; j < theta.size(); ++j) {
		const double h = h_rel * std::max(std::abs(theta(j)), 1e-8);
		x(j) = theta(j) + h;
		const double fp = f(x);
		x(j) = theta(j) - h;
		const double fm = f(x);
		x(j) = theta(j);
		g(j) = (fp - fm) / (2.0 * h);
		if (!std::isfinite(g(j)))
			fail(ErrorKind::NonFiniteObjective, "fd_gradient: non-finite difference in component " + std::to_string(j));
	}
	return g;
}

struct QNConfig {
	double tol = 1e-6;          ///< projected-gradient norm
	std::size_t max_iter = 200;
	double h_rel = 1e-6;
	Bounds bounds;
};

namespace detail {

// Central differences where the stencil fits in the box, one-sided otherwise.
template <Objective F>
Eigen::VectorXd fd_gradient_boxed(const F& f, const Eigen::VectorXd& x0, double f0, double h_rel, const Bounds& box) {
	if (box.empty()) return fd_gradient(f, x0, h_rel);
	Eigen::VectorXd g(x0.size());
	Eigen::VectorXd x = x0;
	for (Eigen::Index j = 0; j < x0.size(); ++j) {
		const double h = h_rel * std::max(std::abs(x0(j)), 1e-8);
		const bool up = x0(j) + h <= box.upper(j);
		const bool down = x0(j) - h >= box.lower(j);
		double fp = f0, fm = f0, span = 0.0;
		if (up) {
			x(j) = x0(j) + h;
			fp = f(x);
			span += h;
		}
		if (down) {
			x(j) = x0(j) - h;
			fm = f(x);
			span += h;
		}
		x(j) = x0(j);
		g(j) = span > 0.0 ? (fp - fm) / span : 0.0;
		if (!std::isfinite(g(j))) fail(ErrorKind::NonFiniteObjective, "fd_gradient: non-finite difference");
	}
	return g;
}

inline Eigen::VectorXd projected_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& g, const Bounds& box) {
	if (box.empty()) return g;
	Eigen::VectorXd pg = g;
	for (Eigen::Index j = 0; j < x.size(); ++j)
		if ((x(j) <= box.lower(j) && g(j) > 0.0) || (x(j) >= box.upper(j) && g(j) < 0.0)) pg(j) = 0.0;
	return pg;
}

} // namespace detail

/// Projected BFGS on finite-difference gradients with Armijo backtracking.
/// Comparison baseline for cross_entropy.
template <Objective F>
OptResult quasi_newton(const F& f, const Eigen::VectorXd& theta0, const QNConfig& cfg) {
	const Eigen::Index n = theta0.size();
	require(n >= 1, "quasi_newton: empty parameter vector");
	cfg.bounds.validate(n);
	require(cfg.bounds.contains(theta0), "quasi_newton: theta0 outside bounds");

	OptResult res;
	res.sigma_final = Eigen::VectorXd::Zero(n);
	Eigen::VectorXd x = theta0;
	double fx = detail::safe_eval(f, x);
	res.evaluations = 1;
	res.theta_post = x;
	res.objective_final = fx;
	if (!std::isfinite(fx)) {
		res.termination = Termination::Degenerate;
		return res;
	}

	auto counted = [&](const Eigen::VectorXd& z) {
		++res.evaluations;
		return f(z);
	};

	Eigen::VectorXd g;
	try {
		g = detail::fd_gradient_boxed(counted, x, fx, cfg.h_rel, cfg.bounds);
	} catch (const Error&) {
		res.termination = Termination::Degenerate;
		return res;
	}
	Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
	bool fresh = true;

	for (std::size_t it = 1;; ++it) {
		const Eigen::VectorXd pg = detail::projected_gradient(x, g, cfg.bounds);
		if (pg.norm() < cfg.tol) {
			res.termination = Termination::Converged;
			break;
		}
		if (it > cfg.max_iter) {
			res.termination = Termination::MaxIter;
			break;
		}

		Eigen::VectorXd d = -(H * g);
		for (Eigen::Index j = 0; j < n; ++j)
			if (pg(j) == 0.0) d(j) = 0.0;
		if (!(g.dot(d) < 0.0)) {
			H.setIdentity();
			fresh = true;
			d = -pg;
		}

		bool accepted = false;
		Eigen::VectorXd xn;
		double fn = 0.0;
		for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
			double step = 1.0;
			for (int ls = 0; ls < 60; ++ls, step *= 0.5) {
				xn = cfg.bounds.clip(x + step * d);
				fn = detail::safe_eval(counted, xn);
				if (std::isfinite(fn) && fn <= fx + 1e-4 * g.dot(xn - x)) {
					accepted = true;
					break;
				}
			}
			if (!accepted && !fresh) {
				H.setIdentity();
				fresh = true;
				d = -pg;
			} else {
				break;
			}
		}
		if (!accepted) {
			res.termination = Termination::Degenerate;
			break;
		}

		Eigen::VectorXd gn;
		bool gradient_failed = false;
		try {
			gn = detail::fd_gradient_boxed(counted, xn, fn, cfg.h_rel, cfg.bounds);
		} catch (const Error&) {
			gn = g;
			gradient_failed = true;
		}
		const Eigen::VectorXd s = xn - x;
		const Eigen::VectorXd y = gn - g;
		const double sy = s.dot(y);
		if (sy > 1e-12 * s.norm() * y.norm() && sy > 0.0) {
			if (fresh) H *= sy / y.squaredNorm();
			const double rho = 1.0 / sy;
			const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
			H = (I - rho * s * y.transpose()) * H * (I - rho * y * s.transpose()) + rho * s * s.transpose();
			fresh = false;
		}
		const bool stalled = s.norm() <= 1e-15 * (1.0 + x.norm());
		x = xn;
		fx = fn;
		g = gn;
		res.iterations = it;

		TraceEntry entry;
		entry.iter = it;
		entry.mean = x;
		entry.sigma = Eigen::VectorXd::Zero(n);
		entry.best_f = fx;
		entry.mean_f_elite = fx;
		entry.sigma_max = 0.0;
		res.trace.push_back(std::move(entry));
		if (gradient_failed) {
			res.termination = Termination::Degenerate;
			break;
		}
		if (stalled) {
			res.termination = Termination::Converged;
			break;
		}
	}
	res.theta_post = x;
	res.objective_final = fx;
	return res;
}

} // namespace bayesid
