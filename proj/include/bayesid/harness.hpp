#pragma once

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "inference.hpp"
#include "model.hpp"
#include "optimize.hpp"
#include "rng.hpp"
#include "simulate.hpp"
#include "spectral.hpp"

namespace bayesid {

enum class Method { CE, QuasiNewton };

inline const char* to_string(Method m) noexcept { return m == Method::CE ? "ce" : "qn"; }

inline Method parse_method(const std::string& s) {
	if (s == "ce") return Method::CE;
	if (s == "qn") return Method::QuasiNewton;
	fail(ErrorKind::Config, "method: expected \"ce\" or \"qn\", got \"" + s + "\"");
}

// Stream tags for derive_seed.
namespace seed_tag {
inline constexpr std::uint64_t prior = 0x7072696f72ull;
inline constexpr std::uint64_t input = 0x696e707574ull;
inline constexpr std::uint64_t noise_u = 0x6e6f69736575ull;
inline constexpr std::uint64_t noise_y = 0x6e6f69736579ull;
inline constexpr std::uint64_t optimizer = 0x6f7074ull;
} // namespace seed_tag

/// Everything a scenario needs besides its own id and SNR.
template <AdmittanceModel Model>
struct ExperimentSetup {
	Model model{};
	Eigen::VectorXd theta_true;
	std::size_t K = 1000;
	double dt = 0.02;
	double sigma_u = 0.01;
	std::uint64_t root_seed = 1;
	double prior_spread = 0.5;    ///< prior mean drawn uniformly in [(1-s), (1+s)] * true
	double prior_std_frac = 0.5;  ///< prior std = frac * |true|
	double sigma0_frac = 0.5;     ///< CE initial std = frac * |theta0| (normalized units)
	double bound_lo = 0.05;       ///< normalized box, times |prior|
	double bound_hi = 4.0;
	CEConfig ce{};
	QNConfig qn{};
	std::size_t threads = 1; ///< scenario-level parallelism in snr_sweep
};

struct ScenarioSpec {
	std::size_t scenario_id = 0;
	double snr = 10.0;
	std::uint64_t prior_seed = 0;
	std::uint64_t input_seed = 0;
	std::uint64_t noise_u_seed = 0;
	std::uint64_t noise_y_seed = 0;
	std::uint64_t optimizer_seed = 0;
};

/// Seeds depend on (root, scenario id) and, for noise and optimizer, on the
/// SNR value itself, never on its position in a sweep.
inline ScenarioSpec make_scenario(std::uint64_t root_seed, std::size_t scenario_id, double snr) {
	ScenarioSpec s;
	s.scenario_id = scenario_id;
	s.snr = snr;
	const auto id = static_cast<std::uint64_t>(scenario_id);
	const auto snr_bits = std::bit_cast<std::uint64_t>(snr);
	s.prior_seed = derive_seed(root_seed, seed_tag::prior, id);
	s.input_seed = derive_seed(root_seed, seed_tag::input, id);
	s.noise_u_seed = derive_seed(derive_seed(root_seed, seed_tag::noise_u, id), snr_bits, 0);
	s.noise_y_seed = derive_seed(derive_seed(root_seed, seed_tag::noise_y, id), snr_bits, 0);
	s.optimizer_seed = derive_seed(derive_seed(root_seed, seed_tag::optimizer, id), snr_bits, 0);
	return s;
}

inline Eigen::VectorXd draw_prior_mean(const Eigen::VectorXd& theta_true, double spread, std::uint64_t seed) {
	Rng rng(seed);
	Eigen::VectorXd m(theta_true.size());
	for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = theta_true(i) * rng.uniform(1.0 - spread, 1.0 + spread);
	return m;
}

/// Objective in units normalized componentwise by |reference|.
template <class F>
struct NormalizedObjective {
	const F* f;
	Eigen::VectorXd scale;

	Eigen::VectorXd to_physical(const Eigen::VectorXd& x) const { return x.cwiseProduct(scale); }
	Eigen::VectorXd to_normalized(const Eigen::VectorXd& theta) const { return theta.cwiseQuotient(scale); }
	double operator()(const Eigen::VectorXd& x) const { return (*f)(to_physical(x)); }
};

inline Eigen::VectorXd normalization_scale(const Eigen::VectorXd& reference) {
	Eigen::VectorXd s = reference.cwiseAbs();
	for (Eigen::Index i = 0; i < s.size(); ++i)
		if (s(i) == 0.0) s(i) = 1.0;
	return s;
}

/// Synthetic measurement record for one scenario.
struct MeasuredData {
	ChannelSeries u, y;           ///< clean
	ChannelSeries u_meas, y_meas; ///< with measurement noise
	std::array<double, 2> noise_u{}, noise_y{};
};

template <AdmittanceModel Model>
MeasuredData make_data(const ExperimentSetup<Model>& setup, const ScenarioSpec& spec) {
	MeasuredData d;
	d.u = ambient_input(setup.K, setup.dt, setup.sigma_u, spec.input_seed);
	d.y = synthesize_output(setup.model, std::span<const double>(setup.theta_true.data(), setup.theta_true.size()), d.u);
	auto nu = add_noise(d.u, {spec.snr, spec.noise_u_seed});
	auto ny = add_noise(d.y, {spec.snr, spec.noise_y_seed});
	d.u_meas = std::move(nu.noisy);
	d.y_meas = std::move(ny.noisy);
	d.noise_u = nu.sigma;
	d.noise_y = ny.sigma;
	return d;
}

struct FitOutcome {
	Eigen::VectorXd theta_post; ///< physical units
	ObjectiveValue value;
	OptResult opt;              ///< normalized units
};

/// Minimizes the MAP objective of `pp` from theta_start with the chosen method.
template <AdmittanceModel Model>
FitOutcome fit_posterior(const PosteriorProblem<Model>& pp, const Eigen::VectorXd& theta_start, Method method,
						 const ExperimentSetup<Model>& setup, std::uint64_t optimizer_seed) {
	auto f = [&pp](const Eigen::VectorXd& theta) { return objective(pp, theta).total; };
	NormalizedObjective<decltype(f)> nf{&f, normalization_scale(theta_start)};
	const Eigen::VectorXd x0 = nf.to_normalized(theta_start);
	Bounds box;
	box.lower = Eigen::VectorXd::Constant(x0.size(), setup.bound_lo);
	box.upper = Eigen::VectorXd::Constant(x0.size(), setup.bound_hi);
	for (Eigen::Index i = 0; i < x0.size(); ++i)
		if (x0(i) < 0.0) {
			box.lower(i) = -setup.bound_hi;
			box.upper(i) = -setup.bound_lo;
		}

	FitOutcome out;
	if (method == Method::CE) {
		CEConfig cfg = setup.ce;
		cfg.seed = optimizer_seed;
		cfg.bounds = box;
		const Eigen::VectorXd sigma0 = (setup.sigma0_frac * x0.cwiseAbs()).cwiseMax(1e-12);
		out.opt = cross_entropy(nf, x0, sigma0, cfg);
	} else {
		QNConfig cfg = setup.qn;
		cfg.bounds = box;
		out.opt = quasi_newton(nf, x0, cfg);
	}
	out.theta_post = nf.to_physical(out.opt.theta_post);
	try {
		out.value = objective(pp, out.theta_post);
	} catch (const Error&) {
		out.value = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), 0.0};
	}
	return out;
}

template <AdmittanceModel Model>
Prior scenario_prior(const ExperimentSetup<Model>& setup, const Eigen::VectorXd& prior_mean) {
	Prior p;
	p.mean = prior_mean;
	p.variances = (setup.prior_std_frac * setup.theta_true.cwiseAbs()).array().square().matrix();
	return p;
}

struct ScenarioResult {
	ScenarioSpec spec;
	Method method = Method::CE;
	Eigen::VectorXd theta_prior;
	Eigen::VectorXd estimate;
	ObjectiveValue value;
	Termination termination = Termination::MaxIter;
	std::size_t iterations = 0;
	std::size_t evaluations = 0;
	double seconds = 0.0;
};

/// One cell of the protocol: prior draw, data synthesis, noise, inference.
template <AdmittanceModel Model>
ScenarioResult run_scenario(const ExperimentSetup<Model>& setup, const ScenarioSpec& spec, Method method) {
	const auto t0 = std::chrono::steady_clock::now();
	ScenarioResult r;
	r.spec = spec;
	r.method = method;
	r.theta_prior = draw_prior_mean(setup.theta_true, setup.prior_spread, spec.prior_seed);
	const MeasuredData d = make_data(setup, spec);
	const PosteriorProblem<Model> pp(dft(d.u_meas), dft(d.y_meas), setup.model, d.noise_u, d.noise_y,
									 scenario_prior(setup, r.theta_prior));
	const FitOutcome fit = fit_posterior(pp, r.theta_prior, method, setup, spec.optimizer_seed);
	r.estimate = fit.theta_post;
	r.value = fit.value;
	r.termination = fit.opt.termination;
	r.iterations = fit.opt.iterations;
	r.evaluations = fit.opt.evaluations;
	r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
	return r;
}

struct Aggregate {
	double snr = 0.0;
	Method method = Method::CE;
	std::string param;
	std::size_t param_index = 0;
	double mean = 0.0;
	double std = 0.0; ///< unbiased (n-1)
	std::size_t count = 0;
};

struct SweepReport {
	std::vector<std::string> param_names;
	Eigen::VectorXd theta_true;
	std::vector<double> snrs;
	std::vector<Method> methods;
	std::size_t n_scenarios = 0;
	std::vector<ScenarioResult> rows;  ///< ordered (snr, scenario, method)
	std::vector<Aggregate> aggregates; ///< ordered (snr, method, param)

	const Aggregate& aggregate(double snr, Method m, std::size_t param) const {
		for (const auto& a : aggregates)
			if (a.snr == snr && a.method == m && a.param_index == param) return a;
		fail(ErrorKind::InvalidArgument, "sweep report: no such aggregate cell");
	}
};

/// Mean and unbiased std of each parameter over the rows matching (snr, method).
inline std::vector<Aggregate> aggregate_rows(const std::vector<ScenarioResult>& rows,
											 const std::vector<std::string>& names, const std::vector<double>& snrs,
											 const std::vector<Method>& methods) {
	std::vector<Aggregate> out;
	for (double snr : snrs)
		for (Method m : methods)
			for (std::size_t p = 0; p < names.size(); ++p) {
				std::vector<double> v;
				for (const auto& r : rows)
					if (r.spec.snr == snr && r.method == m) v.push_back(r.estimate(static_cast<Eigen::Index>(p)));
				Aggregate a;
				a.snr = snr;
				a.method = m;
				a.param = names[p];
				a.param_index = p;
				a.count = v.size();
				double sum = 0.0;
				for (double x : v) sum += x;
				a.mean = v.empty() ? 0.0 : sum / static_cast<double>(v.size());
				double ss = 0.0;
				for (double x : v) ss += (x - a.mean) * (x - a.mean);
				a.std = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
				out.push_back(std::move(a));
			}
	return out;
}

/// All (snr x scenario x method) cells. The same scenario ids, hence the
/// same prior draws and input records, are reused at every SNR.
template <AdmittanceModel Model>
SweepReport snr_sweep(const ExperimentSetup<Model>& setup, const std::vector<double>& snrs, std::size_t n_scenarios,
					  const std::vector<Method>& methods) {
	require(n_scenarios >= 2, "snr_sweep: need at least 2 scenarios");
	require(!snrs.empty() && !methods.empty(), "snr_sweep: empty SNR or method list");
	SweepReport rep;
	rep.param_names = setup.model.param_names();
	rep.theta_true = setup.theta_true;
	rep.snrs = snrs;
	rep.methods = methods;
	rep.n_scenarios = n_scenarios;

	struct Cell {
		ScenarioSpec spec;
		Method method;
	};
	std::vector<Cell> cells;
	for (double snr : snrs)
		for (std::size_t s = 0; s < n_scenarios; ++s)
			for (Method m : methods) cells.push_back({make_scenario(setup.root_seed, s, snr), m});

	rep.rows.resize(cells.size());
	std::atomic<std::size_t> next{0};
	auto worker = [&] {
		for (std::size_t i = next++; i < cells.size(); i = next++)
			rep.rows[i] = run_scenario(setup, cells[i].spec, cells[i].method);
	};
	const std::size_t threads = std::max<std::size_t>(1, std::min(setup.threads, cells.size()));
	if (threads == 1) {
		worker();
	} else {
		std::vector<std::thread> pool;
		for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
		for (auto& th : pool) th.join();
	}
	rep.aggregates = aggregate_rows(rep.rows, rep.param_names, snrs, methods);
	return rep;
}

/// Measured and predicted output PSD for one channel, before (prior) and
/// after (posterior) inference, over the active bins.
struct PsdReport {
	std::size_t channel = 0;
	std::vector<double> omegas;
	std::vector<double> measured;
	std::vector<double> predicted_prior;
	std::vector<double> predicted_post;

	static double integrated_gap(const std::vector<double>& a, const std::vector<double>& b, double spacing) {
		double acc = 0.0;
		for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
		return acc * spacing;
	}
	double spacing() const { return omegas.size() > 1 ? omegas[1] - omegas[0] : 1.0; }
	double gap_before() const { return integrated_gap(predicted_prior, measured, spacing()); }
	double gap_after() const { return integrated_gap(predicted_post, measured, spacing()); }
};

template <AdmittanceModel Model>
PsdReport psd_report(const PosteriorProblem<Model>& pp, const Eigen::VectorXd& theta_prior,
					 const Eigen::VectorXd& theta_post, std::size_t channel = 0) {
	require(channel < 2, "psd_report: channel must be 0 or 1");
	const auto& g = pp.grid();
	const double scale = 2.0 * g.dt / static_cast<double>(g.n_samples);
	const auto Yprior = pp.model().bind(std::span<const double>(theta_prior.data(), theta_prior.size()));
	const auto Ypost = pp.model().bind(std::span<const double>(theta_post.data(), theta_post.size()));
	PsdReport rep;
	rep.channel = channel;
	const auto c = static_cast<Eigen::Index>(channel);
	for (std::size_t k : pp.active_bins()) {
		const double w = g.omegas[k];
		const Eigen::Vector2cd um = pp.measured_u(k);
		rep.omegas.push_back(w);
		rep.measured.push_back(std::norm(pp.measured_y(k)(c)) * scale);
		rep.predicted_prior.push_back(std::norm((Yprior(w) * um)(c)) * scale);
		rep.predicted_post.push_back(std::norm((Ypost(w) * um)(c)) * scale);
	}
	return rep;
}

} // namespace bayesid
