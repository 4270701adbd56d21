#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "harness.hpp"
#include "io.hpp"
#include "model.hpp"
#include "svg.hpp"

namespace bayesid::cli {

using nlohmann::json;

enum ExitCode : int { Ok = 0, Failure = 1, ConfigError = 2, DataError = 3 };

struct CeSettings {
	std::size_t n_samples = 200;
	std::size_t n_elite = 20;
	double alpha = 0.7;
	double eps = 1e-4;
	std::size_t max_iter = 200;
	std::size_t threads = 1;
};

struct QnSettings {
	double tol = 1e-6;
	std::size_t max_iter = 200;
	double h_rel = 1e-6;
};

struct SweepSettings {
	std::vector<double> snrs{1.0, 5.0, 10.0, 20.0};
	std::size_t n_scenarios = 20;
	std::vector<Method> methods{Method::CE, Method::QuasiNewton};
	double prior_spread = 0.5;
	std::size_t threads = 1;
};

/// Fully resolved run configuration. Every field has a default; to_json()
/// echoes all of them.
struct RunConfig {
	std::string model = "generator";
	std::vector<double> true_params;
	// generator operating point
	double V0 = 1.0;
	double theta0 = 0.0;
	double Pm = 0.5;
	// motor constants
	double we0 = 2.0 * std::numbers::pi * 50.0;
	double tau = 0.02;
	// sampling
	double dt = 0.02;
	std::size_t K = 1000;
	double sigma_u = 0.01;
	// noise
	double snr = 10.0;
	bool inject_noise = true;
	std::uint64_t seed = 1;
	// prior
	double prior_offset = 0.3;
	double prior_std_frac = 0.5;
	std::vector<double> prior_mean; ///< empty: true_params * (1 + offset)
	CeSettings ce;
	QnSettings qn;
	double bound_lo = 0.05;
	double bound_hi = 4.0;
	SweepSettings sweep;
	Method method = Method::CE;
	std::string out_dir = "out";

	std::vector<std::string> param_names() const {
		return model == "generator" ? GeneratorModel{}.param_names() : MotorModel{}.param_names();
	}
	Eigen::VectorXd theta_true() const { return Eigen::Map<const Eigen::VectorXd>(true_params.data(), 4); }
	Eigen::VectorXd resolved_prior_mean() const {
		if (!prior_mean.empty()) return Eigen::Map<const Eigen::VectorXd>(prior_mean.data(), 4);
		return theta_true() * (1.0 + prior_offset);
	}
};

inline std::vector<double> default_true_params(const std::string& model) {
	if (model == "motor") return {0.5, 0.08, 0.2, 0.5};
	return {0.25, 1.0, 1.0, 0.01};
}

namespace detail {

[[noreturn]] inline void config_error(const std::string& key, const std::string& what) {
	fail(ErrorKind::Config, "config: " + key + ": " + what);
}

inline void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
	if (!obj.is_object()) config_error(where.empty() ? "<root>" : where, "expected an object");
	for (const auto& [k, v] : obj.items())
		if (!allowed.count(k)) config_error(where.empty() ? k : where + "." + k, "unknown key");
}

inline double get_number(const json& obj, const std::string& key, const std::string& path, double fallback) {
	if (!obj.contains(key)) return fallback;
	const auto& v = obj.at(key);
	if (!v.is_number()) config_error(path, "expected a number");
	return v.get<double>();
}

inline std::size_t get_count(const json& obj, const std::string& key, const std::string& path, std::size_t fallback) {
	if (!obj.contains(key)) return fallback;
	const auto& v = obj.at(key);
	if (!v.is_number_integer() || v.get<std::int64_t>() < 0) config_error(path, "expected a non-negative integer");
	return v.get<std::size_t>();
}

inline std::vector<double> get_vector(const json& obj, const std::string& key, const std::string& path) {
	const auto& v = obj.at(key);
	if (!v.is_array()) config_error(path, "expected an array of numbers");
	std::vector<double> out;
	for (const auto& x : v) {
		if (!x.is_number()) config_error(path, "expected an array of numbers");
		out.push_back(x.get<double>());
	}
	return out;
}

inline void positive(double v, const std::string& path) {
	if (!(v > 0.0) || !std::isfinite(v)) config_error(path, "must be positive");
}

} // namespace detail

inline void validate(const RunConfig& c) {
	using detail::config_error;
	using detail::positive;
	if (c.true_params.size() != 4) config_error("true_params", "expected 4 values");
	if (!c.prior_mean.empty() && c.prior_mean.size() != 4) config_error("prior.mean", "expected 4 values");
	positive(c.dt, "sampling.dt");
	if (c.K < 1) config_error("sampling.K", "must be at least 1");
	positive(c.sigma_u, "sampling.sigma_u");
	positive(c.snr, "noise.snr");
	if (!(c.prior_offset > -1.0)) config_error("prior.offset", "must exceed -1");
	positive(c.prior_std_frac, "prior.std_frac");
	if (c.ce.n_samples < 2) config_error("ce.n_samples", "must be at least 2");
	if (c.ce.n_elite < 1 || c.ce.n_elite > c.ce.n_samples) config_error("ce.n_elite", "must be in [1, n_samples]");
	if (!(c.ce.alpha > 0.0 && c.ce.alpha <= 1.0)) config_error("ce.alpha", "must be in (0, 1]");
	positive(c.ce.eps, "ce.eps");
	if (c.ce.max_iter < 1) config_error("ce.max_iter", "must be at least 1");
	if (c.ce.threads < 1) config_error("ce.threads", "must be at least 1");
	positive(c.qn.tol, "qn.tol");
	if (c.qn.max_iter < 1) config_error("qn.max_iter", "must be at least 1");
	positive(c.qn.h_rel, "qn.h_rel");
	positive(c.bound_lo, "bounds.lo");
	if (!(c.bound_hi > c.bound_lo)) config_error("bounds.hi", "must exceed bounds.lo");
	if (c.sweep.snrs.empty()) config_error("sweep.snrs", "must not be empty");
	for (double s : c.sweep.snrs) positive(s, "sweep.snrs");
	if (c.sweep.n_scenarios < 2) config_error("sweep.n_scenarios", "must be at least 2");
	if (c.sweep.methods.empty()) config_error("sweep.methods", "must not be empty");
	if (!(c.sweep.prior_spread >= 0.0 && c.sweep.prior_spread < 1.0))
		config_error("sweep.prior_spread", "must be in [0, 1)");
	if (c.sweep.threads < 1) config_error("sweep.threads", "must be at least 1");
	positive(c.V0, "operating_point.V0");
	if (c.model == "motor") {
		positive(c.we0, "operating_point.we0");
		if (!(c.tau >= 0.0)) config_error("operating_point.tau", "must be non-negative");
	}

	// Model preconditions at the true and prior parameters.
	auto check_point = [&](const std::vector<double>& theta, const std::string& key) {
		try {
			if (c.model == "generator") {
				const auto p = GenParams::from(theta);
				p.validate();
				gen_steady_state(p, c.V0, c.theta0, c.Pm);
			} else {
				MotorModel m{c.V0, c.we0, c.tau};
				const auto p = m.params(theta);
				p.validate();
				motor_steady_state(p);
			}
		} catch (const Error& e) {
			config_error(key, e.what());
		}
	};
	check_point(c.true_params, "true_params");
	const Eigen::VectorXd pm = c.resolved_prior_mean();
	check_point(std::vector<double>(pm.data(), pm.data() + pm.size()), c.prior_mean.empty() ? "prior.offset" : "prior.mean");
}

/// Parses and validates a config document. Unknown keys and type errors
/// raise ErrorKind::Config with the dotted key path in the message.
inline RunConfig parse_config(const json& j) {
	using detail::check_keys;
	using detail::get_count;
	using detail::get_number;
	RunConfig c;
	check_keys(j, "", {"model", "true_params", "operating_point", "sampling", "noise", "seed", "prior", "ce", "qn",
					   "bounds", "sweep", "method", "out_dir"});
	if (j.contains("model")) {
		if (!j["model"].is_string()) detail::config_error("model", "expected a string");
		c.model = j["model"].get<std::string>();
		if (c.model != "generator" && c.model != "motor")
			detail::config_error("model", "expected \"generator\" or \"motor\"");
	}
	c.true_params = j.contains("true_params") ? detail::get_vector(j, "true_params", "true_params")
											  : default_true_params(c.model);
	if (j.contains("operating_point")) {
		const auto& o = j["operating_point"];
		if (c.model == "generator") {
			check_keys(o, "operating_point", {"V0", "theta0", "Pm"});
			c.theta0 = get_number(o, "theta0", "operating_point.theta0", c.theta0);
			c.Pm = get_number(o, "Pm", "operating_point.Pm", c.Pm);
		} else {
			check_keys(o, "operating_point", {"V0", "we0", "tau"});
			c.we0 = get_number(o, "we0", "operating_point.we0", c.we0);
			c.tau = get_number(o, "tau", "operating_point.tau", c.tau);
		}
		c.V0 = get_number(o, "V0", "operating_point.V0", c.V0);
	}
	if (j.contains("sampling")) {
		const auto& s = j["sampling"];
		check_keys(s, "sampling", {"dt", "K", "sigma_u"});
		c.dt = get_number(s, "dt", "sampling.dt", c.dt);
		c.K = get_count(s, "K", "sampling.K", c.K);
		c.sigma_u = get_number(s, "sigma_u", "sampling.sigma_u", c.sigma_u);
	}
	if (j.contains("noise")) {
		const auto& n = j["noise"];
		check_keys(n, "noise", {"snr", "inject"});
		c.snr = get_number(n, "snr", "noise.snr", c.snr);
		if (n.contains("inject")) {
			if (!n["inject"].is_boolean()) detail::config_error("noise.inject", "expected true or false");
			c.inject_noise = n["inject"].get<bool>();
		}
	}
	if (j.contains("seed")) {
		if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<std::int64_t>() >= 0))
			detail::config_error("seed", "expected a non-negative integer");
		c.seed = j["seed"].get<std::uint64_t>();
	}
	if (j.contains("prior")) {
		const auto& p = j["prior"];
		check_keys(p, "prior", {"offset", "std_frac", "mean"});
		c.prior_offset = get_number(p, "offset", "prior.offset", c.prior_offset);
		c.prior_std_frac = get_number(p, "std_frac", "prior.std_frac", c.prior_std_frac);
		if (p.contains("mean")) c.prior_mean = detail::get_vector(p, "mean", "prior.mean");
	}
	if (j.contains("ce")) {
		const auto& e = j["ce"];
		check_keys(e, "ce", {"n_samples", "n_elite", "alpha", "eps", "max_iter", "threads"});
		c.ce.n_samples = get_count(e, "n_samples", "ce.n_samples", c.ce.n_samples);
		c.ce.n_elite = get_count(e, "n_elite", "ce.n_elite", c.ce.n_elite);
		c.ce.alpha = get_number(e, "alpha", "ce.alpha", c.ce.alpha);
		c.ce.eps = get_number(e, "eps", "ce.eps", c.ce.eps);
		c.ce.max_iter = get_count(e, "max_iter", "ce.max_iter", c.ce.max_iter);
		c.ce.threads = get_count(e, "threads", "ce.threads", c.ce.threads);
	}
	if (j.contains("qn")) {
		const auto& q = j["qn"];
		check_keys(q, "qn", {"tol", "max_iter", "h_rel"});
		c.qn.tol = get_number(q, "tol", "qn.tol", c.qn.tol);
		c.qn.max_iter = get_count(q, "max_iter", "qn.max_iter", c.qn.max_iter);
		c.qn.h_rel = get_number(q, "h_rel", "qn.h_rel", c.qn.h_rel);
	}
	if (j.contains("bounds")) {
		const auto& b = j["bounds"];
		check_keys(b, "bounds", {"lo", "hi"});
		c.bound_lo = get_number(b, "lo", "bounds.lo", c.bound_lo);
		c.bound_hi = get_number(b, "hi", "bounds.hi", c.bound_hi);
	}
	if (j.contains("sweep")) {
		const auto& s = j["sweep"];
		check_keys(s, "sweep", {"snrs", "n_scenarios", "methods", "prior_spread", "threads"});
		if (s.contains("snrs")) c.sweep.snrs = detail::get_vector(s, "snrs", "sweep.snrs");
		c.sweep.n_scenarios = get_count(s, "n_scenarios", "sweep.n_scenarios", c.sweep.n_scenarios);
		if (s.contains("methods")) {
			if (!s["methods"].is_array()) detail::config_error("sweep.methods", "expected an array of strings");
			c.sweep.methods.clear();
			for (const auto& m : s["methods"]) {
				if (!m.is_string()) detail::config_error("sweep.methods", "expected an array of strings");
				try {
					c.sweep.methods.push_back(parse_method(m.get<std::string>()));
				} catch (const Error& e) {
					detail::config_error("sweep.methods", e.what());
				}
			}
		}
		c.sweep.prior_spread = get_number(s, "prior_spread", "sweep.prior_spread", c.sweep.prior_spread);
		c.sweep.threads = get_count(s, "threads", "sweep.threads", c.sweep.threads);
	}
	if (j.contains("method")) {
		if (!j["method"].is_string()) detail::config_error("method", "expected a string");
		try {
			c.method = parse_method(j["method"].get<std::string>());
		} catch (const Error& e) {
			detail::config_error("method", e.what());
		}
	}
	if (j.contains("out_dir")) {
		if (!j["out_dir"].is_string()) detail::config_error("out_dir", "expected a string");
		c.out_dir = j["out_dir"].get<std::string>();
	}
	validate(c);
	return c;
}

inline RunConfig load_config(const std::string& path) {
	std::ifstream in(path);
	if (!in) fail(ErrorKind::Config, "config: cannot open " + path);
	json j;
	try {
		in >> j;
	} catch (const json::parse_error& e) {
		fail(ErrorKind::Config, std::string("config: invalid JSON: ") + e.what());
	}
	return parse_config(j);
}

inline json to_json(const RunConfig& c) {
	json j;
	j["model"] = c.model;
	j["true_params"] = c.true_params;
	if (c.model == "generator")
		j["operating_point"] = {{"V0", c.V0}, {"theta0", c.theta0}, {"Pm", c.Pm}};
	else
		j["operating_point"] = {{"V0", c.V0}, {"we0", c.we0}, {"tau", c.tau}};
	j["sampling"] = {{"dt", c.dt}, {"K", c.K}, {"sigma_u", c.sigma_u}};
	j["noise"] = {{"snr", c.snr}, {"inject", c.inject_noise}};
	j["seed"] = c.seed;
	j["prior"] = {{"offset", c.prior_offset}, {"std_frac", c.prior_std_frac}};
	const Eigen::VectorXd pm = c.resolved_prior_mean();
	j["prior"]["mean"] = std::vector<double>(pm.data(), pm.data() + pm.size());
	j["ce"] = {{"n_samples", c.ce.n_samples}, {"n_elite", c.ce.n_elite}, {"alpha", c.ce.alpha},
			   {"eps", c.ce.eps},             {"max_iter", c.ce.max_iter}, {"threads", c.ce.threads}};
	j["qn"] = {{"tol", c.qn.tol}, {"max_iter", c.qn.max_iter}, {"h_rel", c.qn.h_rel}};
	j["bounds"] = {{"lo", c.bound_lo}, {"hi", c.bound_hi}};
	std::vector<std::string> methods;
	for (Method m : c.sweep.methods) methods.emplace_back(to_string(m));
	j["sweep"] = {{"snrs", c.sweep.snrs},
				  {"n_scenarios", c.sweep.n_scenarios},
				  {"methods", methods},
				  {"prior_spread", c.sweep.prior_spread},
				  {"threads", c.sweep.threads}};
	j["method"] = to_string(c.method);
	j["out_dir"] = c.out_dir;
	return j;
}

/// Calls f with the configured model object (GeneratorModel or MotorModel).
template <class F>
decltype(auto) with_model(const RunConfig& c, F&& f) {
	if (c.model == "generator") return f(GeneratorModel{c.V0, c.theta0, c.Pm});
	return f(MotorModel{c.V0, c.we0, c.tau});
}

template <AdmittanceModel Model>
ExperimentSetup<Model> make_setup(const RunConfig& c, Model model) {
	ExperimentSetup<Model> s;
	s.model = std::move(model);
	s.theta_true = c.theta_true();
	s.K = c.K;
	s.dt = c.dt;
	s.sigma_u = c.sigma_u;
	s.root_seed = c.seed;
	s.prior_spread = c.sweep.prior_spread;
	s.prior_std_frac = c.prior_std_frac;
	s.bound_lo = c.bound_lo;
	s.bound_hi = c.bound_hi;
	s.ce.n_samples = c.ce.n_samples;
	s.ce.n_elite = c.ce.n_elite;
	s.ce.alpha = c.ce.alpha;
	s.ce.eps = c.ce.eps;
	s.ce.max_iter = c.ce.max_iter;
	s.ce.threads = c.ce.threads;
	s.qn.tol = c.qn.tol;
	s.qn.max_iter = c.qn.max_iter;
	s.qn.h_rel = c.qn.h_rel;
	s.threads = c.sweep.threads;
	return s;
}

inline std::string path_in(const std::string& dir, const std::string& name) {
	return (std::filesystem::path(dir) / name).string();
}

inline void ensure_dir(const std::string& dir) {
	std::error_code ec;
	std::filesystem::create_directories(dir, ec);
	if (ec) fail(ErrorKind::Data, "cannot create output directory " + dir + ": " + ec.message());
}

inline void write_json(const std::string& path, const json& j) { io::write_file(path, j.dump(2) + "\n"); }

inline json read_json(const std::string& path) {
	std::ifstream in(path);
	if (!in) fail(ErrorKind::Data, "cannot open " + path);
	try {
		json j;
		in >> j;
		return j;
	} catch (const json::parse_error& e) {
		fail(ErrorKind::Data, "invalid JSON in " + path + ": " + e.what());
	}
}

inline json named_vector(const std::vector<std::string>& names, const Eigen::VectorXd& v) {
	json j = json::object();
	for (std::size_t i = 0; i < names.size(); ++i) j[names[i]] = v(static_cast<Eigen::Index>(i));
	return j;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

/// Writes u.csv, y.csv, u_meas.csv, y_meas.csv and meta.json. Data are drawn
/// for scenario 0 of the configured root seed, so `sweep` reproduces them.
inline void cmd_simulate(const RunConfig& c, const std::string& out_dir) {
	ensure_dir(out_dir);
	with_model(c, [&](auto model) {
		const auto setup = make_setup(c, model);
		const ScenarioSpec spec = make_scenario(c.seed, 0, c.snr);
		MeasuredData d = make_data(setup, spec);
		if (!c.inject_noise) {
			d.u_meas = d.u;
			d.y_meas = d.y;
		}
		io::write_series_csv(path_in(out_dir, "u.csv"), d.u);
		io::write_series_csv(path_in(out_dir, "y.csv"), d.y);
		io::write_series_csv(path_in(out_dir, "u_meas.csv"), d.u_meas);
		io::write_series_csv(path_in(out_dir, "y_meas.csv"), d.y_meas);
		json meta;
		meta["kind"] = "simulate";
		meta["seed"] = c.seed;
		meta["n_samples"] = d.u.size();
		meta["noise_injected"] = c.inject_noise;
		meta["noise_std_u"] = d.noise_u;
		meta["noise_std_y"] = d.noise_y;
		meta["channels_u"] = d.u.labels;
		meta["channels_y"] = d.y.labels;
		meta["config"] = to_json(c);
		write_json(path_in(out_dir, "meta.json"), meta);
	});
}

// ---------------------------------------------------------------------------
// infer
// ---------------------------------------------------------------------------

struct InferInputs {
	ChannelSeries u, y;
	std::array<double, 2> noise_u{}, noise_y{};
	std::string noise_source;
};

/// Reads u_meas.csv and y_meas.csv from data_dir. Noise stds come from
/// meta.json when present, else RMS(measured)/snr per channel.
inline InferInputs load_infer_inputs(const RunConfig& c, const std::string& data_dir) {
	InferInputs in;
	in.u = io::read_series_csv(path_in(data_dir, "u_meas.csv"));
	in.y = io::read_series_csv(path_in(data_dir, "y_meas.csv"));
	if (in.u.size() != in.y.size()) fail(ErrorKind::Data, "u_meas.csv and y_meas.csv have different row counts");
	if (std::abs(in.u.dt - in.y.dt) > 1e-12 * in.u.dt) fail(ErrorKind::Data, "u_meas.csv and y_meas.csv have different dt");
	const std::string meta_path = path_in(data_dir, "meta.json");
	if (std::filesystem::exists(meta_path)) {
		const json meta = read_json(meta_path);
		try {
			in.noise_u = meta.at("noise_std_u").get<std::array<double, 2>>();
			in.noise_y = meta.at("noise_std_y").get<std::array<double, 2>>();
		} catch (const json::exception& e) {
			fail(ErrorKind::Data, std::string("meta.json: missing or malformed noise stds: ") + e.what());
		}
		in.noise_source = "meta.json";
	} else {
		for (int ch = 0; ch < 2; ++ch) {
			in.noise_u[ch] = rms(in.u.ch[ch]) / c.snr;
			in.noise_y[ch] = rms(in.y.ch[ch]) / c.snr;
		}
		in.noise_source = "rms/snr";
	}
	for (int ch = 0; ch < 2; ++ch)
		if (!(in.noise_u[ch] > 0.0) || !(in.noise_y[ch] > 0.0))
			fail(ErrorKind::Data, "noise stds must be positive (is a channel identically zero?)");
	return in;
}

inline void write_psd_tables(const std::string& out_dir, const PsdReport& rep) {
	io::write_psd_csv(path_in(out_dir, "psd_before_measured.csv"), rep.omegas, rep.measured);
	io::write_psd_csv(path_in(out_dir, "psd_before_predicted.csv"), rep.omegas, rep.predicted_prior);
	io::write_psd_csv(path_in(out_dir, "psd_after_measured.csv"), rep.omegas, rep.measured);
	io::write_psd_csv(path_in(out_dir, "psd_after_predicted.csv"), rep.omegas, rep.predicted_post);
}

/// Runs MAP inference on measured data in data_dir; writes posterior.json,
/// trace.csv and the four PSD tables to out_dir.
inline json cmd_infer(const RunConfig& c, const std::string& data_dir, const std::string& out_dir) {
	const InferInputs in = load_infer_inputs(c, data_dir);
	ensure_dir(out_dir);
	return with_model(c, [&](auto model) {
		using Model = decltype(model);
		const auto setup = make_setup(c, model);
		const Eigen::VectorXd prior_mean = c.resolved_prior_mean();
		const PosteriorProblem<Model> pp(dft(in.u), dft(in.y), model, in.noise_u, in.noise_y,
										 scenario_prior(setup, prior_mean));
		const ScenarioSpec spec = make_scenario(c.seed, 0, c.snr);
		const auto t0 = std::chrono::steady_clock::now();
		const FitOutcome fit = fit_posterior(pp, prior_mean, c.method, setup, spec.optimizer_seed);
		const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
		io::write_trace_csv(path_in(out_dir, "trace.csv"), fit.opt);
		write_psd_tables(out_dir, psd_report(pp, prior_mean, fit.theta_post));

		const auto names = model.param_names();
		json post;
		post["kind"] = "infer";
		post["seed"] = c.seed;
		post["method"] = to_string(c.method);
		post["model"] = c.model;
		post["param_names"] = names;
		post["theta_post"] = named_vector(names, fit.theta_post);
		post["theta_prior"] = named_vector(names, prior_mean);
		post["theta_true"] = named_vector(names, c.theta_true());
		post["objective"] = {{"total", fit.value.total},
							 {"misfit", fit.value.misfit},
							 {"prior_penalty", fit.value.prior_penalty}};
		post["termination"] = to_string(fit.opt.termination);
		post["iterations"] = fit.opt.iterations;
		post["evaluations"] = fit.opt.evaluations;
		post["active_bins"] = pp.active_bins().size();
		post["n_samples"] = in.u.size();
		post["noise_std_u"] = in.noise_u;
		post["noise_std_y"] = in.noise_y;
		post["noise_source"] = in.noise_source;
		post["seconds"] = seconds;
		post["config"] = to_json(c);
		write_json(path_in(out_dir, "posterior.json"), post);
		return post;
	});
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

inline const char* method_color(Method m) { return m == Method::CE ? "#d62728" : "#1f77b4"; }

/// Chart for one parameter: mean estimate vs SNR with a +-std band per
/// method and the true value as a reference line. Pure function of its inputs.
inline std::string sweep_chart(const std::vector<Aggregate>& aggregates, const std::string& param, double truth,
							   std::uint64_t seed) {
	svg::LineChart chart;
	chart.title = "Estimate of " + param + " vs SNR";
	chart.x_label = "SNR";
	chart.y_label = param;
	chart.comment = "bayesid sweep chart; seed=" + std::to_string(seed) + "; param=" + param;
	for (Method m : {Method::CE, Method::QuasiNewton}) {
		svg::Series s;
		s.label = m == Method::CE ? "cross-entropy" : "quasi-Newton";
		s.color = method_color(m);
		s.dashed = m == Method::QuasiNewton;
		for (const auto& a : aggregates)
			if (a.method == m && a.param == param) {
				s.x.push_back(a.snr);
				s.y.push_back(a.mean);
				s.band_lo.push_back(a.mean - a.std);
				s.band_hi.push_back(a.mean + a.std);
			}
		if (!s.x.empty()) chart.series.push_back(std::move(s));
	}
	chart.hlines.push_back({truth, "true value", "#2ca02c"});
	return svg::render(chart);
}

/// Renders one SVG per parameter from sweep.csv in dir.
inline std::vector<std::string> render_sweep_charts(const RunConfig& c, const std::string& dir) {
	const auto names = c.param_names();
	const auto aggregates = io::read_sweep_csv(path_in(dir, "sweep.csv"), names);
	std::vector<std::string> written;
	for (std::size_t p = 0; p < names.size(); ++p) {
		const std::string path = path_in(dir, "sweep_" + names[p] + ".svg");
		io::write_file(path, sweep_chart(aggregates, names[p], c.true_params[p], c.seed));
		written.push_back(path);
	}
	return written;
}

inline json cmd_sweep(const RunConfig& c, const std::string& out_dir) {
	ensure_dir(out_dir);
	return with_model(c, [&](auto model) {
		const auto setup = make_setup(c, model);
		const auto t0 = std::chrono::steady_clock::now();
		const SweepReport rep = snr_sweep(setup, c.sweep.snrs, c.sweep.n_scenarios, c.sweep.methods);
		const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
		io::write_file(path_in(out_dir, "sweep.csv"), io::sweep_csv(rep));
		io::write_file(path_in(out_dir, "sweep_scenarios.csv"), io::sweep_scenarios_csv(rep));
		render_sweep_charts(c, out_dir);

		std::map<std::string, std::size_t> terminations;
		for (const auto& r : rep.rows) ++terminations[to_string(r.termination)];
		json meta;
		meta["kind"] = "sweep";
		meta["seed"] = c.seed;
		meta["param_names"] = rep.param_names;
		meta["theta_true"] = named_vector(rep.param_names, rep.theta_true);
		meta["cells"] = rep.rows.size();
		meta["terminations"] = terminations;
		meta["seconds"] = seconds;
		meta["config"] = to_json(c);
		write_json(path_in(out_dir, "sweep_meta.json"), meta);
		return meta;
	});
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

inline io::PsdTable read_nonempty_psd(const std::string& path) {
	if (!std::filesystem::exists(path)) fail(ErrorKind::Data, "missing PSD table " + path);
	auto t = io::read_psd_csv(path);
	if (t.omegas.empty()) fail(ErrorKind::Data, "empty PSD table " + path);
	return t;
}

inline double summed_gap(const io::PsdTable& a, const io::PsdTable& b) {
	double acc = 0.0;
	for (std::size_t i = 0; i < a.values.size(); ++i) acc += std::abs(a.values[i] - b.values[i]);
	return acc;
}

inline std::string psd_chart(const io::PsdTable& measured, const io::PsdTable& predicted, const std::string& title,
							 const std::string& predicted_label, std::uint64_t seed) {
	svg::LineChart chart;
	chart.title = title;
	chart.x_label = "angular frequency [rad/s]";
	chart.y_label = "output PSD";
	chart.log_y = true;
	chart.comment = "bayesid PSD chart; seed=" + std::to_string(seed);
	svg::Series m;
	m.label = "measured";
	m.color = "#7f7f7f";
	m.x = measured.omegas;
	m.y = measured.values;
	svg::Series p;
	p.label = predicted_label;
	p.color = "#d62728";
	p.x = predicted.omegas;
	p.y = predicted.values;
	chart.series = {std::move(m), std::move(p)};
	return svg::render(chart);
}

/// Reads the four PSD tables written by `infer` from data_dir and writes
/// psd_before.svg, psd_after.svg and psd_report.json to out_dir.
inline json cmd_report(const RunConfig& c, const std::string& data_dir, const std::string& out_dir) {
	const auto bm = read_nonempty_psd(path_in(data_dir, "psd_before_measured.csv"));
	const auto bp = read_nonempty_psd(path_in(data_dir, "psd_before_predicted.csv"));
	const auto am = read_nonempty_psd(path_in(data_dir, "psd_after_measured.csv"));
	const auto ap = read_nonempty_psd(path_in(data_dir, "psd_after_predicted.csv"));
	if (bm.omegas != bp.omegas || am.omegas != ap.omegas || bm.omegas != am.omegas)
		fail(ErrorKind::Data, "PSD tables do not share one frequency grid");
	ensure_dir(out_dir);
	io::write_file(path_in(out_dir, "psd_before.svg"),
				   psd_chart(bm, bp, "Output PSD before inference", "predicted (prior)", c.seed));
	io::write_file(path_in(out_dir, "psd_after.svg"),
				   psd_chart(am, ap, "Output PSD after inference", "predicted (posterior)", c.seed));
	json rep;
	rep["kind"] = "report";
	rep["seed"] = c.seed;
	rep["bins"] = bm.omegas.size();
	rep["gap_before"] = summed_gap(bp, bm);
	rep["gap_after"] = summed_gap(ap, am);
	write_json(path_in(out_dir, "psd_report.json"), rep);
	return rep;
}

// ---------------------------------------------------------------------------
// entry point
// ---------------------------------------------------------------------------

inline int exit_code_for(ErrorKind k) {
	switch (k) {
	case ErrorKind::Config: return ConfigError;
	case ErrorKind::Data:
	case ErrorKind::ZeroSignal: return DataError;
	default: return Failure;
	}
}

struct Invocation {
	std::string command;
	std::string config_path;
	std::optional<std::uint64_t> seed;
	std::optional<std::string> out_dir;
	std::optional<std::string> data_dir;
	std::optional<std::string> method;
};

/// Resolves the config file plus command-line overrides.
inline RunConfig resolve(const Invocation& inv) {
	RunConfig c = inv.config_path.empty() ? parse_config(json::object()) : load_config(inv.config_path);
	if (inv.seed) c.seed = *inv.seed;
	if (inv.out_dir) c.out_dir = *inv.out_dir;
	if (inv.method) {
		try {
			c.method = parse_method(*inv.method);
		} catch (const Error& e) {
			fail(ErrorKind::Config, std::string("--method: ") + e.what());
		}
	}
	return c;
}

inline int dispatch(const Invocation& inv, std::ostream& out, std::ostream& err) {
	try {
		const RunConfig c = resolve(inv);
		const std::string data_dir = inv.data_dir.value_or(c.out_dir);
		if (inv.command == "simulate") {
			cmd_simulate(c, c.out_dir);
			out << "simulate: wrote " << c.out_dir << " (seed " << c.seed << ")\n";
		} else if (inv.command == "infer") {
			const json post = cmd_infer(c, data_dir, c.out_dir);
			out << "infer: " << post["termination"].get<std::string>() << ", objective "
				<< post["objective"]["total"].get<double>() << ", theta_post " << post["theta_post"].dump() << '\n';
		} else if (inv.command == "sweep") {
			const json meta = cmd_sweep(c, c.out_dir);
			out << "sweep: " << meta["cells"].get<std::size_t>() << " cells in " << meta["seconds"].get<double>()
				<< " s\n";
		} else if (inv.command == "report") {
			const json rep = cmd_report(c, data_dir, c.out_dir);
			out << "report: gap before " << rep["gap_before"].get<double>() << ", after "
				<< rep["gap_after"].get<double>() << '\n';
		} else {
			err << "error: unknown command \"" << inv.command << "\"\n";
			return ConfigError;
		}
		return Ok;
	} catch (const Error& e) {
		err << "error: " << e.what() << '\n';
		return exit_code_for(e.kind());
	} catch (const std::exception& e) {
		err << "error: " << e.what() << '\n';
		return Failure;
	}
}

} // namespace bayesid::cli
