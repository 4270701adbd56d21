#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "harness.hpp"
#include "optimize.hpp"
#include "series.hpp"

namespace bayesid::io {

/// Shortest decimal form that parses back to the same double.
inline std::string fmt(double x) {
	if (std::isnan(x)) return "nan";
	if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
	char buf[64];
	const auto res = std::to_chars(buf, buf + sizeof(buf), x);
	return {buf, res.ptr};
}

inline double parse_double(std::string_view s) {
	while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
	while (!s.empty() && (s.back() == ' ' || s.back() == '\r' || s.back() == '\t')) s.remove_suffix(1);
	if (s == "nan") return std::nan("");
	if (s == "inf") return HUGE_VAL;
	if (s == "-inf") return -HUGE_VAL;
	double v = 0.0;
	const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
	if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
		fail(ErrorKind::Data, "csv: cannot parse number \"" + std::string(s) + "\"");
	return v;
}

inline std::vector<std::string> split(std::string_view line, char sep = ',') {
	std::vector<std::string> out;
	std::size_t start = 0;
	for (;;) {
		const auto pos = line.find(sep, start);
		out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
		if (pos == std::string_view::npos) break;
		start = pos + 1;
	}
	if (!out.empty() && !out.back().empty() && out.back().back() == '\r') out.back().pop_back();
	return out;
}

/// Header plus rows of fields; throws Data on a missing file, a header
/// mismatch or ragged rows.
struct CsvTable {
	std::vector<std::string> header;
	std::vector<std::vector<std::string>> rows;
};

inline CsvTable read_csv(const std::string& path, const std::vector<std::string>& expected_header) {
	std::ifstream in(path);
	if (!in) fail(ErrorKind::Data, "csv: cannot open " + path);
	CsvTable t;
	std::string line;
	if (!std::getline(in, line)) fail(ErrorKind::Data, "csv: empty file " + path);
	t.header = split(line);
	if (!expected_header.empty() && t.header != expected_header)
		fail(ErrorKind::Data, "csv: unexpected header in " + path);
	while (std::getline(in, line)) {
		if (line.empty() || line == "\r") continue;
		auto fields = split(line);
		if (fields.size() != t.header.size()) fail(ErrorKind::Data, "csv: ragged row in " + path);
		t.rows.push_back(std::move(fields));
	}
	return t;
}

inline void write_file(const std::string& path, const std::string& content) {
	std::ofstream out(path, std::ios::binary);
	if (!out) fail(ErrorKind::Data, "cannot write " + path);
	out << content;
	if (!out) fail(ErrorKind::Data, "write failed for " + path);
}

// ---------------------------------------------------------------------------
// Channel series: t,ch1,ch2
// ---------------------------------------------------------------------------

inline std::string series_csv(const ChannelSeries& ts) {
	std::ostringstream os;
	os << "t,ch1,ch2\n";
	for (std::size_t i = 0; i < ts.size(); ++i)
		os << fmt(static_cast<double>(i) * ts.dt) << ',' << fmt(ts.ch[0][i]) << ',' << fmt(ts.ch[1][i]) << '\n';
	return os.str();
}

inline void write_series_csv(const std::string& path, const ChannelSeries& ts) { write_file(path, series_csv(ts)); }

inline ChannelSeries read_series_csv(const std::string& path) {
	const auto t = read_csv(path, {"t", "ch1", "ch2"});
	if (t.rows.size() < 3) fail(ErrorKind::Data, "series csv: fewer than 3 rows in " + path);
	ChannelSeries ts;
	ts.ch[0].reserve(t.rows.size());
	ts.ch[1].reserve(t.rows.size());
	std::vector<double> times;
	for (const auto& r : t.rows) {
		times.push_back(parse_double(r[0]));
		ts.ch[0].push_back(parse_double(r[1]));
		ts.ch[1].push_back(parse_double(r[2]));
	}
	ts.dt = times[1] - times[0];
	for (std::size_t i = 1; i < times.size(); ++i)
		if (std::abs(times[i] - static_cast<double>(i) * ts.dt) > 1e-9 * (1.0 + std::abs(times[i])))
			fail(ErrorKind::Data, "series csv: non-uniform sampling in " + path);
	ts.validate();
	return ts;
}

// ---------------------------------------------------------------------------
// PSD: omega_rad_s,psd_value
// ---------------------------------------------------------------------------

struct PsdTable {
	std::vector<double> omegas;
	std::vector<double> values;
};

inline void write_psd_csv(const std::string& path, const std::vector<double>& omegas, const std::vector<double>& values) {
	require(omegas.size() == values.size(), "psd csv: length mismatch");
	std::ostringstream os;
	os << "omega_rad_s,psd_value\n";
	for (std::size_t i = 0; i < omegas.size(); ++i) os << fmt(omegas[i]) << ',' << fmt(values[i]) << '\n';
	write_file(path, os.str());
}

inline PsdTable read_psd_csv(const std::string& path) {
	const auto t = read_csv(path, {"omega_rad_s", "psd_value"});
	PsdTable p;
	for (const auto& r : t.rows) {
		p.omegas.push_back(parse_double(r[0]));
		p.values.push_back(parse_double(r[1]));
	}
	return p;
}

// ---------------------------------------------------------------------------
// Optimizer trace: iter,best_f,mean_f_elite,sigma_max
// ---------------------------------------------------------------------------

inline void write_trace_csv(const std::string& path, const OptResult& res) {
	std::ostringstream os;
	os << "iter,best_f,mean_f_elite,sigma_max\n";
	for (const auto& e : res.trace)
		os << e.iter << ',' << fmt(e.best_f) << ',' << fmt(e.mean_f_elite) << ',' << fmt(e.sigma_max) << '\n';
	write_file(path, os.str());
}

// ---------------------------------------------------------------------------
// Sweep report: aggregate (snr,method,param,mean,std) and per-scenario tables
// ---------------------------------------------------------------------------

inline std::string sweep_csv(const SweepReport& rep) {
	std::ostringstream os;
	os << "snr,method,param,mean,std\n";
	for (const auto& a : rep.aggregates)
		os << fmt(a.snr) << ',' << to_string(a.method) << ',' << a.param << ',' << fmt(a.mean) << ',' << fmt(a.std) << '\n';
	return os.str();
}

inline std::string sweep_scenarios_csv(const SweepReport& rep) {
	std::ostringstream os;
	os << "snr,scenario,method,param,prior,estimate,termination,iterations,objective\n";
	for (const auto& r : rep.rows)
		for (std::size_t p = 0; p < rep.param_names.size(); ++p) {
			const auto i = static_cast<Eigen::Index>(p);
			os << fmt(r.spec.snr) << ',' << r.spec.scenario_id << ',' << to_string(r.method) << ',' << rep.param_names[p]
			   << ',' << fmt(r.theta_prior(i)) << ',' << fmt(r.estimate(i)) << ',' << to_string(r.termination) << ','
			   << r.iterations << ',' << fmt(r.value.total) << '\n';
		}
	return os.str();
}

inline std::vector<Aggregate> read_sweep_csv(const std::string& path, const std::vector<std::string>& param_names) {
	const auto t = read_csv(path, {"snr", "method", "param", "mean", "std"});
	std::vector<Aggregate> out;
	for (const auto& r : t.rows) {
		Aggregate a;
		a.snr = parse_double(r[0]);
		a.method = parse_method(r[1]);
		a.param = r[2];
		a.param_index = param_names.size();
		for (std::size_t p = 0; p < param_names.size(); ++p)
			if (param_names[p] == a.param) a.param_index = p;
		if (a.param_index == param_names.size()) fail(ErrorKind::Data, "sweep csv: unknown parameter " + a.param);
		a.mean = parse_double(r[3]);
		a.std = parse_double(r[4]);
		out.push_back(std::move(a));
	}
	return out;
}

/// Rebuilds scenario rows (prior, estimate) from the per-scenario table.
inline std::vector<ScenarioResult> read_sweep_scenarios_csv(const std::string& path,
															const std::vector<std::string>& param_names) {
	const auto t = read_csv(path, {"snr", "scenario", "method", "param", "prior", "estimate", "termination",
								   "iterations", "objective"});
	std::vector<ScenarioResult> out;
	const auto dim = static_cast<Eigen::Index>(param_names.size());
	for (const auto& r : t.rows) {
		const double snr = parse_double(r[0]);
		const auto id = static_cast<std::size_t>(std::stoull(r[1]));
		const Method m = parse_method(r[2]);
		std::size_t p = 0;
		while (p < param_names.size() && param_names[p] != r[3]) ++p;
		if (p == param_names.size()) fail(ErrorKind::Data, "scenario csv: unknown parameter " + r[3]);
		ScenarioResult* row = nullptr;
		for (auto& x : out)
			if (x.spec.snr == snr && x.spec.scenario_id == id && x.method == m) row = &x;
		if (row == nullptr) {
			ScenarioResult fresh;
			fresh.spec.snr = snr;
			fresh.spec.scenario_id = id;
			fresh.method = m;
			fresh.theta_prior = Eigen::VectorXd::Zero(dim);
			fresh.estimate = Eigen::VectorXd::Zero(dim);
			out.push_back(std::move(fresh));
			row = &out.back();
		}
		row->theta_prior(static_cast<Eigen::Index>(p)) = parse_double(r[4]);
		row->estimate(static_cast<Eigen::Index>(p)) = parse_double(r[5]);
	}
	return out;
}

} // namespace bayesid::io
