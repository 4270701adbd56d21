#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"

namespace bayesid::svg {

struct Series {
	std::string label;
	std::vector<double> x;
	std::vector<double> y;
	std::string color = "#1f77b4";
	std::vector<double> band_lo; ///< optional shaded band, same length as x
	std::vector<double> band_hi;
	bool dashed = false;
};

struct HLine {
	double y = 0.0;
	std::string label;
	std::string color = "#444444";
};

/// Static line chart, SVG 1.1. Output depends only on the inputs.
struct LineChart {
	std::string title;
	std::string x_label;
	std::string y_label;
	bool log_y = false;
	std::vector<Series> series;
	std::vector<HLine> hlines;
	std::string comment; ///< emitted as an XML comment (provenance, seed)
	int width = 720;
	int height = 440;
};

namespace detail {

inline std::string num(double v) {
	char buf[32];
	std::snprintf(buf, sizeof(buf), "%.2f", v);
	return buf;
}

inline std::string tick_label(double v) {
	char buf[32];
	std::snprintf(buf, sizeof(buf), "%.4g", v);
	return buf;
}

inline std::string escape(const std::string& s) {
	std::string out;
	for (char c : s) {
		switch (c) {
		case '&': out += "&amp;"; break;
		case '<': out += "&lt;"; break;
		case '>': out += "&gt;"; break;
		case '"': out += "&quot;"; break;
		default: out += c;
		}
	}
	return out;
}

} // namespace detail

inline std::string render(const LineChart& chart) {
	const double left = 80, right = 170, top = 40, bottom = 60;
	const double pw = chart.width - left - right;
	const double ph = chart.height - top - bottom;

	auto ty = [&](double v) { return chart.log_y ? std::log10(v) : v; };
	auto usable = [&](double v) { return std::isfinite(v) && (!chart.log_y || v > 0.0); };

	double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
	double ymin = xmin, ymax = -xmin;
	auto take_y = [&](double v) {
		if (!usable(v)) return;
		ymin = std::min(ymin, ty(v));
		ymax = std::max(ymax, ty(v));
	};
	for (const auto& s : chart.series) {
		require(s.x.size() == s.y.size(), "svg: series x/y length mismatch");
		for (std::size_t i = 0; i < s.x.size(); ++i) {
			if (!std::isfinite(s.x[i])) continue;
			xmin = std::min(xmin, s.x[i]);
			xmax = std::max(xmax, s.x[i]);
			take_y(s.y[i]);
			if (i < s.band_lo.size()) take_y(s.band_lo[i]);
			if (i < s.band_hi.size()) take_y(s.band_hi[i]);
		}
	}
	for (const auto& h : chart.hlines) take_y(h.y);
	if (!std::isfinite(xmin)) xmin = 0.0, xmax = 1.0;
	if (!std::isfinite(ymin)) ymin = 0.0, ymax = 1.0;
	if (xmax - xmin <= 0.0) xmin -= 0.5, xmax += 0.5;
	if (ymax - ymin <= 0.0) {
		const double pad = std::max(std::abs(ymin) * 0.1, 0.5);
		ymin -= pad;
		ymax += pad;
	} else {
		const double pad = 0.05 * (ymax - ymin);
		ymin -= pad;
		ymax += pad;
	}

	auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
	auto py = [&](double yt) { return top + (1.0 - (yt - ymin) / (ymax - ymin)) * ph; };

	std::ostringstream os;
	os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
	os << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << chart.width << "\" height=\""
	   << chart.height << "\" viewBox=\"0 0 " << chart.width << ' ' << chart.height << "\">\n";
	if (!chart.comment.empty()) os << "<!-- " << detail::escape(chart.comment) << " -->\n";
	os << "<rect x=\"0\" y=\"0\" width=\"" << chart.width << "\" height=\"" << chart.height << "\" fill=\"white\"/>\n";
	os << "<text x=\"" << detail::num(left + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
	   << "font-size=\"15\">" << detail::escape(chart.title) << "</text>\n";
	os << "<rect x=\"" << detail::num(left) << "\" y=\"" << detail::num(top) << "\" width=\"" << detail::num(pw)
	   << "\" height=\"" << detail::num(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";

	// ticks
	const int nticks = 5;
	for (int i = 0; i <= nticks; ++i) {
		const double xv = xmin + (xmax - xmin) * i / nticks;
		os << "<line x1=\"" << detail::num(px(xv)) << "\" y1=\"" << detail::num(top + ph) << "\" x2=\""
		   << detail::num(px(xv)) << "\" y2=\"" << detail::num(top + ph + 5) << "\" stroke=\"black\"/>\n";
		os << "<text x=\"" << detail::num(px(xv)) << "\" y=\"" << detail::num(top + ph + 18)
		   << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << detail::tick_label(xv)
		   << "</text>\n";
		const double yt = ymin + (ymax - ymin) * i / nticks;
		const double yv = chart.log_y ? std::pow(10.0, yt) : yt;
		os << "<line x1=\"" << detail::num(left - 5) << "\" y1=\"" << detail::num(py(yt)) << "\" x2=\""
		   << detail::num(left) << "\" y2=\"" << detail::num(py(yt)) << "\" stroke=\"black\"/>\n";
		os << "<text x=\"" << detail::num(left - 8) << "\" y=\"" << detail::num(py(yt) + 4)
		   << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << detail::tick_label(yv)
		   << "</text>\n";
	}
	os << "<text x=\"" << detail::num(left + pw / 2) << "\" y=\"" << detail::num(chart.height - 15.0)
	   << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << detail::escape(chart.x_label)
	   << "</text>\n";
	os << "<text x=\"18\" y=\"" << detail::num(top + ph / 2) << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
	   << "font-size=\"13\" transform=\"rotate(-90 18 " << detail::num(top + ph / 2) << ")\">"
	   << detail::escape(chart.y_label + (chart.log_y ? " (log scale)" : "")) << "</text>\n";

	// bands first so lines stay on top
	for (const auto& s : chart.series) {
		if (s.band_lo.size() != s.x.size() || s.band_hi.size() != s.x.size() || s.x.empty()) continue;
		std::ostringstream pts;
		for (std::size_t i = 0; i < s.x.size(); ++i)
			if (usable(s.band_hi[i])) pts << detail::num(px(s.x[i])) << ',' << detail::num(py(ty(s.band_hi[i]))) << ' ';
		for (std::size_t i = s.x.size(); i-- > 0;)
			if (usable(s.band_lo[i])) pts << detail::num(px(s.x[i])) << ',' << detail::num(py(ty(s.band_lo[i]))) << ' ';
		os << "<polygon points=\"" << pts.str() << "\" fill=\"" << s.color << "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
	}
	for (const auto& h : chart.hlines) {
		if (!usable(h.y)) continue;
		os << "<line x1=\"" << detail::num(left) << "\" y1=\"" << detail::num(py(ty(h.y))) << "\" x2=\""
		   << detail::num(left + pw) << "\" y2=\"" << detail::num(py(ty(h.y))) << "\" stroke=\"" << h.color
		   << "\" stroke-dasharray=\"2,3\"/>\n";
	}
	for (const auto& s : chart.series) {
		std::ostringstream pts;
		std::size_t count = 0;
		for (std::size_t i = 0; i < s.x.size(); ++i)
			if (usable(s.y[i]) && std::isfinite(s.x[i])) {
				pts << detail::num(px(s.x[i])) << ',' << detail::num(py(ty(s.y[i]))) << ' ';
				++count;
			}
		os << "<polyline points=\"" << pts.str() << "\" fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\""
		   << (s.dashed ? " stroke-dasharray=\"6,3\"" : "") << "/>\n";
		if (count <= 1)
			for (std::size_t i = 0; i < s.x.size(); ++i)
				if (usable(s.y[i]))
					os << "<circle cx=\"" << detail::num(px(s.x[i])) << "\" cy=\"" << detail::num(py(ty(s.y[i])))
					   << "\" r=\"3\" fill=\"" << s.color << "\"/>\n";
	}

	// legend
	double ly = top + 10;
	auto legend = [&](const std::string& label, const std::string& color, bool dashed) {
		const double lx = left + pw + 15;
		os << "<line x1=\"" << detail::num(lx) << "\" y1=\"" << detail::num(ly) << "\" x2=\"" << detail::num(lx + 25)
		   << "\" y2=\"" << detail::num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\""
		   << (dashed ? " stroke-dasharray=\"2,3\"" : "") << "/>\n";
		os << "<text x=\"" << detail::num(lx + 30) << "\" y=\"" << detail::num(ly + 4)
		   << "\" font-family=\"sans-serif\" font-size=\"12\">" << detail::escape(label) << "</text>\n";
		ly += 20;
	};
	for (const auto& s : chart.series) legend(s.label, s.color, s.dashed);
	for (const auto& h : chart.hlines)
		if (!h.label.empty()) legend(h.label, h.color, true);
	os << "</svg>\n";
	return os.str();
}

} // namespace bayesid::svg
