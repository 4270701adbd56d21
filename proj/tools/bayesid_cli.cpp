#include <iostream>

#include <CLI11.hpp>

#include "bayesid/cli.hpp"

int main(int argc, char** argv) {
	using bayesid::cli::Invocation;
	CLI::App app{"Bayesian identification of generator and motor parameters from ambient data"};
	app.require_subcommand(1);

	Invocation inv;
	std::uint64_t seed = 0;
	std::string out_dir, data_dir, method;

	auto add_common = [&](CLI::App* sub) {
		sub->add_option("--config", inv.config_path, "JSON run configuration")->check(CLI::ExistingFile);
		sub->add_option("--seed", seed, "root seed, overrides the config");
		sub->add_option("--out-dir", out_dir, "output directory, overrides the config");
		sub->add_option("--method", method, "optimizer: ce or qn");
	};
	auto* simulate = app.add_subcommand("simulate", "synthesize input/output records");
	auto* infer = app.add_subcommand("infer", "MAP inference on measured records");
	auto* sweep = app.add_subcommand("sweep", "SNR sweep over random-prior scenarios");
	auto* report = app.add_subcommand("report", "before/after PSD charts");
	for (auto* sub : {simulate, infer, sweep, report}) add_common(sub);
	for (auto* sub : {infer, report}) sub->add_option("--data-dir", data_dir, "input directory (default: out dir)");

	try {
		app.parse(argc, argv);
	} catch (const CLI::CallForHelp& e) {
		return app.exit(e);
	} catch (const CLI::ParseError& e) {
		app.exit(e);
		return bayesid::cli::ConfigError;
	}

	for (auto* sub : app.get_subcommands()) {
		inv.command = sub->get_name();
		if (sub->count("--seed")) inv.seed = seed;
		if (sub->count("--out-dir")) inv.out_dir = out_dir;
		if (sub->count("--method")) inv.method = method;
		if (sub->get_option_no_throw("--data-dir") && sub->count("--data-dir")) inv.data_dir = data_dir;
	}
	return bayesid::cli::dispatch(inv, std::cout, std::cerr);
}
