#include <cmath>

#include <gtest/gtest.h>

#include "bayesid/harness.hpp"

using namespace bayesid;

namespace {

ExperimentSetup<GeneratorModel> small_setup() {
	ExperimentSetup<GeneratorModel> s;
	s.theta_true = Eigen::Vector4d(0.25, 1.0, 1.0, 0.01);
	s.K = 100;
	s.ce.n_samples = 60;
	s.ce.n_elite = 6;
	s.ce.max_iter = 15;
	s.qn.max_iter = 20;
	return s;
}

} // namespace

TEST(Scenario, SeedsDependOnIdAndSnrOnly) {
	const auto a = make_scenario(1, 3, 5.0);
	const auto b = make_scenario(1, 3, 10.0);
	EXPECT_EQ(a.prior_seed, b.prior_seed);
	EXPECT_EQ(a.input_seed, b.input_seed);
	EXPECT_NE(a.noise_u_seed, b.noise_u_seed);
	EXPECT_NE(a.optimizer_seed, b.optimizer_seed);
	const auto c = make_scenario(1, 4, 5.0);
	EXPECT_NE(a.prior_seed, c.prior_seed);
	EXPECT_EQ(make_scenario(1, 3, 5.0).noise_y_seed, a.noise_y_seed);
	EXPECT_NE(make_scenario(2, 3, 5.0).prior_seed, a.prior_seed);
}

TEST(Scenario, PriorDrawWithinSpreadAndReproducible) {
	const Eigen::Vector4d truth(0.25, 1.0, 1.0, 0.01);
	for (std::uint64_t seed = 0; seed < 50; ++seed) {
		const auto m = draw_prior_mean(truth, 0.5, seed);
		for (int i = 0; i < 4; ++i) {
			EXPECT_GE(m(i), 0.5 * truth(i));
			EXPECT_LE(m(i), 1.5 * truth(i));
		}
		EXPECT_EQ(m, draw_prior_mean(truth, 0.5, seed));
	}
}

TEST(Scenario, PriorStdRule) {
	const auto s = small_setup();
	const auto p = scenario_prior(s, Eigen::Vector4d(0.3, 1.2, 0.7, 0.012));
	for (int i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(p.variances(i), std::pow(0.5 * s.theta_true(i), 2));
}

TEST(Normalization, ZeroReferenceFallsBackToOne) {
	const auto s = normalization_scale(Eigen::Vector3d(-2.0, 0.0, 0.5));
	EXPECT_EQ(s, Eigen::Vector3d(2.0, 1.0, 0.5));
}

TEST(Aggregate, MeanAndUnbiasedStd) {
	std::vector<ScenarioResult> rows(3);
	const double xs[] = {1.0, 2.0, 4.0};
	for (int i = 0; i < 3; ++i) {
		rows[i].spec.snr = 5.0;
		rows[i].method = Method::CE;
		rows[i].estimate = Eigen::Vector2d(xs[i], 7.0);
	}
	const auto agg = aggregate_rows(rows, {"a", "b"}, {5.0}, {Method::CE});
	ASSERT_EQ(agg.size(), 2u);
	EXPECT_DOUBLE_EQ(agg[0].mean, 7.0 / 3.0);
	EXPECT_NEAR(agg[0].std, std::sqrt((std::pow(1 - 7.0 / 3, 2) + std::pow(2 - 7.0 / 3, 2) + std::pow(4 - 7.0 / 3, 2)) / 2.0),
				1e-15);
	EXPECT_DOUBLE_EQ(agg[1].std, 0.0);
	EXPECT_EQ(agg[0].count, 3u);
}

TEST(RunScenario, DeterministicAndImproves) {
	const auto s = small_setup();
	const auto spec = make_scenario(s.root_seed, 0, 10.0);
	for (Method m : {Method::CE, Method::QuasiNewton}) {
		const auto a = run_scenario(s, spec, m);
		const auto b = run_scenario(s, spec, m);
		EXPECT_EQ(a.estimate, b.estimate);
		EXPECT_EQ(a.value.total, b.value.total);
		// the fit must not be worse than its own starting point
		const auto d = make_data(s, spec);
		const PosteriorProblem<GeneratorModel> pp(dft(d.u_meas), dft(d.y_meas), s.model, d.noise_u, d.noise_y,
												  scenario_prior(s, a.theta_prior));
		EXPECT_LE(a.value.total, objective(pp, a.theta_prior).total);
	}
}

TEST(Sweep, ThreadCountDoesNotChangeResults) {
	auto s = small_setup();
	s.ce.max_iter = 5;
	s.qn.max_iter = 5;
	const auto one = snr_sweep(s, {5.0, 10.0}, 2, {Method::CE, Method::QuasiNewton});
	s.threads = 3;
	const auto three = snr_sweep(s, {5.0, 10.0}, 2, {Method::CE, Method::QuasiNewton});
	ASSERT_EQ(one.rows.size(), 8u);
	for (std::size_t i = 0; i < one.rows.size(); ++i) {
		EXPECT_EQ(one.rows[i].estimate, three.rows[i].estimate);
		EXPECT_EQ(one.rows[i].spec.snr, three.rows[i].spec.snr);
	}
	// (snr, scenario, method) order
	EXPECT_EQ(one.rows[0].spec.snr, 5.0);
	EXPECT_EQ(one.rows[1].method, Method::QuasiNewton);
	EXPECT_EQ(one.rows[2].spec.scenario_id, 1u);
	EXPECT_EQ(one.rows[4].spec.snr, 10.0);
	// priors are shared across SNRs
	EXPECT_EQ(one.rows[0].theta_prior, one.rows[4].theta_prior);
	EXPECT_EQ(one.aggregates.size(), 2u * 2u * 4u);
	EXPECT_THROW(snr_sweep(s, {5.0}, 1, {Method::CE}), Error);
}

TEST(PsdReport, ZeroGapAtTruthAndLabelSwap) {
	const auto s = small_setup();
	const auto spec = make_scenario(1, 0, 10.0);
	const auto d = make_data(s, spec);
	const Eigen::VectorXd prior = s.theta_true * 1.3;
	const PosteriorProblem<GeneratorModel> clean(dft(d.u), dft(d.y), s.model, d.noise_u, d.noise_y,
												 scenario_prior(s, prior));
	const auto rep = psd_report(clean, prior, s.theta_true);
	EXPECT_EQ(rep.omegas.size(), clean.active_bins().size());
	EXPECT_LE(rep.gap_after(), 1e-12 * rep.gap_before());
	const auto swapped = psd_report(clean, s.theta_true, prior);
	EXPECT_DOUBLE_EQ(swapped.gap_before(), rep.gap_after());
	EXPECT_DOUBLE_EQ(swapped.gap_after(), rep.gap_before());
	EXPECT_THROW(psd_report(clean, prior, prior, 2), Error);
}

TEST(MethodNames, RoundTrip) {
	EXPECT_EQ(parse_method(to_string(Method::CE)), Method::CE);
	EXPECT_EQ(parse_method(to_string(Method::QuasiNewton)), Method::QuasiNewton);
	EXPECT_THROW(parse_method("bfgs"), Error);
}
