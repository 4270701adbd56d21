#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>

#include <gtest/gtest.h>

#include "bayesid/optimize.hpp"
#include "bayesid/rng.hpp"

using namespace bayesid;
using Eigen::VectorXd;

namespace {

double quadratic(const VectorXd& x) {
	VectorXd c(x.size());
	for (Eigen::Index i = 0; i < x.size(); ++i) c(i) = 1.0 + static_cast<double>(i);
	double acc = 0.0;
	for (Eigen::Index i = 0; i < x.size(); ++i) acc += c(i) * (x(i) - 0.5 * c(i)) * (x(i) - 0.5 * c(i));
	return acc;
}

double rosenbrock(const VectorXd& x) {
	return 100.0 * std::pow(x(1) - x(0) * x(0), 2) + std::pow(1.0 - x(0), 2);
}

double two_basin(const VectorXd& x) { return std::min(x(0) * x(0), (x(0) - 5.0) * (x(0) - 5.0) + 1.0); }

VectorXd vec(std::initializer_list<double> v) {
	VectorXd x(static_cast<Eigen::Index>(v.size()));
	std::copy(v.begin(), v.end(), x.data());
	return x;
}

} // namespace

TEST(CrossEntropy, SolvesConvexQuadratic) {
	CEConfig cfg;
	cfg.seed = 3;
	const auto res = cross_entropy(quadratic, VectorXd::Zero(3), VectorXd::Constant(3, 2.0), cfg);
	EXPECT_EQ(res.termination, Termination::Converged);
	EXPECT_LE((res.theta_post - vec({0.5, 1.0, 1.5})).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(CrossEntropy, DeterministicAcrossRunsAndThreads) {
	CEConfig cfg;
	cfg.seed = 42;
	cfg.max_iter = 30;
	const auto a = cross_entropy(rosenbrock, vec({-1.0, 2.0}), vec({1.0, 1.0}), cfg);
	const auto b = cross_entropy(rosenbrock, vec({-1.0, 2.0}), vec({1.0, 1.0}), cfg);
	cfg.threads = 3;
	const auto c = cross_entropy(rosenbrock, vec({-1.0, 2.0}), vec({1.0, 1.0}), cfg);
	ASSERT_EQ(a.trace.size(), b.trace.size());
	ASSERT_EQ(a.trace.size(), c.trace.size());
	for (std::size_t i = 0; i < a.trace.size(); ++i) {
		EXPECT_EQ(a.trace[i].mean, b.trace[i].mean);
		EXPECT_EQ(a.trace[i].sigma, c.trace[i].sigma);
		EXPECT_EQ(a.trace[i].best_f, c.trace[i].best_f);
	}
	EXPECT_EQ(a.theta_post, c.theta_post);
}

TEST(CrossEntropy, BestRecordIsMonotoneAndMatchesReturnedPoint) {
	for (std::uint64_t seed : {1u, 2u, 3u}) {
		CEConfig cfg;
		cfg.seed = seed;
		const auto res = cross_entropy(rosenbrock, vec({-1.0, 2.0}), vec({1.0, 1.0}), cfg);
		for (std::size_t i = 1; i < res.trace.size(); ++i) EXPECT_LE(res.trace[i].best_f, res.trace[i - 1].best_f);
		EXPECT_EQ(res.objective_final, rosenbrock(res.theta_post));
		EXPECT_EQ(res.iterations, res.trace.size());
		EXPECT_EQ(res.evaluations, res.iterations * cfg.n_samples);
	}
}

// With alpha = 1 the new mean and std are exactly the elite statistics of
// the first batch; the draws are replayed from the same generator.
TEST(CrossEntropy, UnitAlphaEqualsEliteStatistics) {
	CEConfig cfg;
	cfg.seed = 9;
	cfg.alpha = 1.0;
	cfg.max_iter = 1;
	cfg.n_samples = 50;
	cfg.n_elite = 7;
	const VectorXd m0 = vec({0.3, -0.2}), s0 = vec({0.8, 1.5});
	const auto res = cross_entropy(rosenbrock, m0, s0, cfg);

	Rng rng(cfg.seed);
	std::vector<VectorXd> xs(cfg.n_samples, VectorXd(2));
	std::vector<std::pair<double, std::size_t>> ranked;
	for (std::size_t i = 0; i < xs.size(); ++i) {
		for (Eigen::Index j = 0; j < 2; ++j) xs[i](j) = m0(j) + s0(j) * rng.normal();
		ranked.emplace_back(rosenbrock(xs[i]), i);
	}
	std::sort(ranked.begin(), ranked.end());
	VectorXd mean = VectorXd::Zero(2);
	for (std::size_t e = 0; e < cfg.n_elite; ++e) mean += xs[ranked[e].second];
	mean /= static_cast<double>(cfg.n_elite);
	VectorXd var = VectorXd::Zero(2);
	for (std::size_t e = 0; e < cfg.n_elite; ++e) var += (xs[ranked[e].second] - mean).array().square().matrix();
	var /= static_cast<double>(cfg.n_elite);

	ASSERT_EQ(res.trace.size(), 1u);
	EXPECT_LE((res.trace[0].mean - mean).norm(), 1e-14);
	EXPECT_LE((res.trace[0].sigma - var.cwiseSqrt()).norm(), 1e-14);
	EXPECT_EQ(res.theta_post, xs[ranked[0].second]);
}

TEST(CrossEntropy, TiesPreferLowestSampleIndex) {
	CEConfig cfg;
	cfg.seed = 4;
	cfg.alpha = 1.0;
	cfg.max_iter = 1;
	cfg.n_samples = 20;
	cfg.n_elite = 5;
	const auto flat = [](const VectorXd&) { return 1.0; };
	const auto res = cross_entropy(flat, vec({0.0}), vec({1.0}), cfg);
	Rng rng(cfg.seed);
	double mean = 0.0;
	double first = 0.0;
	for (std::size_t i = 0; i < cfg.n_samples; ++i) {
		const double x = rng.normal();
		if (i == 0) first = x;
		if (i < cfg.n_elite) mean += x;
	}
	EXPECT_NEAR(res.trace[0].mean(0), mean / 5.0, 1e-15);
	EXPECT_EQ(res.theta_post(0), first);
}

TEST(CrossEntropy, SamplesAreClippedIntoBounds) {
	CEConfig cfg;
	cfg.seed = 5;
	cfg.max_iter = 5;
	cfg.bounds.lower = vec({-0.5, -0.5});
	cfg.bounds.upper = vec({0.5, 0.5});
	std::mutex mu;
	bool inside = true;
	std::size_t on_edge = 0;
	const auto f = [&](const VectorXd& x) {
		std::lock_guard lock(mu);
		inside = inside && cfg.bounds.contains(x);
		on_edge += (x.array().abs() == 0.5).any() ? 1 : 0;
		return quadratic(x);
	};
	const auto res = cross_entropy(f, vec({0.0, 0.0}), vec({3.0, 3.0}), cfg);
	EXPECT_TRUE(inside);
	EXPECT_GT(on_edge, 0u);
	EXPECT_EQ(res.evaluations, 5u * cfg.n_samples);
	// unconstrained optimum (0.5, 1.0) is outside; the boxed one is (0.5, 0.5)
	EXPECT_NEAR(res.theta_post(0), 0.5, 1e-2);
	EXPECT_NEAR(res.theta_post(1), 0.5, 1e-2);
}

TEST(CrossEntropy, AllNonFiniteIsDegenerate) {
	CEConfig cfg;
	const auto bad = [](const VectorXd&) -> double { throw Error(ErrorKind::Infeasible, "nope"); };
	const auto res = cross_entropy(bad, vec({1.0}), vec({1.0}), cfg);
	EXPECT_EQ(res.termination, Termination::Degenerate);
	EXPECT_EQ(res.iterations, 3u);
	EXPECT_TRUE(std::isinf(res.objective_final));
}

TEST(CrossEntropy, RejectsBadConfig) {
	CEConfig cfg;
	cfg.n_elite = 0;
	EXPECT_THROW(cross_entropy(quadratic, vec({0.0}), vec({1.0}), cfg), Error);
	cfg = CEConfig{};
	cfg.alpha = 0.0;
	EXPECT_THROW(cross_entropy(quadratic, vec({0.0}), vec({1.0}), cfg), Error);
	cfg = CEConfig{};
	EXPECT_THROW(cross_entropy(quadratic, vec({0.0}), vec({0.0}), cfg), Error);
}

TEST(CrossEntropy, MatchesDenseScanIn1D) {
	const auto f = [](const VectorXd& x) { return std::cos(3.0 * x(0)) + 0.1 * x(0) * x(0) + 0.05 * x(0); };
	double best = 1e300, arg = 0.0;
	for (int i = 0; i <= 200000; ++i) {
		const double x = -4.0 + 8.0 * i / 200000.0;
		const double v = f(vec({x}));
		if (v < best) best = v, arg = x;
	}
	CEConfig cfg;
	cfg.seed = 12;
	cfg.n_samples = 400;
	cfg.n_elite = 40;
	cfg.bounds.lower = vec({-4.0});
	cfg.bounds.upper = vec({4.0});
	const auto res = cross_entropy(f, vec({0.0}), vec({3.0}), cfg);
	EXPECT_NEAR(res.theta_post(0), arg, 1e-3);
}

TEST(CrossEntropy, FindsGlobalBasinMostOfTheTime) {
	int hits = 0;
	for (std::uint64_t seed = 0; seed < 20; ++seed) {
		CEConfig cfg;
		cfg.seed = seed;
		cfg.n_samples = 500;
		cfg.n_elite = 50;
		const auto res = cross_entropy(two_basin, vec({5.0}), vec({4.0}), cfg);
		hits += std::abs(res.theta_post(0)) < 0.1 ? 1 : 0;
	}
	EXPECT_GE(hits, 19);
}

TEST(QuasiNewton, SolvesConvexQuadraticTightly) {
	QNConfig cfg;
	cfg.tol = 1e-10;
	const auto res = quasi_newton(quadratic, VectorXd::Zero(3), cfg);
	EXPECT_EQ(res.termination, Termination::Converged);
	EXPECT_LE((res.theta_post - vec({0.5, 1.0, 1.5})).cwiseAbs().maxCoeff(), 1e-8);
	EXPECT_EQ(res.trace.size(), res.iterations);
}

TEST(QuasiNewton, SolvesRosenbrock) {
	const auto res = quasi_newton(rosenbrock, vec({-1.2, 1.0}), QNConfig{});
	EXPECT_LE((res.theta_post - vec({1.0, 1.0})).norm(), 1e-4);
}

TEST(QuasiNewton, StopsOnActiveBound) {
	QNConfig cfg;
	cfg.bounds.lower = vec({-1.0, -1.0, -1.0});
	cfg.bounds.upper = vec({0.8, 0.8, 0.8});
	const auto res = quasi_newton(quadratic, VectorXd::Zero(3), cfg);
	EXPECT_EQ(res.termination, Termination::Converged);
	EXPECT_NEAR(res.theta_post(0), 0.5, 1e-7);
	EXPECT_DOUBLE_EQ(res.theta_post(1), 0.8);
	EXPECT_DOUBLE_EQ(res.theta_post(2), 0.8);
}

TEST(QuasiNewton, TrappedInLocalBasin) {
	const auto res = quasi_newton(two_basin, vec({5.0}), QNConfig{});
	EXPECT_NEAR(res.theta_post(0), 5.0, 1e-6);
}

TEST(QuasiNewton, NonFiniteStartIsDegenerate) {
	const auto bad = [](const VectorXd&) { return std::nan(""); };
	EXPECT_EQ(quasi_newton(bad, vec({1.0}), QNConfig{}).termination, Termination::Degenerate);
}

TEST(FdGradient, MatchesAnalyticGradient) {
	const auto f = [](const VectorXd& x) { return std::exp(x(0)) * std::sin(x(1)) + x(0) * x(1) * x(1); };
	const VectorXd x = vec({0.3, 1.1});
	const VectorXd g = fd_gradient(f, x);
	const VectorXd exact = vec({std::exp(0.3) * std::sin(1.1) + 1.21, std::exp(0.3) * std::cos(1.1) + 2 * 0.3 * 1.1});
	EXPECT_LE((g - exact).norm() / exact.norm(), 1e-8);
	const auto bad = [](const VectorXd& z) { return z(0) > 0.3 ? std::nan("") : 0.0; };
	EXPECT_THROW(fd_gradient(bad, x), Error);
}
