#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "generators.hpp"
#include "sbmc/limits.hpp"
#include "sbmc/suite.hpp"

namespace sbmc {
namespace {

// Composite Simpson rule on [a, b] with n (even) panels.
template <class F>
double simpson(F&& f, double a, double b, int n = 2000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

LimitOptions small_options() {
  LimitOptions o;
  o.replicas = 300;
  o.y_pool = 2000;
  return o;
}

TEST(SigmaTest, PlacesAtomsOnTheRescaledAxis) {
  const auto s = sigma_t(FinitePointMeasure({0.5, 0.25}), 4.0, 2.0, 1.0);
  ASSERT_EQ(s.items.size(), 2u);
  EXPECT_DOUBLE_EQ(s.items[0].location, 1.0);
  EXPECT_DOUBLE_EQ(s.items[0].weight, 0.5);
  EXPECT_DOUBLE_EQ(s.items[1].location, 0.5);
  EXPECT_DOUBLE_EQ(s.total_weight, 0.75);
  EXPECT_DOUBLE_EQ(s.integrate([](double y) { return y; }), 0.5 + 0.125);
}

TEST(SigmaTest, RejectsDegenerateArguments) {
  const FinitePointMeasure x({1.0});
  EXPECT_THROW(sigma_t(x, 1.0, 0.0, 1.0), UnsupportedRegime);
  EXPECT_THROW(sigma_t(x, 0.0, 1.0, 1.0), DomainError);
  EXPECT_THROW(sigma_t(x, 1.0, -1.0, 1.0), DomainError);
}

TEST(GeneratorTest, DeterministicSplitByHand) {
  const auto law = ReproductionLaw::deterministic_binary();
  const auto g = [](double x) { return x * x; };
  // y = {1, 1/2}, alpha = 2: each atom splits into two halves at rate y_i^2.
  const double expected = std::exp(-0.25) * (std::exp(-0.5) - std::exp(-1.0)) +
                          0.25 * std::exp(-1.0) * (std::exp(-0.125) - std::exp(-0.25));
  const auto e = generator_apply(law, 2.0, g, FinitePointMeasure({1.0, 0.5}));
  EXPECT_NEAR(e.value, expected, 1e-14);
  EXPECT_EQ(e.std_error, 0.0);
}

TEST(GeneratorTest, UniformSplitAgainstQuadrature) {
  // G phi(1) = E exp(-(U^2 + (1-U)^2)) - exp(-1).
  const double expected = simpson([](double u) { return std::exp(-(u * u + (1 - u) * (1 - u))); }, 0.0, 1.0) -
                          std::exp(-1.0);
  const auto e = generator_apply(ReproductionLaw::uniform_binary(), 1.0, [](double x) { return x * x; },
                                 FinitePointMeasure({1.0}), 200000);
  EXPECT_NEAR(e.value, expected, 4.0 * e.std_error);
  EXPECT_FALSE(e.flagged);
}

TEST(GeneratorTest, RejectsNegativeTestFunction) {
  EXPECT_THROW(generator_apply(ReproductionLaw::deterministic_binary(), 1.0, [](double) { return -1.0; },
                               FinitePointMeasure({1.0})),
               EvaluationError);
}

TEST(GeneratorPropertyTest, ConstantTestFunctionSeesOnlyTheCount) {
  // With g = c, phi = exp(-c #y) and G phi(y) = sum y_i^alpha e^{-c(n-1)} (F(e^-c) - e^-c).
  testgen::for_all(100, 41, [](testgen::Gen& g) {
    const auto law = g.supercritical_discrete();
    const double alpha = g.uniform(0.0, 2.0);
    const double c = g.uniform(0.0, 2.0);
    auto y = g.measure(5);
    if (y.empty()) y = FinitePointMeasure({1.0});
    const double n = static_cast<double>(y.count());
    const double u = std::exp(-c);
    const double expected = power_mass(y, alpha) * std::exp(-c * (n - 1.0)) * (law.offspring_gf(u) - u);
    EXPECT_NEAR(generator_apply(law, alpha, [c](double) { return c; }, y).value, expected,
                1e-12 * (1.0 + std::abs(expected)));
  });
}

TEST(GeneratorTest, FiniteDifferenceApproachesGenerator) {
  const auto law = ReproductionLaw::deterministic_binary();
  const auto g = [](double x) { return x * x; };
  const FinitePointMeasure y({1.0});
  const double exact = generator_apply(law, 1.0, g, y).value;
  const auto fd = generator_finite_difference(law, 1.0, g, y, 0.01, 400000, 3);
  // O(h) bias plus Monte Carlo noise.
  EXPECT_NEAR(fd.value, exact, 4.0 * fd.std_error + 0.02 * std::abs(exact));
  EXPECT_THROW(generator_finite_difference(law, 1.0, g, y, 0.0, 10, 3), DomainError);
}

TEST(KsReportTest, Verdicts) {
  Stream rng(1);
  std::vector<double> a(1000), b(1000), c(1000);
  for (auto& x : a) x = unit_exponential(rng);
  for (auto& x : b) x = unit_exponential(rng);
  for (auto& x : c) x = 2.0 * unit_exponential(rng);
  EXPECT_EQ(ks_two_sample(a, b).verdict, Verdict::pass);
  const auto r = ks_two_sample(a, c);
  EXPECT_EQ(r.verdict, Verdict::fail);
  ASSERT_TRUE(r.p_value.has_value());
  EXPECT_LT(*r.p_value, 0.01);
  EXPECT_THROW(ks_two_sample({}, a), DomainError);
}

TEST(TestReportTest, JsonAndCsv) {
  TestReport r;
  r.name = "demo";
  r.statistic = 0.5;
  r.threshold = 1.0;
  r.verdict = Verdict::lattice_caveat;
  r.metadata = {{"law", "deterministic_binary"}, {"alpha", 1.0}, {"t", 3.0}, {"seed", 42}};
  const nlohmann::json j = r;
  EXPECT_EQ(j["verdict"], "lattice_caveat");
  EXPECT_TRUE(j["p_value"].is_null());
  EXPECT_TRUE(r.ok());
  std::ostringstream os;
  write_reports_csv(os, {r});
  EXPECT_EQ(os.str(),
            "name,law,alpha,t,statistic,threshold,verdict,seed\n"
            "demo,deterministic_binary,1.0,3.0,0.5,1,lattice_caveat,42\n");
  r.verdict = Verdict::fail;
  EXPECT_FALSE(r.ok());
}

TEST(TestReportTest, CsvQuotesAwkwardNames) {
  TestReport r;
  r.name = "E<x, X(t)> \"quoted\"";
  r.verdict = Verdict::pass;
  std::ostringstream os;
  write_reports_csv(os, {r});
  EXPECT_NE(os.str().find("\"E<x, X(t)> \"\"quoted\"\"\",,,,0,0,pass,"), std::string::npos) << os.str();
}

TEST(LimitModelTest, RegimeChecks) {
  EXPECT_THROW(LimitModel(ReproductionLaw::uniform_binary(), 0.0, small_options()), UnsupportedRegime);
  EXPECT_THROW(LimitModel(ReproductionLaw::dirichlet({1.0, 1.0}, 1.5), 1.0, small_options()), NoMalthusianExponent);
}

TEST(LimitModelTest, MomentScalingDomain) {
  const LimitModel uniform(ReproductionLaw::uniform_binary(), 1.0, small_options());
  // kappa of the uniform split has no second root.
  EXPECT_THROW(moment_scaling_test(uniform, 1.5, {1.0}), DomainError);
  const LimitModel mixed(laws::mixed(), 1.0, small_options());
  EXPECT_THROW(moment_scaling_test(mixed, mixed.p0() - 0.1, {1.0}), DomainError);
  EXPECT_THROW(moment_scaling_test(mixed, *mixed.profile().p_plus, {1.0}), DomainError);
}

TEST(LimitModelTest, MomentScalingAtTheMalthusianExponentIsTheMartingale) {
  // At p = p0 the scaled moment is E M(t) = 1 and the target E Y^0 = 1.
  auto o = small_options();
  o.replicas = 2000;
  const LimitModel mixed(laws::mixed(), 1.0, o);
  const auto r = moment_scaling_test(mixed, mixed.p0(), {1.0, 2.0});
  const auto means = r.metadata["scaled_moments"].get<std::vector<double>>();
  const auto errors = r.metadata["std_errors"].get<std::vector<double>>();
  for (std::size_t j = 0; j < means.size(); ++j) EXPECT_NEAR(means[j], 1.0, 4.0 * errors[j]);
  EXPECT_NEAR(r.metadata["target"].get<double>(), 1.0, 1e-12);
}

TEST(LimitModelTest, MeanMeasureOfTheConstantFunction) {
  // k = 1: E <x^p0, X(t)> = 1 = E 1(Y).
  const LimitModel model(ReproductionLaw::uniform_binary(), 1.0, small_options());
  const auto r = mean_measure_test(model, 2.0, [](double) { return 1.0; }, "one");
  EXPECT_EQ(r.verdict, Verdict::pass);
  EXPECT_EQ(r.metadata["law"], "uniform_binary");
  EXPECT_DOUBLE_EQ(r.metadata["t"].get<double>(), 2.0);
}

TEST(LimitModelTest, LatticeLawsGetACaveat) {
  const LimitModel model(ReproductionLaw::deterministic_binary(), 1.0, small_options());
  const auto r = mean_measure_test(model, 1.0, [](double y) { return std::exp(-y); });
  EXPECT_EQ(r.verdict, Verdict::lattice_caveat);
  EXPECT_TRUE(r.ok());
}

TEST(LimitModelTest, LpDistanceOfTheZeroFunctionVanishes) {
  auto o = small_options();
  o.replicas = 50;
  const LimitModel model(ReproductionLaw::uniform_binary(), 1.0, o);
  const auto r = lp_convergence_test(model, [](double) { return 0.0; }, {1.0, 2.0}, "zero");
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_EQ(r.verdict, Verdict::pass);
}

TEST(LimitModelTest, ReportsAreReproducible) {
  const auto run = [] {
    const LimitModel model(ReproductionLaw::uniform_binary(), 1.0, small_options());
    return nlohmann::json(mean_measure_test(model, 1.0, [](double y) { return std::exp(-y); })).dump();
  };
  EXPECT_EQ(run(), run());
}

}  // namespace
}  // namespace sbmc
