#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "generators.hpp"
#include "sbmc/replaw.hpp"
#include "sbmc/suite.hpp"

namespace sbmc {
namespace {

// Moment of a discrete law written out by hand, independent of the library.
double hand_moment(const std::vector<MixtureComponent>& comps, double p) {
  double m = 0.0;
  for (const auto& c : comps)
    for (double a : c.atoms) m += c.prob * std::pow(a, p);
  return m;
}

const std::vector<MixtureComponent> kMixed = {{0.2, {1.3, 0.5}}, {0.8, {0.4}}};

TEST(ReproductionLawTest, DeterministicBinaryProfile) {
  const auto law = ReproductionLaw::deterministic_binary();
  const auto root = malthusian_exponent(law);
  EXPECT_NEAR(root.p0, 1.0, 1e-12);
  EXPECT_NEAR(law.kappa_prime(1.0), std::numbers::ln2, 1e-12);
  EXPECT_EQ(law.moment(3.0), 0.25);
  EXPECT_TRUE(law.is_lattice());
  EXPECT_EQ(extinction_prob(law), 0.0);
  EXPECT_EQ(law.offspring_gf(0.5), 0.25);
}

TEST(ReproductionLawTest, UniformBinaryProfile) {
  const auto law = ReproductionLaw::uniform_binary();
  EXPECT_NEAR(malthusian_exponent(law).p0, 1.0, 1e-12);
  // kappa(p) = 1 - 2/(p+1), kappa'(1) = 1/2.
  EXPECT_NEAR(law.kappa_prime(1.0), 0.5, 1e-12);
  EXPECT_NEAR(law.kappa(3.0), 0.5, 1e-15);
  EXPECT_EQ(law.p_lower(), -1.0);
  EXPECT_THROW(law.moment(-1.0), DomainError);
  EXPECT_FALSE(law.is_lattice());
  EXPECT_FALSE(second_root(law, 1.0).has_value());
}

TEST(ReproductionLawTest, UniformMomentMonteCarloAgreesWithClosedForm) {
  Stream rng(17);
  const auto e = moment_monte_carlo(ReproductionLaw::uniform_binary(), 0.5, 200000, rng);
  EXPECT_NEAR(e.value, 2.0 / 1.5, 4.0 * e.std_error);
  EXPECT_FALSE(e.flagged);
}

TEST(ReproductionLawTest, NearSingularMomentIsFlagged) {
  // p close to -1: U^p has infinite variance and the estimate is dominated by
  // a few draws.
  Stream rng(18);
  EXPECT_TRUE(moment_monte_carlo(ReproductionLaw::uniform_binary(), -0.97, 100000, rng).flagged);
}

TEST(ReproductionLawTest, ExtinctionLaw) {
  const auto law = laws::extinction();
  EXPECT_NEAR(extinction_prob(law), 1.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(law.death_probability(), 0.25);
  EXPECT_DOUBLE_EQ(law.mean_offspring(), 1.5);
  // 1.5 * 0.6^p = 1.
  EXPECT_NEAR(malthusian_exponent(law).p0, std::log(1.5) / std::log(1.0 / 0.6), 1e-12);
  EXPECT_TRUE(law.is_lattice());
}

TEST(ReproductionLawTest, MixedLawAgainstBisection) {
  const auto law = laws::mixed();
  const double oracle = bisect([](double p) { return 1.0 - hand_moment(kMixed, p); }, 1e-6, 5.0, 1e-14);
  const auto prof = malthusian_profile(law);
  EXPECT_NEAR(prof.p0, oracle, 1e-10);
  ASSERT_TRUE(prof.p_plus.has_value());
  EXPECT_NEAR(1.0 - hand_moment(kMixed, *prof.p_plus), 0.0, 1e-10);
  EXPECT_LT(law.kappa_prime(*prof.p_plus), 0.0);
  EXPECT_NEAR(prof.m1, std::abs(law.kappa_prime(prof.p0)), 1e-15);
  EXPECT_FALSE(law.is_lattice());
  // E M_1^2 = 0.2 (1.3^p0 + 0.5^p0)^2 + 0.8 * 0.4^{2 p0}.
  const double p0 = prof.p0;
  const double m2 = 0.2 * std::pow(std::pow(1.3, p0) + std::pow(0.5, p0), 2) + 0.8 * std::pow(0.4, 2 * p0);
  EXPECT_NEAR(prof.second_moment_m1.value, m2, 1e-12);
}

TEST(ReproductionLawTest, DirichletWithoutMalthusianExponent) {
  const auto law = ReproductionLaw::dirichlet({1.0, 1.0}, 1.5);
  // E<x^p, s> = 2 * 1.5^p / (p + 1), minimised at p* = 1/ln 1.5 - 1.
  const double pstar = 1.0 / std::log(1.5) - 1.0;
  const double min_moment = 2.0 * std::pow(1.5, pstar) / (pstar + 1.0);
  EXPECT_NEAR(law.moment(2.0), 2.0 * 2.25 / 3.0, 1e-12);
  try {
    malthusian_exponent(law);
    FAIL() << "expected NoMalthusianExponent";
  } catch (const NoMalthusianExponent& e) {
    EXPECT_NEAR(e.min_moment(), min_moment, 1e-6);
    EXPECT_NEAR(e.argmin(), pstar, 1e-3);
    EXPECT_GT(e.min_moment(), 1.0);
  }
}

TEST(ReproductionLawTest, DirichletDefaultScale) {
  EXPECT_DOUBLE_EQ(ReproductionLaw::dirichlet({1.0, 1.0}).moment(0.0), 2.0);
  EXPECT_DOUBLE_EQ((DirichletScaled{{1.0, 1.0}, std::nullopt}.effective_scale()), 1.5);
  EXPECT_DOUBLE_EQ((DirichletScaled{{2.0, 3.0}, std::nullopt}.effective_scale()), 30.0 / 18.0);
  EXPECT_EQ(ReproductionLaw::dirichlet({0.5, 2.0}).p_lower(), -0.5);
}

TEST(ReproductionLawTest, DirichletSamplesSumToScale) {
  const auto law = ReproductionLaw::dirichlet({1.0, 2.0, 0.5}, 1.2);
  Stream rng(3);
  for (int i = 0; i < 100; ++i) {
    const auto s = law.sample(rng);
    ASSERT_EQ(s.count(), 3u);
    EXPECT_NEAR(power_mass(s, 1.0), 1.2, 1e-12);
  }
}

TEST(ReproductionLawTest, RejectsInconsistentParameters) {
  EXPECT_THROW(ReproductionLaw::discrete({}), InvalidLaw);
  EXPECT_THROW(ReproductionLaw::discrete({{0.5, {0.5}}, {0.4, {0.2}}}), InvalidLaw);
  EXPECT_THROW(ReproductionLaw::discrete({{1.0, {0.5, 0.0}}}), InvalidLaw);
  EXPECT_THROW(ReproductionLaw::discrete({{-0.5, {}}, {1.5, {0.5}}}), InvalidLaw);
  EXPECT_THROW(ReproductionLaw::dirichlet({1.0}), InvalidLaw);
  EXPECT_THROW(ReproductionLaw::dirichlet({1.0, -1.0}), InvalidLaw);
  EXPECT_THROW(ReproductionLaw::dirichlet({1.0, 1.0}, 0.0), InvalidLaw);
}

TEST(ReproductionLawTest, JsonRoundTrip) {
  for (const auto& law : {ReproductionLaw::deterministic_binary(), ReproductionLaw::uniform_binary(), laws::mixed(),
                          laws::extinction(), ReproductionLaw::dirichlet({1.0, 2.0}, 0.9)}) {
    const nlohmann::json j = law;
    const auto back = law_from_json(j);
    EXPECT_EQ(back.name(), law.name());
    EXPECT_DOUBLE_EQ(back.moment(0.7), law.moment(0.7));
  }
  EXPECT_THROW(law_from_json({{"type", "poisson"}}), InvalidLaw);
  EXPECT_THROW(law_from_json({{"type", "discrete"}}), InvalidLaw);
}

TEST(ReproductionLawTest, LatticeDetection) {
  EXPECT_TRUE(ReproductionLaw::discrete({{0.5, {0.5, 0.25}}, {0.5, {0.125, 0.5, 0.5}}}).is_lattice());
  EXPECT_FALSE(ReproductionLaw::discrete({{1.0, {0.5, 0.3}}}).is_lattice());
}

TEST(StepSamplerTest, RejectsWrongExponent) {
  EXPECT_THROW(StepSampler(laws::mixed(), 0.5, 1), InconsistentExponent);
  EXPECT_THROW(StepSampler(ReproductionLaw::uniform_binary(), 2.0, 1, 20000), InconsistentExponent);
}

TEST(StepSamplerTest, UniformPoolMeanStep) {
  // Tilted step law of the uniform split: density 2u on (0,1) for ln u, so
  // E step = -1/2 and the pool should agree to Monte Carlo accuracy.
  const StepSampler steps(ReproductionLaw::uniform_binary(), 1.0, 4, 200000);
  EXPECT_FALSE(steps.exact());
  EXPECT_LT(steps.normalization_error(), 0.01);
  Stream rng(5);
  RunningStats s;
  for (int i = 0; i < 100000; ++i) s.add(steps(rng));
  EXPECT_NEAR(s.mean(), -0.5, 4.0 * s.std_error() + 0.01);
}

TEST(ReproductionLawPropertyTest, DiscreteExponentIsRootOfKappa) {
  testgen::for_all(60, 21, [](testgen::Gen& g) {
    const auto law = g.supercritical_discrete();
    const auto& comps = std::get<DiscreteMixture>(law.variant()).components;
    const double p0 = malthusian_exponent(law).p0;
    EXPECT_NEAR(1.0 - hand_moment(comps, p0), 0.0, 1e-10);
    for (int k = 1; k < 10; ++k) EXPECT_LT(law.kappa(p0 * k / 10.0), 0.0);
    EXPECT_GT(law.kappa_prime(p0), 0.0);
    // Closed-form derivative against a central difference of the hand moment.
    const double h = 1e-6;
    const double fd = -(hand_moment(comps, p0 + h) - hand_moment(comps, p0 - h)) / (2 * h);
    EXPECT_NEAR(law.kappa_prime(p0), fd, 1e-6);
  });
}

TEST(ReproductionLawPropertyTest, TiltedStepLawIsNormalized) {
  testgen::for_all(60, 22, [](testgen::Gen& g) {
    const auto law = g.supercritical_discrete();
    const double p0 = malthusian_exponent(law).p0;
    const StepSampler steps(law, p0, g.seed());
    ASSERT_TRUE(steps.exact());
    double mass = 0.0, mean = 0.0;
    for (const auto& it : steps.items()) {
      mass += it.weight;
      mean += it.weight * it.log_size;
    }
    EXPECT_NEAR(mass, 1.0, 1e-9);
    // E step = -kappa'(p0).
    EXPECT_NEAR(mean, -law.kappa_prime(p0), 1e-9);
    // Laplace transform of the step law at q equals moment(p0 + q).
    const double q = g.uniform(0.0, 2.0);
    double laplace = 0.0;
    for (const auto& it : steps.items()) laplace += it.weight * std::exp(q * it.log_size);
    EXPECT_NEAR(laplace, law.moment(p0 + q), 1e-9);
  });
}

TEST(ReproductionLawPropertyTest, ExtinctionProbabilityIsSmallestFixedPoint) {
  testgen::for_all(60, 23, [](testgen::Gen& g) {
    const auto law = g.supercritical_discrete();
    const double q = extinction_prob(law);
    EXPECT_NEAR(law.offspring_gf(q), q, 1e-12);
    EXPECT_LT(q, 1.0);
    // The first sign change of F(u) - u on a fine grid brackets the oracle.
    const auto f = [&](double u) { return law.offspring_gf(u) - u; };
    if (law.death_probability() == 0.0) {
      EXPECT_EQ(q, 0.0);
      return;
    }
    double lo = 0.0;
    for (int k = 1; k <= 1000; ++k) {
      const double u = k / 1000.0;
      if (f(u) <= 0.0) {
        EXPECT_NEAR(q, bisect(f, lo, u, 1e-13), 1e-10);
        return;
      }
      lo = u;
    }
    ADD_FAILURE() << "no fixed point below 1";
  });
}

TEST(ReproductionLawPropertyTest, SamplesMatchComponents) {
  testgen::for_all(30, 24, [](testgen::Gen& g) {
    const auto law = g.supercritical_discrete();
    Stream rng(g.seed());
    RunningStats count;
    for (int i = 0; i < 20000; ++i) count.add(static_cast<double>(law.sample(rng).count()));
    EXPECT_NEAR(count.mean(), law.mean_offspring(), 4.5 * count.std_error() + 1e-12);
  });
}

}  // namespace
}  // namespace sbmc
