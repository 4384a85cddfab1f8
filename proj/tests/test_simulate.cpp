#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "filtstab/error.hpp"
#include "filtstab/harness.hpp"
#include "filtstab/rng.hpp"
#include "filtstab/simulate.hpp"
#include "test_support.hpp"

namespace fs = filtstab;

namespace {

fs::Scenario mixing2() { return fs::builtin_scenario("mixing2"); }

}  // namespace

TEST(Rng, KnownSplitMixValue) {
  // Reference output of SplitMix64 for state 0 (first draw).
  EXPECT_EQ(fs::splitmix64(0), 0xE220A8397B1DCDAFULL);
}

TEST(Rng, SameSeedSameStream) {
  fs::Rng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next();
    EXPECT_EQ(x, b.next());
    differs = differs || x != c.next();
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, UniformAndNormalMoments) {
  fs::Rng rng(7);
  const int n = 200'000;
  double su = 0.0, sz = 0.0, sz2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    su += u;
    const double z = rng.normal();
    sz += z;
    sz2 += z * z;
  }
  EXPECT_NEAR(su / n, 0.5, 0.005);
  EXPECT_NEAR(sz / n, 0.0, 0.01);
  EXPECT_NEAR(sz2 / n, 1.0, 0.02);
}

TEST(Rng, ReplicateSeedsAreDistinct) {
  std::set<std::uint64_t> seeds;
  for (std::uint64_t r = 0; r < 1000; ++r) seeds.insert(fs::replicate_seed(1, r));
  EXPECT_EQ(seeds.size(), 1000u);
  EXPECT_NE(fs::replicate_seed(1, 0), fs::replicate_seed(2, 0));
}

TEST(SampleIndex, FollowsTheWeights) {
  fs::Rng rng(3);
  const std::vector<double> p{0.2, 0.0, 0.8};
  int counts[3] = {0, 0, 0};
  for (int i = 0; i < 100'000; ++i) ++counts[fs::sample_index(p, rng)];
  EXPECT_EQ(counts[1], 0);
  EXPECT_NEAR(counts[0] / 1e5, 0.2, 0.005);
}

TEST(Trajectory, ShapeAndDeterminism) {
  const auto s = mixing2();
  const auto a = fs::sample_trajectory(s.model, s.nu, 50, 9);
  const auto b = fs::sample_trajectory(s.model, s.nu, 50, 9);
  const auto c = fs::sample_trajectory(s.model, s.nu, 50, 10);
  EXPECT_EQ(a.states.size(), 51u);
  EXPECT_EQ(a.observations.size(), 50u);
  EXPECT_EQ(a.states, b.states);
  EXPECT_EQ(a.observations, b.observations);
  EXPECT_TRUE(a.states != c.states || a.observations != c.observations);
  for (auto x : a.states) EXPECT_LT(x, 2u);
}

TEST(Trajectory, HorizonMustBePositive) {
  const auto s = mixing2();
  EXPECT_THROW(fs::sample_trajectory(s.model, s.nu, 0, 1), fs::InvalidInput);
}

TEST(Trajectory, SingleStateStaysPut) {
  const auto model = fs::make_model(fs::StateSpace::counting(1), fs::Matrix(1, 1, 1.0),
                                    fs::ObservationModel::gaussian({0.0}, 1.0));
  const auto t = fs::sample_trajectory(model, fs::Density{{1.0}}, 100, 5);
  for (auto x : t.states) EXPECT_EQ(x, 0u);
}

TEST(Trajectory, KaijserObservationIsStateParity) {
  const auto model = fs::kaijser_model();
  const auto t = fs::sample_trajectory(model, fs::Density{{0.5, 0.2, 0.2, 0.1}}, 1000, 17);
  for (std::size_t k = 0; k < t.horizon(); ++k) {
    const std::size_t x = t.states[k + 1];
    EXPECT_EQ(t.observations[k], (x == 0 || x == 2) ? 1.0 : 0.0);
  }
  // Moves are to the same state or one step around the cycle.
  for (std::size_t k = 1; k < t.states.size(); ++k) {
    const std::size_t from = t.states[k - 1], to = t.states[k];
    EXPECT_TRUE(to == from || to == (from + 1) % 4);
  }
}

TEST(Trajectory, OccupationFrequenciesApproachInvariantDensity) {
  const auto s = mixing2();
  const auto t = fs::sample_trajectory(s.model, s.nu, 100'000, 2);
  double ones = 0.0;
  for (std::size_t k = 1; k < t.states.size(); ++k) ones += static_cast<double>(t.states[k]);
  // Balance equations by hand: m = (0.375, 0.625).
  EXPECT_NEAR(ones / 1e5, 0.625, 0.01);
}

TEST(Trajectory, ChainLawOfLargeNumbersOnRandomPrimitiveModels) {
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 5; ++trial) {
    fs::testing::RandomModelSpec spec;
    spec.states = 3;
    spec.random_psi = trial % 2 == 0;
    const auto model = fs::testing::random_model(gen, spec);
    const auto m = fs::invariant_density(model.kernel, model.space);
    const auto t = fs::sample_trajectory(model, fs::uniform_density(model.space), 100'000, 100 + trial);
    std::vector<double> freq(3, 0.0);
    for (std::size_t k = 1; k < t.states.size(); ++k) freq[t.states[k]] += 1e-5;
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(freq[i], m[i] * model.space.psi[i], 0.02);
  }
}

TEST(Trajectory, GaussianObservationsCentreOnStateMeans) {
  const auto model = fs::make_model(fs::StateSpace::counting(2), fs::Matrix(2, 2, 0.5),
                                    fs::ObservationModel::gaussian({-3.0, 3.0}, 0.5));
  const auto t = fs::sample_trajectory(model, fs::uniform_density(model.space), 20'000, 4);
  double resid = 0.0;
  for (std::size_t k = 0; k < t.horizon(); ++k) resid += t.observations[k] - (t.states[k + 1] == 0 ? -3.0 : 3.0);
  EXPECT_NEAR(resid / 20'000, 0.0, 0.02);
}
