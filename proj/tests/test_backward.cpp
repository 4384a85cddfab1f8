#include <gtest/gtest.h>

#include <cmath>

#include "filtstab/backward.hpp"
#include "filtstab/ergodicity.hpp"
#include "filtstab/error.hpp"
#include "filtstab/harness.hpp"
#include "filtstab/simulate.hpp"
#include "test_support.hpp"

namespace fs = filtstab;
using fs::Matrix;

namespace {

fs::FiniteModel two_state(fs::ObservationModel obs) {
  return fs::make_model(fs::StateSpace::counting(2), Matrix::from_rows({{0.5, 0.5}, {0.3, 0.7}}), std::move(obs));
}

fs::Coefficients coefficients(const fs::FiniteModel& model) {
  return fs::mixing_coefficients(model, fs::invariant_density(model.kernel, model.space));
}

double column_mass(const fs::BackwardDensity& rho, std::size_t x, const fs::StateSpace& space) {
  double s = 0.0;
  for (std::size_t u = 0; u < rho.size(); ++u) s += rho(u, x) * space.psi[u];
  return s;
}

}  // namespace

TEST(BackwardInit, KaijserUniformGivesKernelColumns) {
  const auto model = fs::kaijser_model();
  const auto rho = fs::backward_init(fs::uniform_density(model.space), model.kernel, model.space);
  for (std::size_t x = 0; x < 4; ++x)
    for (std::size_t u = 0; u < 4; ++u) EXPECT_DOUBLE_EQ(rho(u, x), model.kernel(u, x));
  EXPECT_EQ(rho(0, 0), 0.5);
  EXPECT_EQ(rho(3, 0), 0.5);
  const auto osc = fs::oscillation(rho);
  EXPECT_DOUBLE_EQ(osc.delta[0], 0.5);
  EXPECT_DOUBLE_EQ(osc.rho_sup[0], 0.5);
  EXPECT_DOUBLE_EQ(osc.rho_inf[0], 0.0);
}

TEST(BackwardInit, TwoStateFromInvariantDensity) {
  const auto model = two_state(fs::ObservationModel::finite(Matrix(2, 2, 0.5)));
  const fs::Density m{{0.375, 0.625}};
  const auto rho = fs::backward_init(m, model.kernel, model.space);
  // Column x: lambda(u, x) m(u) normalized; 0.5 * 0.375 = 0.3 * 0.625.
  EXPECT_NEAR(rho(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(rho(1, 0), 0.5, 1e-15);
  EXPECT_NEAR(rho(0, 1), 0.1875 / (0.1875 + 0.4375), 1e-15);
  EXPECT_NEAR(rho(1, 1), 0.7, 1e-15);
}

TEST(BackwardInit, SingleState) {
  const auto model = fs::make_model(fs::StateSpace::counting(1), Matrix(1, 1, 1.0),
                                    fs::ObservationModel::gaussian({0.0}, 1.0));
  EXPECT_EQ(fs::backward_init(fs::Density{{1.0}}, model.kernel, model.space)(0, 0), 1.0);
  fs::BackwardContext ctx(model, fs::Density{{1.0}});
  for (int i = 0; i < 5; ++i) {
    ctx.step(0.3 * i);
    EXPECT_EQ(ctx.rho()(0, 0), 1.0);
    EXPECT_EQ(ctx.delta()[0], 0.0);
  }
}

TEST(BackwardInit, Errors) {
  const auto model = fs::make_model(fs::StateSpace::counting(2), Matrix::from_rows({{1.0, 0.0}, {1.0, 0.0}}),
                                    fs::ObservationModel::finite(Matrix(2, 2, 0.5)));
  try {
    fs::backward_init(fs::uniform_density(model.space), model.kernel, model.space);
    FAIL();
  } catch (const fs::NumericalFailure& e) {
    EXPECT_NE(std::string(e.what()).find("state unreachable in one step"), std::string::npos);
  }
  EXPECT_THROW(fs::backward_init(fs::Density{{1.0, 0.0}}, model.kernel, model.space), fs::InvalidInput);
}

TEST(BackwardStep, ZeroPredictedMass) {
  const auto model = fs::make_model(fs::StateSpace::counting(2), Matrix::identity(2),
                                    fs::ObservationModel::finite(Matrix(2, 2, 0.5)));
  const auto rho = fs::backward_init(fs::uniform_density(model.space), model.kernel, model.space);
  try {
    fs::backward_step(rho, fs::point_mass(0, model.space), model.kernel, model.space);
    FAIL();
  } catch (const fs::NumericalFailure& e) {
    EXPECT_NE(std::string(e.what()).find("state has zero predicted mass"), std::string::npos);
  }
}

TEST(BackwardStep, MatchesPathEnumerationOracle) {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 100; ++trial) {
    fs::testing::RandomModelSpec spec;
    spec.states = 1 + trial % 3;
    spec.random_psi = trial % 2 == 0;
    spec.gaussian = trial % 3 == 0;
    const auto model = fs::testing::random_model(gen, spec);
    const auto theta = fs::testing::random_density(gen, model.space);
    const auto obs = fs::testing::random_observations(gen, model, 6);
    fs::BackwardContext ctx(model, theta);
    // Also iterate the free functions by hand.
    fs::BackwardDensity rho = fs::backward_origin(model.space);
    fs::Density pi = theta;
    for (std::size_t n = 1; n <= obs.size(); ++n) {
      rho = n == 1 ? fs::backward_init(pi, model.kernel, model.space)
                   : fs::backward_step(rho, pi, model.kernel, model.space);
      pi = fs::filter_step(pi, obs[n - 1], model);
      ctx.step(obs[n - 1]);
      for (std::size_t x = 0; x < model.size(); ++x) {
        const auto oracle = fs::testing::oracle_backward(model, theta, std::span(obs).first(n), x);
        for (std::size_t u = 0; u < model.size(); ++u) {
          EXPECT_NEAR(rho(u, x), oracle[u], 1e-10) << "trial " << trial << " n " << n;
          EXPECT_NEAR(ctx.rho()(u, x), oracle[u], 1e-10);
        }
      }
    }
  }
}

TEST(BackwardStep, LibraryOraclesAgreeWithIndependentEnumeration) {
  std::mt19937_64 gen(23);
  for (int trial = 0; trial < 20; ++trial) {
    fs::testing::RandomModelSpec spec;
    spec.states = 3;
    spec.gaussian = trial % 2 == 1;
    const auto model = fs::testing::random_model(gen, spec);
    const auto nu = fs::testing::random_density(gen, model.space, 0.0);
    const auto beta = fs::testing::random_density(gen, model.space);
    const auto obs = fs::testing::random_observations(gen, model, 5);
    for (std::size_t x = 0; x < 3; ++x) {
      const auto a = fs::brute_force_backward(model, beta, obs, x);
      EXPECT_LE(fs::testing::max_abs_diff(a.values, fs::testing::oracle_backward(model, beta, obs, x)), 1e-12);
    }
    EXPECT_NEAR(fs::brute_force_likelihood_ratio(model, nu, beta, obs),
                fs::testing::oracle_likelihood_ratio(model, nu, beta, obs), 1e-12);
  }
}

TEST(BackwardStep, UninformativeObservationsReproduceStationaryBackward) {
  std::mt19937_64 gen(29);
  for (int trial = 0; trial < 20; ++trial) {
    fs::testing::RandomModelSpec spec;
    spec.states = 3;
    spec.symbols = 1;
    spec.random_psi = trial % 2 == 0;
    const auto model = fs::testing::random_model(gen, spec);
    const auto m = fs::invariant_density(model.kernel, model.space);
    const auto q = fs::stationary_backward_sequence(model, m, 8);
    fs::BackwardContext ctx(model, m);
    for (std::size_t n = 1; n <= 8; ++n) {
      ctx.step(0.0);
      EXPECT_LE(fs::max_abs_diff(ctx.rho().rho, q[n - 1].q), 1e-12) << n;
      for (std::size_t u = 0; u < 3; ++u) EXPECT_NEAR(ctx.delta()[u], q[n - 1].Delta[u], 1e-12);
    }
  }
}

TEST(BackwardContext, ColumnsStayDensitiesOverLongRuns) {
  const auto s = fs::builtin_scenario("example11");
  const auto t = fs::sample_trajectory(s.model, s.nu, 10'000, 8);
  fs::BackwardContext ctx(s.model, s.beta);
  for (const auto y : t.observations) ctx.step(y);
  for (std::size_t x = 0; x < 4; ++x) EXPECT_NEAR(column_mass(ctx.rho(), x, s.model.space), 1.0, 1e-10);
  for (std::size_t u = 0; u < 4; ++u)
    for (std::size_t x = 0; x < 4; ++x) EXPECT_GE(ctx.rho()(u, x), 0.0);
}

TEST(BackwardContext, TrackedOscillationMatchesDirectSpread) {
  std::mt19937_64 gen(37);
  for (int trial = 0; trial < 20; ++trial) {
    fs::testing::RandomModelSpec spec;
    spec.states = 2 + trial % 3;
    const auto model = fs::testing::random_model(gen, spec);
    const auto theta = fs::testing::random_density(gen, model.space);
    fs::BackwardContext ctx(model, theta);
    double last_sum = 0.0;
    for (const auto y : fs::testing::random_observations(gen, model, 15)) {
      ctx.step(y);
      const auto direct = fs::oscillation(ctx.rho());
      for (std::size_t u = 0; u < model.size(); ++u) {
        EXPECT_NEAR(ctx.delta()[u], direct.delta[u], 1e-13);
        EXPECT_LE(direct.delta[u], direct.rho_sup[u]);
      }
      EXPECT_GE(ctx.exponent_sum(), last_sum);
      last_sum = ctx.exponent_sum();
    }
  }
}

TEST(Oscillation, IdenticalColumnsHaveNoSpread) {
  fs::BackwardDensity rho{Matrix::from_rows({{0.2, 0.2, 0.2}, {0.8, 0.8, 0.8}, {0.0, 0.0, 0.0}})};
  for (double v : fs::oscillation(rho).delta) EXPECT_EQ(v, 0.0);
}

TEST(OscillationBound, FirstStepValue) {
  const auto model = two_state(fs::ObservationModel::finite(Matrix::from_rows({{0.8, 0.2}, {0.2, 0.8}})));
  const auto c = coefficients(model);
  const fs::Density theta{{0.4, 0.6}};
  const std::vector<fs::Density> history{theta};
  const auto b = fs::oscillation_bound(history, c, theta, model.space);
  ASSERT_EQ(b.bound.size(), 1u);
  const double k = 0.7 * 0.7 / (0.4 * c.lambda_diamond);
  EXPECT_NEAR(b.bound[0][0], k * 0.4, 1e-12);
  EXPECT_NEAR(b.bound[0][1], k * 0.6, 1e-12);
  EXPECT_EQ(b.exponent_sum[0], 0.0);
}

TEST(OscillationBound, UniformKernelValue) {
  // lambda_diamond = lambda^* = 1/d and theta_* = 1/d make the prefactor
  // (1/d)^2 / ((1/d)(1/d)) = 1; each step adds (1/d) / (1/d) = 1 to the
  // exponent, so bound_n(u) = theta(u) e^{-(n-1)} = (1/d) e^{-(n-1)}.
  const std::size_t d = 3;
  const auto model = fs::make_model(fs::StateSpace::counting(d), Matrix(d, d, 1.0 / d),
                                    fs::ObservationModel::finite(Matrix::from_rows({{0.7, 0.3}, {0.5, 0.5}, {0.2, 0.8}})));
  const auto c = coefficients(model);
  const auto theta = fs::uniform_density(model.space);
  fs::BackwardContext ctx(model, theta);
  for (int i = 0; i < 10; ++i) ctx.step(static_cast<double>(i % 2));
  const auto b = fs::oscillation_bound(std::span(ctx.filter_history()).first(10), c, theta, model.space);
  EXPECT_FALSE(b.vacuous);
  for (std::size_t n = 1; n <= 10; ++n)
    for (std::size_t u = 0; u < d; ++u)
      EXPECT_NEAR(b.bound[n - 1][u], std::exp(-static_cast<double>(n - 1)) / d, 1e-13) << n;
}

TEST(OscillationBound, KaijserIsVacuous) {
  const auto model = fs::kaijser_model();
  const auto c = coefficients(model);
  const auto theta = fs::uniform_density(model.space);
  const auto b = fs::oscillation_bound(std::vector<fs::Density>{theta, theta}, c, theta, model.space);
  EXPECT_TRUE(b.vacuous);
  EXPECT_TRUE(std::isinf(b.bound[1][0]));
}

TEST(OscillationBound, DominatesAndContractsOnSeededRuns) {
  std::mt19937_64 gen(41);
  for (int trial = 0; trial < 120; ++trial) {
    fs::testing::RandomModelSpec spec;
    spec.states = 2 + trial % 3;
    spec.positive_kernel = trial % 4 != 3;
    spec.random_psi = trial % 2 == 0;
    spec.gaussian = trial % 5 == 0;
    const auto model = fs::testing::random_model(gen, spec);
    const auto c = coefficients(model);
    const auto nu = fs::testing::random_density(gen, model.space, 0.0);
    const auto beta = fs::testing::random_density(gen, model.space);
    const auto t = fs::sample_trajectory(model, nu, 60, 1000 + trial);
    fs::BackwardContext ctx(model, beta);
    std::vector<std::vector<double>> deltas;
    for (const auto y : t.observations) {
      ctx.step(y);
      deltas.push_back(ctx.delta());
    }
    const auto& history = ctx.filter_history();
    const auto b = fs::oscillation_bound(std::span(history).first(60), c, beta, model.space);
    for (std::size_t n = 1; n <= 60; ++n) {
      // Contraction factor written out from its definition.
      double integral = 0.0;
      for (std::size_t x = 0; x < model.size(); ++x) {
        const auto row = model.kernel.lambda.row(x);
        integral += history[n - 1][x] * *std::min_element(row.begin(), row.end()) * model.space.psi[x];
      }
      const double factor = 1.0 - integral / c.lambda_upper;
      EXPECT_NEAR(factor, fs::contraction_factor(history[n - 1], c, model.space), 1e-15);
      for (std::size_t u = 0; u < model.size(); ++u) {
        if (n >= 2) EXPECT_LE(deltas[n - 1][u], factor * deltas[n - 2][u]) << "trial " << trial << " n " << n;
        if (c.mixing()) EXPECT_LE(deltas[n - 1][u], b.bound[n - 1][u]) << "trial " << trial << " n " << n;
      }
    }
  }
}

TEST(Oscillation, VanishesOnMixingRuns) {
  const auto s = fs::builtin_scenario("mixing2");
  const auto t = fs::sample_trajectory(s.model, s.nu, 300, 5);
  fs::BackwardContext ctx(s.model, s.beta);
  for (const auto y : t.observations) ctx.step(y);
  for (double v : ctx.delta()) EXPECT_LT(v, 1e-30);
}

TEST(LikelihoodRatio, Conventions) {
  const auto s = fs::builtin_scenario("mixing2");
  fs::BackwardContext ctx(s.model, s.beta);
  const auto ratio = fs::density_ratio(s.nu, s.beta);
  EXPECT_NEAR(ctx.likelihood_ratio(ratio), 1.0, 1e-15);
  const auto same = fs::density_ratio(s.beta, s.beta);
  const auto t = fs::sample_trajectory(s.model, s.nu, 100, 3);
  for (const auto y : t.observations) {
    ctx.step(y);
    EXPECT_NEAR(ctx.likelihood_ratio(same), 1.0, 1e-12);
  }
  EXPECT_THROW(fs::density_ratio(s.nu, fs::Density{{1.0, 0.0}}), fs::InvalidInput);
}

TEST(LikelihoodRatio, MatchesPathEnumeration) {
  std::mt19937_64 gen(43);
  for (int trial = 0; trial < 50; ++trial) {
    fs::testing::RandomModelSpec spec;
    spec.states = 3;
    spec.gaussian = trial % 2 == 0;
    spec.random_psi = trial % 3 == 0;
    const auto model = fs::testing::random_model(gen, spec);
    const auto nu = fs::testing::random_density(gen, model.space, 0.0);
    const auto beta = fs::testing::random_density(gen, model.space);
    const auto obs = fs::testing::random_observations(gen, model, 5);
    fs::BackwardContext ctx(model, beta);
    const auto ratio = fs::density_ratio(nu, beta);
    for (std::size_t n = 1; n <= 5; ++n) {
      ctx.step(obs[n - 1]);
      EXPECT_NEAR(ctx.likelihood_ratio(ratio),
                  fs::testing::oracle_likelihood_ratio(model, nu, beta, std::span(obs).first(n)), 1e-10);
    }
  }
}

TEST(LikelihoodIdentities, HoldOnSeededRuns) {
  std::mt19937_64 gen(47);
  for (int trial = 0; trial < 100; ++trial) {
    fs::testing::RandomModelSpec spec;
    spec.states = 1 + trial % 4;
    spec.gaussian = trial % 2 == 0;
    spec.random_psi = trial % 3 == 0;
    const auto model = fs::testing::random_model(gen, spec);
    const auto nu = fs::testing::random_density(gen, model.space, 0.0);
    const auto beta = fs::testing::random_density(gen, model.space);
    const auto t = fs::sample_trajectory(model, beta, 20, 500 + trial);
    fs::BackwardContext ctx(model, beta);
    for (const auto y : t.observations) ctx.step(y);
    const auto run_beta = fs::run_filter(beta, t.observations, model, "beta");
    const auto run_nu = fs::run_filter(nu, t.observations, model, "nu");
    EXPECT_LE(fs::check_likelihood_identities(run_beta, run_nu, ctx.rho(), fs::density_ratio(nu, beta), model.space),
              1e-9);
    // nu = beta: both sides vanish up to rounding.
    EXPECT_LE(fs::check_likelihood_identities(run_beta, run_beta, ctx.rho(), fs::density_ratio(beta, beta),
                                              model.space),
              1e-14);
  }
}

TEST(LikelihoodIdentities, MismatchedRecordsAreRejected) {
  const auto s = fs::builtin_scenario("mixing2");
  const auto a = fs::run_filter(s.beta, std::vector<fs::Observation>{0.0, 1.0}, s.model);
  const auto b = fs::run_filter(s.nu, std::vector<fs::Observation>{0.0, 0.0}, s.model);
  fs::BackwardContext ctx(s.model, s.beta);
  EXPECT_THROW(fs::check_likelihood_identities(a, b, ctx.rho(), fs::density_ratio(s.nu, s.beta), s.model.space),
               fs::InvalidInput);
}
