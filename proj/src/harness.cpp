#include "filtstab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include "filtstab/backward.hpp"
#include "filtstab/error.hpp"
#include "filtstab/rng.hpp"

namespace filtstab {
namespace {

constexpr double kKaijserTolerance = 1e-12;

Matrix kaijser_matrix() {
  return Matrix::from_rows({{0.5, 0.5, 0.0, 0.0}, {0.0, 0.5, 0.5, 0.0}, {0.0, 0.0, 0.5, 0.5}, {0.5, 0.0, 0.0, 0.5}});
}

Scenario make_scenario(std::string name, FiniteModel model, std::vector<double> nu, std::vector<double> beta,
                       std::size_t horizon, std::size_t replicates, std::uint64_t seed) {
  Scenario s;
  s.name = std::move(name);
  s.nu = make_density(std::move(nu), model.space);
  s.beta = make_density(std::move(beta), model.space);
  s.model = std::move(model);
  s.horizon = horizon;
  s.replicates = replicates;
  s.seed = seed;
  return s;
}

KaijserVector as_probabilities(const Density& p) {
  if (p.size() != 4) throw InvalidInput("the cyclic four-state example needs four states");
  return {p[0], p[1], p[2], p[3]};
}

void require_binary(std::span<const Observation> observations) {
  for (const Observation y : observations) {
    if (y != 0.0 && y != 1.0) throw InvalidInput("the cyclic four-state example needs binary observations");
  }
}

}  // namespace

std::vector<std::string> scenario_names() { return {"kaijser", "example11", "mixing2", "uniformK"}; }

Scenario builtin_scenario(std::string_view name) {
  if (name == "kaijser") {
    return make_scenario("kaijser", kaijser_model(), {0.5, 0.2, 0.2, 0.1}, {0.25, 0.25, 0.25, 0.25}, 10'000, 1, 7);
  }
  if (name == "example11") {
    // One all-positive row, zeros elsewhere: lambda_* = 0 < lambda_diamond.
    auto kernel = Matrix::from_rows(
        {{0.25, 0.25, 0.25, 0.25}, {0.0, 0.5, 0.5, 0.0}, {0.0, 0.0, 0.5, 0.5}, {0.5, 0.0, 0.0, 0.5}});
    auto model = make_model(StateSpace::counting(4), std::move(kernel),
                            ObservationModel::gaussian({0.0, 1.0, 2.0, 3.0}, 1.0));
    return make_scenario("example11", std::move(model), {0.7, 0.1, 0.1, 0.1}, {0.25, 0.25, 0.25, 0.25}, 500, 20, 11);
  }
  if (name == "mixing2") {
    auto model = make_model(StateSpace::counting(2), Matrix::from_rows({{0.5, 0.5}, {0.3, 0.7}}),
                            ObservationModel::finite(Matrix::from_rows({{0.8, 0.2}, {0.2, 0.8}})));
    return make_scenario("mixing2", std::move(model), {0.9, 0.1}, {0.5, 0.5}, 500, 50, 1);
  }
  if (name == "uniformK") {
    const double third = 1.0 / 3.0;
    auto model = make_model(StateSpace::counting(3), Matrix(3, 3, third),
                            ObservationModel::finite(Matrix::from_rows({{0.7, 0.3}, {0.5, 0.5}, {0.2, 0.8}})));
    return make_scenario("uniformK", std::move(model), {0.6, 0.3, 0.1}, {third, third, third}, 200, 10, 3);
  }
  throw InvalidInput("unknown scenario '" + std::string(name) + "'");
}

FiniteModel kaijser_model() {
  auto gamma = Matrix::from_rows({{0.0, 1.0}, {1.0, 0.0}, {0.0, 1.0}, {1.0, 0.0}});
  return make_model(StateSpace::counting(4), kaijser_matrix(), ObservationModel::finite(std::move(gamma)));
}

bool is_kaijser_model(const FiniteModel& model) {
  if (model.size() != 4) return false;
  for (double w : model.space.psi)
    if (w != 1.0) return false;
  if (max_abs_diff(model.kernel.lambda, kaijser_matrix()) > 1e-15) return false;
  const ObservationModel& obs = model.observation;
  if (obs.kind() != ObservationModel::Kind::finite || obs.alphabet_size() != 2) return false;
  for (std::size_t i = 0; i < 4; ++i) {
    const std::size_t emitted = i % 2 == 0 ? 1 : 0;
    if (std::abs(obs.gamma()(i, emitted) * obs.theta()[emitted] - 1.0) > 1e-15) return false;
  }
  return true;
}

KaijserConstants kaijser_constants(const Density& nu, const Density& beta) {
  const KaijserVector a = as_probabilities(nu);
  const KaijserVector b = as_probabilities(beta);
  KaijserConstants c;
  c.c1 = std::abs(a[0] - b[0] + a[3] - b[3]) + std::abs(a[2] - b[2] + a[1] - b[1]);
  c.c2 = std::abs(a[1] - b[1] + a[0] - b[0]) + std::abs(a[3] - b[3] + a[2] - b[2]);
  return c;
}

std::vector<KaijserVector> kaijser_filter_closed_form(const Density& prior, std::span<const Observation> observations) {
  require_binary(observations);
  std::vector<KaijserVector> out{as_probabilities(prior)};
  for (const Observation y : observations) {
    const KaijserVector& p = out.back();
    out.push_back({(p[0] + p[3]) * y, (p[1] + p[0]) * (1.0 - y), (p[2] + p[1]) * y, (p[3] + p[2]) * (1.0 - y)});
  }
  return out;
}

std::vector<KaijserVector> kaijser_closed_form(const Density& nu, const Density& beta,
                                               std::span<const Observation> observations) {
  require_binary(observations);
  const KaijserVector a = as_probabilities(nu);
  const KaijserVector b = as_probabilities(beta);
  std::vector<KaijserVector> gaps;
  gaps.push_back({std::abs(a[0] - b[0]), std::abs(a[1] - b[1]), std::abs(a[2] - b[2]), std::abs(a[3] - b[3])});
  if (observations.empty()) return gaps;
  const double y1 = observations[0];
  gaps.push_back({std::abs(a[0] - b[0] + a[3] - b[3]) * y1, std::abs(a[1] - b[1] + a[0] - b[0]) * (1.0 - y1),
                  std::abs(a[2] - b[2] + a[1] - b[1]) * y1, std::abs(a[3] - b[3] + a[2] - b[2]) * (1.0 - y1)});
  for (std::size_t n = 2; n <= observations.size(); ++n) {
    const double prev = observations[n - 2];
    const double y = observations[n - 1];
    const KaijserVector& g = gaps.back();
    gaps.push_back({g[0] * prev * y + g[3] * (1.0 - prev) * y,
                    g[1] * (1.0 - prev) * (1.0 - y) + g[0] * prev * (1.0 - y),
                    g[2] * prev * y + g[1] * (1.0 - prev) * y,
                    g[3] * (1.0 - prev) * (1.0 - y) + g[2] * prev * (1.0 - y)});
  }
  return gaps;
}

KaijserReport kaijser_check(const Density& nu, const Density& beta, std::span<const Observation> observations) {
  if (observations.empty()) throw InvalidInput("the constancy check needs at least one observation");
  const FiniteModel model = kaijser_model();
  const PairRun pair = run_filter_pair(nu, beta, observations, model);
  const auto closed_nu = kaijser_filter_closed_form(nu, observations);
  const auto closed_beta = kaijser_filter_closed_form(beta, observations);
  const auto gaps = kaijser_closed_form(nu, beta, observations);

  KaijserReport report;
  report.constants = kaijser_constants(nu, beta);
  report.tv1 = pair.tv[1];
  for (std::size_t n = 0; n < pair.tv.size(); ++n) {
    for (std::size_t i = 0; i < 4; ++i) {
      report.max_disagreement = std::max({report.max_disagreement,
                                          std::abs(pair.correct.densities[n][i] - closed_nu[n][i]),
                                          std::abs(pair.wrong.densities[n][i] - closed_beta[n][i]),
                                          std::abs(std::abs(pair.difference[n][i]) - gaps[n][i])});
    }
    if (n >= 1) report.max_drift = std::max(report.max_drift, std::abs(pair.tv[n] - pair.tv[1]));
  }
  report.constant = report.max_drift <= kKaijserTolerance;

  const double y1 = observations[0];
  const double expected_tv1 = report.constants.c1 * y1 + report.constants.c2 * (1.0 - y1);
  const double floor = report.constants.floor();
  report.floor_checked = floor > 0.0;
  if (report.floor_checked) {
    for (std::size_t n = 1; n < pair.tv.size(); ++n) {
      if (pair.tv[n] < floor - kKaijserTolerance) report.floor_holds = false;
    }
  }

  if (report.max_disagreement > kKaijserTolerance) {
    report.failures.push_back("generic filter disagrees with the closed form by " +
                              std::to_string(report.max_disagreement));
  }
  if (!report.constant) report.failures.push_back("gap drifts by " + std::to_string(report.max_drift));
  if (std::abs(report.tv1 - expected_tv1) > kKaijserTolerance) {
    report.failures.push_back("first gap " + std::to_string(report.tv1) + " differs from c1 Y1 + c2 (1 - Y1)");
  }
  if (!report.floor_holds) report.failures.push_back("gap falls below c1 ^ c2");
  report.passed = report.failures.empty();
  return report;
}

KaijserReport kaijser_verify(const Density& nu, const Density& beta, std::size_t horizon, std::uint64_t seed) {
  const Trajectory traj = sample_trajectory(kaijser_model(), nu, horizon, seed);
  return kaijser_check(nu, beta, traj.observations);
}

RunRecord run_replicate(const Scenario& scenario, const Coefficients& coeffs, std::size_t replicate,
                        double window_fraction) {
  const FiniteModel& model = scenario.model;
  const std::size_t d = model.size();
  RunRecord rec;
  rec.replicate = replicate;
  rec.seed = replicate_seed(scenario.seed, replicate);
  rec.trajectory = sample_trajectory(model, scenario.nu, scenario.horizon, rec.seed);
  const auto& observations = rec.trajectory.observations;

  const PairRun pair = run_filter_pair(scenario.nu, scenario.beta, observations, model);
  rec.tv = pair.tv;
  try {
    rec.decay = decay_rate(rec.tv, window_fraction);
  } catch (const InvalidInput&) {
    rec.decay = DecayRate{std::numeric_limits<double>::quiet_NaN(), false, 0};
  }

  const auto ratio = density_ratio(scenario.nu, scenario.beta);
  BackwardContext ctx(model, scenario.beta);
  std::vector<std::vector<double>> deltas;
  deltas.reserve(observations.size());
  rec.likelihood_ratio.push_back(ctx.likelihood_ratio(ratio));
  for (const Observation y : observations) {
    ctx.step(y);
    deltas.push_back(ctx.delta());
    rec.delta_max.push_back(*std::max_element(ctx.delta().begin(), ctx.delta().end()));
    rec.likelihood_ratio.push_back(ctx.likelihood_ratio(ratio));
  }

  const auto& history = ctx.filter_history();
  const auto bound = oscillation_bound(std::span(history).first(observations.size()), coeffs, scenario.beta,
                                       model.space);
  rec.bound_vacuous = bound.vacuous;
  rec.worst_bound_ratio = bound.vacuous ? std::numeric_limits<double>::quiet_NaN() : 0.0;
  for (std::size_t n = 1; n <= observations.size(); ++n) {
    const auto& b = bound.bound[n - 1];
    rec.bound_max.push_back(*std::max_element(b.begin(), b.end()));
    const auto& delta = deltas[n - 1];
    for (std::size_t u = 0; u < d; ++u) {
      if (!bound.vacuous) rec.worst_bound_ratio = std::max(rec.worst_bound_ratio, delta[u] / b[u]);
      if (n >= 2) {
        const double allowed = contraction_factor(history[n - 1], coeffs, model.space) * deltas[n - 2][u];
        const double r = allowed > 0.0 ? delta[u] / allowed
                                       : (delta[u] == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
        rec.worst_contraction_ratio = std::max(rec.worst_contraction_ratio, r);
      }
    }
  }

  if (is_kaijser_model(model)) rec.kaijser = kaijser_check(scenario.nu, scenario.beta, observations);
  return rec;
}

std::vector<RunRecord> run_scenario(const Scenario& scenario, const RunOptions& options) {
  const std::size_t count = scenario.replicates;
  if (count == 0) return {};
  const Density m = invariant_density(scenario.model.kernel, scenario.model.space);
  const Coefficients coeffs = mixing_coefficients(scenario.model, m);

  std::vector<std::optional<RunRecord>> results(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r = next++; r < count; r = next++) {
      try {
        results[r] = run_replicate(scenario, coeffs, r, options.window_fraction);
      } catch (...) {
        errors[r] = std::current_exception();
      }
    }
  };
  unsigned threads = options.threads != 0 ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  std::vector<RunRecord> out;
  out.reserve(count);
  for (std::size_t r = 0; r < count; ++r) {
    if (errors[r]) {
      const std::string where =
          "replicate " + std::to_string(r) + " (seed " + std::to_string(replicate_seed(scenario.seed, r)) + "): ";
      try {
        std::rethrow_exception(errors[r]);
      } catch (const InvalidInput& e) {
        throw InvalidInput(where + e.what());
      } catch (const NumericalFailure& e) {
        throw NumericalFailure(where + e.what());
      } catch (const std::exception& e) {
        throw Error(where + e.what());
      }
    }
    out.push_back(std::move(*results[r]));
  }
  return out;
}

}  // namespace filtstab
