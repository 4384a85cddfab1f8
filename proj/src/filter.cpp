#include "filtstab/filter.hpp"

#include <cmath>
#include <limits>
#include <utility>

#include "filtstab/error.hpp"
#include "filtstab/simulate.hpp"

namespace filtstab {
namespace {

// Signed counterpart of predict for difference vectors.
std::vector<double> predict_signed(std::span<const double> v, const TransitionKernel& kernel,
                                   const StateSpace& space) {
  const std::size_t d = space.size();
  std::vector<double> out(d, 0.0);
  for (std::size_t z = 0; z < d; ++z) {
    const double weight = v[z] * space.psi[z];
    if (weight == 0.0) continue;
    const auto row = kernel.lambda.row(z);
    for (std::size_t x = 0; x < d; ++x) out[x] += row[x] * weight;
  }
  return out;
}

}  // namespace

Density predict(const Density& pi, const TransitionKernel& kernel, const StateSpace& space) {
  return Density{predict_signed(pi.values, kernel, space)};
}

Density bayes_update(const Density& predicted, std::span<const double> likelihood, const StateSpace& space) {
  const std::size_t d = space.size();
  Density out{std::vector<double>(d)};
  double normalizer = 0.0;
  for (std::size_t x = 0; x < d; ++x) {
    out.values[x] = likelihood[x] * predicted[x];
    normalizer += out.values[x] * space.psi[x];
  }
  if (!(normalizer > kUnderflowFloor)) throw NumericalFailure("zero-likelihood observation");
  for (double& v : out.values) v /= normalizer;
  return out;
}

Density filter_step(const Density& pi_prev, Observation y, const FiniteModel& model) {
  const auto likelihood = likelihood_vector(model.observation, y);
  return bayes_update(predict(pi_prev, model.kernel, model.space), likelihood, model.space);
}

FilterRun run_filter(const Density& prior, std::span<const Observation> observations,
                     const FiniteModel& model, std::string prior_label) {
  if (prior.size() != model.size()) throw InvalidInput("prior has the wrong dimension");
  FilterRun run;
  run.prior_label = std::move(prior_label);
  run.observations.assign(observations.begin(), observations.end());
  run.densities.reserve(observations.size() + 1);
  run.densities.push_back(prior);
  for (std::size_t n = 0; n < observations.size(); ++n) {
    try {
      run.densities.push_back(filter_step(run.densities.back(), observations[n], model));
    } catch (const NumericalFailure& e) {
      throw NumericalFailure(std::string(e.what()) + " at step " + std::to_string(n + 1) + " (" +
                             run.prior_label + " filter)");
    }
  }
  return run;
}

PairRun run_filter_pair(const Density& nu, const Density& beta, std::span<const Observation> observations,
                        const FiniteModel& model) {
  const std::size_t d = model.size();
  if (nu.size() != d || beta.size() != d) throw InvalidInput("prior has the wrong dimension");
  for (std::size_t i = 0; i < d; ++i) {
    if (!(beta[i] > 0.0)) throw InvalidInput("beta not bounded below: beta[" + std::to_string(i) + "] is zero");
  }
  PairRun pair;
  pair.correct = run_filter(nu, observations, model, "nu");
  pair.wrong = run_filter(beta, observations, model, "beta");

  // With a = gamma * K(pi^nu), b = gamma * K(pi^beta) and normalizers Za, Zb:
  // pi^nu - pi^beta = ((a - b) - pi^beta (Za - Zb)) / Za, and a - b depends
  // linearly on the previous difference.
  std::vector<double> diff(d);
  for (std::size_t i = 0; i < d; ++i) diff[i] = nu[i] - beta[i];
  std::vector<double> likelihood(d);
  pair.difference.reserve(observations.size() + 1);
  pair.tv.reserve(observations.size() + 1);
  auto record = [&](const std::vector<double>& v) {
    double tv = 0.0;
    for (std::size_t i = 0; i < d; ++i) tv += std::abs(v[i]) * model.space.psi[i];
    pair.tv.push_back(tv);
    pair.difference.push_back(v);
  };
  record(diff);
  for (std::size_t n = 0; n < observations.size(); ++n) {
    model.observation.likelihood(observations[n], likelihood);
    const Density predicted = predict(pair.wrong.densities[n], model.kernel, model.space);
    double zb = 0.0;
    for (std::size_t x = 0; x < d; ++x) zb += likelihood[x] * predicted[x] * model.space.psi[x];
    std::vector<double> da = predict_signed(diff, model.kernel, model.space);
    double dz = 0.0;
    for (std::size_t x = 0; x < d; ++x) {
      da[x] *= likelihood[x];
      dz += da[x] * model.space.psi[x];
    }
    const double za = zb + dz;
    const Density& wrong_now = pair.wrong.densities[n + 1];
    for (std::size_t x = 0; x < d; ++x) diff[x] = (da[x] - wrong_now[x] * dz) / za;
    record(diff);
  }
  return pair;
}

double tv_norm(const Density& p, const Density& q, const StateSpace& space) {
  if (p.size() != q.size() || p.size() != space.size()) throw InvalidInput("tv_norm: dimension mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += std::abs(p[i] - q[i]) * space.psi[i];
  return sum;
}

DecayRate decay_rate(std::span<const double> tv, double window_fraction) {
  if (tv.empty()) throw InvalidInput("insufficient data");
  if (!(window_fraction > 0.0 && window_fraction <= 1.0)) {
    throw InvalidInput("window fraction must lie in (0, 1]");
  }
  const auto window = static_cast<std::size_t>(std::ceil(window_fraction * static_cast<double>(tv.size())));
  const std::size_t start = tv.size() - std::min(window, tv.size());
  std::vector<std::pair<double, double>> points;
  bool all_below = true;
  for (std::size_t n = start; n < tv.size(); ++n) {
    if (!(tv[n] < kDecayFloor)) all_below = false;
    if (!(tv[n] >= kDecayFloor) || !std::isfinite(tv[n])) continue;
    points.emplace_back(static_cast<double>(n), std::log(tv[n]));
  }
  if (all_below) return DecayRate{-std::numeric_limits<double>::infinity(), true, 0};
  if (points.size() < 2) throw InvalidInput("insufficient data");
  double mean_x = 0.0, mean_y = 0.0;
  for (const auto& [x, y] : points) {
    mean_x += x;
    mean_y += y;
  }
  mean_x /= static_cast<double>(points.size());
  mean_y /= static_cast<double>(points.size());
  double sxy = 0.0, sxx = 0.0;
  for (const auto& [x, y] : points) {
    sxy += (x - mean_x) * (y - mean_y);
    sxx += (x - mean_x) * (x - mean_x);
  }
  return DecayRate{sxy / sxx, false, points.size()};
}

}  // namespace filtstab
