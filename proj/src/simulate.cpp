#include "filtstab/simulate.hpp"

#include <cmath>
#include <numbers>

#include "filtstab/error.hpp"

namespace filtstab {

double Rng::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t sample_index(std::span<const double> probabilities, Rng& rng) {
  double total = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    total += probabilities[i];
    if (probabilities[i] > 0.0) last_positive = i;
  }
  if (!(total > 0.0)) throw NumericalFailure("cannot sample from a zero-mass distribution");
  const double u = rng.uniform() * total;
  double cumulative = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    cumulative += probabilities[i];
    if (u < cumulative && probabilities[i] > 0.0) return i;
  }
  return last_positive;
}

std::vector<double> likelihood_vector(const ObservationModel& obs, Observation y) {
  std::vector<double> out(obs.states());
  obs.likelihood(y, out);
  return out;
}

Trajectory sample_trajectory(const FiniteModel& model, const Density& initial, std::size_t horizon,
                             std::uint64_t seed) {
  if (horizon < 1) throw InvalidInput("horizon must be at least 1");
  const std::size_t d = model.size();
  if (initial.size() != d) throw InvalidInput("initial density has the wrong dimension");
  Rng rng(seed);
  Trajectory out;
  out.seed = seed;
  out.states.reserve(horizon + 1);
  out.observations.reserve(horizon);

  std::vector<double> probs(d);
  for (std::size_t i = 0; i < d; ++i) probs[i] = initial[i] * model.space.psi[i];
  std::size_t x = sample_index(probs, rng);
  out.states.push_back(x);

  const ObservationModel& obs = model.observation;
  std::vector<double> symbol_probs(obs.kind() == ObservationModel::Kind::finite ? obs.alphabet_size() : 0);
  for (std::size_t n = 1; n <= horizon; ++n) {
    const auto row = model.kernel.lambda.row(x);
    for (std::size_t j = 0; j < d; ++j) probs[j] = row[j] * model.space.psi[j];
    x = sample_index(probs, rng);
    out.states.push_back(x);
    if (obs.kind() == ObservationModel::Kind::finite) {
      for (std::size_t k = 0; k < symbol_probs.size(); ++k) symbol_probs[k] = obs.gamma()(x, k) * obs.theta()[k];
      out.observations.push_back(static_cast<double>(sample_index(symbol_probs, rng)));
    } else {
      out.observations.push_back(obs.means()[x] + obs.sigma() * rng.normal());
    }
  }
  return out;
}

}  // namespace filtstab
