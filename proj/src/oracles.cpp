// Path-enumeration oracles. Nothing here may call into the filtering or
// backward recursions they are used to check.
#include "filtstab/backward.hpp"
#include "filtstab/error.hpp"
#include "filtstab/filter.hpp"
#include "path_enumeration.hpp"

namespace filtstab {

Density brute_force_posterior(const FiniteModel& model, const Density& prior,
                              std::span<const Observation> observations) {
  const std::size_t d = model.size();
  std::vector<double> mass(d, 0.0);
  double total = 0.0;
  detail::enumerate_paths(model, prior, observations, [&](std::span<const std::size_t> path, double w) {
    mass[path.back()] += w;
    total += w;
  });
  if (!(total > 0.0)) throw NumericalFailure("observation record has probability zero");
  Density out{std::vector<double>(d)};
  for (std::size_t x = 0; x < d; ++x) out.values[x] = mass[x] / total / model.space.psi[x];
  return out;
}

Density brute_force_backward(const FiniteModel& model, const Density& theta0,
                             std::span<const Observation> observations, std::size_t x_n) {
  const std::size_t d = model.size();
  std::vector<double> mass(d, 0.0);
  double total = 0.0;
  detail::enumerate_paths(model, theta0, observations, [&](std::span<const std::size_t> path, double w) {
    if (path.back() != x_n) return;
    mass[path.front()] += w;
    total += w;
  });
  if (!(total > 0.0)) throw NumericalFailure("conditioning event has probability zero");
  Density out{std::vector<double>(d)};
  for (std::size_t u = 0; u < d; ++u) out.values[u] = mass[u] / total / model.space.psi[u];
  return out;
}

double brute_force_likelihood_ratio(const FiniteModel& model, const Density& nu, const Density& beta,
                                    std::span<const Observation> observations) {
  double weighted = 0.0;
  double total = 0.0;
  detail::enumerate_paths(model, beta, observations, [&](std::span<const std::size_t> path, double w) {
    weighted += w * nu[path.front()] / beta[path.front()];
    total += w;
  });
  if (!(total > 0.0)) throw NumericalFailure("observation record has probability zero");
  return weighted / total;
}

}  // namespace filtstab
