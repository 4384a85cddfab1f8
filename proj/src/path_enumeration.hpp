#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "filtstab/error.hpp"
#include "filtstab/filter.hpp"
#include "filtstab/model.hpp"
#include "filtstab/simulate.hpp"

namespace filtstab::detail {

// Calls visit(path, weight) for every state path X_0..X_N with
// weight = prior(x_0) psi(x_0) prod_k lambda(x_{k-1}, x_k) psi(x_k) gamma(x_k, y_k).
template <class Visitor>
void enumerate_paths(const FiniteModel& model, const Density& prior, std::span<const Observation> observations,
                     Visitor&& visit) {
  const std::size_t d = model.size();
  const std::size_t steps = observations.size();
  if (std::pow(static_cast<double>(d), static_cast<double>(steps + 1)) > kEnumerationLimit) {
    throw NumericalFailure("instance too large for path enumeration");
  }
  std::vector<std::vector<double>> likelihoods;
  for (const Observation y : observations) likelihoods.push_back(likelihood_vector(model.observation, y));

  std::vector<std::size_t> path(steps + 1);
  auto descend = [&](auto&& self, std::size_t k, double weight) -> void {
    if (k == steps) {
      visit(std::span<const std::size_t>(path), weight);
      return;
    }
    for (std::size_t next = 0; next < d; ++next) {
      const double w = weight * model.kernel(path[k], next) * model.space.psi[next] * likelihoods[k][next];
      if (w == 0.0) continue;
      path[k + 1] = next;
      self(self, k + 1, w);
    }
  };
  for (std::size_t x0 = 0; x0 < d; ++x0) {
    const double w = prior[x0] * model.space.psi[x0];
    if (w == 0.0) continue;
    path[0] = x0;
    descend(descend, 0, w);
  }
}

}  // namespace filtstab::detail
