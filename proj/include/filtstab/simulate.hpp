#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "filtstab/model.hpp"
#include "filtstab/rng.hpp"

namespace filtstab {

/// A sampled path X_0..X_N with observations Y_1..Y_N
/// (observations[k] is Y_{k+1}).
struct Trajectory {
  std::vector<std::size_t> states;
  std::vector<Observation> observations;
  std::uint64_t seed = 0;

  std::size_t horizon() const { return observations.size(); }
};

/// Samples X_0 ~ initial, X_n | X_{n-1} from the kernel and Y_n | X_n from
/// the observation model. Bit-identical for equal arguments.
Trajectory sample_trajectory(const FiniteModel& model, const Density& initial, std::size_t horizon,
                             std::uint64_t seed);

/// (gamma(x_1, y), ..., gamma(x_d, y)).
std::vector<double> likelihood_vector(const ObservationModel& obs, Observation y);

/// Inverse-CDF draw over atoms in index order. probabilities need not be
/// normalized; the last positive atom absorbs rounding.
std::size_t sample_index(std::span<const double> probabilities, Rng& rng);

}  // namespace filtstab
