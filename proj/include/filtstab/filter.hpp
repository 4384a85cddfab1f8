#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "filtstab/model.hpp"

namespace filtstab {

/// Normalizers at or below this are treated as an impossible observation.
inline constexpr double kUnderflowFloor = 1e-300;

/// Densities pi_0..pi_N produced by one prior on one observation record.
struct FilterRun {
  std::vector<Density> densities;
  std::vector<Observation> observations;
  std::string prior_label;

  std::size_t horizon() const { return observations.size(); }
};

/// Correct (nu) and wrong (beta) filters driven by the same record, with the
/// total-variation gap tv[n] = ||pi_n^nu - pi_n^{beta nu}|| for n = 0..N.
struct PairRun {
  FilterRun correct;
  FilterRun wrong;
  std::vector<double> tv;
  /// pi_n^nu - pi_n^{beta nu}, propagated by its own recursion so that it
  /// keeps full relative precision after both filters agree to rounding.
  std::vector<std::vector<double>> difference;
};

/// out(x) = sum_z lambda(z, x) pi(z) psi(z).
Density predict(const Density& pi, const TransitionKernel& kernel, const StateSpace& space);

/// Bayes update of a predicted density by a likelihood vector. Throws
/// NumericalFailure("zero-likelihood observation") when the normalizer is at
/// or below kUnderflowFloor.
Density bayes_update(const Density& predicted, std::span<const double> likelihood, const StateSpace& space);

/// One step of the filtering recursion.
Density filter_step(const Density& pi_prev, Observation y, const FiniteModel& model);

/// Folds filter_step over the record. Errors carry the failing step index.
FilterRun run_filter(const Density& prior, std::span<const Observation> observations,
                     const FiniteModel& model, std::string prior_label = "custom");

/// Runs nu and beta on the same observations. beta must be strictly positive.
PairRun run_filter_pair(const Density& nu, const Density& beta, std::span<const Observation> observations,
                        const FiniteModel& model);

/// sum_i |p[i] - q[i]| psi[i], in [0, 2] for densities.
double tv_norm(const Density& p, const Density& q, const StateSpace& space);

struct DecayRate {
  double slope = 0.0;       // -infinity when converged
  bool converged = false;   // every window entry below kDecayFloor
  std::size_t points = 0;   // entries used in the fit
};

/// Entries below this are treated as numerically converged.
inline constexpr double kDecayFloor = 1e-280;

/// Least-squares slope of log tv[n] against n over the trailing
/// window_fraction of the sequence, skipping entries below kDecayFloor.
/// Throws InvalidInput("insufficient data") with fewer than two usable points.
DecayRate decay_rate(std::span<const double> tv, double window_fraction = 0.5);

/// Exact posterior density of X_N given Y_1..Y_N by summing over all d^(N+1)
/// state paths. Independent of the recursion; intended as a test oracle.
/// Throws NumericalFailure when d^(N+1) exceeds kEnumerationLimit.
Density brute_force_posterior(const FiniteModel& model, const Density& prior,
                              std::span<const Observation> observations);

inline constexpr double kEnumerationLimit = 1e7;

}  // namespace filtstab
