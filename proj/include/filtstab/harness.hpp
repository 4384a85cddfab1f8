#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "filtstab/filter.hpp"
#include "filtstab/model.hpp"
#include "filtstab/simulate.hpp"

namespace filtstab {

struct Scenario {
  std::string name;
  FiniteModel model;
  Density nu;
  Density beta;
  std::size_t horizon = 1;
  std::size_t replicates = 1;
  std::uint64_t seed = 0;
};

/// Names of the built-in scenarios, in registry order.
std::vector<std::string> scenario_names();

/// Throws InvalidInput for an unknown name.
Scenario builtin_scenario(std::string_view name);

// ---------------------------------------------------------------------------
// Four-state cyclic chain with deterministic parity observation
// ---------------------------------------------------------------------------

/// Transition matrix [[.5,.5,0,0],[0,.5,.5,0],[0,0,.5,.5],[.5,0,0,.5]] on
/// counting measure; Y = 1 exactly when X is state 0 or 2.
FiniteModel kaijser_model();

/// True when the model is the chain above (any equivalent encoding).
bool is_kaijser_model(const FiniteModel& model);

struct KaijserConstants {
  double c1 = 0.0;  // total gap after a first observation Y = 1
  double c2 = 0.0;  // total gap after a first observation Y = 0
  double floor() const { return c1 < c2 ? c1 : c2; }
};

KaijserConstants kaijser_constants(const Density& nu, const Density& beta);

using KaijserVector = std::array<double, 4>;

/// Filter probabilities pi_0..pi_N from the explicit cyclic recursion
/// pi_n(0) = [pi_{n-1}(0) + pi_{n-1}(3)] Y_n, ...
std::vector<KaijserVector> kaijser_filter_closed_form(const Density& prior, std::span<const Observation> observations);

/// Per-state gaps |pi_n^nu(i) - pi_n^{beta nu}(i)| for n = 0..N: the first
/// step from the explicit filter recursion, later steps from the gap
/// recursion that only permutes gaps according to (Y_{n-1}, Y_n).
std::vector<KaijserVector> kaijser_closed_form(const Density& nu, const Density& beta,
                                               std::span<const Observation> observations);

struct KaijserReport {
  KaijserConstants constants;
  double tv1 = 0.0;
  bool constant = false;        // tv[n] == tv[1] within 1e-12 for n >= 1
  double max_drift = 0.0;       // max_n |tv[n] - tv[1]|
  double max_disagreement = 0.0;  // generic filter vs closed form
  bool floor_checked = false;   // c1 ^ c2 > 0
  bool floor_holds = true;
  bool passed = false;
  std::vector<std::string> failures;
};

/// Checks, on one observation record, that the generic filter pair agrees
/// with the closed forms, that the gap is constant from n = 1 and that it
/// stays above c1 ^ c2.
KaijserReport kaijser_check(const Density& nu, const Density& beta, std::span<const Observation> observations);

/// Samples a record of the given horizon from nu and runs kaijser_check.
KaijserReport kaijser_verify(const Density& nu, const Density& beta, std::size_t horizon, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Replicated runs
// ---------------------------------------------------------------------------

struct RunRecord {
  std::size_t replicate = 0;
  std::uint64_t seed = 0;
  Trajectory trajectory;
  std::vector<double> tv;             // n = 0..N
  DecayRate decay;
  std::vector<double> delta_max;      // n = 1..N, max_u delta_n(u) for the beta filter
  std::vector<double> bound_max;      // n = 1..N, max_u of the oscillation bound
  bool bound_vacuous = false;
  std::vector<double> likelihood_ratio;  // n = 0..N
  /// max over (u, n) of delta_n(u) / bound_n(u); NaN when vacuous.
  double worst_bound_ratio = 0.0;
  /// max over (u, n >= 2) of delta_n(u) / (factor_n delta_{n-1}(u)).
  double worst_contraction_ratio = 0.0;
  std::optional<KaijserReport> kaijser;
};

struct RunOptions {
  double window_fraction = 0.5;
  /// Worker threads; 0 picks the hardware concurrency.
  unsigned threads = 0;
};

/// Full diagnostics for one replicate. Its trajectory is sampled from nu
/// with replicate_seed(scenario.seed, replicate).
RunRecord run_replicate(const Scenario& scenario, const Coefficients& coeffs, std::size_t replicate,
                        double window_fraction);

/// All replicates, executed concurrently and returned in replicate order.
/// Errors are rethrown annotated with the replicate index and seed.
std::vector<RunRecord> run_scenario(const Scenario& scenario, const RunOptions& options = {});

}  // namespace filtstab
