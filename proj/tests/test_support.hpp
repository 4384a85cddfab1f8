#pragma once

// Shared fixtures for the test binaries: seeded random models and
// path-enumeration oracles written independently of the library recursions.

#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "filtstab/model.hpp"

namespace filtstab::testing {

inline std::filesystem::path data_dir() {
  if (const char* dir = std::getenv("FILTSTAB_DATA_DIR")) return dir;
  return std::filesystem::path(__FILE__).parent_path().parent_path() / "data";
}

struct RandomModelSpec {
  std::size_t states = 3;
  std::size_t symbols = 2;
  bool positive_kernel = true;  // otherwise about a third of entries are zero
  bool random_psi = false;
  bool gaussian = false;
};

inline std::vector<double> random_weights(std::mt19937_64& gen, std::size_t n, double lo = 0.05) {
  std::uniform_real_distribution<double> u(lo, 1.0);
  std::vector<double> w(n);
  for (double& v : w) v = u(gen);
  return w;
}

// Row i scaled so that sum_j row[j] * psi[j] == 1.
inline void normalize_against(std::vector<double>& row, const std::vector<double>& psi) {
  double s = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) s += row[j] * psi[j];
  for (double& v : row) v /= s;
}

inline FiniteModel random_model(std::mt19937_64& gen, const RandomModelSpec& spec) {
  const std::size_t d = spec.states;
  std::vector<double> psi = spec.random_psi ? random_weights(gen, d, 0.2) : std::vector<double>(d, 1.0);
  std::bernoulli_distribution drop(1.0 / 3.0);
  std::vector<std::vector<double>> rows(d);
  for (std::size_t i = 0; i < d; ++i) {
    rows[i] = random_weights(gen, d);
    if (!spec.positive_kernel) {
      for (std::size_t j = 0; j < d; ++j)
        if (j != i && drop(gen)) rows[i][j] = 0.0;
      // keep the chain irreducible with a cycle i -> i + 1
      rows[i][(i + 1) % d] = std::max(rows[i][(i + 1) % d], 0.1);
    }
    normalize_against(rows[i], psi);
  }
  ObservationModel obs;
  if (spec.gaussian) {
    std::uniform_real_distribution<double> mean(-2.0, 2.0);
    std::vector<double> means(d);
    for (double& m : means) m = mean(gen);
    obs = ObservationModel::gaussian(means, std::uniform_real_distribution<double>(0.5, 1.5)(gen));
  } else {
    std::vector<std::vector<double>> gamma(d);
    for (auto& row : gamma) {
      row = random_weights(gen, spec.symbols);
      double s = 0.0;
      for (double v : row) s += v;
      for (double& v : row) v /= s;
    }
    obs = ObservationModel::finite(Matrix::from_rows(gamma));
  }
  return make_model(StateSpace{psi}, Matrix::from_rows(rows), std::move(obs));
}

inline Density random_density(std::mt19937_64& gen, const StateSpace& space, double lo = 0.05) {
  auto w = random_weights(gen, space.size(), lo);
  normalize_against(w, space.psi);
  return Density{w};
}

/// Observation values drawn independently of any chain (uniform symbols or
/// standard normals), which is enough for oracle comparisons.
inline std::vector<Observation> random_observations(std::mt19937_64& gen, const FiniteModel& model, std::size_t n) {
  std::vector<Observation> out(n);
  if (model.observation.kind() == ObservationModel::Kind::gaussian) {
    std::normal_distribution<double> z(0.0, 1.5);
    for (auto& y : out) y = z(gen);
  } else {
    std::uniform_int_distribution<std::size_t> sym(0, model.observation.alphabet_size() - 1);
    for (auto& y : out) y = static_cast<double>(sym(gen));
  }
  return out;
}

/// gamma(x, y) straight from the model parameters.
inline double oracle_likelihood(const FiniteModel& model, std::size_t x, Observation y) {
  const ObservationModel& obs = model.observation;
  if (obs.kind() == ObservationModel::Kind::gaussian) {
    const double s = obs.sigma();
    const double z = (y - obs.means()[x]) / s;
    return std::exp(-0.5 * z * z) / (s * std::sqrt(2.0 * std::numbers::pi));
  }
  return obs.gamma()(x, static_cast<std::size_t>(y));
}

/// Visits every state path x_0..x_N with its joint weight
/// prior(x_0) psi(x_0) prod_k lambda(x_{k-1}, x_k) psi(x_k) gamma(x_k, y_k).
inline void for_each_path(const FiniteModel& model, const Density& prior, std::span<const Observation> obs,
                          const std::function<void(const std::vector<std::size_t>&, double)>& visit) {
  const std::size_t d = model.size();
  const std::size_t len = obs.size() + 1;
  std::vector<std::size_t> path(len, 0);
  while (true) {
    double w = prior[path[0]] * model.space.psi[path[0]];
    for (std::size_t k = 1; k < len; ++k) {
      w *= model.kernel(path[k - 1], path[k]) * model.space.psi[path[k]] * oracle_likelihood(model, path[k], obs[k - 1]);
    }
    visit(path, w);
    std::size_t pos = 0;
    while (pos < len && ++path[pos] == d) path[pos++] = 0;
    if (pos == len) break;
  }
}

/// P(X_N = x | Y_1..Y_N) / psi(x).
inline std::vector<double> oracle_posterior(const FiniteModel& model, const Density& prior,
                                            std::span<const Observation> obs) {
  std::vector<double> mass(model.size(), 0.0);
  double total = 0.0;
  for_each_path(model, prior, obs, [&](const std::vector<std::size_t>& p, double w) {
    mass[p.back()] += w;
    total += w;
  });
  for (std::size_t x = 0; x < mass.size(); ++x) mass[x] /= total * model.space.psi[x];
  return mass;
}

/// P(X_0 = u | X_N = x_n, Y_1..Y_N) / psi(u) for the chain started from theta.
inline std::vector<double> oracle_backward(const FiniteModel& model, const Density& theta,
                                           std::span<const Observation> obs, std::size_t x_n) {
  std::vector<double> mass(model.size(), 0.0);
  double total = 0.0;
  for_each_path(model, theta, obs, [&](const std::vector<std::size_t>& p, double w) {
    if (p.back() != x_n) return;
    mass[p.front()] += w;
    total += w;
  });
  for (std::size_t u = 0; u < mass.size(); ++u) mass[u] /= total * model.space.psi[u];
  return mass;
}

/// E[(nu / beta)(X_0) | Y_1..Y_N] for the chain started from beta.
inline double oracle_likelihood_ratio(const FiniteModel& model, const Density& nu, const Density& beta,
                                      std::span<const Observation> obs) {
  double num = 0.0, total = 0.0;
  for_each_path(model, beta, obs, [&](const std::vector<std::size_t>& p, double w) {
    num += w * nu[p.front()] / beta[p.front()];
    total += w;
  });
  return num / total;
}

/// (a o b)(u, x) = sum_z a(u, z) psi(z) b(z, x), written out directly.
inline std::vector<std::vector<double>> oracle_compose(const std::vector<std::vector<double>>& a,
                                                       const std::vector<std::vector<double>>& b,
                                                       const std::vector<double>& psi) {
  const std::size_t d = psi.size();
  std::vector<std::vector<double>> out(d, std::vector<double>(d, 0.0));
  for (std::size_t u = 0; u < d; ++u)
    for (std::size_t x = 0; x < d; ++x)
      for (std::size_t z = 0; z < d; ++z) out[u][x] += a[u][z] * psi[z] * b[z][x];
  return out;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace filtstab::testing
