#include "filtstab/backward.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "filtstab/error.hpp"

namespace filtstab {
namespace {

// W(x', x) = lambda(x', x) pi(x') psi(x') / sum_z lambda(z, x) pi(z) psi(z);
// each column of W is a probability vector over x'.
Matrix transfer_weights(const Density& pi_prev, const TransitionKernel& kernel, const StateSpace& space,
                        const char* zero_column_message) {
  const std::size_t d = space.size();
  Matrix w(d, d);
  for (std::size_t x = 0; x < d; ++x) {
    double z = 0.0;
    for (std::size_t xp = 0; xp < d; ++xp) {
      w(xp, x) = kernel(xp, x) * pi_prev[xp] * space.psi[xp];
      z += w(xp, x);
    }
    if (!(z > 0.0)) throw NumericalFailure(zero_column_message);
    for (std::size_t xp = 0; xp < d; ++xp) w(xp, x) /= z;
  }
  return w;
}

BackwardDensity apply_weights(const BackwardDensity& rho_prev, const Matrix& w, const StateSpace& space) {
  const std::size_t d = space.size();
  BackwardDensity out{Matrix(d, d)};
  for (std::size_t x = 0; x < d; ++x) {
    double mass = 0.0;
    for (std::size_t u = 0; u < d; ++u) {
      double v = 0.0;
      for (std::size_t xp = 0; xp < d; ++xp) v += w(xp, x) * rho_prev(u, xp);
      out.rho(u, x) = v;
      mass += v * space.psi[u];
    }
    for (std::size_t u = 0; u < d; ++u) out.rho(u, x) /= mass;
  }
  return out;
}

std::vector<double> spread_per_row(const Matrix& m) {
  std::vector<double> out(m.rows());
  for (std::size_t u = 0; u < m.rows(); ++u) {
    const auto row = m.row(u);
    const auto [lo, hi] = std::minmax_element(row.begin(), row.end());
    out[u] = *hi - *lo;
  }
  return out;
}

void require_positive(const Density& theta, const char* what) {
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (!(theta[i] > 0.0)) throw InvalidInput(std::string(what) + " must be strictly positive");
  }
}

}  // namespace

BackwardDensity backward_origin(const StateSpace& space) {
  const std::size_t d = space.size();
  BackwardDensity out{Matrix(d, d)};
  for (std::size_t u = 0; u < d; ++u) out.rho(u, u) = 1.0 / space.psi[u];
  return out;
}

BackwardDensity backward_init(const Density& theta0, const TransitionKernel& kernel, const StateSpace& space) {
  require_positive(theta0, "initial density of the backward recursion");
  const std::size_t d = space.size();
  BackwardDensity out{Matrix(d, d)};
  for (std::size_t x = 0; x < d; ++x) {
    double z = 0.0;
    for (std::size_t v = 0; v < d; ++v) z += kernel(v, x) * theta0[v] * space.psi[v];
    if (!(z > 0.0)) throw NumericalFailure("state unreachable in one step");
    for (std::size_t u = 0; u < d; ++u) out.rho(u, x) = kernel(u, x) * theta0[u] / z;
  }
  return out;
}

BackwardDensity backward_step(const BackwardDensity& rho_prev, const Density& pi_prev,
                              const TransitionKernel& kernel, const StateSpace& space) {
  const Matrix w = transfer_weights(pi_prev, kernel, space, "state has zero predicted mass");
  return apply_weights(rho_prev, w, space);
}

OscillationRecord oscillation(const BackwardDensity& rho) {
  const std::size_t d = rho.size();
  OscillationRecord out;
  out.delta.resize(d);
  out.rho_sup.resize(d);
  out.rho_inf.resize(d);
  for (std::size_t u = 0; u < d; ++u) {
    const auto row = rho.rho.row(u);
    const auto [lo, hi] = std::minmax_element(row.begin(), row.end());
    out.rho_sup[u] = *hi;
    out.rho_inf[u] = *lo;
    out.delta[u] = *hi - *lo;
  }
  return out;
}

double contraction_factor(const Density& pi_prev, const Coefficients& coeffs, const StateSpace& space) {
  return 1.0 - integrate(coeffs.row_infima, pi_prev, space) / coeffs.lambda_upper;
}

OscillationBound oscillation_bound(std::span<const Density> pi_history, const Coefficients& coeffs,
                                   const Density& theta0, const StateSpace& space) {
  const std::size_t d = space.size();
  OscillationBound out;
  out.vacuous = !coeffs.mixing();
  const double theta_min = *std::min_element(theta0.values.begin(), theta0.values.end());
  if (!(theta_min > 0.0)) throw InvalidInput("initial density must be strictly positive");
  const double up = coeffs.lambda_upper;
  const double scale = out.vacuous ? std::numeric_limits<double>::infinity()
                                   : up * up / (theta_min * coeffs.lambda_diamond);
  double sum = 0.0;
  for (std::size_t n = 1; n <= pi_history.size(); ++n) {
    if (n >= 2) sum += integrate(coeffs.row_infima, pi_history[n - 1], space);
    out.exponent_sum.push_back(sum);
    std::vector<double> bound(d);
    const double decay = std::exp(-sum / up);
    for (std::size_t u = 0; u < d; ++u) bound[u] = out.vacuous ? scale : scale * theta0[u] * decay;
    out.bound.push_back(std::move(bound));
  }
  return out;
}

std::vector<double> density_ratio(const Density& nu, const Density& beta) {
  if (nu.size() != beta.size()) throw InvalidInput("density_ratio: dimension mismatch");
  std::vector<double> out(nu.size());
  for (std::size_t i = 0; i < nu.size(); ++i) {
    if (!(beta[i] > 0.0)) throw InvalidInput("beta not bounded below");
    out[i] = nu[i] / beta[i];
  }
  return out;
}

namespace {

// h(x) = sum_u r(u) rho(u, x) psi(u).
std::vector<double> conditional_ratio(const BackwardDensity& rho, std::span<const double> r, const StateSpace& space) {
  const std::size_t d = space.size();
  std::vector<double> h(d, 0.0);
  for (std::size_t x = 0; x < d; ++x)
    for (std::size_t u = 0; u < d; ++u) h[x] += r[u] * rho(u, x) * space.psi[u];
  return h;
}

}  // namespace

double likelihood_ratio(const BackwardDensity& rho, const Density& pi, std::span<const double> nu_over_beta,
                        const StateSpace& space) {
  const auto h = conditional_ratio(rho, nu_over_beta, space);
  return integrate(h, pi, space);
}

double check_likelihood_identities(const FilterRun& run_beta, const FilterRun& run_nu_on_same_obs,
                                   const BackwardDensity& rho, std::span<const double> nu_over_beta,
                                   const StateSpace& space) {
  if (run_beta.observations != run_nu_on_same_obs.observations) {
    throw InvalidInput("observation-sequence mismatch");
  }
  const Density& pi_beta = run_beta.densities.back();
  const Density& pi_nu = run_nu_on_same_obs.densities.back();
  const auto h = conditional_ratio(rho, nu_over_beta, space);
  const double l = integrate(h, pi_beta, space);
  double worst = 0.0;
  for (std::size_t x = 0; x < space.size(); ++x) {
    const double difference_form = l * (pi_nu[x] - pi_beta[x]) - pi_beta[x] * (h[x] - l);
    const double joint_form = l * pi_nu[x] - pi_beta[x] * h[x];
    worst = std::max({worst, std::abs(difference_form), std::abs(joint_form)});
  }
  return worst;
}

BackwardContext::BackwardContext(const FiniteModel& model, Density theta0)
    : model_(&model), rho_(backward_origin(model.space)) {
  const std::size_t d = model.size();
  if (theta0.size() != d) throw InvalidInput("initial density has the wrong dimension");
  require_positive(theta0, "initial density of the backward recursion");
  row_infima_.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    const auto row = model.kernel.lambda.row(i);
    row_infima_[i] = *std::min_element(row.begin(), row.end());
  }
  column_diff_ = Matrix(d, d);
  for (std::size_t u = 0; u < d; ++u)
    for (std::size_t x = 0; x < d; ++x) column_diff_(u, x) = rho_(u, x) - rho_(u, 0);
  delta_ = spread_per_row(column_diff_);
  history_.push_back(std::move(theta0));
}

void BackwardContext::step(Observation y) {
  const FiniteModel& model = *model_;
  const std::size_t d = model.size();
  const Density& pi_prev = history_.back();
  if (n_ == 0) {
    rho_ = backward_init(pi_prev, model.kernel, model.space);
    for (std::size_t u = 0; u < d; ++u)
      for (std::size_t x = 0; x < d; ++x) column_diff_(u, x) = rho_(u, x) - rho_(u, 0);
  } else {
    const Matrix w = transfer_weights(pi_prev, model.kernel, model.space, "state has zero predicted mass");
    rho_ = apply_weights(rho_, w, model.space);
    // Differences obey the same linear map with weights W(., x) - W(., 0),
    // whose columns sum to zero; this keeps them relative-accurate.
    Matrix next(d, d);
    for (std::size_t u = 0; u < d; ++u) {
      for (std::size_t x = 1; x < d; ++x) {
        double v = 0.0;
        for (std::size_t xp = 0; xp < d; ++xp) v += (w(xp, x) - w(xp, 0)) * column_diff_(u, xp);
        next(u, x) = v;
      }
    }
    column_diff_ = std::move(next);
    exponent_sum_ += integrate(row_infima_, pi_prev, model.space);
  }
  delta_ = spread_per_row(column_diff_);
  Density pi_next = [&] {
    try {
      return filter_step(pi_prev, y, model);
    } catch (const NumericalFailure& e) {
      throw NumericalFailure(std::string(e.what()) + " at step " + std::to_string(n_ + 1));
    }
  }();
  history_.push_back(std::move(pi_next));
  ++n_;
}

double BackwardContext::likelihood_ratio(std::span<const double> nu_over_beta) const {
  return filtstab::likelihood_ratio(rho_, history_.back(), nu_over_beta, model_->space);
}

}  // namespace filtstab
