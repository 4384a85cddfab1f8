#include "filtstab/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "filtstab/backward.hpp"
#include "filtstab/config.hpp"
#include "filtstab/ergodicity.hpp"
#include "filtstab/error.hpp"
#include "filtstab/filter.hpp"
#include "filtstab/harness.hpp"
#include "filtstab/rng.hpp"
#include "filtstab/simulate.hpp"

namespace filtstab::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr std::size_t kDefaultFileHorizon = 1000;
constexpr double kRateSlack = 0.1;
constexpr double kDegenerateGapTolerance = 1e-12;
constexpr double kIdentityTolerance = 1e-9;
constexpr double kPoissonTolerance = 1e-10;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Options {
  std::string model;
  std::string scenario;
  std::optional<std::size_t> horizon;
  std::optional<std::size_t> replicates;
  std::optional<std::uint64_t> seed;
  double window_fraction = 0.5;
  std::string output;
  std::string format = "csv";
  std::string nu;
  std::string beta;
  std::string summary;
  std::size_t n_max = 50;
  std::string prior = "nu";
  unsigned threads = 0;
};

std::string num(double v) { return fmt::format("{:.17g}", v); }

json nullable(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

json nullable(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// A tri-state check: null when not applicable.
json check(std::optional<bool> v) { return v ? json(*v) : json(nullptr); }

bool failed(const json& checks) {
  for (const auto& [_, v] : checks.items())
    if (v.is_boolean() && !v.get<bool>()) return true;
  return false;
}

// ---------------------------------------------------------------------------
// Scenario resolution
// ---------------------------------------------------------------------------

Scenario resolve_scenario(const Options& opt) {
  if (opt.model.empty() == opt.scenario.empty()) throw InvalidInput("exactly one of --model or --scenario is required");
  Scenario s;
  if (!opt.scenario.empty()) {
    s = builtin_scenario(opt.scenario);
  } else {
    ModelSetup setup = load_config(opt.model);
    s.name = fs::path(opt.model).stem().string();
    s.model = std::move(setup.model);
    s.nu = std::move(setup.nu);
    s.beta = std::move(setup.beta);
    s.horizon = kDefaultFileHorizon;
    s.replicates = 1;
    s.seed = 0;
  }
  if (opt.horizon) s.horizon = *opt.horizon;
  if (opt.replicates) s.replicates = *opt.replicates;
  if (opt.seed) s.seed = *opt.seed;
  if (s.horizon < 1) throw InvalidInput("--horizon must be at least 1");
  if (!(opt.window_fraction > 0.0 && opt.window_fraction <= 1.0)) {
    throw InvalidInput("--window-fraction must lie in (0, 1]");
  }
  if (!opt.nu.empty()) s.nu = make_density(parse_list(opt.nu), s.model.space);
  if (!opt.beta.empty()) {
    s.beta = make_density(parse_list(opt.beta), s.model.space);
    for (double v : s.beta.values)
      if (!(v > 0.0)) throw InvalidInput("beta not bounded below");
  }
  return s;
}

// ---------------------------------------------------------------------------
// Output destinations
// ---------------------------------------------------------------------------

class Sink {
 public:
  Sink(std::ostream& fallback, std::optional<fs::path> path) : stream_(&fallback) {
    if (path) {
      if (path->has_parent_path()) fs::create_directories(path->parent_path());
      file_ = std::make_unique<std::ofstream>(*path, std::ios::binary);
      if (!*file_) throw InvalidInput("cannot write " + path->string());
      stream_ = file_.get();
      path_ = std::move(path);
    }
  }
  std::ostream& stream() { return *stream_; }
  bool is_file() const { return path_.has_value(); }

 private:
  std::ostream* stream_;
  std::unique_ptr<std::ofstream> file_;
  std::optional<fs::path> path_;
};

std::optional<fs::path> output_path(const Options& opt, const std::string& command, const std::string& ext) {
  if (!opt.output.empty()) return fs::path(opt.output);
  if (const char* dir = std::getenv(kOutputDirEnv); dir != nullptr && *dir != '\0') {
    return fs::path(dir) / (command + "." + ext);
  }
  return std::nullopt;
}

bool json_format(const Options& opt) { return opt.format == "json"; }

// Emits tabular rows plus a summary. CSV: rows to the output, summary to
// --summary, else to stdout (file output) or stderr (stdout output).
// JSON: one document {"summary": ..., "rows": [...]}.
class Writer {
 public:
  Writer(const Options& opt, const std::string& command, std::vector<std::string> columns, std::ostream& out,
         std::ostream& err)
      : opt_(opt),
        columns_(std::move(columns)),
        sink_(out, output_path(opt, command, json_format(opt) ? "json" : "csv")),
        out_(out),
        err_(err) {
    if (!json_format(opt_)) sink_.stream() << fmt::format("{}\n", fmt::join(columns_, ","));
  }

  // Cells are pre-formatted numbers or integers; "nan" becomes null in JSON.
  void row(const std::vector<std::string>& cells) {
    if (json_format(opt_)) {
      json r = json::object();
      for (std::size_t i = 0; i < cells.size(); ++i) r[columns_[i]] = to_json(cells[i]);
      rows_.push_back(std::move(r));
    } else {
      sink_.stream() << fmt::format("{}\n", fmt::join(cells, ","));
    }
  }

  void finish(const json& summary) {
    if (json_format(opt_)) {
      json doc{{"summary", summary}, {"rows", std::move(rows_)}};
      sink_.stream() << doc.dump(2) << '\n';
      if (!opt_.summary.empty()) write_summary_file(summary);
      return;
    }
    if (!opt_.summary.empty()) {
      write_summary_file(summary);
    } else {
      (sink_.is_file() ? out_ : err_) << summary.dump(2) << '\n';
    }
  }

 private:
  static json to_json(const std::string& cell) {
    if (cell.empty() || cell == "nan") return nullptr;
    if (cell == "inf") return std::numeric_limits<double>::infinity();
    if (cell == "-inf") return -std::numeric_limits<double>::infinity();
    return json::parse(cell);
  }

  void write_summary_file(const json& summary) {
    Sink s(out_, fs::path(opt_.summary));
    s.stream() << summary.dump(2) << '\n';
  }

  const Options& opt_;
  std::vector<std::string> columns_;
  Sink sink_;
  std::ostream& out_;
  std::ostream& err_;
  json rows_ = json::array();
};

void write_document(const Options& opt, const std::string& command, const json& doc, std::ostream& out) {
  Sink sink(out, output_path(opt, command, "json"));
  sink.stream() << doc.dump(2) << '\n';
}

json scenario_json(const Scenario& s) {
  return {{"name", s.name}, {"horizon", s.horizon}, {"replicates", s.replicates}, {"seed", s.seed}};
}

json coefficients_json(const Coefficients& c) {
  return {{"lambda_lower", c.lambda_lower},
          {"lambda_upper", c.lambda_upper},
          {"lambda_diamond", c.lambda_diamond},
          {"rate", c.rate},
          {"C", nullable(c.C)},
          {"r", nullable(c.r)},
          {"degenerate", c.degenerate},
          {"mixing", c.mixing()},
          {"invariant_density", c.m.values}};
}

json kaijser_json(const KaijserReport& k) {
  return {{"c1", k.constants.c1},
          {"c2", k.constants.c2},
          {"floor", k.constants.floor()},
          {"tv1", k.tv1},
          {"constant", k.constant},
          {"max_drift", k.max_drift},
          {"max_disagreement", k.max_disagreement},
          {"floor_checked", k.floor_checked},
          {"floor_holds", k.floor_holds},
          {"passed", k.passed},
          {"failures", k.failures}};
}

Coefficients coefficients_for(const FiniteModel& model) {
  return mixing_coefficients(model, invariant_density(model.kernel, model.space));
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int run_validate(const Options& opt, std::ostream& out) {
  const Scenario s = resolve_scenario(opt);
  const Coefficients c = coefficients_for(s.model);
  const auto primitive = primitivity_check(s.model.kernel);
  const double tol = 1e-12 * c.lambda_upper;
  const bool ordered = c.lambda_lower <= c.lambda_diamond + tol && c.lambda_diamond <= c.lambda_upper + tol;
  json checks{{"coefficient_order", ordered}};
  json doc{{"scenario", scenario_json(s)},
           {"coefficients", coefficients_json(c)},
           {"primitivity", primitive ? json(*primitive) : json(nullptr)},
           {"kaijser", is_kaijser_model(s.model)},
           {"model", model_to_json(ModelSetup{s.model, s.nu, s.beta})},
           {"checks", checks},
           {"passed", !failed(checks)}};
  write_document(opt, "validate", doc, out);
  return failed(checks) ? kPropertyFailure : kOk;
}

int run_simulate(const Options& opt, std::ostream& out, std::ostream& err) {
  const Scenario s = resolve_scenario(opt);
  const Density& prior = opt.prior == "beta" ? s.beta : s.nu;
  Writer w(opt, "simulate", {"replicate", "n", "state", "observation"}, out, err);
  json seeds = json::array();
  for (std::size_t r = 0; r < s.replicates; ++r) {
    const std::uint64_t seed = replicate_seed(s.seed, r);
    seeds.push_back(seed);
    const Trajectory t = sample_trajectory(s.model, prior, s.horizon, seed);
    for (std::size_t n = 0; n <= t.horizon(); ++n) {
      w.row({std::to_string(r), std::to_string(n), std::to_string(t.states[n]),
             n == 0 ? std::string() : num(t.observations[n - 1])});
    }
  }
  w.finish({{"scenario", scenario_json(s)}, {"prior", opt.prior}, {"replicate_seeds", seeds}});
  return kOk;
}

int run_stability(const Options& opt, std::ostream& out, std::ostream& err) {
  const Scenario s = resolve_scenario(opt);
  const Coefficients c = coefficients_for(s.model);
  const auto records = run_scenario(s, RunOptions{opt.window_fraction, opt.threads});

  Writer w(opt, "stability",
           {"replicate", "n", "tv", "log_tv", "bound_log_tv", "delta_max", "oscillation_bound_max",
            "likelihood_ratio"},
           out, err);
  json slopes = json::array(), replicates = json::array();
  std::optional<bool> rate_ok, bound_ok, kaijser_ok;
  bool contraction_ok = true;
  double worst_bound = kNaN, worst_contraction = 0.0;
  for (const RunRecord& rec : records) {
    for (std::size_t n = 0; n < rec.tv.size(); ++n) {
      const double bound_log = -c.rate * static_cast<double>(n);
      w.row({std::to_string(rec.replicate), std::to_string(n), num(rec.tv[n]), num(std::log(rec.tv[n])),
             num(bound_log + 0.0), n == 0 ? "nan" : num(rec.delta_max[n - 1]),
             n == 0 ? "nan" : num(rec.bound_max[n - 1]), num(rec.likelihood_ratio[n])});
    }
    const double slope = rec.decay.slope;
    slopes.push_back(nullable(slope));
    if (c.mixing() && !std::isnan(slope)) rate_ok = rate_ok.value_or(true) && slope <= -c.rate + kRateSlack;
    if (!rec.bound_vacuous) {
      bound_ok = bound_ok.value_or(true) && rec.worst_bound_ratio <= 1.0;
      worst_bound = std::isnan(worst_bound) ? rec.worst_bound_ratio : std::max(worst_bound, rec.worst_bound_ratio);
    }
    contraction_ok = contraction_ok && rec.worst_contraction_ratio <= 1.0;
    worst_contraction = std::max(worst_contraction, rec.worst_contraction_ratio);
    const double n_final = static_cast<double>(rec.trajectory.horizon());
    json entry{{"replicate", rec.replicate},
               {"seed", rec.seed},
               {"slope", nullable(slope)},
               {"converged", rec.decay.converged},
               {"fit_points", rec.decay.points},
               {"final_tv", rec.tv.back()},
               {"log_likelihood_ratio_rate", std::abs(std::log(rec.likelihood_ratio.back())) / n_final},
               {"worst_bound_ratio", nullable(rec.worst_bound_ratio)},
               {"worst_contraction_ratio", rec.worst_contraction_ratio}};
    if (rec.kaijser) {
      entry["kaijser"] = kaijser_json(*rec.kaijser);
      kaijser_ok = kaijser_ok.value_or(true) && rec.kaijser->passed;
    }
    replicates.push_back(std::move(entry));
  }

  json checks{{"rate", check(rate_ok)},
              {"oscillation_bound", check(bound_ok)},
              {"contraction", records.empty() ? json(nullptr) : json(contraction_ok)},
              {"kaijser", check(kaijser_ok)}};
  json summary{{"scenario", scenario_json(s)},
               {"window_fraction", opt.window_fraction},
               {"coefficients", coefficients_json(c)},
               {"reference_slope", -c.rate + 0.0},
               {"slopes", slopes},
               {"worst_bound_ratio", nullable(worst_bound)},
               {"worst_contraction_ratio", worst_contraction},
               {"replicate_details", replicates},
               {"checks", checks},
               {"passed", !failed(checks)}};
  if (is_kaijser_model(s.model)) {
    summary["floor"] = kaijser_constants(s.nu, s.beta).floor();
  }
  w.finish(summary);
  return failed(checks) ? kPropertyFailure : kOk;
}

int run_ergodicity(const Options& opt, std::ostream& out, std::ostream& err) {
  if (opt.n_max < 1) throw InvalidInput("--n-max must be at least 1");
  const Scenario s = resolve_scenario(opt);
  const Coefficients c = coefficients_for(s.model);
  const ErgodicityReport report = geometric_ergodicity_report(s.model, c, opt.n_max);
  const auto sequence = stationary_backward_sequence(s.model, c.m, opt.n_max);
  const BoundCheck delta = delta_bound_check(sequence, c.m, c);

  Writer w(opt, "ergodicity", {"u", "n", "gap", "bound", "ratio"}, out, err);
  for (std::size_t u = 0; u < s.model.size(); ++u) {
    for (std::size_t n = 1; n <= opt.n_max; ++n) {
      const double gap = report.gap_at(u, n);
      const double bound = report.bound_at(n);
      const double ratio = report.applicable ? (bound > 0.0 ? gap / bound : kNaN) : kNaN;
      w.row({std::to_string(u), std::to_string(n), num(gap), num(bound), num(ratio)});
    }
  }
  json Delta = json::array();
  for (const auto& sb : sequence) Delta.push_back(*std::max_element(sb.Delta.begin(), sb.Delta.end()));

  std::optional<bool> gap_ok, degenerate_ok, delta_ok;
  if (report.applicable) gap_ok = report.worst_ratio <= 1.0;
  if (report.degenerate) degenerate_ok = report.max_gap <= kDegenerateGapTolerance;
  if (delta.applicable) delta_ok = delta.worst_ratio <= 1.0;
  json checks{{"geometric_bound", check(gap_ok)}, {"degenerate_gaps", check(degenerate_ok)},
              {"stationary_backward_bound", check(delta_ok)}};
  w.finish({{"scenario", scenario_json(s)},
            {"n_max", opt.n_max},
            {"coefficients", coefficients_json(c)},
            {"applicable", report.applicable},
            {"worst_ratio", nullable(report.worst_ratio)},
            {"max_gap", report.max_gap},
            {"stationary_backward_max", Delta},
            {"stationary_backward_worst_ratio", nullable(delta.worst_ratio)},
            {"checks", checks},
            {"passed", !failed(checks)}});
  return failed(checks) ? kPropertyFailure : kOk;
}

int run_backward(const Options& opt, std::ostream& out, std::ostream& err) {
  const Scenario s = resolve_scenario(opt);
  const Coefficients c = coefficients_for(s.model);
  const FiniteModel& model = s.model;
  const std::size_t d = model.size();
  const auto nu_over_beta = density_ratio(s.nu, s.beta);

  Writer w(opt, "backward", {"replicate", "n", "u", "delta", "bound", "ratio", "contraction_factor"}, out, err);
  std::optional<bool> bound_ok;
  bool contraction_ok = true, identity_ok = true;
  double worst_identity = 0.0, worst_contraction = 0.0, worst_bound = kNaN;
  bool vacuous = !c.mixing();
  for (std::size_t r = 0; r < s.replicates; ++r) {
    const Trajectory t = sample_trajectory(model, s.nu, s.horizon, replicate_seed(s.seed, r));
    BackwardContext ctx(model, s.beta);
    std::vector<std::vector<double>> deltas;
    for (const Observation y : t.observations) {
      ctx.step(y);
      deltas.push_back(ctx.delta());
    }
    const auto& history = ctx.filter_history();
    const auto bound = oscillation_bound(std::span(history).first(t.horizon()), c, s.beta, model.space);
    for (std::size_t n = 1; n <= t.horizon(); ++n) {
      const double factor = n >= 2 ? contraction_factor(history[n - 1], c, model.space) : kNaN;
      for (std::size_t u = 0; u < d; ++u) {
        const double delta = deltas[n - 1][u];
        const double b = bound.bound[n - 1][u];
        const double ratio = bound.vacuous ? kNaN : delta / b;
        if (!bound.vacuous) {
          bound_ok = bound_ok.value_or(true) && ratio <= 1.0;
          worst_bound = std::isnan(worst_bound) ? ratio : std::max(worst_bound, ratio);
        }
        if (n >= 2) {
          const double allowed = factor * deltas[n - 2][u];
          const double cr = allowed > 0.0 ? delta / allowed : (delta == 0.0 ? 0.0 : kNaN);
          contraction_ok = contraction_ok && cr <= 1.0;
          worst_contraction = std::max(worst_contraction, cr);
        }
        w.row({std::to_string(r), std::to_string(n), std::to_string(u), num(delta), num(b), num(ratio),
               num(factor)});
      }
    }
    const FilterRun run_beta = run_filter(s.beta, t.observations, model, "beta");
    const FilterRun run_nu = run_filter(s.nu, t.observations, model, "nu");
    const double residual = check_likelihood_identities(run_beta, run_nu, ctx.rho(), nu_over_beta, model.space);
    worst_identity = std::max(worst_identity, residual);
    identity_ok = identity_ok && residual <= kIdentityTolerance;
  }
  json checks{{"oscillation_bound", check(bound_ok)},
              {"contraction", s.replicates == 0 ? json(nullptr) : json(contraction_ok)},
              {"likelihood_identities", s.replicates == 0 ? json(nullptr) : json(identity_ok)}};
  w.finish({{"scenario", scenario_json(s)},
            {"coefficients", coefficients_json(c)},
            {"vacuous", vacuous},
            {"worst_bound_ratio", nullable(worst_bound)},
            {"worst_contraction_ratio", worst_contraction},
            {"worst_identity_residual", worst_identity},
            {"checks", checks},
            {"passed", !failed(checks)}});
  return failed(checks) ? kPropertyFailure : kOk;
}

int run_kaijser(const Options& opt, std::ostream& out) {
  const Scenario s = resolve_scenario(opt);
  if (!is_kaijser_model(s.model)) throw InvalidInput("the kaijser subcommand needs the cyclic four-state model");
  json reports = json::array();
  bool passed = true;
  for (std::size_t r = 0; r < s.replicates; ++r) {
    const std::uint64_t seed = replicate_seed(s.seed, r);
    const KaijserReport k = kaijser_verify(s.nu, s.beta, s.horizon, seed);
    json entry = kaijser_json(k);
    entry["replicate"] = r;
    entry["seed"] = seed;
    reports.push_back(std::move(entry));
    passed = passed && k.passed;
  }
  const KaijserConstants k = kaijser_constants(s.nu, s.beta);
  json doc{{"scenario", scenario_json(s)},
           {"c1", k.c1},
           {"c2", k.c2},
           {"floor", k.floor()},
           {"reports", reports},
           {"passed", passed}};
  write_document(opt, "kaijser", doc, out);
  return passed ? kOk : kPropertyFailure;
}

int run_lln(const Options& opt, std::ostream& out, std::ostream& err) {
  const Scenario s = resolve_scenario(opt);
  const FiniteModel& model = s.model;
  const std::size_t d = model.size();
  const Density m = invariant_density(model.kernel, model.space);
  const Density& prior = opt.prior == "beta" ? s.beta : s.nu;

  std::vector<std::vector<double>> indicators(d, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < d; ++i) indicators[i][i] = 1.0;

  json poisson = json::array();
  std::optional<bool> poisson_ok;
  for (std::size_t i = 0; i < d; ++i) {
    try {
      const PoissonSolution sol = solve_poisson(model, m, indicators[i]);
      const double residual = poisson_residual(model, sol);
      poisson.push_back({{"state", i}, {"residual", residual}, {"terms", sol.terms}});
      poisson_ok = poisson_ok.value_or(true) && residual <= kPoissonTolerance;
    } catch (const NumericalFailure& e) {
      poisson.push_back({{"state", i}, {"error", e.what()}});
      poisson_ok = false;
    }
  }

  Writer w(opt, "lln", {"replicate", "n", "state", "average", "target", "gap"}, out, err);
  json finals = json::array();
  for (std::size_t r = 0; r < s.replicates; ++r) {
    const Trajectory t = sample_trajectory(model, s.nu, s.horizon, replicate_seed(s.seed, r));
    const FilterRun run = run_filter(prior, t.observations, model, opt.prior);
    json gaps = json::array();
    for (std::size_t i = 0; i < d; ++i) {
      const auto running = lln_running_average(run, indicators[i], model.space);
      const double target = integrate(indicators[i], m, model.space);
      for (std::size_t n = 1; n <= running.size(); ++n) {
        w.row({std::to_string(r), std::to_string(n), std::to_string(i), num(running[n - 1]), num(target),
               num(running[n - 1] - target)});
      }
      gaps.push_back(running.back() - target);
    }
    finals.push_back({{"replicate", r}, {"final_gap", gaps}});
  }
  // The law of large numbers is reported, not gated.
  json checks{{"poisson_residual", check(poisson_ok)}};
  w.finish({{"scenario", scenario_json(s)},
            {"prior", opt.prior},
            {"invariant_density", m.values},
            {"poisson", poisson},
            {"replicates", finals},
            {"checks", checks},
            {"passed", !failed(checks)}});
  return failed(checks) ? kPropertyFailure : kOk;
}

void add_source_options(CLI::App* sub, Options& opt) {
  sub->add_option("--model", opt.model, "Model JSON file");
  sub->add_option("--scenario", opt.scenario, "Built-in scenario name");
  sub->add_option("--nu", opt.nu, "Override the true prior, comma separated");
  sub->add_option("--beta", opt.beta, "Override the filter prior, comma separated");
  sub->add_option("--output", opt.output, "Result file (default: stdout or $" + std::string(kOutputDirEnv) + ")");
  sub->add_option("--threads", opt.threads, "Worker threads (0: hardware concurrency)");
}

void add_run_options(CLI::App* sub, Options& opt) {
  sub->add_option("--horizon", opt.horizon, "Number of observations");
  sub->add_option("--replicates", opt.replicates, "Number of replicates");
  sub->add_option("--seed", opt.seed, "Master seed");
  sub->add_option("--format", opt.format, "Result format")->check(CLI::IsMember({"csv", "json"}));
  sub->add_option("--summary", opt.summary, "Summary JSON file");
}

}  // namespace

std::vector<double> parse_list(std::string_view text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    std::string_view token = text.substr(pos, comma - pos);
    while (!token.empty() && std::isspace(static_cast<unsigned char>(token.front()))) token.remove_prefix(1);
    while (!token.empty() && std::isspace(static_cast<unsigned char>(token.back()))) token.remove_suffix(1);
    double v = 0.0;
    const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (token.empty() || ec != std::errc() || end != token.data() + token.size()) {
      throw InvalidInput("cannot parse '" + std::string(token) + "' as a number");
    }
    out.push_back(v);
    pos = comma + 1;
  }
  return out;
}

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Filter stability experiments for finite-state hidden Markov models", "filtstab"};
  app.require_subcommand(1);
  Options opt;

  auto* validate = app.add_subcommand("validate", "Coefficient report for a model");
  add_source_options(validate, opt);

  auto* simulate = app.add_subcommand("simulate", "Sample state and observation trajectories");
  add_source_options(simulate, opt);
  add_run_options(simulate, opt);
  simulate->add_option("--prior", opt.prior, "Initial law")->check(CLI::IsMember({"nu", "beta"}));

  auto* stability = app.add_subcommand("stability", "Correct vs wrong-prior filter gap per step");
  add_source_options(stability, opt);
  add_run_options(stability, opt);
  stability->add_option("--window-fraction", opt.window_fraction, "Trailing fraction used for the slope fit");

  auto* ergodicity = app.add_subcommand("ergodicity", "n-step gaps to the invariant density");
  add_source_options(ergodicity, opt);
  ergodicity->add_option("--n-max", opt.n_max, "Largest power");
  ergodicity->add_option("--format", opt.format, "Result format")->check(CLI::IsMember({"csv", "json"}));
  ergodicity->add_option("--summary", opt.summary, "Summary JSON file");

  auto* backward = app.add_subcommand("backward", "Oscillation of the backward density against its bound");
  add_source_options(backward, opt);
  add_run_options(backward, opt);

  auto* kaijser = app.add_subcommand("kaijser", "Closed-form check of the non-forgetting four-state chain");
  add_source_options(kaijser, opt);
  kaijser->add_option("--horizon", opt.horizon, "Number of observations");
  kaijser->add_option("--replicates", opt.replicates, "Number of replicates");
  kaijser->add_option("--seed", opt.seed, "Master seed");

  auto* lln = app.add_subcommand("lln", "Running averages of the filter against the invariant density");
  add_source_options(lln, opt);
  add_run_options(lln, opt);
  lln->add_option("--prior", opt.prior, "Filter prior")->check(CLI::IsMember({"nu", "beta"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kInvalidInput;
  }

  try {
    if (*validate) return run_validate(opt, out);
    if (*simulate) return run_simulate(opt, out, err);
    if (*stability) return run_stability(opt, out, err);
    if (*ergodicity) return run_ergodicity(opt, out, err);
    if (*backward) return run_backward(opt, out, err);
    if (*kaijser) return run_kaijser(opt, out);
    if (*lln) return run_lln(opt, out, err);
  } catch (const InvalidInput& e) {
    err << "invalid input: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kNumericalFailure;
  }
  err << app.help();
  return kInvalidInput;
}

}  // namespace filtstab::cli
