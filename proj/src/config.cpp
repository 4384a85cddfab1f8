#include "filtstab/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "filtstab/error.hpp"

namespace filtstab {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw InvalidInput((path.empty() ? std::string("/") : path) + ": " + message);
}

const json& require(const json& object, const std::string& path, const char* key) {
  const auto it = object.find(key);
  if (it == object.end()) fail(path, std::string("missing required key \"") + key + "\"");
  return *it;
}

double read_number(const json& value, const std::string& path) {
  if (!value.is_number()) fail(path, "expected a number");
  return value.get<double>();
}

std::vector<double> read_vector(const json& value, const std::string& path) {
  if (!value.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(value.size());
  for (std::size_t i = 0; i < value.size(); ++i) out.push_back(read_number(value[i], path + "/" + std::to_string(i)));
  return out;
}

std::vector<std::vector<double>> read_rows(const json& value, const std::string& path) {
  if (!value.is_array()) fail(path, "expected an array of arrays");
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < value.size(); ++i) out.push_back(read_vector(value[i], path + "/" + std::to_string(i)));
  return out;
}

void reject_unknown(const json& object, const std::string& path, const std::set<std::string>& allowed) {
  for (const auto& [key, _] : object.items()) {
    if (!allowed.contains(key)) fail(path + "/" + key, "unknown key");
  }
}

// Re-throws InvalidInput from model validation with the JSON location.
template <class F>
auto at_path(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const InvalidInput& e) {
    fail(path, e.what());
  }
}

ObservationModel read_observation(const json& value, const std::string& path) {
  if (!value.is_object()) fail(path, "expected an object");
  const json& type = require(value, path, "type");
  if (!type.is_string()) fail(path + "/type", "expected a string");
  const std::string kind = type.get<std::string>();
  if (kind == "finite") {
    reject_unknown(value, path, {"type", "gamma", "theta"});
    auto gamma = read_rows(require(value, path, "gamma"), path + "/gamma");
    std::vector<double> theta;
    if (value.contains("theta")) theta = read_vector(value["theta"], path + "/theta");
    return at_path(path, [&] { return ObservationModel::finite(Matrix::from_rows(gamma), theta); });
  }
  if (kind == "gaussian") {
    reject_unknown(value, path, {"type", "means", "sigma"});
    auto means = read_vector(require(value, path, "means"), path + "/means");
    const double sigma = read_number(require(value, path, "sigma"), path + "/sigma");
    return at_path(path, [&] { return ObservationModel::gaussian(means, sigma); });
  }
  fail(path + "/type", "expected \"finite\" or \"gaussian\"");
}

}  // namespace

ModelSetup parse_config(const json& document) {
  if (!document.is_object()) fail("", "expected a JSON object");
  reject_unknown(document, "",
                 {"name", "description", "states", "psi", "transition", "observation", "nu", "beta"});
  ModelConfig config;
  const json& states = require(document, "", "states");
  if (!states.is_number_integer() || states.get<long long>() < 1) fail("/states", "expected a positive integer");
  config.states = states.get<std::size_t>();
  if (document.contains("psi")) config.psi = read_vector(document["psi"], "/psi");
  config.transition = read_rows(require(document, "", "transition"), "/transition");
  for (std::size_t i = 0; i < config.transition.size(); ++i) {
    const auto& row = config.transition[i];
    if (row.size() != config.states) continue;  // reported by the model checks
    double sum = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) sum += row[j] * (config.psi.size() == row.size() ? config.psi[j] : 1.0);
    if (std::abs(sum - 1.0) > kInputSumTolerance) {
      fail("/transition/" + std::to_string(i), "invalid kernel: row sums to " + std::to_string(sum));
    }
  }
  config.observation = read_observation(require(document, "", "observation"), "/observation");
  config.nu = read_vector(require(document, "", "nu"), "/nu");
  config.beta = read_vector(require(document, "", "beta"), "/beta");
  return at_path("", [&] { return build_model(config); });
}

ModelSetup load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open model file " + path.string());
  json document;
  try {
    document = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
  return parse_config(document);
}

json model_to_json(const ModelSetup& setup) {
  const FiniteModel& model = setup.model;
  json out;
  out["states"] = model.size();
  out["psi"] = model.space.psi;
  out["transition"] = model.kernel.lambda.to_rows();
  const ObservationModel& obs = model.observation;
  if (obs.kind() == ObservationModel::Kind::finite) {
    out["observation"] = {{"type", "finite"}, {"gamma", obs.gamma().to_rows()}, {"theta", obs.theta()}};
  } else {
    out["observation"] = {{"type", "gaussian"}, {"means", obs.means()}, {"sigma", obs.sigma()}};
  }
  out["nu"] = setup.nu.values;
  out["beta"] = setup.beta.values;
  return out;
}

}  // namespace filtstab
