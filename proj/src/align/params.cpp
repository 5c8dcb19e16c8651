#include "align/params.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"

namespace gm {

const char* to_string(TrajectorySelector s) {
  return s == TrajectorySelector::DrivingGif ? "driving_gif" : "extracted_text";
}

const char* to_string(WeightMode m) { return m == WeightMode::FrozenAtRaw ? "frozen" : "differentiated"; }

std::vector<std::string> DeformParams::violations(std::size_t control_points) const {
  std::vector<std::string> out;
  if (!(std::isfinite(alpha) && alpha >= 0.0)) out.push_back("alpha must be a finite number >= 0");
  if (!(std::isfinite(e) && e > 0.0)) out.push_back("e must be a finite number > 0");
  if (k_neighbors < 1) out.push_back("k must be >= 1");
  if (control_points > 0 && std::size_t(std::max(k_neighbors, 0)) >= control_points)
    out.push_back("k must be smaller than the number of control points (" + std::to_string(control_points) + ")");
  if (optimizer.max_iterations < 0) out.push_back("max_iterations must be >= 0");
  if (!(optimizer.initial_step > 0.0 && std::isfinite(optimizer.initial_step)))
    out.push_back("step must be a finite number > 0");
  if (!(optimizer.tolerance >= 0.0)) out.push_back("tolerance must be >= 0");
  return out;
}

void DeformParams::validate(std::size_t control_points) const {
  auto v = violations(control_points);
  if (v.empty()) return;
  std::string msg = "invalid parameters: ";
  for (std::size_t i = 0; i < v.size(); ++i) msg += (i ? "; " : "") + v[i];
  throw Error(ErrorCode::Config, msg);
}

nlohmann::json to_json(const DeformParams& p) {
  return {{"alpha", p.alpha},
          {"e", p.e},
          {"k", p.k_neighbors},
          {"max_iterations", p.optimizer.max_iterations},
          {"step", p.optimizer.initial_step},
          {"tolerance", p.optimizer.tolerance},
          {"weights", to_string(p.optimizer.weight_mode)},
          {"trajectory_source", to_string(p.trajectory_source)}};
}

DeformParams params_from_json(const nlohmann::json& doc, DeformParams p) {
  if (!doc.is_object()) throw Error(ErrorCode::Config, "parameters must be a JSON object");
  auto number = [&](const std::string& key) {
    if (!doc[key].is_number()) throw Error(ErrorCode::Config, "parameter '" + key + "' must be a number");
    return doc[key].get<double>();
  };
  auto integer = [&](const std::string& key) {
    if (!doc[key].is_number_integer()) throw Error(ErrorCode::Config, "parameter '" + key + "' must be an integer");
    return doc[key].get<long long>();
  };
  for (const auto& [key, value] : doc.items()) {
    if (key == "alpha") p.alpha = number(key);
    else if (key == "e") p.e = number(key);
    else if (key == "k") p.k_neighbors = int(integer(key));
    else if (key == "max_iterations") p.optimizer.max_iterations = int(integer(key));
    else if (key == "step") p.optimizer.initial_step = number(key);
    else if (key == "tolerance") p.optimizer.tolerance = number(key);
    else if (key == "threads") {
      auto t = integer(key);
      if (t < 0 || t > 1024) throw Error(ErrorCode::Config, "parameter 'threads' must be in [0, 1024]");
      p.optimizer.threads = unsigned(t);
    }
    else if (key == "weights") {
      auto s = value.is_string() ? value.get<std::string>() : "";
      if (s == "frozen") p.optimizer.weight_mode = WeightMode::FrozenAtRaw;
      else if (s == "differentiated") p.optimizer.weight_mode = WeightMode::Differentiated;
      else throw Error(ErrorCode::Config, "parameter 'weights' must be \"frozen\" or \"differentiated\"");
    } else if (key == "trajectory_source") {
      auto s = value.is_string() ? value.get<std::string>() : "";
      if (s == "driving_gif") p.trajectory_source = TrajectorySelector::DrivingGif;
      else if (s == "extracted_text") p.trajectory_source = TrajectorySelector::ExtractedText;
      else throw Error(ErrorCode::Config, "parameter 'trajectory_source' must be \"driving_gif\" or \"extracted_text\"");
    } else {
      throw Error(ErrorCode::Config, "unknown parameter '" + key + "'");
    }
  }
  return p;
}

}  // namespace gm
