#include "pipeline/edits.hpp"

#include <cmath>

#include "common/error.hpp"

namespace gm::pipeline {

nlohmann::json edits_to_json(const ControlEdits& edits) {
  auto list = nlohmann::json::array();
  for (const auto& [key, p] : edits)
    list.push_back({{"j", key.first + 1}, {"f", key.second + 1}, {"x", p.x}, {"y", p.y}});
  return {{"version", 1}, {"edits", list}};
}

ControlEdits edits_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("version").get<int>() != 1) throw Error(ErrorCode::InvalidArgument, "unsupported control edit version");
    ControlEdits edits;
    for (const auto& e : doc.at("edits")) {
      const auto j = e.at("j").get<long long>(), f = e.at("f").get<long long>();
      if (j < 1 || f < 1) throw Error(ErrorCode::NotFound, "control edit indices are 1-based");
      edits[{std::size_t(j - 1), std::size_t(f - 1)}] = {e.at("x").get<double>(), e.at("y").get<double>()};
    }
    return edits;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed control edits: ") + e.what());
  }
}

void apply_control_edits(PointGrid& grid, const ControlEdits& edits) {
  for (const auto& [key, p] : edits) {
    const auto [j, f] = key;
    const std::string where = "(" + std::to_string(j + 1) + ", " + std::to_string(f + 1) + ")";
    if (j >= grid.rows() || f >= grid.frames())
      throw Error(ErrorCode::NotFound, "control edit " + where + " is out of range");
    if (!(std::isfinite(p.x) && std::isfinite(p.y) && p.x >= 0 && p.x <= 1 && p.y >= 0 && p.y <= 1))
      throw Error(ErrorCode::InvalidArgument, "control edit " + where + " is outside [0,1]^2");
    grid.at(j, f) = p;
  }
}

}  // namespace gm::pipeline
