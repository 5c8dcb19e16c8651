#include <cmath>

#include "common/error.hpp"
#include "motion/trajectory.hpp"

namespace gm::motion {

namespace {
constexpr int kTrajectorySchemaVersion = 1;

std::string at_index(std::size_t i, std::size_t f) {
  return "(" + std::to_string(i + 1) + ", " + std::to_string(f + 1) + ")";
}
}  // namespace

const char* to_string(TrajectorySource source) {
  switch (source) {
    case TrajectorySource::Extracted: return "extracted";
    case TrajectorySource::Imported: return "imported";
    case TrajectorySource::UserCorrected: return "user-corrected";
  }
  return "extracted";
}

TrajectorySource source_from_string(const std::string& name) {
  if (name == "extracted") return TrajectorySource::Extracted;
  if (name == "imported") return TrajectorySource::Imported;
  if (name == "user-corrected") return TrajectorySource::UserCorrected;
  throw Error(ErrorCode::Trajectory, "unknown trajectory source '" + name + "'");
}

void validate(const KeypointTrajectorySet& t) {
  for (std::size_t i = 0; i < t.n(); ++i) {
    for (std::size_t f = 0; f < t.f(); ++f) {
      Vec2 p = t.positions.at(i, f);
      if (!std::isfinite(p.x) || !std::isfinite(p.y) || p.x < 0.0 || p.x > 1.0 || p.y < 0.0 || p.y > 1.0)
        throw Error(ErrorCode::Trajectory, "keypoint " + at_index(i, f) + " is outside [0,1]^2");
    }
  }
}

nlohmann::json export_trajectories(const KeypointTrajectorySet& t) {
  nlohmann::json doc;
  doc["version"] = kTrajectorySchemaVersion;
  doc["n"] = t.n();
  doc["f"] = t.f();
  doc["source"] = to_string(t.source);
  auto rows = nlohmann::json::array();
  for (std::size_t i = 0; i < t.n(); ++i) {
    auto row = nlohmann::json::array();
    for (std::size_t f = 0; f < t.f(); ++f) row.push_back({t.positions.at(i, f).x, t.positions.at(i, f).y});
    rows.push_back(std::move(row));
  }
  doc["positions"] = std::move(rows);
  return doc;
}

KeypointTrajectorySet import_trajectories(const nlohmann::json& doc) {
  auto fail = [](const std::string& what) -> KeypointTrajectorySet {
    throw Error(ErrorCode::Trajectory, "invalid trajectory file: " + what);
  };
  if (!doc.is_object()) return fail("top level must be an object");
  for (const char* key : {"version", "n", "f", "positions"})
    if (!doc.contains(key)) return fail(std::string("missing '") + key + "'");
  if (!doc["version"].is_number_integer() || doc["version"].get<int>() != kTrajectorySchemaVersion)
    return fail("unsupported version");
  if (!doc["n"].is_number_unsigned() || !doc["f"].is_number_unsigned()) return fail("n and f must be non-negative");
  const auto n = doc["n"].get<std::size_t>();
  const auto frames = doc["f"].get<std::size_t>();
  if (n == 0 || frames == 0) return fail("n and f must be at least 1");
  const auto& rows = doc["positions"];
  if (!rows.is_array() || rows.size() != n)
    return fail("positions has " + std::to_string(rows.is_array() ? rows.size() : 0) + " rows, expected n = " +
                std::to_string(n));

  KeypointTrajectorySet t;
  t.source = TrajectorySource::Imported;
  t.positions = PointGrid(n, frames);
  for (std::size_t i = 0; i < n; ++i) {
    if (!rows[i].is_array() || rows[i].size() != frames)
      return fail("row " + std::to_string(i + 1) + " does not have f = " + std::to_string(frames) + " entries");
    for (std::size_t f = 0; f < frames; ++f) {
      const auto& p = rows[i][f];
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
        return fail("entry " + at_index(i, f) + " is not an [x, y] pair");
      t.positions.at(i, f) = {p[0].get<double>(), p[1].get<double>()};
    }
  }
  validate(t);
  return t;
}

KeypointTrajectorySet import_trajectories(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::Trajectory, std::string("trajectory file is not valid JSON: ") + e.what());
  }
  return import_trajectories(doc);
}

}  // namespace gm::motion
