#pragma once

#include <map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "common/geometry.hpp"

namespace gm::pipeline {

/// User overrides of optimized control points, keyed by 0-based (j, f).
using ControlEdits = std::map<std::pair<std::size_t, std::size_t>, Vec2>;

/// {"version": 1, "edits": [{"j": 1, "f": 1, "x": 0.5, "y": 0.5}, ...]}
/// with 1-based indices, ordered by (j, f).
nlohmann::json edits_to_json(const ControlEdits& edits);
ControlEdits edits_from_json(const nlohmann::json& doc);

/// Overwrites grid positions. Throws gm::Error(NotFound) for an index out of
/// range and gm::Error(InvalidArgument) for a coordinate outside [0,1]^2.
void apply_control_edits(PointGrid& grid, const ControlEdits& edits);

}  // namespace gm::pipeline
