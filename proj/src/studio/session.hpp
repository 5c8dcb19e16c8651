#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "align/align.hpp"
#include "common/error.hpp"
#include "font/layout.hpp"
#include "gif/gif.hpp"
#include "laplace/laplace.hpp"
#include "motion/trajectory.hpp"
#include "pipeline/edits.hpp"
#include "raster/raster.hpp"

namespace gm::studio {

inline constexpr int kSchemaVersion = 1;

/// A request that needs an input the session does not have yet (HTTP 409).
class MissingInputError : public Error {
 public:
  explicit MissingInputError(const std::string& what) : Error(ErrorCode::InvalidArgument, what) {}
};

/// Request-level error tagged with the stage that failed. `details` holds
/// extra fields for the response body, such as "offset" or "violations".
class StudioError : public Error {
 public:
  StudioError(std::string stage, ErrorCode code, const std::string& what,
              nlohmann::json details = nlohmann::json::object())
      : Error(code, what), stage_(std::move(stage)), details_(std::move(details)) {}
  const std::string& stage() const noexcept { return stage_; }
  const nlohmann::json& details() const noexcept { return details_; }

 private:
  std::string stage_;
  nlohmann::json details_;
};

struct FontEntry {
  std::shared_ptr<const font::Font> font;
  std::filesystem::path path;
};

/// Looks a font up by id. Throws gm::Error for unknown ids.
using FontResolver = std::function<FontEntry(const std::string& id)>;

std::uint64_t fnv1a(const void* data, std::size_t size);
std::string hex64(std::uint64_t value);

/// One authoring session. Indices are 0-based here; the HTTP layer converts.
/// Not thread-safe: the service serializes access per session.
class Session {
 public:
  Session(std::string id, FontResolver fonts, std::string default_font, unsigned threads = 0);

  /// Appends every applied event to `<dir>/events.jsonl` and stores GIF blobs
  /// under `<dir>/blobs/`.
  void persist_to(std::filesystem::path dir);
  /// Rebuilds a session from a persisted directory.
  static std::unique_ptr<Session> load(const std::filesystem::path& dir, FontResolver fonts,
                                       std::string default_font, unsigned threads = 0);

  const std::string& id() const { return id_; }
  std::uint64_t revision() const { return revision_; }
  std::uint64_t content_hash() const;

  nlohmann::json upload_gif(std::vector<std::uint8_t> bytes);
  /// Keys: text, font, fill, background. Missing keys keep their value.
  nlohmann::json set_text(const nlohmann::json& doc);
  nlohmann::json patch_keypoint(std::size_t i, std::size_t f, Vec2 pos);
  nlohmann::json patch_control(std::size_t j, std::size_t f, Vec2 pos);
  /// Deform parameters plus "n"; merged over the current values.
  nlohmann::json set_params(const nlohmann::json& doc);

  nlohmann::json summary() const;
  nlohmann::json keypoints() const;
  nlohmann::json keypoint(std::size_t i, std::size_t f) const;
  nlohmann::json control_edits() const;
  nlohmann::json control(std::size_t j, std::size_t f);
  std::vector<std::uint8_t> preview_png(std::size_t f);
  std::vector<std::uint8_t> result_gif();
  nlohmann::json svg_bundle();
  /// Pipeline config plus the files it references, reproducing this state.
  nlohmann::json export_config() const;
  nlohmann::json events() const;

  /// Applies a logged event; GIF events look their bytes up in `blobs`.
  void apply_event(const nlohmann::json& event, const std::map<std::string, std::vector<std::uint8_t>>& blobs);
  const std::map<std::string, std::vector<std::uint8_t>>& blobs() const { return blobs_; }

 private:
  void record(nlohmann::json event);
  nlohmann::json mutation_reply(nlohmann::json extra = nlohmann::json::object()) const;
  nlohmann::json drop_control_edits(std::optional<std::size_t> frame);

  void require_gif() const;
  void require_text() const;
  std::size_t frame_count() const { return frames_ ? frames_->frames.size() : 0; }
  font::CanvasSpec canvas() const;
  void relayout();
  void rebuild_keypoints();
  void invalidate_frame(std::size_t f);
  void invalidate_all();

  const align::ControlTrajectory& raw();
  const laplace::NeighborGraph& graph();
  void ensure_optimized(const std::vector<std::size_t>& frames);
  std::vector<Vec2> drawn_positions(std::size_t f);
  const Image& rendered(std::size_t f);
  raster::RenderSpec spec() const;

  std::string id_;
  FontResolver fonts_;
  unsigned threads_;
  std::uint64_t revision_ = 0;
  std::vector<nlohmann::json> events_;
  std::map<std::string, std::vector<std::uint8_t>> blobs_;
  std::optional<std::filesystem::path> persist_dir_;

  // Canonical state: everything else is derived from these.
  std::string gif_blob_;
  std::string text_;
  std::string font_id_;
  Rgba8 fill_{0, 0, 0, 255};
  Rgba8 background_{255, 255, 255, 255};
  DeformParams params_;
  int n_ = 10;
  std::map<std::pair<std::size_t, std::size_t>, Vec2> keypoint_edits_;
  pipeline::ControlEdits control_edits_;

  std::optional<gif::FrameSequence> frames_;
  std::optional<motion::KeypointTrajectorySet> extracted_;
  std::vector<std::string> extract_warnings_;
  motion::KeypointTrajectorySet keypoints_;  // extracted with edits overlaid
  std::shared_ptr<const font::Font> font_;
  std::optional<font::GlyphControlSet> controls_;
  font::CanvasSpec layout_canvas_{0, 0};
  std::optional<align::ControlTrajectory> raw_;
  std::optional<laplace::NeighborGraph> graph_;
  std::vector<std::optional<std::vector<Vec2>>> optimized_;
  std::vector<std::optional<Image>> renders_;
};

}  // namespace gm::studio
