#include "studio/session.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "common/parallel.hpp"
#include "pipeline/config.hpp"
#include "pipeline/pipeline.hpp"

namespace gm::studio {

namespace {

constexpr const char* kGifFile = "driving.gif";
constexpr const char* kTrajectoryFile = "keypoints.json";
constexpr const char* kEditsFile = "control_edits.json";

// Runs `fn`, converting failures into a StudioError tagged with `stage`.
template <typename Fn>
auto in_stage(const char* stage, Fn&& fn) {
  try {
    return fn();
  } catch (const StudioError&) {
    throw;
  } catch (const MissingInputError&) {
    throw;
  } catch (const GifError& e) {
    throw StudioError(stage, e.code(), e.what(), {{"offset", e.offset()}});
  } catch (const NumericError& e) {
    throw StudioError(stage, e.code(), e.what(), {{"iteration", e.iteration()}});
  } catch (const Error& e) {
    throw StudioError(stage, e.code(), e.what());
  } catch (const std::exception& e) {
    throw StudioError(stage, ErrorCode::Internal, e.what());
  }
}

bool in_unit_square(Vec2 p) {
  return std::isfinite(p.x) && std::isfinite(p.y) && p.x >= 0 && p.x <= 1 && p.y >= 0 && p.y <= 1;
}

void check_coordinates(const char* stage, Vec2 p) {
  if (!in_unit_square(p))
    throw StudioError(stage, ErrorCode::InvalidArgument, "coordinates must lie in [0,1]^2",
                      {{"violations", {"x and y must be finite numbers in [0, 1]"}}});
}

std::string where(std::size_t a, std::size_t b) {
  return "(" + std::to_string(a + 1) + ", " + std::to_string(b + 1) + ")";
}

nlohmann::json point_json(Vec2 p) { return {{"x", p.x}, {"y", p.y}}; }

}  // namespace

std::uint64_t fnv1a(const void* data, std::size_t size) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

Session::Session(std::string id, FontResolver fonts, std::string default_font, unsigned threads)
    : id_(std::move(id)), fonts_(std::move(fonts)), threads_(threads), font_id_(std::move(default_font)) {}

std::uint64_t Session::content_hash() const {
  nlohmann::json kp = nlohmann::json::array();
  for (const auto& [key, p] : keypoint_edits_) kp.push_back({key.first, key.second, p.x, p.y});
  nlohmann::json state = {{"gif", gif_blob_},
                          {"text", text_},
                          {"font", font_id_},
                          {"fill", pipeline::format_color(fill_)},
                          {"background", pipeline::format_color(background_)},
                          {"params", to_json(params_)},
                          {"n", n_},
                          {"keypoint_edits", kp},
                          {"control_edits", pipeline::edits_to_json(control_edits_)}};
  const std::string text = state.dump();
  return fnv1a(text.data(), text.size());
}

void Session::record(nlohmann::json event) {
  ++revision_;
  event["revision"] = revision_;
  if (persist_dir_) {
    if (event["type"] == "gif") {
      const auto path = *persist_dir_ / "blobs" / (event["blob"].get<std::string>() + ".gif");
      if (!std::filesystem::exists(path)) {
        const auto& bytes = blobs_.at(event["blob"]);
        std::ofstream out(path, std::ios::binary);
        out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
        if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
      }
    }
    std::ofstream log(*persist_dir_ / "events.jsonl", std::ios::app);
    log << event.dump() << "\n";
    if (!log) throw Error(ErrorCode::Io, "cannot append to the event log of session " + id_);
  }
  events_.push_back(std::move(event));
}

void Session::persist_to(std::filesystem::path dir) {
  std::filesystem::create_directories(dir / "blobs");
  for (const auto& [hash, bytes] : blobs_) {
    std::ofstream out(dir / "blobs" / (hash + ".gif"), std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  }
  std::ofstream log(dir / "events.jsonl", std::ios::trunc);
  for (const auto& e : events_) log << e.dump() << "\n";
  if (!log) throw Error(ErrorCode::Io, "cannot write the event log of session " + id_);
  persist_dir_ = std::move(dir);
}

std::unique_ptr<Session> Session::load(const std::filesystem::path& dir, FontResolver fonts, std::string default_font,
                                       unsigned threads) {
  auto session = std::make_unique<Session>(dir.filename().string(), std::move(fonts), std::move(default_font), threads);
  std::ifstream log(dir / "events.jsonl");
  if (!log) throw Error(ErrorCode::Io, "no event log in " + dir.string());
  std::map<std::string, std::vector<std::uint8_t>> blobs;
  std::string line;
  while (std::getline(log, line)) {
    if (line.empty()) continue;
    const auto event = nlohmann::json::parse(line);
    if (event.at("type") == "gif") {
      const std::string hash = event.at("blob");
      if (!blobs.count(hash)) blobs[hash] = pipeline::read_file(dir / "blobs" / (hash + ".gif"));
    }
    session->apply_event(event, blobs);
  }
  session->persist_dir_ = dir;
  return session;
}

void Session::apply_event(const nlohmann::json& event, const std::map<std::string, std::vector<std::uint8_t>>& blobs) {
  const std::string type = event.at("type");
  if (type == "gif") {
    const std::string hash = event.at("blob");
    auto it = blobs.find(hash);
    if (it == blobs.end()) throw Error(ErrorCode::Io, "missing GIF blob " + hash);
    upload_gif(it->second);
  } else if (type == "text") {
    set_text({{"text", event.at("text")},
              {"font", event.at("font")},
              {"fill", event.at("fill")},
              {"background", event.at("background")}});
  } else if (type == "keypoint") {
    patch_keypoint(event.at("i").get<std::size_t>() - 1, event.at("f").get<std::size_t>() - 1,
                   {event.at("x").get<double>(), event.at("y").get<double>()});
  } else if (type == "control") {
    patch_control(event.at("j").get<std::size_t>() - 1, event.at("f").get<std::size_t>() - 1,
                  {event.at("x").get<double>(), event.at("y").get<double>()});
  } else if (type == "params") {
    set_params(event.at("params"));
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown event type '" + type + "'");
  }
}

nlohmann::json Session::mutation_reply(nlohmann::json extra) const {
  extra["revision"] = revision_;
  extra["hash"] = hex64(content_hash());
  return extra;
}

nlohmann::json Session::drop_control_edits(std::optional<std::size_t> frame) {
  auto dropped = nlohmann::json::array();
  for (auto it = control_edits_.begin(); it != control_edits_.end();) {
    const auto [j, f] = it->first;
    if (!frame || f == *frame) {
      dropped.push_back({{"j", j + 1}, {"f", f + 1}, {"x", it->second.x}, {"y", it->second.y}});
      if (f < renders_.size()) renders_[f].reset();
      it = control_edits_.erase(it);
    } else {
      ++it;
    }
  }
  return dropped;
}

void Session::require_gif() const {
  if (!frames_) throw MissingInputError("upload a driving GIF first");
}

void Session::require_text() const {
  if (!controls_) throw MissingInputError("set the text first");
}

font::CanvasSpec Session::canvas() const {
  if (frames_) return {frames_->width(), frames_->height()};
  return {};
}

raster::RenderSpec Session::spec() const {
  pipeline::PipelineConfig config;
  config.fill = fill_;
  config.background = background_;
  const auto c = canvas();
  return pipeline::render_spec(config, c.width, c.height);
}

void Session::relayout() {
  if (!font_ || text_.empty()) return;
  const auto c = canvas();
  controls_ = in_stage("layout", [&] { return font::layout_text(*font_, text_, c, pipeline::PipelineConfig{}.margin); })
                  .controls;
  layout_canvas_ = c;
  graph_.reset();
  raw_.reset();
  invalidate_all();
}

void Session::rebuild_keypoints() {
  keypoints_ = *extracted_;
  for (const auto& [key, p] : keypoint_edits_) keypoints_.positions.at(key.first, key.second) = p;
  if (!keypoint_edits_.empty()) keypoints_.source = motion::TrajectorySource::UserCorrected;
}

void Session::invalidate_frame(std::size_t f) {
  if (f < optimized_.size()) optimized_[f].reset();
  if (f < renders_.size()) renders_[f].reset();
}

void Session::invalidate_all() {
  optimized_.assign(frame_count(), std::nullopt);
  renders_.assign(frame_count(), std::nullopt);
}

nlohmann::json Session::upload_gif(std::vector<std::uint8_t> bytes) {
  auto seq = in_stage("decode", [&] { return gif::decode_gif(bytes); });
  auto extracted = in_stage("extract", [&] {
    motion::TrackerOptions options;
    options.keypoints = n_;
    return motion::extract_keypoints(seq, options);
  });

  const std::string hash = hex64(fnv1a(bytes.data(), bytes.size()));
  const std::size_t dropped_keypoints = keypoint_edits_.size();
  blobs_[hash] = std::move(bytes);
  gif_blob_ = hash;
  frames_ = std::move(seq);
  extracted_ = std::move(extracted.trajectory);
  extract_warnings_ = std::move(extracted.warnings);
  keypoint_edits_.clear();
  rebuild_keypoints();
  raw_.reset();
  invalidate_all();
  auto dropped = drop_control_edits(std::nullopt);
  if (controls_ && (layout_canvas_.width != canvas().width || layout_canvas_.height != canvas().height)) relayout();

  record({{"type", "gif"}, {"blob", hash}, {"bytes", blobs_[hash].size()}});
  return mutation_reply({{"frames", frames_->frames.size()},
                         {"width", frames_->width()},
                         {"height", frames_->height()},
                         {"delays_cs", frames_->delays_cs},
                         {"n", keypoints_.n()},
                         {"warnings", extract_warnings_},
                         {"dropped_keypoint_edits", dropped_keypoints},
                         {"dropped_control_edits", dropped}});
}

nlohmann::json Session::set_text(const nlohmann::json& doc) {
  if (!doc.is_object()) throw StudioError("text", ErrorCode::Config, "text request must be a JSON object");
  std::string text = text_, font_id = font_id_;
  Rgba8 fill = fill_, background = background_;
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "text") text = value.get<std::string>();
      else if (key == "font") font_id = value.get<std::string>();
      else if (key == "fill") fill = pipeline::parse_color(value.get<std::string>());
      else if (key == "background") background = pipeline::parse_color(value.get<std::string>());
      else throw Error(ErrorCode::Config, "unknown key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw StudioError("text", ErrorCode::Config, std::string("wrong value type: ") + e.what());
  } catch (const Error& e) {
    throw StudioError("text", e.code(), e.what());
  }

  auto entry = in_stage("load-font", [&] { return fonts_(font_id); });
  auto laid = in_stage("layout", [&] {
    return font::layout_text(*entry.font, text, canvas(), pipeline::PipelineConfig{}.margin);
  });
  const auto violations = params_.violations(laid.controls.total_points());
  if (!violations.empty())
    throw StudioError("params", ErrorCode::Config, "current parameters do not fit this text",
                      {{"violations", violations}});

  auto dropped = nlohmann::json::array();
  if (text != text_ || font_id != font_id_ || !controls_) {
    text_ = std::move(text);
    font_id_ = std::move(font_id);
    font_ = entry.font;
    controls_ = std::move(laid.controls);
    layout_canvas_ = canvas();
    graph_.reset();
    raw_.reset();
    invalidate_all();
    dropped = drop_control_edits(std::nullopt);
  }
  if (fill != fill_ || background != background_) {
    fill_ = fill;
    background_ = background;
    renders_.assign(frame_count(), std::nullopt);
  }

  record({{"type", "text"},
          {"text", text_},
          {"font", font_id_},
          {"fill", pipeline::format_color(fill_)},
          {"background", pipeline::format_color(background_)}});
  return mutation_reply({{"control_points", controls_->total_points()},
                         {"glyphs", controls_->glyphs.size()},
                         {"warnings", laid.warnings},
                         {"dropped_control_edits", dropped}});
}

nlohmann::json Session::patch_keypoint(std::size_t i, std::size_t f, Vec2 pos) {
  require_gif();
  if (i >= keypoints_.n() || f >= keypoints_.f())
    throw Error(ErrorCode::NotFound, "keypoint " + where(i, f) + " does not exist");
  check_coordinates("keypoints", pos);

  auto dropped = nlohmann::json::array();
  keypoint_edits_[{i, f}] = pos;
  if (keypoints_.positions.at(i, f) != pos) {
    keypoints_.positions.at(i, f) = pos;
    raw_.reset();
    // Frame 0 keypoints set the interpolation weights of every frame.
    if (f == 0) {
      invalidate_all();
      dropped = drop_control_edits(std::nullopt);
    } else {
      invalidate_frame(f);
      dropped = drop_control_edits(f);
    }
  }
  keypoints_.source = motion::TrajectorySource::UserCorrected;

  record({{"type", "keypoint"}, {"i", i + 1}, {"f", f + 1}, {"x", pos.x}, {"y", pos.y}});
  return mutation_reply({{"dropped_control_edits", dropped}});
}

nlohmann::json Session::patch_control(std::size_t j, std::size_t f, Vec2 pos) {
  require_gif();
  require_text();
  if (j >= controls_->total_points() || f >= frame_count())
    throw Error(ErrorCode::NotFound, "control point " + where(j, f) + " does not exist");
  check_coordinates("controls", pos);

  auto it = control_edits_.find({j, f});
  if (it == control_edits_.end() || it->second != pos) {
    control_edits_[{j, f}] = pos;
    renders_[f].reset();
  }
  record({{"type", "control"}, {"j", j + 1}, {"f", f + 1}, {"x", pos.x}, {"y", pos.y}});
  return mutation_reply();
}

nlohmann::json Session::set_params(const nlohmann::json& doc) {
  if (!doc.is_object()) throw StudioError("params", ErrorCode::Config, "parameters must be a JSON object");
  nlohmann::json deform = doc;
  int n = n_;
  if (deform.contains("n")) {
    if (!deform["n"].is_number_integer())
      throw StudioError("params", ErrorCode::Config, "invalid parameters", {{"violations", {"n must be an integer"}}});
    n = deform["n"].get<int>();
    deform.erase("n");
  }
  DeformParams params;
  try {
    params = params_from_json(deform, params_);
  } catch (const Error& e) {
    throw StudioError("params", ErrorCode::Config, e.what(), {{"violations", {e.what()}}});
  }
  auto violations = params.violations(controls_ ? controls_->total_points() : 0);
  if (n < 1) violations.push_back("n must be >= 1");
  if (!violations.empty())
    throw StudioError("params", ErrorCode::Config, "invalid parameters", {{"violations", violations}});

  const bool n_changed = n != n_;
  std::optional<motion::ExtractResult> extracted;
  if (n_changed && frames_) {
    extracted = in_stage("extract", [&] {
      motion::TrackerOptions options;
      options.keypoints = n;
      return motion::extract_keypoints(*frames_, options);
    });
  }

  DeformParams before = params_, after = params;
  before.optimizer.threads = after.optimizer.threads = 0;
  const bool deform_changed = !(before == after);
  const bool k_changed = params.k_neighbors != params_.k_neighbors;
  params_ = params;
  n_ = n;

  std::size_t dropped_keypoints = 0;
  if (extracted) {
    dropped_keypoints = keypoint_edits_.size();
    keypoint_edits_.clear();
    extracted_ = std::move(extracted->trajectory);
    extract_warnings_ = std::move(extracted->warnings);
    rebuild_keypoints();
  }
  const bool invalidated = deform_changed || extracted.has_value();
  auto dropped = nlohmann::json::array();
  if (invalidated) {
    if (k_changed) graph_.reset();
    raw_.reset();
    invalidate_all();
    dropped = drop_control_edits(std::nullopt);
  }

  nlohmann::json stored = to_json(params_);
  stored["n"] = n_;
  record({{"type", "params"}, {"params", stored}});
  return mutation_reply({{"params", stored},
                         {"invalidated", invalidated},
                         {"dropped_keypoint_edits", dropped_keypoints},
                         {"dropped_control_edits", dropped}});
}

nlohmann::json Session::summary() const {
  nlohmann::json params = to_json(params_);
  params["n"] = n_;
  nlohmann::json gif = nullptr;
  if (frames_)
    gif = {{"blob", gif_blob_},
           {"frames", frames_->frames.size()},
           {"width", frames_->width()},
           {"height", frames_->height()},
           {"delays_cs", frames_->delays_cs},
           {"warnings", extract_warnings_}};
  return {{"version", kSchemaVersion},
          {"id", id_},
          {"revision", revision_},
          {"hash", hex64(content_hash())},
          {"gif", gif},
          {"text", text_},
          {"font", font_id_},
          {"fill", pipeline::format_color(fill_)},
          {"background", pipeline::format_color(background_)},
          {"params", params},
          {"keypoints", frames_ ? keypoints_.n() : 0},
          {"control_points", controls_ ? controls_->total_points() : 0},
          {"keypoint_edits", keypoint_edits_.size()},
          {"control_edits", control_edits_.size()}};
}

nlohmann::json Session::keypoints() const {
  require_gif();
  return motion::export_trajectories(keypoints_);
}

nlohmann::json Session::keypoint(std::size_t i, std::size_t f) const {
  require_gif();
  if (i >= keypoints_.n() || f >= keypoints_.f())
    throw Error(ErrorCode::NotFound, "keypoint " + where(i, f) + " does not exist");
  const Vec2 p = keypoints_.positions.at(i, f);
  return {{"i", i + 1},
          {"f", f + 1},
          {"x", p.x},
          {"y", p.y},
          {"edited", keypoint_edits_.count({i, f}) > 0},
          {"extracted", point_json(extracted_->positions.at(i, f))}};
}

nlohmann::json Session::control_edits() const { return pipeline::edits_to_json(control_edits_); }

const align::ControlTrajectory& Session::raw() {
  if (!raw_) raw_ = in_stage("align", [&] { return align::align_frames(controls_->points, keypoints_, params_); });
  return *raw_;
}

const laplace::NeighborGraph& Session::graph() {
  if (!graph_)
    graph_ = in_stage("optimize", [&] {
      return laplace::build_neighbor_graph(controls_->points, std::size_t(params_.k_neighbors));
    });
  return *graph_;
}

void Session::ensure_optimized(const std::vector<std::size_t>& frames) {
  std::vector<std::size_t> missing;
  for (std::size_t f : frames)
    if (!optimized_[f]) missing.push_back(f);
  if (missing.empty()) return;
  const auto& trajectory = raw();
  const auto& neighbors = graph();
  std::vector<std::vector<Vec2>> results(missing.size());
  in_stage("optimize", [&] {
    parallel_for(missing.size(), threads_ ? threads_ : default_thread_count(), [&](std::size_t idx) {
      const std::size_t f = missing[idx];
      results[idx] = f == 0 ? trajectory.raw.frame(0)
                            : laplace::optimize_frame(trajectory.raw.frame(f), controls_->points, neighbors, params_)
                                  .positions;
    });
    return 0;
  });
  for (std::size_t idx = 0; idx < missing.size(); ++idx) optimized_[missing[idx]] = std::move(results[idx]);
}

std::vector<Vec2> Session::drawn_positions(std::size_t f) {
  ensure_optimized({f});
  auto positions = *optimized_[f];
  for (auto it = control_edits_.lower_bound({0, 0}); it != control_edits_.end(); ++it)
    if (it->first.second == f) positions[it->first.first] = it->second;
  return positions;
}

const Image& Session::rendered(std::size_t f) {
  if (!renders_[f]) {
    const auto positions = drawn_positions(f);
    renders_[f] = in_stage("render", [&] { return raster::render_frame(controls_->contours(positions), spec()); });
  }
  return *renders_[f];
}

nlohmann::json Session::control(std::size_t j, std::size_t f) {
  require_gif();
  require_text();
  if (j >= controls_->total_points() || f >= frame_count())
    throw Error(ErrorCode::NotFound, "control point " + where(j, f) + " does not exist");
  ensure_optimized({f});
  const Vec2 optimized = (*optimized_[f])[j];
  auto it = control_edits_.find({j, f});
  const Vec2 p = it == control_edits_.end() ? optimized : it->second;
  return {{"j", j + 1},
          {"f", f + 1},
          {"x", p.x},
          {"y", p.y},
          {"edited", it != control_edits_.end()},
          {"on_curve", bool(controls_->on_curve[j])},
          {"optimized", point_json(optimized)},
          {"raw", point_json(raw().raw.at(j, f))}};
}

std::vector<std::uint8_t> Session::preview_png(std::size_t f) {
  require_gif();
  require_text();
  if (f >= frame_count()) throw Error(ErrorCode::NotFound, "frame " + std::to_string(f + 1) + " does not exist");
  const Image& image = rendered(f);
  return in_stage("encode", [&] { return raster::encode_png(image); });
}

std::vector<std::uint8_t> Session::result_gif() {
  require_gif();
  require_text();
  const std::size_t frames = frame_count();
  std::vector<std::size_t> all(frames);
  for (std::size_t f = 0; f < frames; ++f) all[f] = f;
  ensure_optimized(all);

  std::vector<std::size_t> missing;
  for (std::size_t f = 0; f < frames; ++f)
    if (!renders_[f]) missing.push_back(f);
  std::vector<std::vector<Vec2>> positions;
  for (std::size_t f : missing) positions.push_back(drawn_positions(f));
  const auto render_spec = spec();
  std::vector<Image> images(missing.size());
  in_stage("render", [&] {
    parallel_for(missing.size(), threads_ ? threads_ : default_thread_count(), [&](std::size_t idx) {
      images[idx] = raster::render_frame(controls_->contours(positions[idx]), render_spec);
    });
    return 0;
  });
  for (std::size_t idx = 0; idx < missing.size(); ++idx) renders_[missing[idx]] = std::move(images[idx]);

  gif::FrameSequence seq;
  for (std::size_t f = 0; f < frames; ++f) seq.frames.push_back(*renders_[f]);
  seq.delays_cs = frames_->delays_cs;
  return in_stage("encode", [&] { return gif::encode_gif(seq); });
}

nlohmann::json Session::svg_bundle() {
  require_gif();
  require_text();
  const std::size_t frames = frame_count();
  PointGrid grid(controls_->total_points(), frames);
  for (std::size_t f = 0; f < frames; ++f) grid.set_frame(f, drawn_positions(f));
  auto files = in_stage("svg", [&] { return raster::svg_bundle(grid, *controls_, spec(), frames_->delays_cs); });
  nlohmann::json out = {{"version", kSchemaVersion}, {"files", nlohmann::json::object()}};
  for (auto& [name, content] : files) out["files"][name] = std::move(content);
  return out;
}

nlohmann::json Session::export_config() const {
  require_gif();
  require_text();
  nlohmann::json config = to_json(params_);
  config["n"] = n_;
  config["text"] = text_;
  config["font"] = fonts_(font_id_).path.string();
  config["fill"] = pipeline::format_color(fill_);
  config["background"] = pipeline::format_color(background_);
  config["out"] = "result.gif";
  nlohmann::json files = nlohmann::json::object();
  if (keypoint_edits_.empty()) {
    config["gif"] = kGifFile;
  } else {
    config["trajectory"] = kTrajectoryFile;
    config["width"] = frames_->width();
    config["height"] = frames_->height();
    config["delay_cs"] = frames_->delays_cs;
    files[kTrajectoryFile] = motion::export_trajectories(keypoints_);
  }
  if (!control_edits_.empty()) {
    config["control_edits"] = kEditsFile;
    files[kEditsFile] = pipeline::edits_to_json(control_edits_);
  }
  return {{"version", kSchemaVersion}, {"config", config}, {"files", files}, {"gif", {{"file", kGifFile}, {"blob", gif_blob_}}}};
}

nlohmann::json Session::events() const {
  return {{"version", kSchemaVersion}, {"session", id_}, {"events", events_}};
}

}  // namespace gm::studio
