#include "pipeline/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <iterator>
#include <sstream>
#include <type_traits>

#include <unistd.h>

#include "common/error.hpp"
#include "pipeline/edits.hpp"
#include "pipeline/wordcloud.hpp"

namespace gm::pipeline {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

// Runs one stage, records its wall time and tags any failure with its name.
template <typename Fn>
auto stage(PipelineResult& result, const char* name, Fn&& fn) {
  const auto started = Clock::now();
  auto record = [&] { result.stages.push_back({name, elapsed_ms(started)}); };
  try {
    if constexpr (std::is_void_v<std::invoke_result_t<Fn>>) {
      fn();
      record();
    } else {
      auto value = fn();
      record();
      return value;
    }
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(name, e.code(), e.what());
  } catch (const std::bad_alloc&) {
    throw StageError(name, ErrorCode::Internal, "out of memory");
  } catch (const std::exception& e) {
    throw StageError(name, ErrorCode::Internal, e.what());
  }
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  auto bytes = read_file(path);
  try {
    return nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::InvalidArgument, path.string() + " is not valid JSON: " + e.what());
  }
}

std::vector<std::string> split_words(const std::string& text) {
  std::istringstream in(text);
  return {std::istream_iterator<std::string>(in), std::istream_iterator<std::string>()};
}

std::vector<int> resolve_delays(const PipelineConfig& config, const std::vector<int>& source, std::size_t frames) {
  if (config.delays_cs.empty()) return source;
  if (config.delays_cs.size() == 1) return std::vector<int>(frames, config.delays_cs[0]);
  if (config.delays_cs.size() == frames) return config.delays_cs;
  throw Error(ErrorCode::Config, "delay_cs lists " + std::to_string(config.delays_cs.size()) +
                                     " values but the motion source has " + std::to_string(frames) + " frames");
}

std::filesystem::path staging_path(const std::filesystem::path& target) {
  return target.parent_path() / (target.filename().string() + ".tmp-" + std::to_string(::getpid()));
}

void write_bytes(const std::filesystem::path& path, const void* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(static_cast<const char*>(data), std::streamsize(size));
  out.close();
  if (!out) throw Error(ErrorCode::Io, "short write to " + path.string());
}

}  // namespace

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

raster::RenderSpec render_spec(const PipelineConfig& config, int width, int height) {
  raster::RenderSpec spec;
  spec.width = width;
  spec.height = height;
  spec.background = config.background;
  spec.fill = config.fill;
  spec.supersample = config.supersample;
  spec.tolerance_px = config.tolerance_px;
  return spec;
}

PipelineResult run_pipeline(const PipelineConfig& config) {
  config.validate();
  const auto started = Clock::now();
  PipelineResult r;
  const unsigned threads = config.params.optimizer.threads;

  int width = 256, height = 256;
  std::vector<int> source_delays;
  if (config.gif_path) {
    auto frames = stage(r, "decode", [&] { return gif::decode_gif(read_file(*config.gif_path)); });
    auto extracted = stage(r, "extract", [&] {
      motion::TrackerOptions options;
      options.keypoints = config.keypoints;
      return motion::extract_keypoints(frames, options);
    });
    r.keypoints = std::move(extracted.trajectory);
    r.warnings.insert(r.warnings.end(), extracted.warnings.begin(), extracted.warnings.end());
    width = frames.width();
    height = frames.height();
    source_delays = frames.delays_cs;
  } else {
    r.keypoints = stage(r, "import", [&] { return motion::import_trajectories(read_json_file(*config.trajectory_path)); });
    source_delays.assign(r.keypoints.f(), 10);
  }
  width = config.width.value_or(width);
  height = config.height.value_or(height);
  const std::size_t frame_count = r.keypoints.f();
  const auto delays = resolve_delays(config, source_delays, frame_count);
  const font::CanvasSpec canvas{width, height};
  const auto spec = render_spec(config, width, height);

  auto font = stage(r, "load-font", [&] { return font::Font::load_file(config.font_path); });

  if (config.mode == Mode::GlyphControlPoints) {
    auto laid = stage(r, "layout", [&] { return font::layout_text(*font, config.text, canvas, config.margin); });
    r.controls = std::move(laid.controls);
    r.warnings.insert(r.warnings.end(), laid.warnings.begin(), laid.warnings.end());
    config.params.validate(r.controls.total_points());

    r.trajectory = stage(r, "align", [&] { return align::align_frames(r.controls.points, r.keypoints, config.params); });
    r.frame_reports = stage(r, "optimize", [&] {
      auto graph = laplace::build_neighbor_graph(r.controls.points, std::size_t(config.params.k_neighbors));
      return laplace::optimize_all(r.trajectory, r.controls.points, graph, config.params).frames;
    });
    r.rendered = r.trajectory.optimized;
    if (config.control_edits_path)
      stage(r, "control-edits", [&] { apply_control_edits(r.rendered, edits_from_json(read_json_file(*config.control_edits_path))); });
  } else {
    auto cloud = stage(r, "word-layout", [&] {
      std::vector<WordPlacement> placements;
      if (config.word_layout_path) {
        placements = word_layout_from_json(read_json_file(*config.word_layout_path));
      } else {
        placements = spiral_layout(*font, split_words(config.text), canvas, &r.warnings);
      }
      return build_word_cloud(*font, placements, canvas);
    });
    r.warnings.insert(r.warnings.end(), cloud.warnings.begin(), cloud.warnings.end());
    r.trajectory = stage(r, "align", [&] { return align::align_frames(cloud.anchors, r.keypoints, config.params); });
    // Each word moves rigidly with its single anchor: nothing to optimize.
    r.trajectory.optimized = r.trajectory.raw;
    r.rendered = word_positions(cloud, r.trajectory.raw);
    r.controls = std::move(cloud.controls);
  }

  r.frames = stage(r, "render", [&] { return raster::render_sequence(r.rendered, r.controls, spec, delays, threads); });
  r.gif = stage(r, "encode", [&] { return gif::encode_gif(r.frames); });
  if (config.svg_dir) r.svg = stage(r, "svg", [&] { return raster::svg_bundle(r.rendered, r.controls, spec, delays); });
  r.total_ms = elapsed_ms(started);
  if (r.ms_per_frame() > kFrameBudgetMs)
    r.warnings.push_back("throughput " + std::to_string(r.ms_per_frame()) + " ms/frame exceeds the " +
                         std::to_string(int(kFrameBudgetMs)) + " ms/frame budget");
  return r;
}

std::vector<nlohmann::json> PipelineResult::report(const PipelineConfig& config) const {
  std::vector<nlohmann::json> lines;
  nlohmann::json cfg = to_json(config);
  lines.push_back({{"type", "config"},
                   {"config", cfg},
                   {"frames", frames.frames.size()},
                   {"control_points", controls.total_points()},
                   {"keypoints", keypoints.n()},
                   {"keypoint_source", motion::to_string(keypoints.source)}});
  for (const auto& w : warnings) lines.push_back({{"type", "warning"}, {"message", w}});
  for (const auto& s : stages) lines.push_back({{"type", "stage"}, {"stage", s.stage}, {"wall_ms", s.wall_ms}});
  for (std::size_t f = 0; f < frame_reports.size(); ++f) {
    const auto& fr = frame_reports[f];
    lines.push_back({{"type", "frame"},
                     {"frame", f + 1},
                     {"glyph_loss", fr.glyph_loss},
                     {"motion_loss", fr.motion_loss},
                     {"total_loss", fr.total_loss},
                     {"initial_loss", fr.loss_history.empty() ? 0.0 : fr.loss_history.front()},
                     {"iterations", fr.iterations},
                     {"wall_ms", fr.wall_ms}});
  }
  const double per_frame = ms_per_frame();
  lines.push_back({{"type", "summary"},
                   {"frames", frames.frames.size()},
                   {"control_points", controls.total_points()},
                   {"total_ms", total_ms},
                   {"ms_per_frame", per_frame},
                   {"budget_ms_per_frame", kFrameBudgetMs},
                   {"within_budget", per_frame <= kFrameBudgetMs},
                   {"within_2x_budget", per_frame <= 2 * kFrameBudgetMs},
                   {"gif_bytes", gif.size()}});
  return lines;
}

std::string PipelineResult::report_text(const PipelineConfig& config) const {
  std::string out;
  for (const auto& line : report(config)) out += line.dump() + "\n";
  return out;
}

void write_artifacts(const PipelineConfig& config, const PipelineResult& result) {
  struct Staged {
    std::filesystem::path temp, target;
    bool directory;
  };
  std::vector<Staged> staged;
  auto discard = [&] {
    std::error_code ec;
    for (const auto& s : staged) std::filesystem::remove_all(s.temp, ec);
  };
  try {
    auto stage_file = [&](const std::filesystem::path& target, const void* data, std::size_t size) {
      if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
      Staged s{staging_path(target), target, false};
      staged.push_back(s);
      write_bytes(s.temp, data, size);
    };
    if (config.out_gif) stage_file(*config.out_gif, result.gif.data(), result.gif.size());
    if (config.report_path) {
      const std::string text = result.report_text(config);
      stage_file(*config.report_path, text.data(), text.size());
    }
    if (config.svg_dir) {
      const auto target = *config.svg_dir;
      if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
      Staged s{staging_path(target), target, true};
      staged.push_back(s);
      std::filesystem::remove_all(s.temp);
      std::filesystem::create_directories(s.temp);
      for (const auto& [name, content] : result.svg) write_bytes(s.temp / name, content.data(), content.size());
    }
    for (const auto& s : staged) {
      if (s.directory) std::filesystem::remove_all(s.target);
      std::filesystem::rename(s.temp, s.target);
    }
  } catch (const std::filesystem::filesystem_error& e) {
    discard();
    throw StageError("write", ErrorCode::Io, e.what());
  } catch (const Error& e) {
    discard();
    throw StageError("write", e.code(), e.what());
  }
}

}  // namespace gm::pipeline
