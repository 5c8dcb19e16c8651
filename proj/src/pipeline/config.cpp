#include "pipeline/config.hpp"

#include <cstdio>
#include <set>

#include "common/error.hpp"

namespace gm::pipeline {

namespace {

const std::set<std::string> kParamKeys = {"alpha", "e", "k", "max_iterations", "step",
                                          "tolerance", "weights", "trajectory_source", "threads"};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  std::filesystem::path p(value);
  if (p.is_relative() && !base.empty()) return base / p;
  return p;
}

}  // namespace

const char* to_string(Mode mode) { return mode == Mode::WordAnchors ? "wordcloud" : "glyph"; }

Rgba8 parse_color(const std::string& text) {
  unsigned r, g, b;
  char tail;
  if (text.size() != 7 || std::sscanf(text.c_str(), "#%2x%2x%2x%c", &r, &g, &b, &tail) != 3)
    throw Error(ErrorCode::Config, "color '" + text + "' is not of the form #rrggbb");
  return {std::uint8_t(r), std::uint8_t(g), std::uint8_t(b), 255};
}

std::string format_color(Rgba8 c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

void PipelineConfig::validate() const {
  std::vector<std::string> problems;
  if (text.empty() && !(mode == Mode::WordAnchors && word_layout_path)) problems.push_back("text is required");
  if (font_path.empty()) problems.push_back("font is required");
  if (gif_path.has_value() == trajectory_path.has_value())
    problems.push_back("exactly one motion source is required: gif or trajectory");
  for (const auto& v : params.violations()) problems.push_back(v);
  if (keypoints < 1) problems.push_back("n must be >= 1");
  if (width && *width <= 0) problems.push_back("width must be > 0");
  if (height && *height <= 0) problems.push_back("height must be > 0");
  if (!(margin >= 0.0 && margin < 0.5)) problems.push_back("margin must be in [0, 0.5)");
  if (supersample != 1 && supersample != 2 && supersample != 4) problems.push_back("supersample must be 1, 2 or 4");
  if (!(tolerance_px > 0.0)) problems.push_back("flatten_tolerance must be > 0");
  for (int d : delays_cs)
    if (d < 1 || d > 65535) problems.push_back("delay_cs values must be in [1, 65535]");
  if (control_edits_path && mode != Mode::GlyphControlPoints)
    problems.push_back("control_edits only apply in glyph mode");
  if (word_layout_path && mode != Mode::WordAnchors) problems.push_back("word_layout only applies in wordcloud mode");
  if (!out_gif && !svg_dir && !report_path) problems.push_back("no output requested (out, svg_dir or report)");
  if (problems.empty()) return;
  std::string msg = "invalid configuration:";
  for (const auto& p : problems) msg += "\n  - " + p;
  throw Error(ErrorCode::Config, msg);
}

PipelineConfig config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir,
                                PipelineConfig config) {
  if (!doc.is_object()) throw Error(ErrorCode::Config, "config must be a JSON object");
  nlohmann::json param_doc = nlohmann::json::object();
  try {
    for (const auto& [key, value] : doc.items()) {
      if (kParamKeys.count(key)) {
        param_doc[key] = value;
      } else if (key == "text") {
        config.text = value.get<std::string>();
      } else if (key == "font") {
        config.font_path = resolve(base_dir, value.get<std::string>());
      } else if (key == "mode") {
        const auto m = value.get<std::string>();
        if (m == "glyph") config.mode = Mode::GlyphControlPoints;
        else if (m == "wordcloud") config.mode = Mode::WordAnchors;
        else throw Error(ErrorCode::Config, "mode must be \"glyph\" or \"wordcloud\"");
      } else if (key == "gif") {
        config.gif_path = resolve(base_dir, value.get<std::string>());
      } else if (key == "trajectory") {
        config.trajectory_path = resolve(base_dir, value.get<std::string>());
      } else if (key == "n") {
        config.keypoints = value.get<int>();
      } else if (key == "seedless") {
        config.seedless = value.get<bool>();
      } else if (key == "width") {
        config.width = value.get<int>();
      } else if (key == "height") {
        config.height = value.get<int>();
      } else if (key == "margin") {
        config.margin = value.get<double>();
      } else if (key == "background") {
        config.background = parse_color(value.get<std::string>());
      } else if (key == "fill") {
        config.fill = parse_color(value.get<std::string>());
      } else if (key == "supersample") {
        config.supersample = value.get<int>();
      } else if (key == "flatten_tolerance") {
        config.tolerance_px = value.get<double>();
      } else if (key == "delay_cs") {
        config.delays_cs = value.is_array() ? value.get<std::vector<int>>() : std::vector<int>{value.get<int>()};
      } else if (key == "control_edits") {
        config.control_edits_path = resolve(base_dir, value.get<std::string>());
      } else if (key == "word_layout") {
        config.word_layout_path = resolve(base_dir, value.get<std::string>());
      } else if (key == "out") {
        config.out_gif = resolve(base_dir, value.get<std::string>());
      } else if (key == "svg_dir") {
        config.svg_dir = resolve(base_dir, value.get<std::string>());
      } else if (key == "report") {
        config.report_path = resolve(base_dir, value.get<std::string>());
      } else {
        throw Error(ErrorCode::Config, "unknown config key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Config, std::string("config value has the wrong type: ") + e.what());
  }
  if (!param_doc.empty()) config.params = params_from_json(param_doc, config.params);
  return config;
}

nlohmann::json to_json(const PipelineConfig& c) {
  nlohmann::json doc = to_json(c.params);
  doc["text"] = c.text;
  doc["font"] = c.font_path.string();
  doc["mode"] = to_string(c.mode);
  if (c.gif_path) doc["gif"] = c.gif_path->string();
  if (c.trajectory_path) doc["trajectory"] = c.trajectory_path->string();
  doc["n"] = c.keypoints;
  doc["seedless"] = c.seedless;
  if (c.width) doc["width"] = *c.width;
  if (c.height) doc["height"] = *c.height;
  doc["margin"] = c.margin;
  doc["background"] = format_color(c.background);
  doc["fill"] = format_color(c.fill);
  doc["supersample"] = c.supersample;
  doc["flatten_tolerance"] = c.tolerance_px;
  if (!c.delays_cs.empty()) doc["delay_cs"] = c.delays_cs;
  if (c.control_edits_path) doc["control_edits"] = c.control_edits_path->string();
  if (c.word_layout_path) doc["word_layout"] = c.word_layout_path->string();
  if (c.out_gif) doc["out"] = c.out_gif->string();
  if (c.svg_dir) doc["svg_dir"] = c.svg_dir->string();
  if (c.report_path) doc["report"] = c.report_path->string();
  return doc;
}

}  // namespace gm::pipeline
