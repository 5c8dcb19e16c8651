// Command-line front end. Talks to the engine only through the C API.
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <pthread.h>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "glyphmotion/glyphmotion.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;

int report_failure(gm_status status, const std::string& action) {
  const std::string stage = gm_last_error_stage();
  std::cerr << "glyphmotion: " << action;
  if (!stage.empty()) std::cerr << " (stage " << stage << ")";
  std::cerr << ": [" << gm_status_name(status) << "] " << gm_last_error() << "\n";
  if (!stage.empty()) return kExitStage;
  return status == GM_ERR_CONFIG || status == GM_ERR_INVALID_ARGUMENT ? kExitConfig : kExitStage;
}

std::optional<std::string> read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

struct AnimateArgs {
  std::string config_file, text, font, gif, trajectory, mode, out, svg_dir, report, control_edits, word_layout;
  std::string fill, background;
  double alpha = 0, e = 0;
  int k = 0, n = 0, width = 0, height = 0, max_iterations = 0;
  unsigned threads = 0;
  std::vector<int> delays;
  bool seedless = false;
};

int run_animate(const AnimateArgs& a, const CLI::App& cmd) {
  gm_config* config = nullptr;
  gm_config_create(&config);
  struct Guard {
    gm_config* c;
    ~Guard() { gm_config_destroy(c); }
  } guard{config};

  if (!a.config_file.empty()) {
    auto text = read_text(a.config_file);
    if (!text) {
      std::cerr << "glyphmotion: cannot read config file " << a.config_file << "\n";
      return kExitConfig;
    }
    const auto base = std::filesystem::absolute(a.config_file).parent_path().string();
    if (auto st = gm_config_merge_json(config, text->c_str(), base.c_str()); st != GM_OK)
      return report_failure(st, "reading " + a.config_file);
  }

  nlohmann::json flags = nlohmann::json::object();
  auto given = [&](const char* name) { return cmd.count(name) > 0; };
  if (given("--text")) flags["text"] = a.text;
  if (given("--font")) flags["font"] = a.font;
  if (given("--gif")) flags["gif"] = a.gif;
  if (given("--trajectory")) flags["trajectory"] = a.trajectory;
  if (given("--mode")) flags["mode"] = a.mode;
  if (given("--alpha")) flags["alpha"] = a.alpha;
  if (given("--e")) flags["e"] = a.e;
  if (given("--k")) flags["k"] = a.k;
  if (given("--n")) flags["n"] = a.n;
  if (given("--max-iterations")) flags["max_iterations"] = a.max_iterations;
  if (given("--threads")) flags["threads"] = a.threads;
  if (given("--width")) flags["width"] = a.width;
  if (given("--height")) flags["height"] = a.height;
  if (given("--delay")) flags["delay_cs"] = a.delays;
  if (given("--fill")) flags["fill"] = a.fill;
  if (given("--background")) flags["background"] = a.background;
  if (given("--control-edits")) flags["control_edits"] = a.control_edits;
  if (given("--word-layout")) flags["word_layout"] = a.word_layout;
  if (given("--out")) flags["out"] = a.out;
  if (given("--svg-dir")) flags["svg_dir"] = a.svg_dir;
  if (given("--report")) flags["report"] = a.report;
  if (given("--seedless")) flags["seedless"] = a.seedless;
  if (auto st = gm_config_merge_json(config, flags.dump().c_str(), nullptr); st != GM_OK)
    return report_failure(st, "invalid arguments");
  if (auto st = gm_config_validate(config); st != GM_OK) return report_failure(st, "invalid configuration");

  gm_result* result = nullptr;
  if (auto st = gm_run(config, &result); st != GM_OK) return report_failure(st, "animation failed");
  struct ResultGuard {
    gm_result* r;
    ~ResultGuard() { gm_result_destroy(r); }
  } result_guard{result};

  char* warnings = nullptr;
  if (gm_result_warnings(result, &warnings) == GM_OK) {
    for (const auto& w : nlohmann::json::parse(warnings)) std::cerr << "warning: " << w.get<std::string>() << "\n";
    gm_string_free(warnings);
  }
  if (auto st = gm_result_write(result); st != GM_OK) return report_failure(st, "writing outputs failed");

  const uint8_t* data = nullptr;
  size_t size = 0;
  gm_result_gif(result, &data, &size);
  std::printf("%zu frames, %zu bytes, %.1f ms/frame\n", gm_result_frame_count(result), size,
              gm_result_ms_per_frame(result));
  return kExitOk;
}

int run_extract(const std::string& gif_path, int n, const std::string& out) {
  auto bytes = read_text(gif_path);
  if (!bytes) {
    std::cerr << "glyphmotion: cannot read " << gif_path << "\n";
    return kExitConfig;
  }
  char* json = nullptr;
  if (auto st = gm_extract_trajectories(reinterpret_cast<const uint8_t*>(bytes->data()), bytes->size(), n, &json);
      st != GM_OK)
    return report_failure(st, "extraction failed");
  std::string text = json;
  gm_string_free(json);
  if (out.empty() || out == "-") {
    std::cout << text << "\n";
    return kExitOk;
  }
  std::ofstream file(out, std::ios::binary);
  file << text << "\n";
  if (!file) {
    std::cerr << "glyphmotion: cannot write " << out << "\n";
    return kExitStage;
  }
  return kExitOk;
}

int run_serve(const std::string& host, int port, const std::vector<std::string>& fonts, const std::string& default_font,
              const std::string& persist, unsigned threads) {
  nlohmann::json options = {{"fonts", nlohmann::json::object()}, {"threads", threads}};
  for (const auto& spec : fonts) {
    const auto eq = spec.find('=');
    const std::string path = eq == std::string::npos ? spec : spec.substr(eq + 1);
    const std::string id = eq == std::string::npos ? std::filesystem::path(spec).stem().string() : spec.substr(0, eq);
    options["fonts"][id] = path;
  }
  if (!default_font.empty()) options["default_font"] = default_font;
  if (!persist.empty()) options["persist_dir"] = persist;

  // Block termination signals in every thread; the main thread waits for them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  gm_studio* studio = nullptr;
  if (auto st = gm_studio_create(options.dump().c_str(), &studio); st != GM_OK)
    return report_failure(st, "cannot start the studio");
  int bound = 0;
  if (auto st = gm_studio_listen(studio, host.c_str(), port, &bound); st != GM_OK) {
    const int code = report_failure(st, "cannot listen");
    gm_studio_destroy(studio);
    return code;
  }
  std::printf("studio listening on http://%s:%d\n", host.c_str(), bound);
  std::fflush(stdout);
  int received = 0;
  sigwait(&signals, &received);
  gm_studio_destroy(studio);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kinetic typography: transfers the motion of a driving GIF onto text outlines."};
  app.require_subcommand(1);
  app.set_version_flag("--version", gm_version());

  AnimateArgs a;
  auto* animate = app.add_subcommand("animate", "Render animated text driven by a GIF or a keypoint trajectory");
  animate->add_option("--config", a.config_file, "JSON config file (same keys as the flags)");
  animate->add_option("--text", a.text, "Text to animate");
  animate->add_option("--font", a.font, "TrueType font file");
  animate->add_option("--gif", a.gif, "Driving GIF");
  animate->add_option("--trajectory", a.trajectory, "Keypoint trajectory JSON (instead of --gif)");
  animate->add_option("--mode", a.mode, "glyph or wordcloud")->check(CLI::IsMember({"glyph", "wordcloud"}));
  animate->add_option("--alpha", a.alpha, "Glyph shape weight (default 2)");
  animate->add_option("--e", a.e, "Locality exponent (default 2)");
  animate->add_option("--k", a.k, "Laplacian neighbors (default 3)");
  animate->add_option("--n", a.n, "Keypoints to track (default 10)");
  animate->add_option("--max-iterations", a.max_iterations, "Optimizer iteration cap (default 200)");
  animate->add_option("--threads", a.threads, "Worker threads, 0 = all cores");
  animate->add_option("--width", a.width, "Output width (default: GIF width, or 256)");
  animate->add_option("--height", a.height, "Output height (default: GIF height, or 256)");
  animate->add_option("--delay", a.delays, "Frame delay in centiseconds: one value or one per frame")->delimiter(',');
  animate->add_option("--fill", a.fill, "Glyph color #rrggbb");
  animate->add_option("--background", a.background, "Background color #rrggbb");
  animate->add_option("--control-edits", a.control_edits, "Control point overrides JSON (glyph mode)");
  animate->add_option("--word-layout", a.word_layout, "Word placements JSON (wordcloud mode)");
  animate->add_option("--out", a.out, "Output GIF");
  animate->add_option("--svg-dir", a.svg_dir, "Directory for per-frame SVG files");
  animate->add_option("--report", a.report, "Line-delimited JSON run report");
  animate->add_flag("--seedless", a.seedless, "Accepted for compatibility; the tracker is always deterministic");

  std::string gif_path, extract_out;
  int extract_n = 10;
  auto* extract = app.add_subcommand("extract", "Track keypoints through a GIF and write trajectory JSON");
  extract->add_option("--gif", gif_path, "Driving GIF")->required();
  extract->add_option("--n", extract_n, "Keypoints to track")->check(CLI::PositiveNumber);
  extract->add_option("--out", extract_out, "Output file (stdout when omitted)");

  std::string host = "127.0.0.1", default_font, persist;
  int port = 8080;
  unsigned serve_threads = 0;
  std::vector<std::string> fonts;
  auto* serve = app.add_subcommand("serve", "Run the studio HTTP service");
  serve->add_option("--host", host, "Address to bind");
  serve->add_option("--port", port, "Port, 0 for any free port")->check(CLI::Range(0, 65535));
  serve->add_option("--font", fonts, "Font as id=path or path (repeatable)")->required();
  serve->add_option("--default-font", default_font, "Font id used by new sessions");
  serve->add_option("--persist", persist, "Directory for session event logs");
  serve->add_option("--threads", serve_threads, "Worker threads, 0 = all cores");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (*animate) return run_animate(a, *animate);
  if (*extract) return run_extract(gif_path, extract_n, extract_out);
  return run_serve(host, port, fonts, default_font, persist, serve_threads);
}
