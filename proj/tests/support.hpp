#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "font/ttf.hpp"
#include "gif/gif.hpp"

namespace gm::testing {

inline std::filesystem::path data_path(const std::string& rel) { return std::filesystem::path(GM_DATA_DIR) / rel; }

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return nlohmann::json::parse(in);
}

inline std::shared_ptr<const font::Font> bundled_font() {
  static auto font = font::Font::load_file(data_path("fonts/DejaVuSans.ttf"));
  return font;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("glyphmotion_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// The first frame of the bouncing-disk fixture repeated `frames` times.
inline std::vector<std::uint8_t> static_disk_gif(std::size_t frames = 6) {
  auto seq = gif::decode_gif(read_bytes(data_path("fixtures/bouncing_disk.gif")));
  gif::FrameSequence still;
  still.frames.assign(frames, seq.frames.front());
  still.delays_cs.assign(frames, 8);
  return gif::encode_gif(still);
}

inline void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

}  // namespace gm::testing
