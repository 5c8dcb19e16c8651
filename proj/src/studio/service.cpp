#include "studio/service.hpp"

#include <charconv>
#include <cstdio>

namespace gm::studio {

namespace {

Response json_response(int status, const nlohmann::json& doc) { return {status, "application/json", doc.dump()}; }

Response binary_response(const std::vector<std::uint8_t>& bytes, const char* type) {
  return {200, type, std::string(bytes.begin(), bytes.end())};
}

Response error_response(int status, const std::string& code, const std::string& message,
                        const nlohmann::json& extra = nlohmann::json::object()) {
  nlohmann::json err = extra;
  err["code"] = code;
  err["message"] = message;
  return json_response(status, {{"error", err}});
}

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound: return 404;
    case ErrorCode::Unimplemented: return 501;
    case ErrorCode::Numeric:
    case ErrorCode::Io:
    case ErrorCode::Internal: return 500;
    default: return 422;
  }
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  const std::string clean = path.substr(0, path.find('?'));
  std::size_t start = 0;
  while (start <= clean.size()) {
    std::size_t end = clean.find('/', start);
    if (end == std::string::npos) end = clean.size();
    if (end > start) parts.push_back(clean.substr(start, end - start));
    start = end + 1;
  }
  return parts;
}

// 1-based index from a path segment, returned 0-based.
std::size_t parse_index(const std::string& text, const char* what) {
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || value == 0)
    throw Error(ErrorCode::NotFound, std::string(what) + " index '" + text + "' does not exist (indices are 1-based)");
  return value - 1;
}

nlohmann::json parse_body(const std::string& body) {
  return nlohmann::json::parse(body.empty() ? std::string("{}") : body);
}

Vec2 parse_point(const std::string& body, const char* stage) {
  const auto doc = parse_body(body);
  if (!doc.is_object() || !doc.contains("x") || !doc.contains("y") || !doc["x"].is_number() || !doc["y"].is_number())
    throw StudioError(stage, ErrorCode::InvalidArgument, "body must be {\"x\": number, \"y\": number}",
                      {{"violations", {"x and y must be numbers"}}});
  for (const auto& [key, value] : doc.items())
    if (key != "x" && key != "y") throw StudioError(stage, ErrorCode::InvalidArgument, "unknown key '" + key + "'");
  return {doc["x"].get<double>(), doc["y"].get<double>()};
}

struct MethodNotAllowed {};

}  // namespace

ServiceOptions service_options_from_json(const nlohmann::json& doc) {
  ServiceOptions options;
  if (!doc.is_object()) throw Error(ErrorCode::Config, "studio options must be a JSON object");
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "fonts") {
        for (const auto& [id, path] : value.items()) options.fonts[id] = path.get<std::string>();
      } else if (key == "default_font") {
        options.default_font = value.get<std::string>();
      } else if (key == "persist_dir") {
        options.persist_dir = value.get<std::string>();
      } else if (key == "threads") {
        options.threads = value.get<unsigned>();
      } else {
        throw Error(ErrorCode::Config, "unknown studio option '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Config, std::string("studio option has the wrong type: ") + e.what());
  }
  return options;
}

StudioService::StudioService(ServiceOptions options) : options_(std::move(options)) {
  if (options_.fonts.empty()) throw Error(ErrorCode::Config, "the studio needs at least one font");
  if (options_.default_font.empty()) options_.default_font = options_.fonts.begin()->first;
  if (!options_.fonts.count(options_.default_font))
    throw Error(ErrorCode::Config, "default font '" + options_.default_font + "' is not in the font list");
  if (!options_.persist_dir) return;

  std::filesystem::create_directories(*options_.persist_dir);
  for (const auto& dir : std::filesystem::directory_iterator(*options_.persist_dir)) {
    if (!dir.is_directory() || !std::filesystem::exists(dir.path() / "events.jsonl")) continue;
    auto entry = std::make_shared<Entry>();
    entry->session = Session::load(
        dir.path(), [this](const std::string& id) { return resolve_font(id); }, options_.default_font,
        options_.threads);
    const std::string id = dir.path().filename().string();
    unsigned long long number = 0;
    if (std::sscanf(id.c_str(), "s%llu", &number) == 1) next_id_ = std::max<std::uint64_t>(next_id_, number + 1);
    sessions_[id] = std::move(entry);
  }
}

std::vector<std::string> StudioService::session_ids() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, entry] : sessions_) ids.push_back(id);
  return ids;
}

FontEntry StudioService::resolve_font(const std::string& id) {
  auto it = options_.fonts.find(id);
  if (it == options_.fonts.end()) throw Error(ErrorCode::InvalidArgument, "unknown font id '" + id + "'");
  std::lock_guard lock(font_mutex_);
  auto& cached = font_cache_[id];
  if (!cached) cached = font::Font::load_file(it->second);
  return {cached, it->second};
}

std::shared_ptr<StudioService::Entry> StudioService::find(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::NotFound, "no session '" + id + "'");
  return it->second;
}

Response StudioService::create_session() {
  auto entry = std::make_shared<Entry>();
  std::string id;
  {
    std::lock_guard lock(mutex_);
    char buf[32];
    std::snprintf(buf, sizeof buf, "s%06llu", static_cast<unsigned long long>(next_id_++));
    id = buf;
    entry->session = std::make_unique<Session>(
        id, [this](const std::string& font) { return resolve_font(font); }, options_.default_font, options_.threads);
    sessions_[id] = entry;
  }
  std::lock_guard lock(entry->mutex);
  if (options_.persist_dir) entry->session->persist_to(*options_.persist_dir / id);
  return json_response(201, entry->session->summary());
}

Response StudioService::handle(const std::string& method, const std::string& path, const std::string& body) {
  try {
    const auto parts = split_path(path);
    if (parts.empty()) {
      if (method != "GET") throw MethodNotAllowed{};
      nlohmann::json fonts = nlohmann::json::array();
      for (const auto& [id, file] : options_.fonts) fonts.push_back(id);
      return json_response(200, {{"version", kSchemaVersion},
                                 {"service", "glyphmotion-studio"},
                                 {"fonts", fonts},
                                 {"default_font", options_.default_font}});
    }
    if (parts[0] != "sessions") throw Error(ErrorCode::NotFound, "no route for " + path);
    if (parts.size() == 1) {
      if (method == "POST") return create_session();
      if (method == "GET") return json_response(200, {{"sessions", session_ids()}});
      throw MethodNotAllowed{};
    }
    auto entry = find(parts[1]);
    std::lock_guard lock(entry->mutex);
    return route_session(*entry->session, method, parts, body);
  } catch (const MethodNotAllowed&) {
    return error_response(405, "method_not_allowed", method + " is not supported on " + path);
  } catch (const nlohmann::json::parse_error& e) {
    return error_response(400, "bad_request", std::string("request body is not valid JSON: ") + e.what());
  } catch (const MissingInputError& e) {
    return error_response(409, "missing_input", e.what());
  } catch (const StudioError& e) {
    nlohmann::json extra = e.details();
    extra["stage"] = e.stage();
    return error_response(status_for(e.code()), to_string(e.code()), e.what(), extra);
  } catch (const Error& e) {
    return error_response(status_for(e.code()), to_string(e.code()), e.what());
  } catch (const std::exception& e) {
    return error_response(500, "internal", e.what());
  }
}

Response StudioService::route_session(Session& s, const std::string& method, const std::vector<std::string>& parts,
                                      const std::string& body) {
  const std::size_t n = parts.size();
  auto expect = [&](const char* m) {
    if (method != m) throw MethodNotAllowed{};
  };
  if (n == 2) {
    expect("GET");
    return json_response(200, s.summary());
  }
  const std::string& what = parts[2];
  if (what == "gif" && n == 3) {
    expect("POST");
    return json_response(200, s.upload_gif(std::vector<std::uint8_t>(body.begin(), body.end())));
  }
  if (what == "text" && n == 3) {
    expect("PUT");
    return json_response(200, s.set_text(parse_body(body)));
  }
  if (what == "params" && n == 3) {
    if (method == "GET") return json_response(200, s.summary()["params"]);
    expect("PUT");
    return json_response(200, s.set_params(parse_body(body)));
  }
  if (what == "keypoints" && n == 3) {
    expect("GET");
    return json_response(200, s.keypoints());
  }
  if (what == "keypoints" && n == 5) {
    const std::size_t i = parse_index(parts[3], "keypoint"), f = parse_index(parts[4], "frame");
    if (method == "GET") return json_response(200, s.keypoint(i, f));
    expect("PATCH");
    return json_response(200, s.patch_keypoint(i, f, parse_point(body, "keypoints")));
  }
  if (what == "controls" && n == 3) {
    expect("GET");
    return json_response(200, s.control_edits());
  }
  if (what == "controls" && n == 5) {
    const std::size_t j = parse_index(parts[3], "control point"), f = parse_index(parts[4], "frame");
    if (method == "GET") return json_response(200, s.control(j, f));
    expect("PATCH");
    return json_response(200, s.patch_control(j, f, parse_point(body, "controls")));
  }
  if (what == "preview" && n == 4) {
    expect("GET");
    return binary_response(s.preview_png(parse_index(parts[3], "frame")), "image/png");
  }
  if (what == "result" && n == 3) {
    expect("GET");
    return binary_response(s.result_gif(), "image/gif");
  }
  if (what == "export" && n == 4 && parts[3] == "svg") {
    expect("GET");
    return json_response(200, s.svg_bundle());
  }
  if (what == "export" && n == 4 && parts[3] == "config") {
    expect("GET");
    return json_response(200, s.export_config());
  }
  if (what == "events" && n == 3) {
    expect("GET");
    return json_response(200, s.events());
  }
  throw Error(ErrorCode::NotFound, "no such resource");
}

}  // namespace gm::studio
