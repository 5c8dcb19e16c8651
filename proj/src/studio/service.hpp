#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "studio/session.hpp"

namespace gm::studio {

struct ServiceOptions {
  std::map<std::string, std::filesystem::path> fonts;  // font id -> file
  std::string default_font;                            // first font when empty
  std::optional<std::filesystem::path> persist_dir;    // one subdirectory per session
  unsigned threads = 0;
};

/// {"fonts": {"id": "path"}, "default_font": "id", "persist_dir": "dir", "threads": 0}
ServiceOptions service_options_from_json(const nlohmann::json& doc);

struct Response {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

/// Transport-independent router for the studio HTTP API. Point and frame
/// indices are 1-based in paths and bodies. Requests to one session are
/// serialized; different sessions proceed concurrently.
class StudioService {
 public:
  /// Reloads every session found under `persist_dir` by replaying its log.
  explicit StudioService(ServiceOptions options);

  Response handle(const std::string& method, const std::string& path, const std::string& body);

  std::vector<std::string> session_ids() const;

 private:
  struct Entry {
    std::mutex mutex;
    std::unique_ptr<Session> session;
  };

  FontEntry resolve_font(const std::string& id);
  std::shared_ptr<Entry> find(const std::string& id) const;
  Response create_session();
  Response route_session(Session& session, const std::string& method, const std::vector<std::string>& parts,
                         const std::string& body);

  ServiceOptions options_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::uint64_t next_id_ = 1;
  std::mutex font_mutex_;
  std::map<std::string, std::shared_ptr<const font::Font>> font_cache_;
};

}  // namespace gm::studio
