#include "glyphmotion/glyphmotion.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <mutex>
#include <new>
#include <string>
#include <thread>

#include "common/error.hpp"
#include "motion/trajectory.hpp"
#include "pipeline/pipeline.hpp"
#include "studio/http.hpp"
#include "studio/service.hpp"

struct gm_config {
  gm::pipeline::PipelineConfig config;
};

struct gm_result {
  gm::pipeline::PipelineConfig config;
  gm::pipeline::PipelineResult result;
};

struct gm_studio {
  std::unique_ptr<gm::studio::StudioService> service;
  std::unique_ptr<gm::studio::HttpServer> server;
  std::thread loop;
  std::mutex mutex;
};

namespace {

thread_local std::string last_error;
thread_local std::string last_stage;

gm_status status_of(gm::ErrorCode code) {
  switch (code) {
    case gm::ErrorCode::InvalidArgument: return GM_ERR_INVALID_ARGUMENT;
    case gm::ErrorCode::Config: return GM_ERR_CONFIG;
    case gm::ErrorCode::Font: return GM_ERR_FONT;
    case gm::ErrorCode::Gif: return GM_ERR_GIF;
    case gm::ErrorCode::Trajectory: return GM_ERR_TRAJECTORY;
    case gm::ErrorCode::Layout: return GM_ERR_LAYOUT;
    case gm::ErrorCode::Numeric: return GM_ERR_NUMERIC;
    case gm::ErrorCode::Unimplemented: return GM_ERR_UNIMPLEMENTED;
    case gm::ErrorCode::Io: return GM_ERR_IO;
    case gm::ErrorCode::NotFound: return GM_ERR_NOT_FOUND;
    case gm::ErrorCode::Internal: return GM_ERR_INTERNAL;
  }
  return GM_ERR_INTERNAL;
}

gm_status fail(gm_status status, std::string message, std::string stage = {}) {
  last_error = std::move(message);
  last_stage = std::move(stage);
  return status;
}

// Runs `fn` and turns any exception into a status plus the thread's last error.
template <typename Fn>
gm_status guarded(Fn&& fn) {
  try {
    fn();
    last_error.clear();
    last_stage.clear();
    return GM_OK;
  } catch (const gm::StageError& e) {
    return fail(status_of(e.code()), e.what(), e.stage());
  } catch (const gm::Error& e) {
    return fail(status_of(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(GM_ERR_CONFIG, std::string("invalid JSON: ") + e.what());
  } catch (const std::bad_alloc&) {
    return fail(GM_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(GM_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(GM_ERR_INTERNAL, "unknown failure");
  }
}

char* copy_string(const std::string& text) {
  char* out = static_cast<char*>(std::malloc(text.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, text.c_str(), text.size() + 1);
  return out;
}

void require(bool ok, const char* what) {
  if (!ok) throw gm::Error(gm::ErrorCode::InvalidArgument, what);
}

}  // namespace

extern "C" {

const char* gm_version(void) { return "0.1.0"; }

const char* gm_status_name(gm_status status) {
  switch (status) {
    case GM_OK: return "ok";
    case GM_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case GM_ERR_CONFIG: return "config";
    case GM_ERR_FONT: return "font";
    case GM_ERR_GIF: return "gif";
    case GM_ERR_TRAJECTORY: return "trajectory";
    case GM_ERR_LAYOUT: return "layout";
    case GM_ERR_NUMERIC: return "numeric";
    case GM_ERR_UNIMPLEMENTED: return "unimplemented";
    case GM_ERR_IO: return "io";
    case GM_ERR_NOT_FOUND: return "not_found";
    case GM_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* gm_last_error(void) { return last_error.c_str(); }
const char* gm_last_error_stage(void) { return last_stage.c_str(); }

void gm_string_free(char* text) { std::free(text); }
void gm_buffer_free(uint8_t* buffer) { std::free(buffer); }

gm_status gm_config_create(gm_config** out) {
  return guarded([&] {
    require(out, "out must not be NULL");
    *out = new gm_config();
  });
}

gm_status gm_config_merge_json(gm_config* config, const char* json, const char* base_dir) {
  return guarded([&] {
    require(config && json, "config and json must not be NULL");
    const auto doc = nlohmann::json::parse(json);
    config->config = gm::pipeline::config_from_json(doc, base_dir ? base_dir : "", config->config);
  });
}

gm_status gm_config_to_json(const gm_config* config, char** out_json) {
  return guarded([&] {
    require(config && out_json, "config and out_json must not be NULL");
    *out_json = copy_string(gm::pipeline::to_json(config->config).dump(2));
  });
}

gm_status gm_config_validate(const gm_config* config) {
  return guarded([&] {
    require(config, "config must not be NULL");
    config->config.validate();
  });
}

void gm_config_destroy(gm_config* config) { delete config; }

gm_status gm_run(const gm_config* config, gm_result** out) {
  return guarded([&] {
    require(config && out, "config and out must not be NULL");
    auto result = std::make_unique<gm_result>();
    result->config = config->config;
    result->result = gm::pipeline::run_pipeline(config->config);
    *out = result.release();
  });
}

gm_status gm_result_gif(const gm_result* result, const uint8_t** data, size_t* size) {
  return guarded([&] {
    require(result && data && size, "result, data and size must not be NULL");
    *data = result->result.gif.data();
    *size = result->result.gif.size();
  });
}

gm_status gm_result_report(const gm_result* result, char** out_jsonl) {
  return guarded([&] {
    require(result && out_jsonl, "result and out_jsonl must not be NULL");
    *out_jsonl = copy_string(result->result.report_text(result->config));
  });
}

gm_status gm_result_warnings(const gm_result* result, char** out_json) {
  return guarded([&] {
    require(result && out_json, "result and out_json must not be NULL");
    *out_json = copy_string(nlohmann::json(result->result.warnings).dump());
  });
}

size_t gm_result_frame_count(const gm_result* result) { return result ? result->result.frames.frames.size() : 0; }

double gm_result_ms_per_frame(const gm_result* result) { return result ? result->result.ms_per_frame() : 0.0; }

gm_status gm_result_write(const gm_result* result) {
  return guarded([&] {
    require(result, "result must not be NULL");
    gm::pipeline::write_artifacts(result->config, result->result);
  });
}

void gm_result_destroy(gm_result* result) { delete result; }

gm_status gm_extract_trajectories(const uint8_t* gif, size_t size, int keypoints, char** out_json) {
  return guarded([&] {
    require(gif && out_json, "gif and out_json must not be NULL");
    require(keypoints >= 1, "keypoints must be >= 1");
    gm::motion::TrackerOptions options;
    options.keypoints = keypoints;
    std::vector<std::uint8_t> bytes(gif, gif + size);
    gm::gif::FrameSequence frames;
    try {
      frames = gm::gif::decode_gif(bytes);
    } catch (const gm::Error& e) {
      throw gm::StageError("decode", e.code(), e.what());
    }
    gm::motion::ExtractResult extracted;
    try {
      extracted = gm::motion::extract_keypoints(frames, options);
    } catch (const gm::Error& e) {
      throw gm::StageError("extract", e.code(), e.what());
    }
    *out_json = copy_string(gm::motion::export_trajectories(extracted.trajectory).dump());
  });
}

gm_status gm_studio_create(const char* options_json, gm_studio** out) {
  return guarded([&] {
    require(options_json && out, "options_json and out must not be NULL");
    auto studio = std::make_unique<gm_studio>();
    studio->service = std::make_unique<gm::studio::StudioService>(
        gm::studio::service_options_from_json(nlohmann::json::parse(options_json)));
    *out = studio.release();
  });
}

gm_status gm_studio_handle(gm_studio* studio, const char* method, const char* path, const uint8_t* body,
                           size_t body_size, int* http_status, char** content_type, uint8_t** response,
                           size_t* response_size) {
  return guarded([&] {
    require(studio && method && path && http_status && content_type && response && response_size,
            "studio, method, path and all outputs must not be NULL");
    require(body || body_size == 0, "body must not be NULL when body_size > 0");
    const std::string request(body ? reinterpret_cast<const char*>(body) : "", body_size);
    const auto reply = studio->service->handle(method, path, request);
    auto* buffer = static_cast<uint8_t*>(std::malloc(reply.body.size() ? reply.body.size() : 1));
    if (!buffer) throw std::bad_alloc();
    std::memcpy(buffer, reply.body.data(), reply.body.size());
    *content_type = copy_string(reply.content_type);
    *response = buffer;
    *response_size = reply.body.size();
    *http_status = reply.status;
  });
}

gm_status gm_studio_listen(gm_studio* studio, const char* host, int port, int* bound_port) {
  return guarded([&] {
    require(studio && host, "studio and host must not be NULL");
    require(port >= 0 && port <= 65535, "port must be in [0, 65535]");
    std::lock_guard lock(studio->mutex);
    if (studio->server) throw gm::Error(gm::ErrorCode::InvalidArgument, "the studio is already listening");
    auto server = std::make_unique<gm::studio::HttpServer>(*studio->service);
    const int bound = server->bind(host, port);
    studio->server = std::move(server);
    studio->loop = std::thread([server = studio->server.get()] { server->listen(); });
    studio->server->wait_until_ready();
    if (bound_port) *bound_port = bound;
  });
}

gm_status gm_studio_wait(gm_studio* studio) {
  return guarded([&] {
    require(studio, "studio must not be NULL");
    std::thread loop;
    {
      std::lock_guard lock(studio->mutex);
      loop = std::move(studio->loop);
    }
    if (loop.joinable()) loop.join();
  });
}

gm_status gm_studio_stop(gm_studio* studio) {
  return guarded([&] {
    require(studio, "studio must not be NULL");
    std::lock_guard lock(studio->mutex);
    if (studio->server) studio->server->stop();
  });
}

void gm_studio_destroy(gm_studio* studio) {
  if (!studio) return;
  gm_studio_stop(studio);
  gm_studio_wait(studio);
  delete studio;
}

}  // extern "C"
