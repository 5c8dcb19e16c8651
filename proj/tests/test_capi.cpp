// Exercises the shared library and the CLI binary through their public
// surfaces only.
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "doctest.h"
#include "glyphmotion/glyphmotion.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kData = GM_DATA_DIR;
const std::string kFont = (kData / "fonts/DejaVuSans.ttf").string();
const std::string kGif = (kData / "fixtures/bouncing_disk.gif").string();

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("glyphmotion_capi_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int cli(const std::string& args) {
  const std::string command = std::string(GM_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

struct Reply {
  int status = 0;
  std::string type, body;
};

Reply request(gm_studio* studio, const std::string& method, const std::string& path, const std::string& body = "") {
  Reply r;
  char* type = nullptr;
  uint8_t* data = nullptr;
  size_t size = 0;
  const auto st = gm_studio_handle(studio, method.c_str(), path.c_str(),
                                   reinterpret_cast<const uint8_t*>(body.data()), body.size(), &r.status, &type,
                                   &data, &size);
  REQUIRE(st == GM_OK);
  r.type = type;
  r.body.assign(reinterpret_cast<const char*>(data), size);
  gm_string_free(type);
  gm_buffer_free(data);
  return r;
}

}  // namespace

TEST_CASE("config round trip and validation through the C API") {
  gm_config* config = nullptr;
  REQUIRE(gm_config_create(&config) == GM_OK);
  CHECK(gm_config_validate(config) == GM_ERR_CONFIG);
  CHECK(std::string(gm_last_error()).find("text is required") != std::string::npos);
  CHECK(std::string(gm_last_error_stage()).empty());

  CHECK(gm_config_merge_json(config, "{\"alpha\": \"x\"}", nullptr) == GM_ERR_CONFIG);
  CHECK(gm_config_merge_json(config, "{not json", nullptr) == GM_ERR_CONFIG);
  const json doc = {{"text", "ok"}, {"font", kFont}, {"gif", kGif}, {"alpha", 3.5}, {"out", "x.gif"}};
  REQUIRE(gm_config_merge_json(config, doc.dump().c_str(), nullptr) == GM_OK);
  CHECK(gm_config_validate(config) == GM_OK);
  CHECK(std::string(gm_last_error()).empty());
  char* text = nullptr;
  REQUIRE(gm_config_to_json(config, &text) == GM_OK);
  CHECK(json::parse(text)["alpha"] == 3.5);
  gm_string_free(text);
  gm_config_destroy(config);
  CHECK(gm_config_create(nullptr) == GM_ERR_INVALID_ARGUMENT);
}

TEST_CASE("run, inspect and write a result") {
  auto dir = scratch("run");
  gm_config* config = nullptr;
  gm_config_create(&config);
  const json doc = {{"text", "hey"}, {"font", kFont}, {"gif", kGif}, {"out", (dir / "a.gif").string()},
                    {"report", (dir / "r.jsonl").string()}};
  REQUIRE(gm_config_merge_json(config, doc.dump().c_str(), nullptr) == GM_OK);
  gm_result* result = nullptr;
  REQUIRE(gm_run(config, &result) == GM_OK);
  CHECK(gm_result_frame_count(result) == 16);
  CHECK(gm_result_ms_per_frame(result) > 0);
  const uint8_t* data = nullptr;
  size_t size = 0;
  REQUIRE(gm_result_gif(result, &data, &size) == GM_OK);
  CHECK(std::string(reinterpret_cast<const char*>(data), 6) == "GIF89a");
  CHECK(!fs::exists(dir / "a.gif"));
  REQUIRE(gm_result_write(result) == GM_OK);
  CHECK(slurp(dir / "a.gif") == std::string(reinterpret_cast<const char*>(data), size));
  char* report = nullptr;
  REQUIRE(gm_result_report(result, &report) == GM_OK);
  CHECK(slurp(dir / "r.jsonl") == report);
  gm_string_free(report);
  gm_result_destroy(result);
  gm_config_destroy(config);
}

TEST_CASE("stage failures name the stage") {
  gm_config* config = nullptr;
  gm_config_create(&config);
  const json doc = {{"text", "hey"}, {"font", kFont + ".missing"}, {"gif", kGif}, {"out", "x.gif"}};
  gm_config_merge_json(config, doc.dump().c_str(), nullptr);
  gm_result* result = nullptr;
  CHECK(gm_run(config, &result) == GM_ERR_IO);
  CHECK(result == nullptr);
  CHECK(std::string(gm_last_error_stage()) == "load-font");
  std::string other_thread_stage = "unset";
  std::thread([&] { other_thread_stage = gm_last_error_stage(); }).join();
  CHECK(other_thread_stage.empty());
  gm_config_destroy(config);

  char* out = nullptr;
  const std::string junk = "GIF89a\x01";
  CHECK(gm_extract_trajectories(reinterpret_cast<const uint8_t*>(junk.data()), junk.size(), 4, &out) == GM_ERR_GIF);
  CHECK(std::string(gm_last_error_stage()) == "decode");
  CHECK(std::string(gm_status_name(GM_ERR_GIF)) == "gif");
}

TEST_CASE("extract returns trajectory JSON") {
  const std::string gif = slurp(kGif);
  char* out = nullptr;
  REQUIRE(gm_extract_trajectories(reinterpret_cast<const uint8_t*>(gif.data()), gif.size(), 6, &out) == GM_OK);
  const auto doc = json::parse(out);
  gm_string_free(out);
  CHECK(doc["n"] == 6);
  CHECK(doc["f"] == 16);
}

TEST_CASE("CLI exit codes") {
  auto dir = scratch("cli");
  const std::string base = "--font " + kFont + " --text hey ";
  CHECK(cli("animate " + base + "--gif " + kGif + " --out " + (dir / "ok.gif").string()) == 0);
  CHECK(fs::exists(dir / "ok.gif"));
  CHECK(cli("animate " + base + "--out " + (dir / "no_source.gif").string()) == 2);
  CHECK(cli("animate " + base + "--gif " + kGif + " --trajectory " + kGif + " --out x.gif") == 2);
  CHECK(cli("animate " + base + "--gif " + kGif + " --alpha -1 --out x.gif") == 2);
  CHECK(cli("animate " + base + "--gif " + kGif + " --mode spiral --out x.gif") == 2);
  CHECK(cli("animate --unknown-flag") == 2);
  CHECK(cli("animate --config " + (dir / "absent.json").string()) == 2);
  CHECK(cli("animate " + base + "--gif " + (dir / "absent.gif").string() + " --out " + (dir / "x.gif").string()) ==
        3);
  CHECK(cli("animate --font " + kFont + " --text ' ' --gif " + kGif + " --out " + (dir / "x.gif").string()) == 3);
  CHECK_FALSE(fs::exists(dir / "x.gif"));
  CHECK(cli("") == 2);
  CHECK(cli("extract --gif " + kGif + " --out " + (dir / "t.json").string()) == 0);
  CHECK(json::parse(slurp(dir / "t.json"))["n"] == 10);
}

TEST_CASE("CLI config files resolve paths next to the file") {
  auto dir = scratch("cli_config");
  fs::copy_file(kGif, dir / "drive.gif");
  std::ofstream(dir / "run.json") << json{{"text", "hey"}, {"font", kFont}, {"gif", "drive.gif"}, {"alpha", 4},
                                          {"out", "out/result.gif"}, {"report", "out/report.jsonl"}}
                                         .dump();
  CHECK(cli("animate --config " + (dir / "run.json").string() + " --alpha 0") == 0);
  CHECK(fs::exists(dir / "out/result.gif"));
  auto first = json::parse(slurp(dir / "out/report.jsonl").substr(0, slurp(dir / "out/report.jsonl").find('\n')));
  CHECK(first["config"]["alpha"] == 0.0);
}

TEST_CASE("studio replay matches a from-scratch CLI run") {
  auto dir = scratch("replay");
  const json options = {{"fonts", {{"dejavu", kFont}}}};
  gm_studio* studio = nullptr;
  REQUIRE(gm_studio_create(options.dump().c_str(), &studio) == GM_OK);

  auto created = request(studio, "POST", "/sessions");
  REQUIRE(created.status == 201);
  const std::string base = "/sessions/" + json::parse(created.body)["id"].get<std::string>();
  CHECK(request(studio, "POST", base + "/gif", slurp(kGif)).status == 200);
  CHECK(request(studio, "PUT", base + "/text", json{{"text", "wakey"}}.dump()).status == 200);
  CHECK(request(studio, "PATCH", base + "/keypoints/3/5", json{{"x", 0.35}, {"y", 0.6}}.dump()).status == 200);
  CHECK(request(studio, "PATCH", base + "/controls/20/9", json{{"x", 0.5}, {"y", 0.4}}.dump()).status == 200);
  CHECK(request(studio, "PUT", base + "/params", json{{"alpha", 2}}.dump()).status == 200);
  auto result = request(studio, "GET", base + "/result");
  REQUIRE(result.status == 200);
  CHECK(result.type == "image/gif");

  auto exported = json::parse(request(studio, "GET", base + "/export/config").body);
  fs::copy_file(kGif, dir / exported["gif"]["file"].get<std::string>());
  for (const auto& [name, doc] : exported["files"].items()) std::ofstream(dir / name) << doc.dump();
  std::ofstream(dir / "state.json") << exported["config"].dump();
  REQUIRE(cli("animate --config " + (dir / "state.json").string()) == 0);
  CHECK(slurp(dir / "result.gif") == result.body);

  // The HTTP listener serves the same bytes.
  int port = 0;
  REQUIRE(gm_studio_listen(studio, "127.0.0.1", 0, &port) == GM_OK);
  httplib::Client client("127.0.0.1", port);
  auto over_http = client.Get(base + "/result");
  REQUIRE(over_http);
  CHECK(over_http->body == result.body);
  CHECK(gm_studio_listen(studio, "127.0.0.1", 0, &port) == GM_ERR_INVALID_ARGUMENT);
  CHECK(gm_studio_stop(studio) == GM_OK);
  CHECK(gm_studio_wait(studio) == GM_OK);
  gm_studio_destroy(studio);
}

TEST_CASE("studio drag requests are clamped to the unit square") {
  const json options = {{"fonts", {{"dejavu", kFont}}}};
  gm_studio* studio = nullptr;
  REQUIRE(gm_studio_create(options.dump().c_str(), &studio) == GM_OK);
  const std::string base =
      "/sessions/" + json::parse(request(studio, "POST", "/sessions").body)["id"].get<std::string>();
  request(studio, "POST", base + "/gif", slurp(kGif));
  request(studio, "PUT", base + "/text", json{{"text", "hi"}}.dump());
  CHECK(request(studio, "PATCH", base + "/controls/1/2", json{{"x", 1.0}, {"y", 0.0}}.dump()).status == 200);
  CHECK(request(studio, "PATCH", base + "/controls/1/2", json{{"x", 1.0000001}, {"y", 0.0}}.dump()).status == 422);
  CHECK(request(studio, "PATCH", base + "/keypoints/1/2", json{{"x", 0.5}, {"y", -1e-9}}.dump()).status == 422);
  gm_studio_destroy(studio);
  CHECK(gm_studio_create("{\"fonts\": {}}", &studio) == GM_ERR_CONFIG);
}
