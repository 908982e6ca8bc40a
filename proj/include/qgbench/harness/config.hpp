#pragma once

// Service and generation configuration, read from a JSON file. Relative
// paths are resolved against the directory holding the file.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "qgbench/error.hpp"
#include "qgbench/generation.hpp"
#include "qgbench/http_adapter.hpp"
#include "qgbench/io.hpp"

namespace qgbench::harness {

namespace fs = std::filesystem;

struct Config {
  std::string host = "127.0.0.1";
  int port = 8080;
  fs::path corpus;        // gold records the runs were generated from
  fs::path runs_dir = "runs";
  fs::path ratings_path = "ratings.ndjson";
  std::size_t page_size = 20;
  bool show_gold = false;     // include the gold question in batch items
  bool reveal_model = false;  // raters see model ids only when set
  std::uint64_t shuffle_seed = 0;

  generation::EndpointConfig endpoint;
  std::vector<std::string> models;
  generation::GenParams params = generation::GenParams::chat();
  std::size_t parallelism = 4;
  fs::path cache_dir = ".qgbench-cache";
  std::size_t retries = 3;
  std::chrono::milliseconds backoff{1000};
};

namespace detail {

inline fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace detail

/// Unknown keys are ignored; a wrong type for a known key is an error.
inline Config config_from_json(const nlohmann::json& j, const fs::path& base_dir = {}) {
  if (!j.is_object()) throw InvalidArgument("config must be a JSON object");
  Config c;
  try {
    c.host = j.value("host", c.host);
    c.port = j.value("port", c.port);
    if (j.contains("corpus")) c.corpus = detail::resolve(base_dir, j["corpus"].get<std::string>());
    c.runs_dir = detail::resolve(base_dir, j.value("runs_dir", c.runs_dir.string()));
    c.ratings_path = detail::resolve(base_dir, j.value("ratings_path", c.ratings_path.string()));
    c.page_size = j.value("page_size", c.page_size);
    c.show_gold = j.value("show_gold", c.show_gold);
    c.reveal_model = j.value("reveal_model", c.reveal_model);
    c.shuffle_seed = j.value("shuffle_seed", c.shuffle_seed);
    if (j.contains("endpoint")) {
      const auto& e = j["endpoint"];
      c.endpoint.base_url = e.value("base_url", c.endpoint.base_url);
      c.endpoint.path = e.value("path", c.endpoint.path);
      if (e.contains("style")) {
        c.endpoint.style = generation::wire_style_from_string(e["style"].get<std::string>());
      }
      c.endpoint.api_key_env = e.value("api_key_env", c.endpoint.api_key_env);
      c.endpoint.timeout = std::chrono::seconds(e.value("timeout_s", c.endpoint.timeout.count()));
    }
    if (j.contains("models")) c.models = j["models"].get<std::vector<std::string>>();
    if (j.contains("params")) c.params = generation::params_from_json(j["params"]);
    c.parallelism = j.value("parallelism", c.parallelism);
    c.cache_dir = detail::resolve(base_dir, j.value("cache_dir", c.cache_dir.string()));
    c.retries = j.value("retries", c.retries);
    c.backoff = std::chrono::milliseconds(j.value("backoff_ms", c.backoff.count()));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  if (c.page_size < 1) throw InvalidArgument("config: page_size must be >= 1");
  if (c.parallelism < 1) throw InvalidArgument("config: parallelism must be >= 1");
  return c;
}

inline Config load_config(const fs::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument("config " + path.string() + ": " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

}  // namespace qgbench::harness
