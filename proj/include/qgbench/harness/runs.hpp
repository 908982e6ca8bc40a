#pragma once

// On-disk generation runs: <runs_dir>/<run_id>/{manifest.json,
// results.ndjson, scores.json}. The manifest pins the digests of the corpus
// the run was generated from and of its results file.

#include <algorithm>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qgbench/digest.hpp"
#include "qgbench/error.hpp"
#include "qgbench/generation.hpp"
#include "qgbench/io.hpp"
#include "qgbench/scoring.hpp"

namespace qgbench::harness {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kResultsFile = "results.ndjson";
inline constexpr const char* kScoresFile = "scores.json";

struct RunManifest {
  std::string run_id;
  std::string corpus_digest;  // SHA-256 of the corpus file the run read
  std::optional<std::uint64_t> split_seed;
  std::string model_id;
  promptkit::PromptSetting setting = promptkit::PromptSetting::WithLongPrompt;
  generation::InputKind input_kind = generation::InputKind::Instruction;
  generation::GenParams params;
  std::string results_file = kResultsFile;
  std::string results_digest;
  std::size_t n_results = 0;
  std::size_t n_ok = 0;
  std::string created_at;
};

inline Json to_json(const RunManifest& m) {
  Json j;
  j["run_id"] = m.run_id;
  j["corpus_digest"] = m.corpus_digest;
  j["split_seed"] = m.split_seed ? Json(*m.split_seed) : Json(nullptr);
  j["model_id"] = m.model_id;
  j["setting"] = promptkit::to_string(m.setting);
  j["input_kind"] = generation::to_string(m.input_kind);
  j["params"] = generation::to_json(m.params);
  j["files"] = Json{{"results", m.results_file}};
  j["results_digest"] = m.results_digest;
  j["n_results"] = m.n_results;
  j["n_ok"] = m.n_ok;
  j["created_at"] = m.created_at;
  return j;
}

inline RunManifest manifest_from_json(const nlohmann::json& j) {
  RunManifest m;
  m.run_id = j.at("run_id").get<std::string>();
  m.corpus_digest = j.value("corpus_digest", "");
  if (j.contains("split_seed") && !j["split_seed"].is_null()) {
    m.split_seed = j["split_seed"].get<std::uint64_t>();
  }
  m.model_id = j.at("model_id").get<std::string>();
  m.setting = promptkit::setting_from_string(j.at("setting").get<std::string>());
  m.input_kind = generation::input_kind_from_string(j.value("input_kind", "instruction"));
  m.params = generation::params_from_json(j.at("params"));
  if (j.contains("files")) m.results_file = j["files"].value("results", m.results_file);
  m.results_digest = j.value("results_digest", "");
  m.n_results = j.value("n_results", std::size_t{0});
  m.n_ok = j.value("n_ok", std::size_t{0});
  m.created_at = j.value("created_at", "");
  return m;
}

inline std::string serialize_results(const generation::GenerationRun& run) {
  std::string out;
  for (const auto& r : run.results) out += generation::to_json(r).dump() + "\n";
  return out;
}

/// Writes results first, then the manifest that vouches for them.
inline RunManifest write_run(const fs::path& runs_dir, const generation::GenerationRun& run,
                             const std::string& corpus_digest,
                             std::optional<std::uint64_t> split_seed = std::nullopt) {
  const fs::path dir = runs_dir / run.run_id;
  fs::create_directories(dir);
  const std::string results = serialize_results(run);
  io::write_file_atomic(dir / kResultsFile, results);

  RunManifest m;
  m.run_id = run.run_id;
  m.corpus_digest = corpus_digest;
  m.split_seed = split_seed;
  m.model_id = run.model_id;
  m.setting = run.setting;
  m.input_kind = run.input_kind;
  m.params = run.params;
  m.results_digest = sha256_hex(results);
  m.n_results = run.results.size();
  m.n_ok = run.ok_count();
  m.created_at = run.created_at;
  io::write_file_atomic(dir / kManifestFile, to_json(m).dump(2) + "\n");
  return m;
}

struct StoredRun {
  RunManifest manifest;
  generation::GenerationRun run;
  fs::path dir;
};

/// Loads a run directory and checks the results digest against the manifest.
inline StoredRun read_run(const fs::path& dir) {
  StoredRun s;
  s.dir = dir;
  try {
    s.manifest = manifest_from_json(nlohmann::json::parse(io::read_file(dir / kManifestFile)));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad manifest in " + dir.string() + ": " + e.what());
  }
  const std::string results = io::read_file(dir / s.manifest.results_file);
  if (!s.manifest.results_digest.empty() && sha256_hex(results) != s.manifest.results_digest) {
    throw IoError("results digest mismatch in " + dir.string());
  }
  auto& run = s.run;
  run.run_id = s.manifest.run_id;
  run.model_id = s.manifest.model_id;
  run.setting = s.manifest.setting;
  run.input_kind = s.manifest.input_kind;
  run.params = s.manifest.params;
  run.created_at = s.manifest.created_at;
  std::istringstream in(results);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      run.results.push_back(generation::result_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw IoError("bad result line in " + dir.string() + ": " + e.what());
    }
  }
  return s;
}

/// Every subdirectory holding a manifest, ordered by run id.
inline std::vector<StoredRun> read_runs(const fs::path& runs_dir) {
  std::vector<StoredRun> out;
  std::error_code ec;
  if (!fs::is_directory(runs_dir, ec)) return out;
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(runs_dir)) {
    if (entry.is_directory() && fs::exists(entry.path() / kManifestFile)) {
      dirs.push_back(entry.path());
    }
  }
  std::sort(dirs.begin(), dirs.end());
  for (const auto& d : dirs) out.push_back(read_run(d));
  return out;
}

inline void write_scores(const fs::path& run_dir, const scoring::ScoreReport& report) {
  io::write_file_atomic(run_dir / kScoresFile, scoring::to_json(report).dump(2) + "\n");
}

inline std::optional<scoring::ScoreReport> read_scores(const fs::path& run_dir) {
  const auto path = run_dir / kScoresFile;
  if (!fs::exists(path)) return std::nullopt;
  return scoring::report_from_json(nlohmann::json::parse(io::read_file(path)));
}

}  // namespace qgbench::harness
