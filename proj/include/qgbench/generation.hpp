#pragma once

// Drives a text-generation endpoint over a corpus under one prompt setting.
// Successful outputs are cached by content digest so that sampled outputs
// are frozen after the first call and downstream scoring is reproducible.

#include <atomic>
#include <cctype>
#include <cstdint>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <thread>
#include <variant>
#include <vector>

#include <json.hpp>

#include "qgbench/corpus.hpp"
#include "qgbench/digest.hpp"
#include "qgbench/error.hpp"
#include "qgbench/io.hpp"
#include "qgbench/promptkit.hpp"
#include "qgbench/text.hpp"

namespace qgbench::generation {

using promptkit::PromptSetting;
using promptkit::RenderedInput;
using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Parameters

struct GenParams {
  std::size_t max_tokens = 50;
  double temperature = 0.7;
  std::optional<double> presence_penalty;
  std::optional<double> frequency_penalty;

  /// Sampling settings used for the completions-style general-purpose model.
  static GenParams davinci() { return {50, 0.7, 1.0, 0.0}; }
  /// Sampling settings used for the chat model; penalties left to the server.
  static GenParams chat() { return {50, 0.7, std::nullopt, std::nullopt}; }

  void validate() const {
    if (max_tokens < 1) throw InvalidArgument("max_tokens must be >= 1");
    if (!(temperature >= 0)) throw InvalidArgument("temperature must be >= 0");
  }

  friend bool operator==(const GenParams&, const GenParams&) = default;
};

inline Json to_json(const GenParams& p) {
  Json j;
  j["max_tokens"] = p.max_tokens;
  j["temperature"] = p.temperature;
  if (p.presence_penalty) j["presence_penalty"] = *p.presence_penalty;
  if (p.frequency_penalty) j["frequency_penalty"] = *p.frequency_penalty;
  return j;
}

inline GenParams params_from_json(const nlohmann::json& j) {
  GenParams p;
  p.max_tokens = j.value("max_tokens", p.max_tokens);
  p.temperature = j.value("temperature", p.temperature);
  if (j.contains("presence_penalty") && !j["presence_penalty"].is_null()) {
    p.presence_penalty = j["presence_penalty"].get<double>();
  }
  if (j.contains("frequency_penalty") && !j["frequency_penalty"].is_null()) {
    p.frequency_penalty = j["frequency_penalty"].get<double>();
  }
  p.validate();
  return p;
}

// ---------------------------------------------------------------------------
// Transport errors raised by adapters

class GenerationError : public Error {
 public:
  using Error::Error;
  virtual bool retryable() const noexcept { return true; }
  virtual std::chrono::milliseconds retry_after() const noexcept { return {}; }
};

class EndpointUnreachable : public GenerationError {
 public:
  explicit EndpointUnreachable(const std::string& detail)
      : GenerationError("EndpointUnreachable", "endpoint unreachable: " + detail) {}
};

class RateLimited : public GenerationError {
 public:
  explicit RateLimited(std::chrono::milliseconds retry_after)
      : GenerationError("RateLimited", "rate limited; retry after " +
                                           std::to_string(retry_after.count()) + " ms"),
        retry_after_(retry_after) {}
  std::chrono::milliseconds retry_after() const noexcept override { return retry_after_; }

 private:
  std::chrono::milliseconds retry_after_;
};

class MalformedResponse : public GenerationError {
 public:
  explicit MalformedResponse(const std::string& detail)
      : GenerationError("MalformedResponse", "malformed response: " + detail) {}
};

/// A 4xx other than 429: retrying cannot help.
class RequestRejected : public GenerationError {
 public:
  RequestRejected(int status, const std::string& body)
      : GenerationError("RequestRejected",
                        "request rejected with HTTP " + std::to_string(status) + ": " + body) {}
  bool retryable() const noexcept override { return false; }
};

// ---------------------------------------------------------------------------
// Adapters

class GenerationAdapter {
 public:
  virtual ~GenerationAdapter() = default;
  virtual std::string model_id() const = 0;
  /// Returns the raw completion text or throws GenerationError.
  virtual std::string complete(const RenderedInput& input, const GenParams& params) = 0;
};

/// Deterministic offline adapter: "What is <first 5 context tokens>?".
class MockAdapter : public GenerationAdapter {
 public:
  explicit MockAdapter(std::string model_id = "mock-echo") : model_id_(std::move(model_id)) {}

  std::string model_id() const override { return model_id_; }

  std::string complete(const RenderedInput& input, const GenParams&) override {
    calls_.fetch_add(1, std::memory_order_relaxed);
    auto words = text::split_whitespace(promptkit::context_of(input));
    if (words.size() > 5) words.resize(5);
    return "What is " + text::join(words, " ") + "?";
  }

  std::size_t calls() const noexcept { return calls_.load(); }

 private:
  std::string model_id_;
  std::atomic<std::size_t> calls_{0};
};

// ---------------------------------------------------------------------------
// Results

enum class Status { Ok, Failed };

struct GenerationResult {
  std::string record_id;
  PromptSetting setting = PromptSetting::WithLongPrompt;
  std::string model_id;
  std::string input_digest;
  std::string output_question;
  Status status = Status::Failed;
  std::string failure_reason;  // empty when Ok
  std::int64_t latency_ms = 0;

  bool ok() const noexcept { return status == Status::Ok; }
  friend bool operator==(const GenerationResult&, const GenerationResult&) = default;
};

enum class InputKind { Instruction, Segmented };

inline std::string_view to_string(InputKind k) {
  return k == InputKind::Instruction ? "instruction" : "segmented";
}

inline InputKind input_kind_from_string(std::string_view s) {
  if (s == "instruction") return InputKind::Instruction;
  if (s == "segmented") return InputKind::Segmented;
  throw InvalidArgument("unknown input kind '" + std::string(s) + "'");
}

struct GenerationRun {
  std::string run_id;
  std::string model_id;
  PromptSetting setting = PromptSetting::WithLongPrompt;
  InputKind input_kind = InputKind::Instruction;
  GenParams params;
  std::vector<GenerationResult> results;
  std::string created_at;  // ISO-8601 UTC

  std::size_t ok_count() const {
    std::size_t n = 0;
    for (const auto& r : results) n += r.ok() ? 1 : 0;
    return n;
  }
};

inline Json to_json(const GenerationResult& r) {
  Json j;
  j["record_id"] = r.record_id;
  j["setting"] = promptkit::to_string(r.setting);
  j["model_id"] = r.model_id;
  j["input_digest"] = r.input_digest;
  j["output_question"] = r.output_question;
  j["status"] = r.ok() ? "Ok" : "Failed";
  if (!r.ok()) j["reason"] = r.failure_reason;
  j["latency_ms"] = r.latency_ms;
  return j;
}

inline GenerationResult result_from_json(const nlohmann::json& j) {
  GenerationResult r;
  r.record_id = j.at("record_id").get<std::string>();
  r.setting = promptkit::setting_from_string(j.at("setting").get<std::string>());
  r.model_id = j.at("model_id").get<std::string>();
  r.input_digest = j.value("input_digest", "");
  r.output_question = j.value("output_question", "");
  r.status = j.at("status").get<std::string>() == "Ok" ? Status::Ok : Status::Failed;
  r.failure_reason = j.value("reason", "");
  r.latency_ms = j.value("latency_ms", std::int64_t{0});
  return r;
}

inline std::string utc_now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------------------
// Digests and cache

/// Digest of the exact bytes sent to the endpoint, tagged with the input kind.
inline std::string input_digest(const RenderedInput& input) {
  const bool instruction = std::holds_alternative<promptkit::Instruction>(input);
  return Sha256()
      .update(instruction ? "instruction\n" : "segmented\n")
      .update(promptkit::flatten(input))
      .hex();
}

inline std::string cache_key(std::string_view model_id, const GenParams& params,
                             std::string_view input_digest) {
  return Sha256()
      .update(model_id)
      .update("\n")
      .update(to_json(params).dump())
      .update("\n")
      .update(input_digest)
      .hex();
}

struct CachedOutput {
  std::string output_question;
  std::int64_t latency_ms = 0;
};

/// Content-addressed store: <dir>/<key[0:2]>/<key>.json. Readers share a
/// lock; writers are serialized and publish with an atomic rename.
class ResultCache {
 public:
  explicit ResultCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }

  std::optional<CachedOutput> get(const std::string& key) const {
    std::shared_lock lock(mutex_);
    const auto path = path_for(key);
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) return std::nullopt;
    try {
      const auto j = nlohmann::json::parse(io::read_file(path));
      return CachedOutput{j.at("output_question").get<std::string>(),
                          j.value("latency_ms", std::int64_t{0})};
    } catch (const std::exception&) {
      return std::nullopt;  // unreadable entries are treated as misses
    }
  }

  void put(const std::string& key, const CachedOutput& value) {
    std::unique_lock lock(mutex_);
    Json j;
    j["output_question"] = value.output_question;
    j["latency_ms"] = value.latency_ms;
    io::write_file_atomic(path_for(key), j.dump() + "\n");
  }

  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path path_for(const std::string& key) const {
    return dir_ / key.substr(0, 2) / (key + ".json");
  }

  std::filesystem::path dir_;
  mutable std::shared_mutex mutex_;
};

// ---------------------------------------------------------------------------
// Single generation

struct RetryPolicy {
  std::size_t max_retries = 3;
  std::chrono::milliseconds initial_backoff{1000};
  std::function<void(std::chrono::milliseconds)> sleep = [](std::chrono::milliseconds d) {
    std::this_thread::sleep_for(d);
  };
};

struct GenerateOptions {
  ResultCache* cache = nullptr;
  RetryPolicy retry;
};

/// Trims, keeps the first line, and strips surrounding quotes.
inline std::string postprocess_output(std::string_view raw) {
  std::string s = text::trim(raw);
  if (auto nl = s.find('\n'); nl != std::string::npos) s = text::trim(s.substr(0, nl));
  static constexpr std::string_view quotes[] = {"\"", "'", "`", "\xE2\x80\x9C", "\xE2\x80\x9D",
                                                "\xE2\x80\x98", "\xE2\x80\x99"};
  for (bool changed = true; changed && !s.empty();) {
    changed = false;
    for (auto q : quotes) {
      if (s.size() >= q.size() && s.compare(0, q.size(), q) == 0) {
        s = text::trim(s.substr(q.size()));
        changed = true;
      }
      if (s.size() >= q.size() && s.compare(s.size() - q.size(), q.size(), q) == 0) {
        s = text::trim(s.substr(0, s.size() - q.size()));
        changed = true;
      }
    }
  }
  return s;
}

/// One generation with cache lookup, retries with exponential backoff
/// (honouring a server retry-after when it is longer), and cache fill on
/// success. Transport failures never escape; they become status Failed.
/// record_id and setting are left for the caller to fill.
inline GenerationResult generate(GenerationAdapter& adapter, const RenderedInput& input,
                                 const GenParams& params, const GenerateOptions& options = {}) {
  params.validate();
  GenerationResult result;
  result.model_id = adapter.model_id();
  result.input_digest = input_digest(input);
  const auto key = cache_key(result.model_id, params, result.input_digest);

  if (options.cache) {
    if (auto hit = options.cache->get(key)) {
      result.status = Status::Ok;
      result.output_question = hit->output_question;
      result.latency_ms = hit->latency_ms;
      return result;
    }
  }

  const auto started = std::chrono::steady_clock::now();
  auto backoff = options.retry.initial_backoff;
  std::string last_error;
  for (std::size_t attempt = 0;; ++attempt) {
    std::chrono::milliseconds wait{0};
    bool retryable = true;
    try {
      auto text = postprocess_output(adapter.complete(input, params));
      if (text.empty()) throw MalformedResponse("empty completion");
      result.status = Status::Ok;
      result.output_question = std::move(text);
      result.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                              std::chrono::steady_clock::now() - started)
                              .count();
      if (options.cache) options.cache->put(key, {result.output_question, result.latency_ms});
      return result;
    } catch (const GenerationError& e) {
      last_error = e.code() + ": " + e.what();
      retryable = e.retryable();
      wait = std::max(backoff, e.retry_after());
    } catch (const std::exception& e) {
      last_error = std::string("MalformedResponse: ") + e.what();
      wait = backoff;
    }
    if (!retryable || attempt >= options.retry.max_retries) break;
    options.retry.sleep(wait);
    backoff *= 2;
  }
  result.status = Status::Failed;
  result.failure_reason = last_error;
  result.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - started)
                          .count();
  return result;
}

// ---------------------------------------------------------------------------
// Batches

struct BatchOptions {
  std::size_t parallelism = 4;
  InputKind input_kind = InputKind::Instruction;
  GenerateOptions generate{};
  std::string run_id{};  // derived from the inputs when empty
};

inline RenderedInput render(const corpus::QuadRecord& r, PromptSetting setting, InputKind kind) {
  if (kind == InputKind::Instruction) return promptkit::render_instruction(r, setting);
  return promptkit::render_segmented(r, setting, promptkit::Side::Source);
}

/// model-setting-<12 hex digits of the batch digest>; never contains ':'.
inline std::string derive_run_id(std::string_view model_id, PromptSetting setting, InputKind kind,
                                 const GenParams& params,
                                 const std::vector<corpus::QuadRecord>& records) {
  Sha256 h;
  h.update(model_id).update("\n").update(promptkit::to_string(setting)).update("\n");
  h.update(to_string(kind)).update("\n").update(to_json(params).dump()).update("\n");
  for (const auto& r : records) h.update(r.id).update("\n");
  std::string safe;
  for (char c : model_id) {
    safe.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.' ? c : '_');
  }
  return safe + "-" + std::string(promptkit::to_string(setting)) + "-" + h.hex().substr(0, 12);
}

/// One result per record, in input order, with up to `parallelism`
/// requests in flight. Failures are recorded, never dropped.
inline GenerationRun run_batch(GenerationAdapter& adapter,
                               const std::vector<corpus::QuadRecord>& records,
                               PromptSetting setting, const GenParams& params,
                               const BatchOptions& options = {}) {
  if (records.empty()) throw EmptyCorpus();
  if (options.parallelism < 1) throw InvalidArgument("parallelism must be >= 1");
  params.validate();

  GenerationRun run;
  run.model_id = adapter.model_id();
  run.setting = setting;
  run.input_kind = options.input_kind;
  run.params = params;
  run.created_at = utc_now_iso8601();
  run.run_id = options.run_id.empty()
                   ? derive_run_id(run.model_id, setting, options.input_kind, params, records)
                   : options.run_id;
  run.results.resize(records.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < records.size(); i = next.fetch_add(1)) {
      const auto& rec = records[i];
      GenerationResult r;
      try {
        r = generate(adapter, render(rec, setting, options.input_kind), params, options.generate);
      } catch (const std::exception& e) {
        r.model_id = run.model_id;
        r.status = Status::Failed;
        r.failure_reason = e.what();
      }
      r.record_id = rec.id;
      r.setting = setting;
      run.results[i] = std::move(r);
    }
  };
  const std::size_t n_threads = std::min(options.parallelism, records.size());
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  return run;
}

}  // namespace qgbench::generation
