#pragma once

// HTTP+JSON service for the human-evaluation protocol: annotation batches,
// rating submission, agreement, and run/score retrieval.
//
// Runs and the gold corpus are loaded once at start-up and never change;
// ratings go through the single appender in RatingStore.

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "qgbench/agreement.hpp"
#include "qgbench/corpus.hpp"
#include "qgbench/digest.hpp"
#include "qgbench/error.hpp"
#include "qgbench/generation.hpp"
#include "qgbench/harness/config.hpp"
#include "qgbench/harness/rating_store.hpp"
#include "qgbench/harness/runs.hpp"
#include "qgbench/io.hpp"
#include "qgbench/scoring.hpp"

namespace qgbench::harness {

struct Reply {
  int status = 200;
  Json body;
};

inline Json error_body(std::string_view code, std::string_view detail, std::string_view field = {}) {
  Json j;
  j["error"] = code;
  j["detail"] = detail;
  if (!field.empty()) j["field"] = field;
  return j;
}

/// One generated question open for rating.
struct Target {
  std::string target_id;
  std::string run_id;
  std::string record_id;
  std::string model_id;
  promptkit::PromptSetting setting;
  std::string generated_question;
};

class Service {
 public:
  explicit Service(Config config)
      : config_(std::move(config)), store_(config_.ratings_path) {
    if (!config_.corpus.empty()) {
      for (auto& r : corpus::parse_quads(io::read_file(config_.corpus))) {
        const std::string id = r.id;
        gold_.emplace(id, std::move(r));
      }
    }
    for (auto& s : read_runs(config_.runs_dir)) {
      for (const auto& r : s.run.results) {
        if (!r.ok()) continue;
        Target t{agreement::make_target_id(s.run.run_id, r.record_id), s.run.run_id, r.record_id,
                 s.run.model_id, s.run.setting, r.output_question};
        target_index_.emplace(t.target_id, targets_.size());
        targets_.push_back(std::move(t));
      }
      runs_.push_back(std::move(s));
    }
  }

  ~Service() { stop(); }

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  const std::vector<Target>& targets() const noexcept { return targets_; }
  RatingStore& store() noexcept { return store_; }

  // -- handlers ------------------------------------------------------------

  /// Unrated targets in this rater's fixed shuffled order, first page only.
  /// Deterministic until the rater submits again.
  Reply next_batch(const std::string& rater_id) const {
    if (rater_id.empty()) return {400, error_body("InvalidArgument", "rater is required", "rater")};
    std::set<std::string> rated;
    const auto snapshot = store_.snapshot();  // keeps the records alive across the loop
    for (const auto& r : *snapshot) {
      if (r.rater_id == rater_id) rated.insert(r.target_id);
    }
    std::vector<std::size_t> pending;
    for (std::size_t i : rater_order(rater_id)) {
      if (!rated.count(targets_[i].target_id)) pending.push_back(i);
    }
    const std::size_t n = std::min(config_.page_size, pending.size());

    Json items = Json::array();
    Sha256 h;
    h.update(rater_id);
    for (std::size_t k = 0; k < n; ++k) {
      const auto& t = targets_[pending[k]];
      h.update("\n").update(t.target_id);
      Json item;
      item["target_id"] = t.target_id;
      const auto g = gold_.find(t.record_id);
      item["context"] = g != gold_.end() ? g->second.context : std::string();
      item["generated_question"] = t.generated_question;
      item["setting"] = promptkit::to_string(t.setting);
      item["model_id"] = config_.reveal_model ? Json(t.model_id) : Json(nullptr);
      if (config_.show_gold) {
        item["gold_question"] = g != gold_.end() ? Json(g->second.question) : Json(nullptr);
      }
      items.push_back(std::move(item));
    }
    Json body;
    body["batch_id"] = h.hex().substr(0, 16);
    body["rater_id"] = rater_id;
    body["items"] = std::move(items);
    body["remaining"] = pending.size();
    return {200, std::move(body)};
  }

  Reply submit_rating(const std::string& body) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
      return {400, error_body("InvalidRating", e.what())};
    }
    agreement::RatingRecord r;
    try {
      r = agreement::rating_from_json(j);
    } catch (const agreement::InvalidRating& e) {
      return {400, error_body(e.code(), e.what(), e.field())};
    }
    if (!target_index_.count(r.target_id)) {
      return {400, error_body("InvalidRating", "unknown target '" + r.target_id + "'", "target_id")};
    }
    if (r.submitted_at.empty()) r.submitted_at = generation::utc_now_iso8601();
    store_.append(r);
    return {201, agreement::to_json(r)};
  }

  /// Kappa per criterion once every rater seen has rated every target.
  Reply agreement() const {
    std::vector<agreement::RatingRecord> known;
    const auto snapshot = store_.snapshot();
    for (const auto& r : *snapshot) {
      if (target_index_.count(r.target_id)) known.push_back(r);
    }
    known = agreement::latest_wins(known);
    std::set<std::string> raters;
    std::set<agreement::RaterTarget> have;
    for (const auto& r : known) {
      raters.insert(r.rater_id);
      have.insert({r.rater_id, r.target_id});
    }
    std::vector<agreement::RaterTarget> missing;
    for (const auto& rater : raters) {
      for (const auto& t : targets_) {
        if (!have.count({rater, t.target_id})) missing.push_back({rater, t.target_id});
      }
    }
    if (!missing.empty()) {
      agreement::UnevenCoverage err(missing);
      Json body = error_body(err.code(), err.what());
      body["n_missing"] = missing.size();
      Json list = Json::array();
      for (std::size_t i = 0; i < std::min<std::size_t>(missing.size(), 100); ++i) {
        list.push_back(Json{{"rater_id", missing[i].rater_id}, {"target_id", missing[i].target_id}});
      }
      body["missing"] = std::move(list);
      return {409, std::move(body)};
    }
    try {
      return {200, agreement::to_json(agreement::kappa_per_criterion(known))};
    } catch (const Error& e) {
      return {409, error_body(e.code(), e.what())};
    }
  }

  Reply list_runs() const {
    Json arr = Json::array();
    for (const auto& s : runs_) arr.push_back(to_json(s.manifest));
    return {200, std::move(arr)};
  }

  Reply run_scores(const std::string& run_id) {
    const auto it = std::find_if(runs_.begin(), runs_.end(),
                                 [&](const StoredRun& s) { return s.manifest.run_id == run_id; });
    if (it == runs_.end()) return {404, error_body("NotFound", "unknown run '" + run_id + "'")};
    std::lock_guard lock(scores_mutex_);
    auto cached = scores_.find(run_id);
    if (cached == scores_.end()) {
      std::optional<scoring::ScoreReport> report;
      try {
        report = read_scores(it->dir);
        if (!report) {
          std::map<std::string, std::string> gold;
          for (const auto& [id, rec] : gold_) gold.emplace(id, rec.question);
          report = scoring::evaluate_run(it->run, gold);
        }
      } catch (const Error& e) {
        return {409, error_body(e.code(), e.what())};
      }
      cached = scores_.emplace(run_id, scoring::to_json(*report)).first;
    }
    return {200, cached->second};
  }

  // -- transport -----------------------------------------------------------

  /// Binds to config host/port (port 0 picks a free one) and serves on a
  /// background thread. Returns the bound port.
  int start() {
    install_routes();
    int port = config_.port;
    if (port == 0) {
      port = server_.bind_to_any_port(config_.host);
    } else if (!server_.bind_to_port(config_.host, port)) {
      port = -1;
    }
    if (port < 0) throw IoError("cannot bind " + config_.host + ":" + std::to_string(config_.port));
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return port;
  }

  /// Blocks serving on the calling thread.
  void serve_forever() {
    install_routes();
    if (!server_.listen(config_.host, config_.port)) {
      throw IoError("cannot listen on " + config_.host + ":" + std::to_string(config_.port));
    }
  }

  void stop() {
    if (server_.is_running()) server_.stop();
    if (thread_.joinable()) thread_.join();
  }

 private:
  std::vector<std::size_t> rater_order(const std::string& rater_id) const {
    const std::string d = sha256_hex(rater_id);
    const std::uint64_t seed = std::stoull(d.substr(0, 16), nullptr, 16) ^ config_.shuffle_seed;
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> order(targets_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[corpus::bounded(rng, i)]);
    }
    return order;
  }

  static void send(httplib::Response& res, const Reply& reply) {
    res.status = reply.status;
    res.set_content(reply.body.dump(), "application/json");
  }

  void install_routes() {
    if (routes_installed_) return;
    routes_installed_ = true;
    server_.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
      send(res, {200, Json{{"status", "ok"}}});
    });
    server_.Get("/api/batches/next", [this](const httplib::Request& req, httplib::Response& res) {
      send(res, next_batch(req.get_param_value("rater")));
    });
    server_.Post("/api/ratings", [this](const httplib::Request& req, httplib::Response& res) {
      try {
        send(res, submit_rating(req.body));
      } catch (const Error& e) {
        send(res, {500, error_body(e.code(), e.what())});
      }
    });
    server_.Get("/api/agreement", [this](const httplib::Request&, httplib::Response& res) {
      send(res, agreement());
    });
    server_.Get("/api/runs", [this](const httplib::Request&, httplib::Response& res) {
      send(res, list_runs());
    });
    server_.Get("/api/runs/:id/scores", [this](const httplib::Request& req, httplib::Response& res) {
      send(res, run_scores(req.path_params.at("id")));
    });
  }

  Config config_;
  RatingStore store_;
  std::map<std::string, corpus::QuadRecord> gold_;
  std::vector<StoredRun> runs_;
  std::vector<Target> targets_;
  std::map<std::string, std::size_t> target_index_;
  std::mutex scores_mutex_;
  std::map<std::string, Json> scores_;
  httplib::Server server_;
  std::thread thread_;
  bool routes_installed_ = false;
};

}  // namespace qgbench::harness
