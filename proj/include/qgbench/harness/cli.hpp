#pragma once

// Command-line front end. Each subcommand maps onto one library operation.
// Exit codes: 0 success, 1 domain error, 2 usage error.

#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qgbench/agreement.hpp"
#include "qgbench/corpus.hpp"
#include "qgbench/digest.hpp"
#include "qgbench/error.hpp"
#include "qgbench/generation.hpp"
#include "qgbench/harness/config.hpp"
#include "qgbench/harness/rating_store.hpp"
#include "qgbench/harness/runs.hpp"
#include "qgbench/harness/service.hpp"
#include "qgbench/http_adapter.hpp"
#include "qgbench/io.hpp"
#include "qgbench/metrics.hpp"
#include "qgbench/promptkit.hpp"
#include "qgbench/report.hpp"
#include "qgbench/scoring.hpp"

namespace qgbench::harness {

enum class ExitCode : int { Ok = 0, DomainError = 1, UsageError = 2 };

namespace cli {

using Row = std::vector<std::string>;

/// csv: header + escaped rows; md: pipe table; lines: tab-separated rows.
inline void emit(std::ostream& out, const std::string& format, const Row& header,
                 const std::vector<Row>& rows) {
  if (format == "csv") {
    auto line = [&](const Row& r) {
      for (std::size_t i = 0; i < r.size(); ++i) {
        out << (i ? "," : "") << scoring::csv_escape(r[i]);
      }
      out << '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
  } else if (format == "md") {
    out << '|';
    for (const auto& h : header) out << ' ' << h << " |";
    out << "\n|";
    for (std::size_t i = 0; i < header.size(); ++i) out << "---|";
    out << '\n';
    for (const auto& r : rows) {
      out << '|';
      for (const auto& c : r) out << ' ' << c << " |";
      out << '\n';
    }
  } else {
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "\t" : "") << r[i];
      out << '\n';
    }
  }
}

inline std::vector<corpus::QuadRecord> load_corpus(const std::filesystem::path& p) {
  return corpus::parse_quads(io::read_file(p));
}

inline std::vector<promptkit::PromptSetting> settings_from(const std::string& s) {
  if (s == "all") return {std::begin(promptkit::kAllSettings), std::end(promptkit::kAllSettings)};
  return {promptkit::setting_from_string(s)};
}

inline std::string fixed(double v, int digits) { return report::detail::fixed(v, digits); }

inline std::vector<Row> stats_rows(const corpus::DatasetStats& s, std::size_t top) {
  std::vector<Row> rows;
  rows.push_back({"total", std::to_string(s.total)});
  for (const auto& [subject, n] : s.per_subject) rows.push_back({"subject." + subject, std::to_string(n)});
  if (s.mean_words) {
    rows.push_back({"mean_words.context", fixed(s.mean_words->context, 2)});
    rows.push_back({"mean_words.long_prompt", fixed(s.mean_words->long_prompt, 2)});
    rows.push_back({"mean_words.short_prompt", fixed(s.mean_words->short_prompt, 2)});
    rows.push_back({"mean_words.question", fixed(s.mean_words->question, 2)});
  }
  for (std::size_t i = 0; i < std::min(top, s.leading_bigrams.size()); ++i) {
    const auto& b = s.leading_bigrams[i];
    rows.push_back({"leading_bigram." + std::to_string(i + 1) + "." + b.bigram, fixed(b.share, 2)});
  }
  return rows;
}

inline std::vector<Row> rendering_rows(const std::vector<corpus::QuadRecord>& records,
                                       const std::vector<promptkit::PromptSetting>& settings,
                                       const std::string& kind, const std::string& only_id) {
  std::vector<Row> rows;
  for (auto setting : settings) {
    for (const auto& r : records) {
      if (!only_id.empty() && r.id != only_id) continue;
      std::string text;
      if (kind == "instruction") {
        text = promptkit::render_instruction(r, setting).text;
      } else {
        const auto side = kind == "segmented-target" ? promptkit::Side::Target : promptkit::Side::Source;
        text = promptkit::flatten(promptkit::render_segmented(r, setting, side));
      }
      rows.push_back({r.id, std::string(promptkit::to_string(setting)), std::move(text)});
    }
  }
  return rows;
}

}  // namespace cli

/// Runs one CLI invocation. Output goes to `out`, diagnostics to `err`.
inline int cli_dispatch(int argc, const char* const* argv, std::ostream& out = std::cout,
                        std::ostream& err = std::cerr) {
  CLI::App app{"Prompt-based question generation benchmark", "qgbench"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string format = "lines";
  auto add_format = [&](CLI::App* sub) {
    sub->add_option("--format", format, "Output format")
        ->check(CLI::IsMember({"csv", "md", "lines"}))
        ->capture_default_str();
  };
  std::string corpus_path;

  // validate
  auto* validate = app.add_subcommand("validate", "Check a corpus file record by record");
  validate->add_option("--corpus", corpus_path, "Corpus NDJSON file")->required();
  add_format(validate);

  // stats
  std::size_t top = 10;
  auto* stats = app.add_subcommand("stats", "Corpus statistics");
  stats->add_option("--corpus", corpus_path, "Corpus NDJSON file")->required();
  stats->add_option("--top", top, "Leading bigrams to list")->capture_default_str();
  add_format(stats);

  // split
  double ratio = 0.8;
  std::uint64_t seed = 0;
  std::string out_dir;
  auto* split = app.add_subcommand("split", "Seeded train/test partition");
  split->add_option("--corpus", corpus_path, "Corpus NDJSON file")->required();
  split->add_option("--ratio", ratio, "Train fraction")->capture_default_str();
  split->add_option("--seed", seed, "Shuffle seed")->required();
  split->add_option("--out-dir", out_dir, "Directory for train/test files")->required();

  // render
  std::string setting_arg = "all";
  std::string kind = "instruction";
  std::string only_id;
  auto* render = app.add_subcommand("render", "Print model inputs for each record");
  render->add_option("--corpus", corpus_path, "Corpus NDJSON file")->required();
  render->add_option("--setting", setting_arg, "long | short | none | all")->capture_default_str();
  render->add_option("--kind", kind, "Rendering kind")
      ->check(CLI::IsMember({"instruction", "segmented-source", "segmented-target"}))
      ->capture_default_str();
  render->add_option("--id", only_id, "Only this record");
  add_format(render);

  // generate
  std::string model = "mock";
  std::string config_path;
  std::string runs_dir = "runs";
  std::string input_kind = "instruction";
  std::optional<std::size_t> parallelism;
  std::string cache_dir;
  bool no_cache = false;
  std::optional<std::uint64_t> split_seed;
  auto* generate = app.add_subcommand("generate", "Generate questions for a corpus");
  generate->add_option("--corpus", corpus_path, "Records to generate for")->required();
  generate->add_option("--setting", setting_arg, "long | short | none | all")->capture_default_str();
  generate->add_option("--model", model, "'mock' or an endpoint model id")->capture_default_str();
  generate->add_option("--config", config_path, "Config file (endpoint, params)");
  generate->add_option("--runs-dir", runs_dir, "Where runs are written")->capture_default_str();
  generate->add_option("--input-kind", input_kind, "instruction | segmented")
      ->check(CLI::IsMember({"instruction", "segmented"}))
      ->capture_default_str();
  generate->add_option("--parallelism", parallelism, "Requests in flight");
  generate->add_option("--cache-dir", cache_dir, "Response cache directory");
  generate->add_flag("--no-cache", no_cache, "Disable the response cache");
  generate->add_option("--split-seed", split_seed, "Seed of the split the corpus came from");

  // score
  std::string run_dir;
  std::string embeddings_path;
  auto* score = app.add_subcommand("score", "Score a run against gold questions");
  score->add_option("--run", run_dir, "Run directory")->required();
  score->add_option("--corpus", corpus_path, "Gold corpus")->required();
  score->add_option("--embeddings", embeddings_path, "Token vector file for BERTScore");
  add_format(score);

  // kappa
  std::string ratings_path;
  auto* kappa = app.add_subcommand("kappa", "Fleiss' kappa per criterion");
  kappa->add_option("--ratings", ratings_path, "Ratings NDJSON file")->required();
  add_format(kappa);

  // report
  std::string sections_arg = "corpus,automatic,human,agreement";
  auto* report_cmd = app.add_subcommand("report", "Write the markdown report and CSV tables");
  report_cmd->add_option("--corpus", corpus_path, "Gold corpus")->required();
  report_cmd->add_option("--runs-dir", runs_dir, "Runs directory")->capture_default_str();
  report_cmd->add_option("--ratings", ratings_path, "Ratings NDJSON file");
  report_cmd->add_option("--out-dir", out_dir, "Output directory")->required();
  report_cmd->add_option("--sections", sections_arg, "Comma-separated sections")
      ->capture_default_str();

  // serve
  std::optional<int> port;
  auto* serve = app.add_subcommand("serve", "Run the rating service");
  serve->add_option("--config", config_path, "Config file")->required();
  serve->add_option("--port", port, "Override the configured port");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return static_cast<int>(ExitCode::Ok);
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return static_cast<int>(ExitCode::Ok);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return static_cast<int>(ExitCode::UsageError);
  }

  try {
    if (validate->parsed()) {
      const auto records = cli::load_corpus(corpus_path);
      std::vector<cli::Row> rows;
      std::size_t errors = 0;
      for (const auto& r : records) {
        for (const auto& issue : corpus::validate(r)) {
          const bool is_error = issue.severity == corpus::Severity::Error;
          errors += is_error ? 1 : 0;
          rows.push_back({r.id, is_error ? "error" : "warning", issue.code, issue.message});
        }
      }
      cli::emit(out, format, {"id", "severity", "code", "message"}, rows);
      err << records.size() << " records, " << errors << " error(s), " << rows.size() - errors
          << " warning(s)\n";
      return static_cast<int>(errors ? ExitCode::DomainError : ExitCode::Ok);
    }

    if (stats->parsed()) {
      const auto s = corpus::stats(cli::load_corpus(corpus_path));
      cli::emit(out, format, {"statistic", "value"}, cli::stats_rows(s, top));
      return 0;
    }

    if (split->parsed()) {
      const std::string data = io::read_file(corpus_path);
      const auto parts = corpus::split(corpus::parse_quads(data), {ratio, seed});
      const std::filesystem::path dir(out_dir);
      const std::string train = corpus::serialize(parts.train);
      const std::string test = corpus::serialize(parts.test);
      io::write_file_atomic(dir / "train.ndjson", train);
      io::write_file_atomic(dir / "test.ndjson", test);
      nlohmann::ordered_json m;
      m["corpus_digest"] = sha256_hex(data);
      m["ratio"] = ratio;
      m["seed"] = seed;
      m["n_train"] = parts.train.size();
      m["n_test"] = parts.test.size();
      m["files"] = {{"train", "train.ndjson"}, {"test", "test.ndjson"}};
      m["train_digest"] = sha256_hex(train);
      m["test_digest"] = sha256_hex(test);
      io::write_file_atomic(dir / "split.json", m.dump(2) + "\n");
      out << "train\t" << parts.train.size() << "\ntest\t" << parts.test.size() << '\n';
      return 0;
    }

    if (render->parsed()) {
      const auto rows = cli::rendering_rows(cli::load_corpus(corpus_path),
                                            cli::settings_from(setting_arg), kind, only_id);
      if (format == "lines") {
        for (const auto& r : rows) out << r[2] << '\n';
      } else {
        cli::emit(out, format, {"id", "setting", "text"}, rows);
      }
      return 0;
    }

    if (generate->parsed()) {
      Config cfg = config_path.empty() ? Config{} : load_config(config_path);
      if (parallelism) cfg.parallelism = *parallelism;
      if (!cache_dir.empty()) cfg.cache_dir = cache_dir;
      const std::string data = io::read_file(corpus_path);
      const auto records = corpus::parse_quads(data);

      std::unique_ptr<generation::GenerationAdapter> adapter;
      if (model == "mock") {
        adapter = std::make_unique<generation::MockAdapter>();
      } else {
        adapter = std::make_unique<generation::HttpAdapter>(model, cfg.endpoint);
      }
      std::unique_ptr<generation::ResultCache> cache;
      if (!no_cache) cache = std::make_unique<generation::ResultCache>(cfg.cache_dir);

      generation::BatchOptions opts;
      opts.parallelism = cfg.parallelism;
      opts.input_kind = generation::input_kind_from_string(input_kind);
      opts.generate.cache = cache.get();
      opts.generate.retry.max_retries = cfg.retries;
      opts.generate.retry.initial_backoff = cfg.backoff;
      const std::string digest = sha256_hex(data);
      for (auto setting : cli::settings_from(setting_arg)) {
        const auto run = generation::run_batch(*adapter, records, setting, cfg.params, opts);
        write_run(runs_dir, run, digest, split_seed);
        out << run.run_id << '\t' << run.ok_count() << '/' << run.results.size() << '\n';
      }
      return 0;
    }

    if (score->parsed()) {
      const auto stored = read_run(run_dir);
      const auto gold = scoring::gold_map(cli::load_corpus(corpus_path));
      std::optional<metrics::TokenVectorTable> table;
      if (!embeddings_path.empty()) table = metrics::TokenVectorTable::load(embeddings_path);
      const auto rep = scoring::evaluate_run(stored.run, gold, table ? &*table : nullptr);
      write_scores(stored.dir, rep);
      if (format == "csv") {
        out << scoring::to_csv(rep);
      } else {
        std::vector<cli::Row> rows;
        const auto vals = scoring::column_values(rep.corpus_means);
        for (std::size_t c = 0; c < vals.size(); ++c) {
          rows.push_back({scoring::metric_columns()[c], scoring::format_column(c, vals[c])});
        }
        rows.push_back({"n_scored", std::to_string(rep.n_scored)});
        rows.push_back({"n_failed", std::to_string(rep.n_failed)});
        cli::emit(out, format, {"metric", "value"}, rows);
      }
      return 0;
    }

    if (kappa->parsed()) {
      const auto rep = agreement::kappa_per_criterion(replay_ratings(ratings_path));
      std::vector<cli::Row> rows;
      for (const auto& [c, k] : rep.kappa) rows.push_back({std::string(agreement::to_string(c)), cli::fixed(k, 4)});
      cli::emit(out, format, {"criterion", "kappa"}, rows);
      err << rep.n_raters << " raters, " << rep.n_items << " items\n";
      return 0;
    }

    if (report_cmd->parsed()) {
      report::ReportInputs in;
      std::set<std::string> wanted;
      std::stringstream ss(sections_arg);
      for (std::string s; std::getline(ss, s, ',');) {
        if (s != "corpus" && s != "automatic" && s != "human" && s != "agreement") {
          err << "error: unknown section '" << s << "'\n\n" << report_cmd->help();
          return static_cast<int>(ExitCode::UsageError);
        }
        wanted.insert(s);
      }
      in.sections = {wanted.count("corpus") > 0, wanted.count("automatic") > 0,
                     wanted.count("human") > 0, wanted.count("agreement") > 0};

      const auto records = cli::load_corpus(corpus_path);
      in.stats = corpus::stats(records);
      const auto gold = scoring::gold_map(records);
      std::map<std::string, agreement::RunInfo> run_info;
      for (const auto& s : read_runs(runs_dir)) {
        run_info[s.manifest.run_id] = {s.manifest.model_id, s.manifest.setting};
        auto scores = read_scores(s.dir);
        in.scores.push_back(scores ? *scores : scoring::evaluate_run(s.run, gold));
      }
      if (!ratings_path.empty()) {
        const auto ratings = replay_ratings(ratings_path);
        in.ratings = agreement::aggregate_ratings(ratings, run_info);
        try {
          in.agreement = agreement::kappa_per_criterion(ratings);
        } catch (const Error& e) {
          err << "note: agreement omitted: " << e.what() << '\n';
        }
      }
      const auto docs = report::render_report(in);
      const std::filesystem::path dir(out_dir);
      io::write_file_atomic(dir / "report.md", docs.markdown);
      for (const auto& [name, content] : docs.csv) io::write_file_atomic(dir / name, content);
      out << (dir / "report.md").string() << '\n';
      for (const auto& [name, _] : docs.csv) out << (dir / name).string() << '\n';
      return 0;
    }

    if (serve->parsed()) {
      Config cfg = load_config(config_path);
      if (port) cfg.port = *port;
      Service service(cfg);
      err << "serving " << service.targets().size() << " targets on " << cfg.host << ':' << cfg.port
          << '\n';
      service.serve_forever();
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << e.code() << ": " << e.what() << '\n';
    return static_cast<int>(ExitCode::DomainError);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::DomainError);
  }
  err << app.help();
  return static_cast<int>(ExitCode::UsageError);
}

}  // namespace qgbench::harness
