#pragma once

// Append-only rating log. Each accepted rating is one JSON line, written
// and fsync'ed by a single appender before append() returns. Readers get
// immutable snapshots.

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <filesystem>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qgbench/agreement.hpp"
#include "qgbench/error.hpp"
#include "qgbench/io.hpp"

namespace qgbench::harness {

namespace fs = std::filesystem;

/// Replays a log. A final line without its newline is the remnant of an
/// interrupted write that was never acknowledged, and is dropped.
inline std::vector<agreement::RatingRecord> replay_ratings(const fs::path& path) {
  std::vector<agreement::RatingRecord> out;
  std::error_code ec;
  if (!fs::exists(path, ec)) return out;
  const std::string data = io::read_file(path);
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < data.size()) {
    const auto end = data.find('\n', start);
    ++line_no;
    if (end == std::string::npos) break;  // torn tail
    const std::string_view line(data.data() + start, end - start);
    start = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      out.push_back(agreement::rating_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw MalformedLine(line_no, e.what());
    }
  }
  return out;
}

class RatingStore {
 public:
  using Snapshot = std::shared_ptr<const std::vector<agreement::RatingRecord>>;

  explicit RatingStore(fs::path path) : path_(std::move(path)) {
    if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
    auto records = replay_ratings(path_);
    truncate_torn_tail();
    snapshot_ = std::make_shared<const std::vector<agreement::RatingRecord>>(std::move(records));
    open_log();
  }

  ~RatingStore() {
    if (fd_ >= 0) ::close(fd_);
  }

  RatingStore(const RatingStore&) = delete;
  RatingStore& operator=(const RatingStore&) = delete;

  /// Durable on return: the line has been written and fsync'ed.
  void append(const agreement::RatingRecord& r) {
    const std::string line = agreement::to_json(r).dump() + "\n";
    std::lock_guard lock(write_mutex_);
    write_all(line);
    if (::fsync(fd_) != 0) throw IoError("fsync " + path_.string() + ": " + std::strerror(errno));
    auto next = std::make_shared<std::vector<agreement::RatingRecord>>(*snapshot());
    next->push_back(r);
    std::lock_guard slock(snapshot_mutex_);
    snapshot_ = std::move(next);
  }

  Snapshot snapshot() const {
    std::lock_guard lock(snapshot_mutex_);
    return snapshot_;
  }

  /// Rewrites the log with latest-wins records and swaps it in atomically.
  void compact() {
    std::lock_guard lock(write_mutex_);
    auto latest = agreement::latest_wins(*snapshot());
    std::string content;
    for (const auto& r : latest) content += agreement::to_json(r).dump() + "\n";
    io::write_file_atomic(path_, content);
    ::close(fd_);
    open_log();
    auto next = std::make_shared<const std::vector<agreement::RatingRecord>>(std::move(latest));
    std::lock_guard slock(snapshot_mutex_);
    snapshot_ = std::move(next);
  }

  const fs::path& path() const noexcept { return path_; }

 private:
  void open_log() {
    fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) throw IoError("cannot open " + path_.string() + ": " + std::strerror(errno));
    io::fsync_path(path_.has_parent_path() ? path_.parent_path() : fs::path("."));
  }

  void truncate_torn_tail() {
    std::error_code ec;
    if (!fs::exists(path_, ec)) return;
    const std::string data = io::read_file(path_);
    if (data.empty() || data.back() == '\n') return;
    const auto keep = data.rfind('\n');
    fs::resize_file(path_, keep == std::string::npos ? 0 : keep + 1);
  }

  void write_all(std::string_view bytes) {
    while (!bytes.empty()) {
      const auto n = ::write(fd_, bytes.data(), bytes.size());
      if (n < 0) {
        if (errno == EINTR) continue;
        throw IoError("write " + path_.string() + ": " + std::strerror(errno));
      }
      bytes.remove_prefix(static_cast<std::size_t>(n));
    }
  }

  fs::path path_;
  int fd_ = -1;
  std::mutex write_mutex_;
  mutable std::mutex snapshot_mutex_;
  Snapshot snapshot_;
};

}  // namespace qgbench::harness
