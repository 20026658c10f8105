#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "poal/closure.hpp"
#include "poal/dataset.hpp"
#include "poal/logistic.hpp"
#include "poal/strategy.hpp"

namespace poal {

struct ServiceOptions {
  std::filesystem::path data_dir;  // one sub-directory per dataset
  std::filesystem::path log_dir;   // <session id>.jsonl
};

enum class SessionStatus { Active, Exhausted, Conflicted };
std::string_view to_string(SessionStatus s);

struct ServiceReply {
  int status = 200;
  nlohmann::json body;
};

/// Label events of one session, appended to a JSON-lines file with an fsync
/// per batch.
class LabelLog {
 public:
  LabelLog() = default;
  explicit LabelLog(std::filesystem::path path);
  ~LabelLog();
  LabelLog(const LabelLog&) = delete;
  LabelLog& operator=(const LabelLog&) = delete;

  const std::filesystem::path& path() const { return path_; }
  void append(const std::vector<nlohmann::json>& events);

 private:
  std::filesystem::path path_;
  int fd_ = -1;
};

/// A labeling session driven by a human oracle. Not thread-safe on its own;
/// the service serializes access per session.
class Session {
 public:
  struct Settings {
    std::string dataset;
    Strategy strategy;
    std::size_t budget = 0;
    std::uint64_t rng_seed = 1;
    LogisticParams logistic;
    std::size_t committee_size = 3;
  };

  Session(std::string id, std::shared_ptr<const Pool> pool, Settings settings);

  const std::string& id() const { return id_; }
  const Settings& settings() const { return settings_; }
  SessionStatus status() const;
  const OrderClosure& closure() const { return closure_; }
  std::size_t queries_used() const { return queries_used_; }
  std::size_t remaining() const { return du_.size(); }
  std::size_t labeled_total() const;
  std::size_t deduced_total() const { return labeled_total() - queries_used_ - seeds_; }

  /// Applies a seed label; returns the new pairs (empty if already known).
  ClosureDelta add_seed(Pair p, Label y);
  /// The pair currently served; selected on first call and kept until labeled.
  std::optional<Pair> next();
  std::optional<Pair> served() const { return served_; }
  /// Applies a human label for the served pair. Returns the conflict instead
  /// of mutating when the label contradicts the closure.
  std::variant<ClosureDelta, Conflict> label(Pair p, Label y);
  /// Existing label of p that contradicts y, if any.
  std::optional<Conflict> contradicts(Pair p, Label y) const;
  void mark_conflicted() { conflicted_ = true; }

  nlohmann::json stats() const;

 private:
  void apply(const ClosureDelta& d);
  LabelCosts selection_costs() const;

  std::string id_;
  std::shared_ptr<const Pool> pool_;
  Settings settings_;
  OrderClosure closure_;
  std::vector<std::int8_t> labels_;  // per pool pair
  std::size_t plain_labels_ = 0;     // sessions without reasoning
  std::vector<Pair> du_;
  std::vector<char> in_domain_;
  std::optional<Pair> served_;
  std::size_t queries_used_ = 0;
  std::size_t seeds_ = 0;
  std::array<std::size_t, kRuleCount> per_rule_{};
  bool conflicted_ = false;
};

/// JSON front for sessions; the HTTP layer only routes to these methods.
class OracleService {
 public:
  explicit OracleService(ServiceOptions opt);

  ServiceReply create_session(const nlohmann::json& request);
  ServiceReply next_query(const std::string& id);
  ServiceReply submit_label(const std::string& id, const nlohmann::json& request);
  ServiceReply stats(const std::string& id);
  /// Raw JSON-lines text of the session log, or nullopt for an unknown id.
  std::optional<std::string> log_text(const std::string& id);

  /// Replays every log in log_dir; returns the number of sessions restored.
  std::size_t resume_all();
  std::vector<std::string> session_ids() const;
  /// Pool of a dataset by name (cached); throws std::invalid_argument if unknown.
  std::shared_ptr<const Pool> dataset(const std::string& name);
  std::string display_name(const std::string& dataset, NodeId v);

 private:
  struct Entry {
    std::unique_ptr<Session> session;
    std::unique_ptr<LabelLog> log;
    std::mutex mu;
  };
  Entry* find(const std::string& id);
  std::string fresh_id();

  ServiceOptions opt_;
  mutable std::mutex mu_;
  std::map<std::string, std::unique_ptr<Entry>> sessions_;
  std::map<std::string, std::shared_ptr<const Pool>> pools_;
  std::map<std::string, std::map<NodeId, std::string>> names_;
  std::uint64_t id_counter_ = 0;
};

/// Rebuilds a session from its log. Throws std::runtime_error when the log is
/// malformed or does not fit the dataset.
std::unique_ptr<Session> replay(const std::filesystem::path& log_path, std::shared_ptr<const Pool> pool,
                                const std::string& id);
/// Dataset name recorded in a log's header line.
std::string log_dataset(const std::filesystem::path& log_path);

/// HTTP binding of an OracleService.
class HttpServer {
 public:
  HttpServer(OracleService& service, std::optional<std::filesystem::path> ui_dir = std::nullopt);
  ~HttpServer();
  /// Binds (port 0 picks a free one) and serves on a background thread.
  int start(const std::string& host, int port);
  /// Binds and serves on the calling thread.
  bool listen(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace poal
