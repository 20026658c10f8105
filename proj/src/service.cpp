#include "poal/service.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <regex>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "poal/csv.hpp"
#include "poal/ground_truth.hpp"
#include "poal/random.hpp"
#include "poal/tree.hpp"

namespace poal {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string_view to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::Active: return "active";
    case SessionStatus::Exhausted: return "exhausted";
    case SessionStatus::Conflicted: return "conflicted";
  }
  return "?";
}

namespace {

double now_seconds() {
  using namespace std::chrono;
  return duration<double>(system_clock::now().time_since_epoch()).count();
}

json pair_json(Pair p) { return {{"src", p.src}, {"dst", p.dst}}; }

json conflict_json(const Conflict& c) {
  return {{"trigger", {{"src", c.trigger.src}, {"dst", c.trigger.dst}, {"label", to_int(c.trigger_label)}}},
          {"pair", pair_json(c.pair)},
          {"existing_label", to_int(c.existing)},
          {"existing_source", std::string(to_string(c.existing_source))},
          {"rule", std::string(to_string(c.rule))},
          {"message", ConflictingLabel(c).what()}};
}

json error(const std::string& msg) { return {{"error", msg}}; }

}  // namespace

// ---------------------------------------------------------------------------
// LabelLog

LabelLog::LabelLog(fs::path path) : path_(std::move(path)) {
  fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) throw std::runtime_error("cannot open log " + path_.string() + ": " + std::strerror(errno));
}

LabelLog::~LabelLog() {
  if (fd_ >= 0) ::close(fd_);
}

void LabelLog::append(const std::vector<json>& events) {
  std::string buf;
  for (const auto& e : events) buf += e.dump() + '\n';
  const char* p = buf.data();
  std::size_t left = buf.size();
  while (left > 0) {
    const ssize_t w = ::write(fd_, p, left);
    if (w < 0) {
      if (errno == EINTR) continue;
      throw std::runtime_error("log write failed: " + std::string(std::strerror(errno)));
    }
    p += w;
    left -= static_cast<std::size_t>(w);
  }
  if (::fsync(fd_) != 0) throw std::runtime_error("log fsync failed: " + std::string(std::strerror(errno)));
}

// ---------------------------------------------------------------------------
// Session

Session::Session(std::string id, std::shared_ptr<const Pool> pool, Settings settings)
    : id_(std::move(id)), pool_(std::move(pool)), settings_(std::move(settings)), labels_(pool_->size(), 0),
      du_(pool_->pairs()), in_domain_(pool_->size(), 1) {
  if (settings_.strategy.reason_on_update) closure_ = OrderClosure(pool_->num_nodes());
}

SessionStatus Session::status() const {
  if (conflicted_) return SessionStatus::Conflicted;
  if (du_.empty() || queries_used_ >= settings_.budget) return SessionStatus::Exhausted;
  return SessionStatus::Active;
}

std::size_t Session::labeled_total() const {
  return settings_.strategy.reason_on_update ? closure_.size() : plain_labels_;
}

void Session::apply(const ClosureDelta& d) {
  for (const DeltaEntry& e : d.entries) {
    if (e.source.is_deduced()) ++per_rule_[static_cast<std::size_t>(e.source.rule)];
    const std::int64_t i = pool_->index_of(e.pair);
    if (i >= 0) labels_[static_cast<std::size_t>(i)] = static_cast<std::int8_t>(to_int(e.label));
  }
  std::erase_if(du_, [&](const Pair& p) { return labels_[static_cast<std::size_t>(pool_->index_of(p))] != 0; });
  if (served_ && labels_[static_cast<std::size_t>(pool_->index_of(*served_))] != 0) served_.reset();
}

ClosureDelta Session::add_seed(Pair p, Label y) {
  ClosureDelta d;
  if (settings_.strategy.reason_on_update) {
    if (closure_.label(p) == y) return d;
    d = closure_.insert(p, y, LabelSource::seed());
  } else {
    const std::int64_t i = pool_->index_of(p);
    if (i < 0) throw std::invalid_argument("seed pair is not in the pool");
    const auto old = labels_[static_cast<std::size_t>(i)];
    if (old != 0 && old != to_int(y))
      throw ConflictingLabel({p, y, p, label_from_int(old), LabelSource::seed(), Rule::N});
    if (old != 0) return d;
    d.entries.push_back({p, y, LabelSource::seed()});
    ++plain_labels_;
  }
  ++seeds_;
  apply(d);
  return d;
}

std::optional<Conflict> Session::contradicts(Pair p, Label y) const {
  if (settings_.strategy.reason_on_update) {
    const auto old = closure_.label(p);
    if (old && *old != y)
      return Conflict{p, y, p, *old, *closure_.source(p), y == Label::Positive ? Rule::N : Rule::NPrime};
    return std::nullopt;
  }
  const std::int64_t i = pool_->index_of(p);
  if (i >= 0 && labels_[static_cast<std::size_t>(i)] != 0 && labels_[static_cast<std::size_t>(i)] != to_int(y))
    return Conflict{p, y, p, flip(y), LabelSource::queried(), Rule::N};
  return std::nullopt;
}

LabelCosts Session::selection_costs() const {
  const Strategy& s = settings_.strategy;
  if (!s.needs_logistic() && !s.needs_committee()) return unit_costs(pool_->size());
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < pool_->size(); ++i)
    if (labels_[i] != 0) rows.push_back(i);
  if (rows.empty()) {
    // Nothing to learn from yet: every posterior is one half, every vote split evenly.
    const double c = s.needs_logistic() ? 0.5 : 0.0;
    return {std::vector<double>(pool_->size(), c), std::vector<double>(pool_->size(), c)};
  }
  Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(pool_->dim()));
  std::vector<Label> y;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    X.row(static_cast<Eigen::Index>(k)) = pool_->feature(rows[k]);
    y.push_back(label_from_int(labels_[rows[k]]));
  }
  if (s.needs_logistic()) return lc_costs(fit_logistic<double>(X, y, settings_.logistic), *pool_);
  const auto c = fit_committee(X, y, settings_.committee_size,
                               derive_seed(settings_.rng_seed, streams::kCommittee + queries_used_));
  return qbc_costs(c, *pool_);
}

std::optional<Pair> Session::next() {
  if (status() != SessionStatus::Active) return std::nullopt;
  if (served_) return served_;
  const LabelCosts costs = selection_costs();
  const ScoringContext ctx{pool_.get(), &in_domain_, settings_.strategy.reason_on_update ? &closure_ : nullptr,
                           &costs};
  std::mt19937_64 rng(derive_seed(settings_.rng_seed, streams::kSelection + queries_used_));
  served_ = select(settings_.strategy, du_, ctx, rng);
  return served_;
}

std::variant<ClosureDelta, Conflict> Session::label(Pair p, Label y) {
  if (auto c = contradicts(p, y)) return *c;
  ClosureDelta d;
  if (settings_.strategy.reason_on_update) {
    try {
      d = closure_.insert(p, y, LabelSource::queried());
    } catch (const ConflictingLabel& e) {
      return e.conflict();
    }
  } else {
    if (pool_->index_of(p) < 0) throw std::invalid_argument("pair is not in the pool");
    d.entries.push_back({p, y, LabelSource::queried()});
    ++plain_labels_;
  }
  ++queries_used_;
  served_.reset();
  apply(d);
  return d;
}

json Session::stats() const {
  json per_rule = json::object();
  for (std::size_t r = 0; r < kRuleCount; ++r) per_rule[std::string(to_string(static_cast<Rule>(r)))] = per_rule_[r];
  json j{{"id", id_},
         {"dataset", settings_.dataset},
         {"strategy", settings_.strategy.name()},
         {"status", std::string(to_string(status()))},
         {"queries_used", queries_used_},
         {"budget", settings_.budget},
         {"labeled_total", labeled_total()},
         {"deduced_total", deduced_total()},
         {"seeds", seeds_},
         {"remaining", du_.size()},
         {"per_rule", per_rule}};
  if (pool_->has_truth()) {
    const QueryBounds b = query_bounds(pool_->truth());
    j["bounds"] = {{"lower", b.lower}, {"upper", b.upper}};
  }
  return j;
}

// ---------------------------------------------------------------------------
// Replay

namespace {

json read_header(std::istream& in, const fs::path& path) {
  std::string line;
  if (!std::getline(in, line) || line.empty()) throw std::runtime_error(path.string() + ": empty log");
  json h = json::parse(line, nullptr, false);
  if (h.is_discarded() || h.value("event", "") != "session")
    throw std::runtime_error(path.string() + ":1: expected a session header");
  return h;
}

}  // namespace

std::string log_dataset(const fs::path& log_path) {
  std::ifstream in(log_path);
  if (!in) throw std::runtime_error("cannot open " + log_path.string());
  return read_header(in, log_path).at("dataset").get<std::string>();
}

std::unique_ptr<Session> replay(const fs::path& log_path, std::shared_ptr<const Pool> pool, const std::string& id) {
  std::ifstream in(log_path);
  if (!in) throw std::runtime_error("cannot open " + log_path.string());
  const json h = read_header(in, log_path);
  if (h.at("num_nodes").get<std::size_t>() != pool->num_nodes() || h.at("pool_size").get<std::size_t>() != pool->size())
    throw std::runtime_error(log_path.string() + ": log does not match the dataset");
  Session::Settings st;
  st.dataset = h.at("dataset").get<std::string>();
  st.strategy = parse_strategy(h.at("strategy").get<std::string>(), h.value("no_reasoning", false));
  st.budget = h.at("budget").get<std::size_t>();
  st.rng_seed = h.value("rng_seed", std::uint64_t{1});
  auto s = std::make_unique<Session>(id, pool, st);

  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const json e = json::parse(line, nullptr, false);
    auto fail = [&](const std::string& why) {
      throw std::runtime_error(log_path.string() + ":" + std::to_string(line_no) + ": " + why);
    };
    if (e.is_discarded()) fail("malformed JSON");
    const std::string kind = e.value("event", "");
    if (kind == "deduced") continue;
    if (kind == "conflict") {
      s->mark_conflicted();
      continue;
    }
    if (kind != "label") fail("unknown event '" + kind + "'");
    const Pair p{e.at("src").get<NodeId>(), e.at("dst").get<NodeId>()};
    if (p.src >= pool->num_nodes() || p.dst >= pool->num_nodes() || p.reflexive()) fail("pair outside the dataset");
    const Label y = label_from_int(e.at("label").get<int>());
    if (e.value("source", "") == "seed") {
      s->add_seed(p, y);
    } else {
      if (pool->index_of(p) < 0) fail("labeled pair is not in the pool");
      if (std::holds_alternative<Conflict>(s->label(p, y))) fail("label conflicts with the replayed closure");
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// OracleService

OracleService::OracleService(ServiceOptions opt) : opt_(std::move(opt)) {
  if (!opt_.log_dir.empty()) fs::create_directories(opt_.log_dir);
}

std::shared_ptr<const Pool> OracleService::dataset(const std::string& name) {
  static const std::regex ok("[A-Za-z0-9_.-]+");
  if (!std::regex_match(name, ok) || name == "." || name == "..")
    throw std::invalid_argument("invalid dataset name '" + name + "'");
  std::lock_guard lock(mu_);
  if (auto it = pools_.find(name); it != pools_.end()) return it->second;
  const fs::path dir = opt_.data_dir / name;
  if (!fs::is_directory(dir)) throw std::invalid_argument("unknown dataset '" + name + "'");
  auto pool = std::make_shared<const Pool>(load_pool_dir(dir));
  std::map<NodeId, std::string> names;
  if (fs::exists(dir / "names.csv")) {
    std::ifstream in(dir / "names.csv");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto f = csv::split(line);
      if (f.size() < 2 || !csv::is_integer(f[0])) continue;  // header or blank
      names[csv::parse_node(f[0], dir / "names.csv", line_no)] = std::string(f[1]);
    }
  }
  names_[name] = std::move(names);
  pools_[name] = pool;
  return pool;
}

std::string OracleService::display_name(const std::string& ds, NodeId v) {
  std::lock_guard lock(mu_);
  const auto& m = names_[ds];
  if (auto it = m.find(v); it != m.end()) return it->second;
  return std::to_string(v);
}

std::string OracleService::fresh_id() {
  static thread_local std::mt19937_64 rng(std::random_device{}());
  std::lock_guard lock(mu_);
  while (true) {
    std::ostringstream os;
    os << std::hex << std::setw(12) << std::setfill('0') << ((rng() ^ ++id_counter_) & 0xffffffffffffULL);
    const std::string id = os.str();
    if (!sessions_.count(id) && (opt_.log_dir.empty() || !fs::exists(opt_.log_dir / (id + ".jsonl")))) return id;
  }
}

OracleService::Entry* OracleService::find(const std::string& id) {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second.get();
}

std::vector<std::string> OracleService::session_ids() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [id, e] : sessions_) out.push_back(id);
  return out;
}

ServiceReply OracleService::create_session(const json& req) {
  if (!req.is_object()) return {400, error("request body must be a JSON object")};
  if (!req.contains("dataset") || !req["dataset"].is_string()) return {400, error("missing 'dataset'")};
  const std::string ds = req["dataset"].get<std::string>();
  std::shared_ptr<const Pool> pool;
  try {
    pool = dataset(ds);
  } catch (const std::invalid_argument& e) {
    return {400, error(e.what())};
  } catch (const std::exception& e) {
    return {400, error("dataset '" + ds + "' failed to load: " + e.what())};
  }

  Session::Settings st;
  st.dataset = ds;
  try {
    st.strategy = parse_strategy(req.value("strategy", std::string("lc-r+")), req.value("no_reasoning", false));
    st.budget = req.value("budget", pool->size());
    st.rng_seed = req.value("rng_seed", std::uint64_t{1});
  } catch (const std::exception& e) {
    return {400, error(e.what())};
  }

  // Seed labels: explicit pairs, and/or a number drawn with the ground truth.
  std::vector<LabeledPair> seeds;
  try {
    if (req.contains("seed_labels"))
      for (const auto& s : req.at("seed_labels")) {
        const Pair p{s.at("src").get<NodeId>(), s.at("dst").get<NodeId>()};
        if (p.src >= pool->num_nodes() || p.dst >= pool->num_nodes() || p.reflexive())
          return {400, error("seed pair outside the dataset")};
        seeds.push_back({p, label_from_int(s.at("label").get<int>())});
      }
    if (const auto n = req.value("seeds", std::size_t{0}); n > 0) {
      if (!pool->has_truth()) return {400, error("dataset has no ground truth to draw seeds from")};
      for (const Pair& p : split(*pool, 1.0, n, derive_seed(st.rng_seed, streams::kSplit)).seeds)
        seeds.push_back({p, oracle_label(pool->truth(), p)});
    }
  } catch (const std::exception& e) {
    return {400, error(std::string("bad seeds: ") + e.what())};
  }

  const std::string id = fresh_id();
  auto entry = std::make_unique<Entry>();
  entry->session = std::make_unique<Session>(id, pool, st);
  std::vector<json> events;
  events.push_back({{"event", "session"},
                    {"id", id},
                    {"dataset", ds},
                    {"strategy", cli_name(st.strategy.kind)},
                    {"no_reasoning", !st.strategy.reason_on_update},
                    {"budget", st.budget},
                    {"rng_seed", st.rng_seed},
                    {"num_nodes", pool->num_nodes()},
                    {"pool_size", pool->size()},
                    {"timestamp", now_seconds()}});
  for (const auto& s : seeds) {
    ClosureDelta d;
    try {
      d = entry->session->add_seed(s.pair, s.label);
    } catch (const ConflictingLabel& e) {
      return {400, {{"error", "seed labels are inconsistent"}, {"conflict", conflict_json(e.conflict())}}};
    }
    events.push_back({{"event", "label"}, {"source", "seed"}, {"src", s.pair.src}, {"dst", s.pair.dst},
                      {"label", to_int(s.label)}, {"query_index", 0}, {"timestamp", now_seconds()}});
    for (const auto& e : d.entries)
      if (e.source.is_deduced())
        events.push_back({{"event", "deduced"}, {"src", e.pair.src}, {"dst", e.pair.dst},
                          {"label", to_int(e.label)}, {"rule", std::string(to_string(e.source.rule))},
                          {"query_index", 0}});
  }
  if (!opt_.log_dir.empty()) {
    entry->log = std::make_unique<LabelLog>(opt_.log_dir / (id + ".jsonl"));
    entry->log->append(events);
  }
  json body{{"id", id}, {"stats", entry->session->stats()}};
  std::lock_guard lock(mu_);
  sessions_[id] = std::move(entry);
  return {200, body};
}

ServiceReply OracleService::next_query(const std::string& id) {
  Entry* e = find(id);
  if (!e) return {404, error("unknown session '" + id + "'")};
  std::lock_guard lock(e->mu);
  Session& s = *e->session;
  if (s.status() == SessionStatus::Conflicted)
    return {409, {{"error", "session is conflicted"}, {"status", "conflicted"}}};
  const auto p = s.next();
  if (!p) return {200, {{"exhausted", true}, {"status", std::string(to_string(s.status()))}}};
  const std::string& ds = s.settings().dataset;
  return {200,
          {{"src", p->src},
           {"dst", p->dst},
           {"src_name", display_name(ds, p->src)},
           {"dst_name", display_name(ds, p->dst)},
           {"query_index", s.queries_used() + 1},
           {"budget_remaining", s.settings().budget - s.queries_used()},
           {"exhausted", false}}};
}

ServiceReply OracleService::submit_label(const std::string& id, const json& req) {
  Entry* e = find(id);
  if (!e) return {404, error("unknown session '" + id + "'")};
  Pair p;
  Label y;
  try {
    p = {req.at("src").get<NodeId>(), req.at("dst").get<NodeId>()};
    const int v = req.at("label").get<int>();
    if (v != 1 && v != -1) return {400, error("label must be 1 or -1")};
    y = label_from_int(v);
  } catch (const std::exception&) {
    return {400, error("expected {src, dst, label}")};
  }

  std::lock_guard lock(e->mu);
  Session& s = *e->session;
  if (s.status() == SessionStatus::Conflicted)
    return {409, {{"error", "session is conflicted"}, {"status", "conflicted"}}};
  const std::size_t qi = s.queries_used() + 1;

  // A label that contradicts the closure is surfaced as a conflict even when
  // it arrives out of turn: it means the oracle is inconsistent.
  std::optional<Conflict> conflict = s.contradicts(p, y);
  if (!conflict) {
    if (s.status() != SessionStatus::Active) return {409, error("session is exhausted")};
    if (!s.served() || *s.served() != p) {
      json body = error("stale pair: not the currently served query");
      if (s.served()) body["served"] = pair_json(*s.served());
      return {409, body};
    }
    auto result = s.label(p, y);
    if (std::holds_alternative<Conflict>(result)) {
      conflict = std::get<Conflict>(result);
    } else {
      const ClosureDelta& d = std::get<ClosureDelta>(result);
      std::vector<json> events;
      events.push_back({{"event", "label"}, {"source", "human"}, {"src", p.src}, {"dst", p.dst},
                        {"label", to_int(y)}, {"query_index", qi}, {"timestamp", now_seconds()}});
      json deduced = json::array();
      for (const auto& x : d.entries) {
        if (!x.source.is_deduced()) continue;
        json ev{{"event", "deduced"}, {"src", x.pair.src}, {"dst", x.pair.dst}, {"label", to_int(x.label)},
                {"rule", std::string(to_string(x.source.rule))}, {"query_index", qi}};
        events.push_back(ev);
        ev.erase("event");
        deduced.push_back(std::move(ev));
      }
      if (e->log) e->log->append(events);
      return {200, {{"accepted", true}, {"query_index", qi}, {"deduced", deduced}, {"stats", s.stats()}}};
    }
  }

  s.mark_conflicted();
  const json detail = conflict_json(*conflict);
  if (e->log)
    e->log->append({{{"event", "conflict"}, {"src", p.src}, {"dst", p.dst}, {"label", to_int(y)},
                     {"query_index", qi}, {"detail", detail}, {"timestamp", now_seconds()}}});
  return {409, {{"error", "conflicting label"}, {"conflict", detail}, {"status", "conflicted"}}};
}

ServiceReply OracleService::stats(const std::string& id) {
  Entry* e = find(id);
  if (!e) return {404, error("unknown session '" + id + "'")};
  std::lock_guard lock(e->mu);
  return {200, e->session->stats()};
}

std::optional<std::string> OracleService::log_text(const std::string& id) {
  Entry* e = find(id);
  if (!e) return std::nullopt;
  std::lock_guard lock(e->mu);
  if (!e->log) return std::string();
  std::ifstream in(e->log->path());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

std::size_t OracleService::resume_all() {
  if (opt_.log_dir.empty() || !fs::is_directory(opt_.log_dir)) return 0;
  std::vector<fs::path> logs;
  for (const auto& f : fs::directory_iterator(opt_.log_dir))
    if (f.path().extension() == ".jsonl") logs.push_back(f.path());
  std::sort(logs.begin(), logs.end());
  std::size_t restored = 0;
  for (const fs::path& path : logs) {
    const std::string id = path.stem().string();
    try {
      auto entry = std::make_unique<Entry>();
      entry->session = replay(path, dataset(log_dataset(path)), id);
      entry->log = std::make_unique<LabelLog>(path);
      std::lock_guard lock(mu_);
      sessions_[id] = std::move(entry);
      ++restored;
    } catch (const std::exception& ex) {
      std::cerr << "skipping log " << path << ": " << ex.what() << '\n';
    }
  }
  return restored;
}

// ---------------------------------------------------------------------------
// HTTP

struct HttpServer::Impl {
  OracleService& svc;
  httplib::Server server;
  std::thread thread;
};

namespace {

void reply(httplib::Response& res, const ServiceReply& r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

}  // namespace

HttpServer::HttpServer(OracleService& service, std::optional<fs::path> ui_dir)
    : impl_(new Impl{service, {}, {}}) {
  auto& srv = impl_->server;
  OracleService& svc = service;

  srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string msg = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      msg = e.what();
    } catch (...) {
    }
    reply(res, {500, error(msg)});
  });

  srv.Post("/api/sessions", [&svc](const httplib::Request& req, httplib::Response& res) {
    const json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded()) return reply(res, {400, error("malformed JSON")});
    reply(res, svc.create_session(body));
  });
  srv.Get(R"(/api/sessions/([^/]+)/next)", [&svc](const httplib::Request& req, httplib::Response& res) {
    reply(res, svc.next_query(req.matches[1]));
  });
  srv.Post(R"(/api/sessions/([^/]+)/labels)", [&svc](const httplib::Request& req, httplib::Response& res) {
    const json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded()) return reply(res, {400, error("malformed JSON")});
    reply(res, svc.submit_label(req.matches[1], body));
  });
  srv.Get(R"(/api/sessions/([^/]+)/stats)", [&svc](const httplib::Request& req, httplib::Response& res) {
    reply(res, svc.stats(req.matches[1]));
  });
  srv.Get(R"(/api/sessions/([^/]+)/log)", [&svc](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    const auto text = svc.log_text(id);
    if (!text) return reply(res, {404, error("unknown session '" + id + "'")});
    res.set_header("Content-Disposition", "attachment; filename=\"" + id + ".jsonl\"");
    res.set_content(*text, "application/x-ndjson");
  });
  if (ui_dir && !srv.set_mount_point("/", ui_dir->string()))
    throw std::invalid_argument("UI directory not found: " + ui_dir->string());
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
  auto& srv = impl_->server;
  const int bound = port == 0 ? srv.bind_to_any_port(host) : (srv.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([&srv] { srv.listen_after_bind(); });
  srv.wait_until_ready();
  return bound;
}

bool HttpServer::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

void HttpServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace poal
