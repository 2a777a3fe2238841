#pragma once

// The single stateful write path. All creates/updates/deletes land here, in a
// serialized log, and full dumps flow out to the dump store — where they double
// as backups and as bake inputs.

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "imagebake/clock.hpp"
#include "imagebake/dump.hpp"
#include "imagebake/errors.hpp"

namespace imagebake {

enum class WriteKind { Insert, Update, Delete };

inline const char* write_kind_name(WriteKind k) {
  switch (k) {
    case WriteKind::Insert: return "insert";
    case WriteKind::Update: return "update";
    case WriteKind::Delete: return "delete";
  }
  return "?";
}

struct WriteStatement {
  WriteKind kind = WriteKind::Insert;
  std::string table;
  Row row;                                             // INSERT
  Value key;                                           // UPDATE / DELETE
  std::vector<std::pair<std::string, Value>> assignments;  // UPDATE

  bool operator==(const WriteStatement&) const = default;
};

struct Generation {
  uint64_t number = 0;
  Digest digest;
  Tick created_at = 0;

  bool operator==(const Generation&) const = default;
};

namespace detail {

inline nlohmann::json value_to_json(const Value& v) {
  return {{"type", column_type_name(v.kind())}, {"repr", format_literal(v)}};
}

inline Value value_from_json(const nlohmann::json& j) {
  const std::string repr = j.at("repr").get<std::string>();
  DumpParser p(repr);
  auto [value, tok] = p.parse_literal();
  (void)tok;
  return value;
}

}  // namespace detail

inline nlohmann::json write_statement_to_json(const WriteStatement& w) {
  nlohmann::json j{{"kind", write_kind_name(w.kind)}, {"table", w.table}};
  switch (w.kind) {
    case WriteKind::Insert: {
      auto values = nlohmann::json::array();
      for (const auto& v : w.row.values) values.push_back(detail::value_to_json(v));
      j["values"] = std::move(values);
      break;
    }
    case WriteKind::Update: {
      j["key"] = detail::value_to_json(w.key);
      auto set = nlohmann::json::array();
      for (const auto& [col, val] : w.assignments)
        set.push_back({{"column", col}, {"value", detail::value_to_json(val)}});
      j["set"] = std::move(set);
      break;
    }
    case WriteKind::Delete:
      j["key"] = detail::value_to_json(w.key);
      break;
  }
  return j;
}

inline WriteStatement write_statement_from_json(const nlohmann::json& j) {
  WriteStatement w;
  const std::string kind = j.at("kind").get<std::string>();
  w.table = j.at("table").get<std::string>();
  if (kind == "insert") {
    w.kind = WriteKind::Insert;
    for (const auto& v : j.at("values")) w.row.values.push_back(detail::value_from_json(v));
  } else if (kind == "update") {
    w.kind = WriteKind::Update;
    w.key = detail::value_from_json(j.at("key"));
    for (const auto& a : j.at("set"))
      w.assignments.emplace_back(a.at("column").get<std::string>(),
                                 detail::value_from_json(a.at("value")));
  } else if (kind == "delete") {
    w.kind = WriteKind::Delete;
    w.key = detail::value_from_json(j.at("key"));
  } else {
    throw Error(ErrorCode::InvalidStatement, "unknown write kind '" + kind + "'");
  }
  return w;
}

// Parses one write statement in SQL text form:
//   INSERT INTO t VALUES (lit, ...);
//   UPDATE t SET col = lit [, col = lit]* WHERE pkcol = lit;
//   DELETE FROM t WHERE pkcol = lit;
// The WHERE column name is returned alongside so the caller can check it names
// the table's primary key (the statement itself addresses rows by key value).
struct ParsedWrite {
  WriteStatement stmt;
  std::string where_column;  // empty for INSERT
};

inline ParsedWrite parse_write_statement(std::string_view text) {
  detail::DumpParser p(text);
  auto& lex = p.lexer();
  ParsedWrite out;
  detail::Token head = p.expect_word("INSERT, UPDATE or DELETE");
  if (head.text == "INSERT") {
    out.stmt.kind = WriteKind::Insert;
    p.expect_keyword("INTO");
    out.stmt.table = p.expect_identifier("table name").text;
    p.expect_keyword("VALUES");
    p.expect_punct(detail::TokKind::LParen, "(");
    while (true) {
      out.stmt.row.values.push_back(p.parse_literal().first);
      detail::Token sep = lex.take();
      if (sep.kind == detail::TokKind::Comma) continue;
      if (sep.kind == detail::TokKind::RParen) break;
      lex.fail(sep, "expected ',' or ')'");
    }
  } else if (head.text == "UPDATE") {
    out.stmt.kind = WriteKind::Update;
    out.stmt.table = p.expect_identifier("table name").text;
    p.expect_keyword("SET");
    while (true) {
      std::string col = p.expect_identifier("column name").text;
      p.expect_punct(detail::TokKind::Equals, "=");
      out.stmt.assignments.emplace_back(std::move(col), p.parse_literal().first);
      if (lex.peek().kind == detail::TokKind::Comma) {
        lex.take();
        continue;
      }
      break;
    }
    p.expect_keyword("WHERE");
    out.where_column = p.expect_identifier("column name").text;
    p.expect_punct(detail::TokKind::Equals, "=");
    out.stmt.key = p.parse_literal().first;
  } else if (head.text == "DELETE") {
    out.stmt.kind = WriteKind::Delete;
    p.expect_keyword("FROM");
    out.stmt.table = p.expect_identifier("table name").text;
    p.expect_keyword("WHERE");
    out.where_column = p.expect_identifier("column name").text;
    p.expect_punct(detail::TokKind::Equals, "=");
    out.stmt.key = p.parse_literal().first;
  } else {
    lex.fail(head, "expected 'INSERT', 'UPDATE' or 'DELETE'");
  }
  p.expect_punct(detail::TokKind::Semicolon, ";");
  detail::Token end = lex.take();
  if (end.kind != detail::TokKind::End) lex.fail(end, "expected end of statement");
  return out;
}

// Directory of gen-<number>.sql files plus a generations.json index. Every
// generation is retained; the dumps double as the backup history.
class DumpStore {
 public:
  explicit DumpStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec)
      throw Error(ErrorCode::StorageError, "cannot create dump store at " + dir_.string() +
                                               ": " + ec.message());
  }

  const std::filesystem::path& dir() const { return dir_; }

  void put(const DumpDocument& doc, const Generation& gen) {
    write_file(dir_ / ("gen-" + std::to_string(gen.number) + ".sql"), doc.text);
    auto index = list();
    index.push_back(gen);
    nlohmann::json j = nlohmann::json::array();
    for (const auto& g : index)
      j.push_back({{"number", g.number}, {"digest", g.digest}, {"created_at", g.created_at}});
    write_file(dir_ / "generations.json", j.dump(2) + "\n");
  }

  std::vector<Generation> list() const {
    auto path = dir_ / "generations.json";
    if (!std::filesystem::exists(path)) return {};
    std::ifstream in(path);
    nlohmann::json j;
    in >> j;
    std::vector<Generation> out;
    for (const auto& e : j) {
      out.push_back(Generation{e.at("number").get<uint64_t>(),
                               e.at("digest").get<std::string>(),
                               e.at("created_at").get<Tick>()});
    }
    return out;
  }

  std::string load(uint64_t number) const {
    auto path = dir_ / ("gen-" + std::to_string(number) + ".sql");
    std::ifstream in(path, std::ios::binary);
    if (!in)
      throw Error(ErrorCode::StorageError, "missing dump " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

 private:
  void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::StorageError, "cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw Error(ErrorCode::StorageError, "short write to " + path.string());
  }

  std::filesystem::path dir_;
};

class Master {
 public:
  // The initial snapshot is the generation-0 base the write log replays from;
  // by default it is empty. Schemas enter through it — the write path itself
  // carries no DDL.
  Master(LogicalClock& clock, DumpStore& store, Snapshot initial = {})
      : clock_(clock), store_(store), initial_(std::move(initial)), current_(initial_) {
    last_generation_ = Generation{0, snapshot_digest(current_), 0};
  }

  const Snapshot& current() const { return current_; }
  const std::vector<std::pair<Tick, WriteStatement>>& write_log() const { return log_; }
  const Generation& last_generation() const { return last_generation_; }
  const Snapshot& initial_snapshot() const { return initial_; }

  // Applies one write under the log's total order. Timestamps must be
  // non-decreasing; ties are ordered by log position.
  size_t apply_write(const WriteStatement& w, Tick t) {
    std::lock_guard lock(mu_);
    if (!log_.empty() && t < log_.back().first)
      throw Error(ErrorCode::InvalidTimestamp,
                  "write timestamp " + std::to_string(t) + " precedes log tail " +
                      std::to_string(log_.back().first));
    size_t affected = apply_to(current_, w);
    log_.emplace_back(t, w);
    return affected;
  }

  // Parses SQL text, validates the WHERE column against the schema's primary
  // key, and applies.
  size_t apply_sql(std::string_view sql, Tick t) {
    ParsedWrite parsed = parse_write_statement(sql);
    if (parsed.stmt.kind != WriteKind::Insert) {
      const Table& table = current_.table(parsed.stmt.table);
      const auto& pk = table.schema.columns[table.schema.pk_index()];
      if (parsed.where_column != pk.name)
        throw Error(ErrorCode::InvalidStatement,
                    "WHERE must address the primary key '" + pk.name + "', got '" +
                        parsed.where_column + "'");
    }
    return apply_write(parsed.stmt, t);
  }

  // Emits the canonical dump of the current state, advances the generation and
  // persists both before returning.
  std::pair<DumpDocument, Generation> dump_now() {
    std::lock_guard lock(mu_);
    DumpDocument doc = emit_dump(current_);
    Generation gen{last_generation_.number + 1, sha256_hex(doc.text), clock_.now()};
    store_.put(doc, gen);
    last_generation_ = gen;
    return {std::move(doc), gen};
  }

  // Stateless replay oracle: generation-0 base plus a log prefix.
  static Snapshot replay(Snapshot base, const std::vector<std::pair<Tick, WriteStatement>>& log,
                         std::optional<Tick> up_to = std::nullopt) {
    for (const auto& [t, w] : log) {
      if (up_to && t > *up_to) break;
      apply_to(base, w);
    }
    return base;
  }

  bool scheduler_attached() const { return scheduler_attached_; }
  void attach_scheduler() {
    if (scheduler_attached_)
      throw Error(ErrorCode::AlreadyScheduled, "master already has a dump schedule");
    scheduler_attached_ = true;
  }
  void detach_scheduler() { scheduler_attached_ = false; }

  LogicalClock& clock() { return clock_; }

 private:
  static size_t apply_to(Snapshot& snap, const WriteStatement& w) {
    switch (w.kind) {
      case WriteKind::Insert:
        snap.insert_row(w.table, w.row);
        return 1;
      case WriteKind::Update:
        return snap.update_row(w.table, w.key, w.assignments);
      case WriteKind::Delete:
        return snap.delete_row(w.table, w.key);
    }
    return 0;
  }

  LogicalClock& clock_;
  DumpStore& store_;
  Snapshot initial_;
  Snapshot current_;
  std::vector<std::pair<Tick, WriteStatement>> log_;
  Generation last_generation_;
  bool scheduler_attached_ = false;
  std::mutex mu_;
};

// Periodic dumps on the logical clock: one dump at every multiple of the
// period, until cancelled. Driven by advancing the clock through it.
class DumpScheduler {
 public:
  DumpScheduler(Master& master, Tick period) : master_(master), period_(period) {
    if (period <= 0) throw Error(ErrorCode::Precondition, "dump period must be positive");
    master_.attach_scheduler();
    next_due_ = period;
  }

  ~DumpScheduler() {
    if (!cancelled_) master_.detach_scheduler();
  }

  DumpScheduler(const DumpScheduler&) = delete;
  DumpScheduler& operator=(const DumpScheduler&) = delete;

  // Advances the master's clock to t, emitting every dump that falls due on
  // the way. Returns the number of dumps emitted.
  int advance_to(Tick t) {
    int emitted = 0;
    while (!cancelled_ && next_due_ <= t) {
      master_.clock().advance_to(next_due_);
      master_.dump_now();
      next_due_ += period_;
      ++emitted;
    }
    if (master_.clock().now() < t) master_.clock().advance_to(t);
    return emitted;
  }

  void cancel() {
    if (cancelled_) return;
    cancelled_ = true;
    master_.detach_scheduler();
  }

 private:
  Master& master_;
  Tick period_;
  Tick next_due_;
  bool cancelled_ = false;
};

}  // namespace imagebake
