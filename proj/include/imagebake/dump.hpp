#pragma once

// Full-database dumps as a restricted SQL statement sequence.
//
// Grammar (case-sensitive keywords, UTF-8 text):
//   dump   := stmt*
//   stmt   := create | insert
//   create := "CREATE TABLE" ident "(" coldef ("," coldef)* ")" ";"
//   coldef := ident ("INT" | "REAL" | "TEXT") ["PRIMARY KEY"]
//   insert := "INSERT INTO" ident "VALUES" "(" literal ("," literal)* ")" ";"
//
// Canonical emission: tables in ascending lexicographic name order, each
// CREATE TABLE followed by its INSERTs in ascending primary-key order, "\n"
// line endings, single-space separators, TEXT single-quoted with '' escaping,
// REAL as shortest round-trip decimal. parse(emit(s)) == s for every valid
// snapshot, which is what makes baked images content-addressable.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "imagebake/errors.hpp"
#include "imagebake/sha256.hpp"
#include "imagebake/value.hpp"

namespace imagebake {

struct ColumnDef {
  std::string name;
  ColumnType type = ColumnType::Int;
  bool primary_key = false;

  bool operator==(const ColumnDef&) const = default;
};

struct TableSchema {
  std::string name;
  std::vector<ColumnDef> columns;

  bool operator==(const TableSchema&) const = default;

  size_t pk_index() const {
    for (size_t i = 0; i < columns.size(); ++i)
      if (columns[i].primary_key) return i;
    return 0;  // unreachable for validated schemas
  }

  std::optional<size_t> column_index(std::string_view name) const {
    for (size_t i = 0; i < columns.size(); ++i)
      if (columns[i].name == name) return i;
    return std::nullopt;
  }
};

struct Row {
  std::vector<Value> values;

  bool operator==(const Row&) const = default;
};

struct Table {
  TableSchema schema;
  std::vector<Row> rows;  // kept sorted by primary key

  bool operator==(const Table&) const = default;
};

inline bool valid_identifier(std::string_view s) {
  if (s.empty()) return false;
  auto head = [](char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_'; };
  auto tail = [&](char c) { return head(c) || (c >= '0' && c <= '9'); };
  if (!head(s[0])) return false;
  for (size_t i = 1; i < s.size(); ++i)
    if (!tail(s[i])) return false;
  return true;
}

namespace detail {

inline bool reserved_word(std::string_view s) {
  static const char* kw[] = {"CREATE", "TABLE", "INSERT", "INTO", "VALUES",
                             "INT",    "REAL",  "TEXT",   "PRIMARY", "KEY",
                             "UPDATE", "DELETE", "SET",   "WHERE", "FROM"};
  for (const char* k : kw)
    if (s == k) return true;
  return false;
}

inline void check_schema(const TableSchema& schema) {
  if (!valid_identifier(schema.name) || reserved_word(schema.name))
    throw Error(ErrorCode::InvalidStatement, "invalid table name '" + schema.name + "'");
  if (schema.columns.empty())
    throw Error(ErrorCode::InvalidStatement, "table '" + schema.name + "' has no columns");
  size_t pk_count = 0;
  for (const auto& c : schema.columns) {
    if (!valid_identifier(c.name) || reserved_word(c.name))
      throw Error(ErrorCode::InvalidStatement, "invalid column name '" + c.name + "'");
    if (c.primary_key) ++pk_count;
    size_t dup = 0;
    for (const auto& o : schema.columns)
      if (o.name == c.name) ++dup;
    if (dup != 1)
      throw Error(ErrorCode::InvalidStatement,
                  "duplicate column '" + c.name + "' in table '" + schema.name + "'");
  }
  if (pk_count != 1)
    throw Error(ErrorCode::InvalidStatement,
                "table '" + schema.name + "' must have exactly one PRIMARY KEY column");
}

inline void check_row(const TableSchema& schema, const Row& row) {
  if (row.values.size() != schema.columns.size())
    throw Error(ErrorCode::TypeMismatch,
                "table '" + schema.name + "' expects " + std::to_string(schema.columns.size()) +
                    " values, got " + std::to_string(row.values.size()));
  for (size_t i = 0; i < row.values.size(); ++i) {
    const auto& col = schema.columns[i];
    const auto& v = row.values[i];
    if (v.kind() != col.type)
      throw Error(ErrorCode::TypeMismatch,
                  "column '" + col.name + "' of table '" + schema.name + "' is " +
                      column_type_name(col.type) + ", got " + column_type_name(v.kind()));
    if (v.kind() == ColumnType::Real && !std::isfinite(v.as_real()))
      throw Error(ErrorCode::TypeMismatch,
                  "column '" + col.name + "' of table '" + schema.name + "': non-finite REAL");
  }
}

}  // namespace detail

// Canonical in-memory relational state. Mutators validate every invariant
// (schema shape, row arity and types, primary-key uniqueness), so a Snapshot
// that exists is a valid one. Rows stay sorted by primary key.
class Snapshot {
 public:
  bool empty() const { return tables_.empty(); }
  size_t table_count() const { return tables_.size(); }
  const std::map<std::string, Table>& tables() const { return tables_; }

  bool has_table(std::string_view name) const { return tables_.count(std::string(name)) > 0; }

  const Table& table(std::string_view name) const {
    auto it = tables_.find(std::string(name));
    if (it == tables_.end())
      throw Error(ErrorCode::UnknownTable, "no such table '" + std::string(name) + "'");
    return it->second;
  }

  void create_table(TableSchema schema) {
    detail::check_schema(schema);
    std::string name = schema.name;
    auto [it, inserted] = tables_.emplace(name, Table{std::move(schema), {}});
    (void)it;
    if (!inserted) throw Error(ErrorCode::DuplicateTable, "table '" + name + "' already exists");
  }

  // Returns the row index the new row landed on.
  size_t insert_row(std::string_view table_name, Row row) {
    Table& t = mutable_table(table_name);
    detail::check_row(t.schema, row);
    size_t pk = t.schema.pk_index();
    const Value& key = row.values[pk];
    auto pos = std::lower_bound(t.rows.begin(), t.rows.end(), key,
                                [pk](const Row& r, const Value& k) {
                                  return value_less(r.values[pk], k);
                                });
    if (pos != t.rows.end() && pk_equivalent(pos->values[pk], key))
      throw Error(ErrorCode::DuplicateKey, "duplicate primary key " + format_literal(key) +
                                               " in table '" + std::string(table_name) + "'");
    return static_cast<size_t>(t.rows.insert(pos, std::move(row)) - t.rows.begin());
  }

  // Applies assignments to the row with the given primary key. Returns the
  // number of rows touched (0 or 1). Assignments must not target the key.
  size_t update_row(std::string_view table_name, const Value& key,
                    const std::vector<std::pair<std::string, Value>>& assignments) {
    Table& t = mutable_table(table_name);
    size_t pk = t.schema.pk_index();
    if (key.kind() != t.schema.columns[pk].type)
      throw Error(ErrorCode::TypeMismatch, "primary key of '" + std::string(table_name) +
                                               "' is " + column_type_name(t.schema.columns[pk].type));
    // Validate the assignment list before touching anything.
    std::vector<std::pair<size_t, const Value*>> resolved;
    resolved.reserve(assignments.size());
    for (const auto& [col, val] : assignments) {
      auto idx = t.schema.column_index(col);
      if (!idx)
        throw Error(ErrorCode::UnknownColumn,
                    "no column '" + col + "' in table '" + std::string(table_name) + "'");
      if (*idx == pk)
        throw Error(ErrorCode::InvalidStatement, "UPDATE may not assign the primary key");
      const auto& cdef = t.schema.columns[*idx];
      if (val.kind() != cdef.type ||
          (val.kind() == ColumnType::Real && !std::isfinite(val.as_real())))
        throw Error(ErrorCode::TypeMismatch, "column '" + col + "' is " +
                                                 column_type_name(cdef.type));
      resolved.emplace_back(*idx, &val);
    }
    Row* row = find_row(t, key);
    if (!row) return 0;
    for (auto [idx, val] : resolved) row->values[idx] = *val;
    return 1;
  }

  size_t delete_row(std::string_view table_name, const Value& key) {
    Table& t = mutable_table(table_name);
    size_t pk = t.schema.pk_index();
    if (key.kind() != t.schema.columns[pk].type)
      throw Error(ErrorCode::TypeMismatch, "primary key of '" + std::string(table_name) +
                                               "' is " + column_type_name(t.schema.columns[pk].type));
    for (auto it = t.rows.begin(); it != t.rows.end(); ++it) {
      if (pk_equivalent(it->values[pk], key)) {
        t.rows.erase(it);
        return 1;
      }
    }
    return 0;
  }

  bool operator==(const Snapshot&) const = default;

 private:
  Table& mutable_table(std::string_view name) {
    auto it = tables_.find(std::string(name));
    if (it == tables_.end())
      throw Error(ErrorCode::UnknownTable, "no such table '" + std::string(name) + "'");
    return it->second;
  }

  Row* find_row(Table& t, const Value& key) {
    size_t pk = t.schema.pk_index();
    auto pos = std::lower_bound(t.rows.begin(), t.rows.end(), key,
                                [pk](const Row& r, const Value& k) {
                                  return value_less(r.values[pk], k);
                                });
    if (pos != t.rows.end() && pk_equivalent(pos->values[pk], key)) return &*pos;
    return nullptr;
  }

  std::map<std::string, Table> tables_;
};

struct DumpDocument {
  std::string text;
  size_t statement_count = 0;
};

namespace detail {

enum class TokKind { Word, IntLit, RealLit, StringLit, LParen, RParen, Comma, Semicolon, Equals, End };

struct Token {
  TokKind kind = TokKind::End;
  std::string text;   // word text or decoded string content
  int64_t int_val = 0;
  double real_val = 0;
  int line = 1;
  int col = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) { advance(); }

  const Token& peek() const { return tok_; }

  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

  [[noreturn]] void fail(const Token& at, const std::string& message) const {
    throw ParseError(ErrorCode::SyntaxError, at.line, at.col, message);
  }

 private:
  void advance() {
    skip_ws();
    tok_ = Token{};
    tok_.line = line_;
    tok_.col = col_;
    if (pos_ >= src_.size()) {
      tok_.kind = TokKind::End;
      return;
    }
    char c = src_[pos_];
    switch (c) {
      case '(': tok_.kind = TokKind::LParen; bump(); return;
      case ')': tok_.kind = TokKind::RParen; bump(); return;
      case ',': tok_.kind = TokKind::Comma; bump(); return;
      case ';': tok_.kind = TokKind::Semicolon; bump(); return;
      case '=': tok_.kind = TokKind::Equals; bump(); return;
      case '\'': lex_string(); return;
      default: break;
    }
    if (c == '-' || (c >= '0' && c <= '9')) {
      lex_number();
      return;
    }
    if (valid_identifier(std::string_view(&c, 1))) {
      lex_word();
      return;
    }
    throw ParseError(ErrorCode::SyntaxError, line_, col_,
                     std::string("unexpected character '") + c + "'");
  }

  void lex_word() {
    size_t start = pos_;
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
      if (!ok) break;
      bump();
    }
    tok_.kind = TokKind::Word;
    tok_.text = std::string(src_.substr(start, pos_ - start));
  }

  void lex_string() {
    bump();  // opening quote
    std::string out;
    while (true) {
      if (pos_ >= src_.size())
        throw ParseError(ErrorCode::SyntaxError, tok_.line, tok_.col, "unterminated string literal");
      char c = src_[pos_];
      if (c == '\'') {
        if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '\'') {
          out.push_back('\'');
          bump();
          bump();
          continue;
        }
        bump();
        break;
      }
      out.push_back(c);
      bump();
    }
    tok_.kind = TokKind::StringLit;
    tok_.text = std::move(out);
  }

  void lex_number() {
    size_t start = pos_;
    bool real = false;
    if (src_[pos_] == '-') bump();
    if (pos_ >= src_.size() || !isdigit_(src_[pos_]))
      throw ParseError(ErrorCode::SyntaxError, tok_.line, tok_.col, "expected digit");
    while (pos_ < src_.size() && isdigit_(src_[pos_])) bump();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      real = true;
      bump();
      if (pos_ >= src_.size() || !isdigit_(src_[pos_]))
        throw ParseError(ErrorCode::SyntaxError, line_, col_, "expected digit after '.'");
      while (pos_ < src_.size() && isdigit_(src_[pos_])) bump();
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      real = true;
      bump();
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) bump();
      if (pos_ >= src_.size() || !isdigit_(src_[pos_]))
        throw ParseError(ErrorCode::SyntaxError, line_, col_, "expected exponent digits");
      while (pos_ < src_.size() && isdigit_(src_[pos_])) bump();
    }
    std::string_view text = src_.substr(start, pos_ - start);
    if (real) {
      tok_.kind = TokKind::RealLit;
      auto res = std::from_chars(text.data(), text.data() + text.size(), tok_.real_val);
      if (res.ec == std::errc::result_out_of_range || !std::isfinite(tok_.real_val))
        throw ParseError(ErrorCode::SyntaxError, tok_.line, tok_.col, "real literal out of range");
    } else {
      tok_.kind = TokKind::IntLit;
      auto res = std::from_chars(text.data(), text.data() + text.size(), tok_.int_val);
      if (res.ec != std::errc())
        throw ParseError(ErrorCode::SyntaxError, tok_.line, tok_.col, "integer literal out of range");
    }
    tok_.text = std::string(text);
  }

  void skip_ws() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n')
        bump();
      else
        break;
    }
  }

  static bool isdigit_(char c) { return c >= '0' && c <= '9'; }

  void bump() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  std::string_view src_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
  Token tok_;
};

class DumpParser {
 public:
  explicit DumpParser(std::string_view src) : lex_(src) {}

  Snapshot parse() {
    Snapshot snap;
    while (lex_.peek().kind != TokKind::End) {
      Token head = expect_word("CREATE or INSERT");
      if (head.text == "CREATE")
        parse_create(snap);
      else if (head.text == "INSERT")
        parse_insert(snap);
      else
        lex_.fail(head, "expected 'CREATE' or 'INSERT', got '" + head.text + "'");
    }
    return snap;
  }

  // Shared helpers for the write-statement grammar in master.hpp.
  Lexer& lexer() { return lex_; }

  Token expect_word(const std::string& what) {
    Token t = lex_.take();
    if (t.kind != TokKind::Word) lex_.fail(t, "expected " + what);
    return t;
  }

  void expect_keyword(const char* kw) {
    Token t = lex_.take();
    if (t.kind != TokKind::Word || t.text != kw)
      lex_.fail(t, std::string("expected '") + kw + "'");
  }

  Token expect_identifier(const std::string& what) {
    Token t = expect_word(what);
    if (reserved_word(t.text)) lex_.fail(t, "reserved word '" + t.text + "' used as " + what);
    return t;
  }

  void expect_punct(TokKind kind, const char* what) {
    Token t = lex_.take();
    if (t.kind != kind) lex_.fail(t, std::string("expected '") + what + "'");
  }

  std::pair<Value, Token> parse_literal() {
    Token t = lex_.take();
    switch (t.kind) {
      case TokKind::IntLit: return {Value::of_int(t.int_val), t};
      case TokKind::RealLit: return {Value::of_real(t.real_val), t};
      case TokKind::StringLit: return {Value::of_text(t.text), t};
      default: lex_.fail(t, "expected literal");
    }
  }

 private:
  void parse_create(Snapshot& snap) {
    expect_keyword("TABLE");
    Token name = expect_identifier("table name");
    expect_punct(TokKind::LParen, "(");
    TableSchema schema;
    schema.name = name.text;
    int pk_count = 0;
    while (true) {
      Token col = expect_identifier("column name");
      Token type = expect_word("column type");
      ColumnDef def;
      def.name = col.text;
      if (type.text == "INT")
        def.type = ColumnType::Int;
      else if (type.text == "REAL")
        def.type = ColumnType::Real;
      else if (type.text == "TEXT")
        def.type = ColumnType::Text;
      else
        lex_.fail(type, "expected 'INT', 'REAL' or 'TEXT'");
      if (lex_.peek().kind == TokKind::Word && lex_.peek().text == "PRIMARY") {
        lex_.take();
        expect_keyword("KEY");
        def.primary_key = true;
        ++pk_count;
      }
      for (const auto& existing : schema.columns)
        if (existing.name == def.name)
          lex_.fail(col, "duplicate column '" + def.name + "'");
      schema.columns.push_back(std::move(def));
      Token sep = lex_.take();
      if (sep.kind == TokKind::Comma) continue;
      if (sep.kind == TokKind::RParen) break;
      lex_.fail(sep, "expected ',' or ')'");
    }
    expect_punct(TokKind::Semicolon, ";");
    if (pk_count != 1)
      throw ParseError(ErrorCode::SyntaxError, name.line, name.col,
                       "table '" + schema.name + "' must declare exactly one PRIMARY KEY column");
    if (snap.has_table(schema.name))
      throw ParseError(ErrorCode::DuplicateTable, name.line, name.col,
                       "table '" + schema.name + "' already created");
    snap.create_table(std::move(schema));
  }

  void parse_insert(Snapshot& snap) {
    expect_keyword("INTO");
    Token name = expect_identifier("table name");
    expect_keyword("VALUES");
    expect_punct(TokKind::LParen, "(");
    Row row;
    Token first_literal;
    while (true) {
      auto [value, tok] = parse_literal();
      if (row.values.empty()) first_literal = tok;
      row.values.push_back(std::move(value));
      Token sep = lex_.take();
      if (sep.kind == TokKind::Comma) continue;
      if (sep.kind == TokKind::RParen) break;
      lex_.fail(sep, "expected ',' or ')'");
    }
    expect_punct(TokKind::Semicolon, ";");
    if (!snap.has_table(name.text))
      throw ParseError(ErrorCode::UnknownTable, name.line, name.col,
                       "INSERT into unknown table '" + name.text + "'");
    try {
      snap.insert_row(name.text, std::move(row));
    } catch (const Error& e) {
      throw ParseError(e.code(), first_literal.line, first_literal.col, e.what());
    }
  }

  Lexer lex_;
};

}  // namespace detail

// Executes the dump's statements in order and returns the resulting snapshot.
inline Snapshot parse_dump(std::string_view text) {
  detail::DumpParser parser(text);
  return parser.parse();
}

// Canonical text form; parse_dump(emit_dump(s).text) == s.
inline DumpDocument emit_dump(const Snapshot& s) {
  DumpDocument doc;
  for (const auto& [name, table] : s.tables()) {
    doc.text += "CREATE TABLE " + name + " (";
    for (size_t i = 0; i < table.schema.columns.size(); ++i) {
      const auto& c = table.schema.columns[i];
      if (i) doc.text += ", ";
      doc.text += c.name;
      doc.text += " ";
      doc.text += column_type_name(c.type);
      if (c.primary_key) doc.text += " PRIMARY KEY";
    }
    doc.text += ");\n";
    ++doc.statement_count;
    for (const auto& row : table.rows) {
      doc.text += "INSERT INTO " + name + " VALUES (";
      for (size_t i = 0; i < row.values.size(); ++i) {
        if (i) doc.text += ", ";
        doc.text += format_literal(row.values[i]);
      }
      doc.text += ");\n";
      ++doc.statement_count;
    }
  }
  return doc;
}

using Digest = std::string;  // 64-char lowercase hex

// SHA-256 of the canonical dump text. Structurally equal snapshots digest
// identically on any machine.
inline Digest snapshot_digest(const Snapshot& s) { return sha256_hex(emit_dump(s).text); }

}  // namespace imagebake
