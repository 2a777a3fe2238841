#pragma once

#include <bit>
#include <cassert>
#include <charconv>
#include <cstdint>
#include <string>
#include <variant>

#include "imagebake/errors.hpp"

namespace imagebake {

enum class ColumnType { Int, Real, Text };

inline const char* column_type_name(ColumnType t) {
  switch (t) {
    case ColumnType::Int: return "INT";
    case ColumnType::Real: return "REAL";
    case ColumnType::Text: return "TEXT";
  }
  return "?";
}

// One cell. INT is 64-bit signed, REAL a finite 64-bit float, TEXT a UTF-8
// string. REAL equality is bitwise so that value equality, canonical text and
// digests all agree (-0.0 and 0.0 are distinct values).
class Value {
 public:
  Value() : v_(int64_t{0}) {}

  static Value of_int(int64_t i) { return Value(i); }
  static Value of_real(double d) { return Value(d); }
  static Value of_text(std::string s) { return Value(std::move(s)); }

  ColumnType kind() const {
    switch (v_.index()) {
      case 0: return ColumnType::Int;
      case 1: return ColumnType::Real;
      default: return ColumnType::Text;
    }
  }

  int64_t as_int() const { return std::get<int64_t>(v_); }
  double as_real() const { return std::get<double>(v_); }
  const std::string& as_text() const { return std::get<std::string>(v_); }

  friend bool operator==(const Value& a, const Value& b) {
    if (a.v_.index() != b.v_.index()) return false;
    switch (a.v_.index()) {
      case 0: return a.as_int() == b.as_int();
      case 1:
        return std::bit_cast<uint64_t>(a.as_real()) == std::bit_cast<uint64_t>(b.as_real());
      default: return a.as_text() == b.as_text();
    }
  }
  friend bool operator!=(const Value& a, const Value& b) { return !(a == b); }

 private:
  explicit Value(int64_t i) : v_(i) {}
  explicit Value(double d) : v_(d) {}
  explicit Value(std::string s) : v_(std::move(s)) {}

  std::variant<int64_t, double, std::string> v_;
};

// Strict weak ordering used for primary keys; both sides must share a kind.
inline bool value_less(const Value& a, const Value& b) {
  assert(a.kind() == b.kind());
  switch (a.kind()) {
    case ColumnType::Int: return a.as_int() < b.as_int();
    case ColumnType::Real: return a.as_real() < b.as_real();
    case ColumnType::Text: return a.as_text() < b.as_text();
  }
  return false;
}

inline bool pk_equivalent(const Value& a, const Value& b) {
  return !value_less(a, b) && !value_less(b, a);
}

namespace detail {

// Shortest decimal that round-trips the double, always marked as REAL by
// carrying either a '.' or an exponent.
inline std::string format_real(double d) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), d);
  std::string s(buf, res.ptr);
  if (s.find('.') == std::string::npos && s.find('e') == std::string::npos) s += ".0";
  return s;
}

inline std::string quote_text(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  out.push_back('\'');
  for (char c : s) {
    out.push_back(c);
    if (c == '\'') out.push_back('\'');
  }
  out.push_back('\'');
  return out;
}

}  // namespace detail

// Canonical literal text for a value, exactly what the dump grammar accepts.
inline std::string format_literal(const Value& v) {
  switch (v.kind()) {
    case ColumnType::Int: return std::to_string(v.as_int());
    case ColumnType::Real: return detail::format_real(v.as_real());
    case ColumnType::Text: return detail::quote_text(v.as_text());
  }
  return {};
}

}  // namespace imagebake
