#pragma once

#include <cstddef>
#include <iterator>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "mvforge/errors.hpp"

namespace mvforge {

using Json = nlohmann::ordered_json;

/// Parsed JSON document that remembers the byte offset at which each value
/// ended, keyed by JSON pointer, so semantic errors can name a location.
struct PositionedJson {
  Json root;
  std::unordered_map<std::string, std::size_t> offsets;

  std::size_t offset_of(const std::string& pointer) const {
    auto it = offsets.find(pointer);
    return it == offsets.end() ? 0 : it->second;
  }
};

namespace detail {

/// Forward iterator over chars that publishes how far the parser has read.
class CountingIterator {
 public:
  using iterator_category = std::forward_iterator_tag;
  using value_type = char;
  using difference_type = std::ptrdiff_t;
  using pointer = const char*;
  using reference = const char&;

  CountingIterator() = default;
  CountingIterator(const char* p, const char* begin, std::size_t* consumed)
      : p_(p), begin_(begin), consumed_(consumed) {}

  reference operator*() const { return *p_; }
  CountingIterator& operator++() {
    ++p_;
    if (consumed_) *consumed_ = static_cast<std::size_t>(p_ - begin_);
    return *this;
  }
  CountingIterator operator++(int) {
    auto copy = *this;
    ++*this;
    return copy;
  }
  friend bool operator==(const CountingIterator& a, const CountingIterator& b) {
    return a.p_ == b.p_;
  }

 private:
  const char* p_ = nullptr;
  const char* begin_ = nullptr;
  std::size_t* consumed_ = nullptr;
};

inline std::string escape_pointer_token(std::string_view token) {
  std::string out;
  for (char c : token) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

class PositionRecorder {
 public:
  using number_integer_t = Json::number_integer_t;
  using number_unsigned_t = Json::number_unsigned_t;
  using number_float_t = Json::number_float_t;
  using string_t = Json::string_t;
  using binary_t = Json::binary_t;

  PositionRecorder(Json& root, std::unordered_map<std::string, std::size_t>& offsets,
                   const std::size_t& consumed)
      : dom_(root, false), offsets_(offsets), consumed_(consumed) {}

  bool null() { return value(), dom_.null(); }
  bool boolean(bool v) { return value(), dom_.boolean(v); }
  bool number_integer(number_integer_t v) { return value(), dom_.number_integer(v); }
  bool number_unsigned(number_unsigned_t v) { return value(), dom_.number_unsigned(v); }
  bool number_float(number_float_t v, const string_t& s) {
    return value(), dom_.number_float(v, s);
  }
  bool string(string_t& v) { return value(), dom_.string(v); }
  bool binary(binary_t& v) { return value(), dom_.binary(v); }
  bool start_object(std::size_t n) {
    record();
    stack_.push_back({false, 0, {}});
    return dom_.start_object(n);
  }
  bool key(string_t& k) {
    stack_.back().key = k;
    return dom_.key(k);
  }
  bool end_object() {
    stack_.pop_back();
    advance();
    return dom_.end_object();
  }
  bool start_array(std::size_t n) {
    record();
    stack_.push_back({true, 0, {}});
    return dom_.start_array(n);
  }
  bool end_array() {
    stack_.pop_back();
    advance();
    return dom_.end_array();
  }
  template <class Exception>
  bool parse_error(std::size_t position, const std::string&, const Exception& ex) {
    error_position = position;
    error_message = ex.what();
    return false;
  }

  std::size_t error_position = 0;
  std::string error_message;

 private:
  struct Level {
    bool array;
    std::size_t index;
    std::string key;
  };

  std::string pointer() const {
    std::string p;
    for (const auto& level : stack_)
      p += "/" + (level.array ? std::to_string(level.index)
                              : escape_pointer_token(level.key));
    return p;
  }
  void record() { offsets_[pointer()] = consumed_; }
  void advance() {
    if (!stack_.empty() && stack_.back().array) ++stack_.back().index;
  }
  void value() {
    record();
    advance();
  }

  nlohmann::detail::json_sax_dom_parser<Json> dom_;
  std::unordered_map<std::string, std::size_t>& offsets_;
  const std::size_t& consumed_;
  std::vector<Level> stack_;
};

}  // namespace detail

/// Parses `text`; syntax errors become FormatError at the failing byte.
inline PositionedJson parse_positioned_json(std::string_view text,
                                            const std::string& file) {
  PositionedJson doc;
  std::size_t consumed = 0;
  detail::PositionRecorder recorder(doc.root, doc.offsets, consumed);
  const char* begin = text.data();
  detail::CountingIterator first(begin, begin, &consumed);
  detail::CountingIterator last(begin + text.size(), begin, nullptr);
  // strict: trailing content after the document is an error
  if (!Json::sax_parse(first, last, &recorder, Json::input_format_t::json, true)) {
    const std::size_t at = recorder.error_position > 0 ? recorder.error_position - 1 : 0;
    throw FormatError(file, at, "valid JSON (" + recorder.error_message + ")");
  }
  return doc;
}

}  // namespace mvforge
