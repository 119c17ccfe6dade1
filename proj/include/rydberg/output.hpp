#pragma once

// Locale-independent text output: 17-significant-digit numbers, an
// order-preserving JSON writer and CSV rows.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace rydberg {

/// Shortest general-format text with 17 significant digits ("nan", "inf",
/// "-inf" for non-finite values).
std::string format_double(double v);

class JsonWriter {
 public:
  JsonWriter& begin_object();
  JsonWriter& end_object();
  /// Arrays of scalars are written on one line when `inline_items` is set.
  JsonWriter& begin_array(bool inline_items = false);
  JsonWriter& end_array();
  JsonWriter& key(std::string_view k);

  JsonWriter& value(double v);  ///< non-finite values become null
  JsonWriter& value(std::int64_t v);
  JsonWriter& value(int v) { return value(static_cast<std::int64_t>(v)); }
  JsonWriter& value(std::size_t v) { return value(static_cast<std::int64_t>(v)); }
  JsonWriter& value(bool v);
  JsonWriter& value(std::string_view v);
  JsonWriter& value(const char* v) { return value(std::string_view(v)); }
  JsonWriter& null();

  template <class T>
  JsonWriter& field(std::string_view k, const T& v) {
    key(k);
    return value(v);
  }
  JsonWriter& field(std::string_view k, const std::vector<double>& v);
  JsonWriter& field(std::string_view k, const std::vector<int>& v);

  /// The document, terminated by a newline.
  std::string str() const;

 private:
  struct Level {
    bool array;
    bool inline_items;
    int count;
  };
  void before_value();
  void newline();
  static std::string escape(std::string_view s);

  std::string out_;
  std::vector<Level> stack_;
  bool after_key_ = false;
};

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  void add_row(std::vector<std::string> cells);
  std::string str() const;
  std::size_t rows() const { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Writes bytes verbatim; throws std::runtime_error on I/O failure.
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace rydberg
