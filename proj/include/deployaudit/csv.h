/*
 * Copyright 2026 The deployaudit Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef DEPLOYAUDIT_CSV_H_
#define DEPLOYAUDIT_CSV_H_

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Minimal CSV plumbing shared by the readers and writers. Fields may be
// double-quoted with "" escapes; records never span physical lines.
namespace deployaudit::csv {

// Returns nullopt on an unterminated quote.
std::optional<std::vector<std::string>> split_line(std::string_view line);

// Quotes the field only when it contains a delimiter, quote or newline.
std::string escape(std::string_view field);

// Shortest representation that parses back to the same double.
std::string format_double(double value);

// Full-field parses; leading/trailing spaces are not accepted.
std::optional<double> parse_double(std::string_view text);
std::optional<std::int64_t> parse_int(std::string_view text);

class Header {
 public:
  explicit Header(std::vector<std::string> names);

  std::optional<std::size_t> find(std::string_view name) const;
  // Throws SchemaError naming `name` and `source`.
  std::size_t require(std::string_view name, std::string_view source) const;

  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }

 private:
  std::vector<std::string> names_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

// Line-at-a-time reader; strips a trailing '\r' and counts lines from 1.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  bool next(std::string& line);
  std::size_t line_number() const { return line_number_; }

 private:
  std::istream& in_;
  std::size_t line_number_ = 0;
};

}  // namespace deployaudit::csv

#endif  // DEPLOYAUDIT_CSV_H_
