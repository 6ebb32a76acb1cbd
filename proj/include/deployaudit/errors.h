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

#ifndef DEPLOYAUDIT_ERRORS_H_
#define DEPLOYAUDIT_ERRORS_H_

#include <stdexcept>
#include <string>
#include <vector>

namespace deployaudit {

// Base for every error raised by the library. The CLI maps each subclass to a
// distinct exit code.
class AuditError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An input file is missing a required column/field or is structurally broken.
class SchemaError : public AuditError {
 public:
  using AuditError::AuditError;
};

// One problem found in one input row.
struct RowIssue {
  std::size_t line = 0;  // 1-based, header is line 1 for CSV
  std::string message;
};

// Rows that parsed but violate a record invariant (range, emptiness, ...).
class ValidationError : public AuditError {
 public:
  ValidationError(std::string source, std::vector<RowIssue> issues);

  const std::string& source() const { return source_; }
  const std::vector<RowIssue>& issues() const { return issues_; }

 private:
  std::string source_;
  std::vector<RowIssue> issues_;
};

// A census geometry is unusable; names the offending block group.
class GeometryError : public AuditError {
 public:
  GeometryError(std::string cbg_id, const std::string& what);

  const std::string& cbg_id() const { return cbg_id_; }

 private:
  std::string cbg_id_;
};

// Inputs are well formed but do not satisfy an operation's precondition
// (empty window, single-class labels, zero population, ...).
class PreconditionError : public AuditError {
 public:
  using AuditError::AuditError;
};

}  // namespace deployaudit

#endif  // DEPLOYAUDIT_ERRORS_H_
