#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dforge {

/// Base of every domain error raised by the library. The CLI maps these to
/// exit code 1 and prints what() verbatim.
class ForgeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedPrefix : public ForgeError {
 public:
  explicit MalformedPrefix(const std::string& line)
      : ForgeError("MalformedPrefix: line does not start with [Region] [Context] tags: \"" +
                   line + "\"") {}
};

class UnknownLabel : public ForgeError {
 public:
  UnknownLabel(std::string token, const std::string& kind)
      : ForgeError("UnknownLabel: \"" + token + "\" is not a valid " + kind),
        token_(std::move(token)),
        kind_(kind) {}

  const std::string& token() const noexcept { return token_; }
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string token_;
  std::string kind_;
};

class SchemaViolation : public ForgeError {
 public:
  SchemaViolation(std::size_t line, std::string field, const std::string& detail)
      : ForgeError("SchemaViolation: line " + std::to_string(line) + ", field \"" + field +
                   "\": " + detail),
        line_(line),
        field_(std::move(field)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

struct LexiconIssue {
  std::string location;
  std::string message;
};

class LexiconFormatError : public ForgeError {
 public:
  explicit LexiconFormatError(std::vector<LexiconIssue> issues)
      : LexiconFormatError("LexiconFormatError", std::move(issues)) {}

  const std::vector<LexiconIssue>& issues() const noexcept { return issues_; }

 protected:
  LexiconFormatError(const std::string& head, std::vector<LexiconIssue> issues)
      : ForgeError(render(head, issues)), issues_(std::move(issues)) {}

 private:
  static std::string render(const std::string& head, const std::vector<LexiconIssue>& issues) {
    std::string out = head + " (" + std::to_string(issues.size()) + " issue" +
                      (issues.size() == 1 ? "" : "s") + ")";
    for (const auto& issue : issues) out += "\n  " + issue.location + ": " + issue.message;
    return out;
  }

  std::vector<LexiconIssue> issues_;
};

/// Raised instead of LexiconFormatError whenever a rule_id repeats; issues()
/// still carries every other violation found in the same file.
class DuplicateRuleId : public LexiconFormatError {
 public:
  DuplicateRuleId(std::string rule_id, std::vector<LexiconIssue> issues)
      : LexiconFormatError("DuplicateRuleId \"" + rule_id + "\"", std::move(issues)),
        rule_id_(std::move(rule_id)) {}

  const std::string& rule_id() const noexcept { return rule_id_; }

 private:
  std::string rule_id_;
};

class EmptyPool : public ForgeError {
 public:
  EmptyPool() : ForgeError("EmptyPool: no MSA rows to augment") {}
};

class MissingClass : public ForgeError {
 public:
  explicit MissingClass(const std::string& region)
      : ForgeError("MissingClass: region \"" + region + "\" has zero rows"), region_(region) {}

  const std::string& region() const noexcept { return region_; }

 private:
  std::string region_;
};

class EmptyEvalSet : public ForgeError {
 public:
  EmptyEvalSet() : ForgeError("EmptyEvalSet: at least one evaluation pair is required") {}
};

class UnparseableAudit : public ForgeError {
 public:
  explicit UnparseableAudit(const std::string& response)
      : ForgeError("UnparseableAudit: no score 1..5 in response \"" + response + "\"") {}
};

/// A caller broke an operation's documented precondition.
class PreconditionError : public ForgeError {
 public:
  using ForgeError::ForgeError;
};

}  // namespace dforge
