#pragma once

// Five-field sentence records, control-tag prefixes, and the JSONL/TSV
// corpus formats.

#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "dforge/error.hpp"
#include "dforge/labels.hpp"
#include "dforge/text.hpp"

namespace dforge {

struct SentenceRecord {
  std::string input;
  std::string target;
  Region region = Region::MsaGeneral;
  Context context = Context::General;
  Register style = Register::Formal;

  ControlVector control() const { return {region, context, style}; }

  friend bool operator==(const SentenceRecord&, const SentenceRecord&) = default;
};

struct TaggedExample {
  std::string tagged_input;
  std::string target;

  friend bool operator==(const TaggedExample&, const TaggedExample&) = default;
};

/// TwoTag carries register in metadata only; ThreeTag additionally emits an
/// "[Informal]" tag for informal vectors (Formal is the implied default).
enum class TagMode { TwoTag, ThreeTag };

inline std::string format_control_prefix(const ControlVector& cv, std::string_view body,
                                         TagMode mode = TagMode::TwoTag) {
  if (body.empty()) throw PreconditionError("format_control_prefix: body must be non-empty");
  std::string out;
  out.reserve(body.size() + 40);
  out += '[';
  out += to_string(cv.region);
  out += "] [";
  out += to_string(cv.context);
  out += "] ";
  if (mode == TagMode::ThreeTag && cv.register_ == Register::Informal) {
    out += '[';
    out += to_string(cv.register_);
    out += "] ";
  }
  out += body;
  return out;
}

struct ParsedPrefix {
  ControlVector control;
  std::string remainder;

  friend bool operator==(const ParsedPrefix&, const ParsedPrefix&) = default;
};

namespace detail {

// Reads "[label] " at `pos`; returns the label and moves `pos` past the
// trailing space.
inline std::optional<std::string_view> read_tag(std::string_view line, std::size_t& pos) {
  if (pos >= line.size() || line[pos] != '[') return std::nullopt;
  const auto close = line.find(']', pos + 1);
  if (close == std::string_view::npos || close == pos + 1) return std::nullopt;
  if (close + 1 >= line.size() || line[close + 1] != ' ') return std::nullopt;
  auto label = line.substr(pos + 1, close - pos - 1);
  if (label.find('[') != std::string_view::npos) return std::nullopt;
  pos = close + 2;
  return label;
}

}  // namespace detail

/// Inverse of format_control_prefix. A third bracketed tag is consumed only
/// when it names a Register; otherwise it is part of the remainder.
inline ParsedPrefix parse_control_prefix(std::string_view line) {
  std::size_t pos = 0;
  const auto region_tag = detail::read_tag(line, pos);
  const auto context_tag = region_tag ? detail::read_tag(line, pos) : std::nullopt;
  if (!region_tag || !context_tag) throw MalformedPrefix(std::string(line));

  ParsedPrefix parsed;
  parsed.control.region = parse_region(*region_tag);
  parsed.control.context = parse_context(*context_tag);

  std::size_t after_register = pos;
  if (const auto reg_tag = detail::read_tag(line, after_register)) {
    if (const auto reg = try_parse_register(*reg_tag)) {
      parsed.control.register_ = *reg;
      pos = after_register;
    }
  }
  if (pos >= line.size()) throw MalformedPrefix(std::string(line));
  parsed.remainder = std::string(line.substr(pos));
  return parsed;
}

inline TaggedExample tag_record(const SentenceRecord& r, TagMode mode = TagMode::TwoTag) {
  return {format_control_prefix(r.control(), r.input, mode), r.target};
}

// ---------------------------------------------------------------------------
// JSONL

using ordered_json = nlohmann::ordered_json;

inline ordered_json to_json(const SentenceRecord& r) {
  ordered_json j;
  j["input"] = r.input;
  j["target"] = r.target;
  j["region"] = to_string(r.region);
  j["context"] = to_string(r.context);
  j["style"] = to_string(r.style);
  return j;
}

inline ordered_json to_json(const TaggedExample& t) {
  ordered_json j;
  j["tagged_input"] = t.tagged_input;
  j["target"] = t.target;
  return j;
}

inline std::string to_jsonl_line(const SentenceRecord& r) { return to_json(r).dump(); }

inline void write_record(std::ostream& out, const SentenceRecord& r) {
  out << to_jsonl_line(r) << '\n';
}

inline void write_records(std::ostream& out, const std::vector<SentenceRecord>& records) {
  for (const auto& r : records) write_record(out, r);
}

inline void write_tagged(std::ostream& out, const TaggedExample& t) {
  out << to_json(t).dump() << '\n';
}

enum class ReadMode { Strict, Lenient };

/// Parses one JSONL line. Strict mode throws SchemaViolation for any
/// deviation from the five-key schema. Lenient mode fills missing
/// region/context/style with MSA-General/General/Formal, ignores unknown
/// keys, and still throws for lines it cannot repair.
inline SentenceRecord parse_record_line(std::string_view line, std::size_t line_no,
                                        ReadMode mode = ReadMode::Strict) {
  const bool strict = mode == ReadMode::Strict;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaViolation(line_no, "<line>", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw SchemaViolation(line_no, "<line>", "expected a JSON object");

  static constexpr std::string_view kKeys[] = {"input", "target", "region", "context", "style"};
  if (strict) {
    for (const auto& item : j.items()) {
      bool known = false;
      for (auto k : kKeys) known = known || item.key() == k;
      if (!known) throw SchemaViolation(line_no, item.key(), "unexpected key");
    }
  }

  auto text_field = [&](const char* key) {
    const auto it = j.find(key);
    if (it == j.end()) throw SchemaViolation(line_no, key, "missing");
    if (!it->is_string()) throw SchemaViolation(line_no, key, "expected a string");
    auto value = it->get<std::string>();
    if (trim(value).empty()) throw SchemaViolation(line_no, key, "empty after trimming");
    return value;
  };

  auto label_field = [&](const char* key, auto parse, auto fallback) {
    const auto it = j.find(key);
    if (it == j.end()) {
      if (strict) throw SchemaViolation(line_no, key, "missing");
      return fallback;
    }
    if (!it->is_string()) throw SchemaViolation(line_no, key, "expected a string");
    const auto value = it->get<std::string>();
    if (auto parsed = parse(value)) return *parsed;
    throw SchemaViolation(line_no, key, "unknown label \"" + value + "\"");
  };

  SentenceRecord r;
  r.input = text_field("input");
  r.target = text_field("target");
  r.region = label_field("region", try_parse_region, Region::MsaGeneral);
  r.context = label_field("context", try_parse_context, Context::General);
  r.style = label_field("style", try_parse_register, Register::Formal);
  return r;
}

/// Streams records from JSONL. Blank lines are skipped. In lenient mode a
/// line that cannot be repaired is reported through `on_skip` and dropped.
class RecordReader {
 public:
  using SkipHandler = std::function<void(const SchemaViolation&)>;

  explicit RecordReader(std::istream& in, ReadMode mode = ReadMode::Strict,
                        SkipHandler on_skip = {})
      : in_(in), mode_(mode), on_skip_(std::move(on_skip)) {}

  std::optional<SentenceRecord> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (trim(line).empty()) continue;
      if (mode_ == ReadMode::Strict) return parse_record_line(line, line_no_, mode_);
      try {
        return parse_record_line(line, line_no_, mode_);
      } catch (const SchemaViolation& v) {
        ++skipped_;
        if (on_skip_) on_skip_(v);
      }
    }
    return std::nullopt;
  }

  std::size_t line_number() const noexcept { return line_no_; }
  std::size_t skipped() const noexcept { return skipped_; }

 private:
  std::istream& in_;
  ReadMode mode_;
  SkipHandler on_skip_;
  std::size_t line_no_ = 0;
  std::size_t skipped_ = 0;
};

inline std::vector<SentenceRecord> read_records(std::istream& in, ReadMode mode = ReadMode::Strict,
                                                RecordReader::SkipHandler on_skip = {}) {
  std::vector<SentenceRecord> out;
  RecordReader reader(in, mode, std::move(on_skip));
  while (auto r = reader.next()) out.push_back(std::move(*r));
  return out;
}

// ---------------------------------------------------------------------------
// TSV bitext

struct BitextPair {
  std::string source;
  std::string target;
};

/// Reads source<TAB>target lines. Blank lines are skipped; a line without
/// exactly one tab, or with an empty side, is a SchemaViolation.
inline std::vector<BitextPair> read_tsv(std::istream& in) {
  std::vector<BitextPair> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw SchemaViolation(line_no, "<line>", "expected exactly two tab-separated columns");
    }
    BitextPair p{line.substr(0, tab), line.substr(tab + 1)};
    if (trim(p.source).empty()) throw SchemaViolation(line_no, "source", "empty");
    if (trim(p.target).empty()) throw SchemaViolation(line_no, "target", "empty");
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace dforge
