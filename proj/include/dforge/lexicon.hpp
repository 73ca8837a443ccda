#pragma once

// The verified MSA -> dialect synonym map, the dialect-marker inventory and
// the keyword -> context map.

#include <algorithm>
#include <bitset>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "dforge/error.hpp"
#include "dforge/labels.hpp"
#include "dforge/text.hpp"

namespace dforge {

/// A set of regions, iterated in canonical order.
class RegionSet {
 public:
  RegionSet() = default;
  RegionSet(std::initializer_list<Region> regions) {
    for (Region r : regions) insert(r);
  }

  void insert(Region r) { bits_.set(index_of(r)); }
  bool contains(Region r) const { return bits_.test(index_of(r)); }
  bool empty() const { return bits_.none(); }
  std::size_t size() const { return bits_.count(); }

  std::vector<Region> to_vector() const {
    std::vector<Region> out;
    for (Region r : kAllRegions) {
      if (contains(r)) out.push_back(r);
    }
    return out;
  }

  RegionSet& operator|=(const RegionSet& other) {
    bits_ |= other.bits_;
    return *this;
  }

  friend bool operator==(const RegionSet&, const RegionSet&) = default;

 private:
  std::bitset<kAllRegions.size()> bits_;
};

/// Normalized tokens of a phrase, the form every lexicon comparison uses.
inline std::vector<std::string> normalized_tokens(std::string_view phrase) {
  std::vector<std::string> out;
  for (const auto& t : tokenize(phrase)) out.push_back(normalize_arabic(t.text));
  return out;
}

struct LexiconEntry {
  std::string rule_id;
  std::string msa_form;
  std::vector<std::string> msa_tokens;  // normalized
  std::map<Region, std::vector<std::string>> variants;
  std::vector<Context> contexts;  // empty: any context
  std::optional<Register> register_;

  bool has_variants(Region r) const { return variants.count(r) != 0; }

  bool admits(Context c, Register reg) const {
    if (register_ && *register_ != reg) return false;
    return contexts.empty() || std::find(contexts.begin(), contexts.end(), c) != contexts.end();
  }

  bool admits(const ControlVector& cv) const {
    return has_variants(cv.region) && admits(cv.context, cv.register_);
  }

  friend bool operator==(const LexiconEntry&, const LexiconEntry&) = default;
};

class Lexicon {
 public:
  Lexicon() = default;

  /// Validates and indexes a parsed lexicon document. Every violation in
  /// the document is collected before throwing.
  static Lexicon from_json(const nlohmann::json& doc, const std::string& source = "<lexicon>");

  const std::vector<LexiconEntry>& entries() const noexcept { return entries_; }

  /// Longest entry admitted by `cv` whose msa tokens match `tokens` starting
  /// at `pos`; ties on length go to the smallest rule_id.
  const LexiconEntry* match_at(std::span<const std::string> tokens, std::size_t pos,
                               const ControlVector& cv) const {
    if (pos >= tokens.size()) return nullptr;
    const auto it = by_first_token_.find(tokens[pos]);
    if (it == by_first_token_.end()) return nullptr;
    for (std::size_t idx : it->second) {
      const auto& e = entries_[idx];
      if (pos + e.msa_tokens.size() > tokens.size() || !e.admits(cv)) continue;
      if (std::equal(e.msa_tokens.begin(), e.msa_tokens.end(), tokens.begin() + pos)) return &e;
    }
    return nullptr;
  }

  /// Like match_at but ignores context/register constraints; used to count
  /// missed substitution opportunities for a region.
  const LexiconEntry* match_any_at(std::span<const std::string> tokens, std::size_t pos,
                                   Region region) const {
    if (pos >= tokens.size()) return nullptr;
    const auto it = by_first_token_.find(tokens[pos]);
    if (it == by_first_token_.end()) return nullptr;
    for (std::size_t idx : it->second) {
      const auto& e = entries_[idx];
      if (pos + e.msa_tokens.size() > tokens.size() || !e.has_variants(region)) continue;
      if (std::equal(e.msa_tokens.begin(), e.msa_tokens.end(), tokens.begin() + pos)) return &e;
    }
    return nullptr;
  }

  /// Variants of the entry whose msa form equals `msa_phrase` (after
  /// normalization) and whose constraints admit the query.
  std::vector<std::string> lookup(std::string_view msa_phrase, Region region, Context context,
                                  Register reg) const {
    const auto tokens = normalized_tokens(msa_phrase);
    const auto* e = match_at(tokens, 0, ControlVector{region, context, reg});
    if (e == nullptr || e->msa_tokens.size() != tokens.size()) return {};
    return e->variants.at(region);
  }

  RegionSet marker_regions(std::string_view token) const {
    const auto it = markers_.find(normalize_arabic(token));
    return it == markers_.end() ? RegionSet{} : it->second;
  }

  bool is_marker(std::string_view token, Region region) const {
    return marker_regions(token).contains(region);
  }

  /// Normalized marker tokens of one region, sorted.
  std::vector<std::string> markers_of(Region region) const {
    std::vector<std::string> out;
    for (const auto& [tok, regions] : markers_) {
      if (regions.contains(region)) out.push_back(tok);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Context for a keyword token, matched case-insensitively on ASCII.
  std::optional<Context> keyword_context(std::string_view token) const {
    const auto it = context_keywords_.find(ascii_lower(normalize_arabic(token)));
    if (it == context_keywords_.end()) return std::nullopt;
    return it->second;
  }

  const std::map<std::string, Context>& context_keywords() const noexcept {
    return context_keywords_sorted_;
  }

  friend bool operator==(const Lexicon& a, const Lexicon& b) {
    return a.entries_ == b.entries_ && a.markers_ == b.markers_ &&
           a.context_keywords_sorted_ == b.context_keywords_sorted_;
  }

 private:
  void build_index() {
    by_first_token_.clear();
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      by_first_token_[entries_[i].msa_tokens.front()].push_back(i);
    }
    for (auto& [tok, idxs] : by_first_token_) {
      std::sort(idxs.begin(), idxs.end(), [&](std::size_t a, std::size_t b) {
        const auto& ea = entries_[a];
        const auto& eb = entries_[b];
        if (ea.msa_tokens.size() != eb.msa_tokens.size())
          return ea.msa_tokens.size() > eb.msa_tokens.size();
        return ea.rule_id < eb.rule_id;
      });
    }
  }

  std::vector<LexiconEntry> entries_;
  std::unordered_map<std::string, RegionSet> markers_;
  std::unordered_map<std::string, Context> context_keywords_;
  std::map<std::string, Context> context_keywords_sorted_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_first_token_;
};

inline Lexicon Lexicon::from_json(const nlohmann::json& doc, const std::string& source) {
  std::vector<LexiconIssue> issues;
  auto issue = [&](std::string location, std::string message) {
    issues.push_back({source + ":" + std::move(location), std::move(message)});
  };

  Lexicon lex;
  if (!doc.is_object()) {
    issue("$", "expected a JSON object");
    throw LexiconFormatError(std::move(issues));
  }

  // markers first so the closure check below can consult them
  if (const auto m = doc.find("markers"); m != doc.end()) {
    if (!m->is_object()) {
      issue("markers", "expected an object of region -> [tokens]");
    } else {
      for (const auto& [key, list] : m->items()) {
        const auto region = try_parse_region(key);
        const std::string loc = "markers." + key;
        if (!region) {
          issue(loc, "unknown region \"" + key + "\"");
          continue;
        }
        if (!list.is_array()) {
          issue(loc, "expected an array of tokens");
          continue;
        }
        for (std::size_t i = 0; i < list.size(); ++i) {
          if (!list[i].is_string() || trim(list[i].get<std::string>()).empty()) {
            issue(loc + "[" + std::to_string(i) + "]", "expected a non-empty string");
            continue;
          }
          lex.markers_[normalize_arabic(list[i].get<std::string>())].insert(*region);
        }
      }
    }
  } else {
    issue("markers", "missing");
  }

  if (const auto k = doc.find("context_keywords"); k != doc.end()) {
    if (!k->is_object()) {
      issue("context_keywords", "expected an object of keyword -> Context");
    } else {
      for (const auto& [key, value] : k->items()) {
        const std::string loc = "context_keywords." + key;
        const auto ctx = value.is_string() ? try_parse_context(value.get<std::string>())
                                           : std::nullopt;
        if (!ctx) {
          issue(loc, "value is not a valid Context label");
          continue;
        }
        const auto norm = ascii_lower(normalize_arabic(key));
        if (norm.empty()) {
          issue(loc, "empty keyword");
          continue;
        }
        lex.context_keywords_[norm] = *ctx;
        lex.context_keywords_sorted_[norm] = *ctx;
      }
    }
  }

  std::map<std::string, std::size_t> seen_ids;
  std::optional<std::string> duplicate;
  const auto entries = doc.find("entries");
  if (entries == doc.end() || !entries->is_array()) {
    issue("entries", "missing or not an array");
  } else {
    for (std::size_t i = 0; i < entries->size(); ++i) {
      const auto& je = (*entries)[i];
      const std::string loc = "entries[" + std::to_string(i) + "]";
      if (!je.is_object()) {
        issue(loc, "expected an object");
        continue;
      }
      LexiconEntry e;
      bool ok = true;

      if (const auto id = je.find("rule_id"); id != je.end() && id->is_string() &&
                                              !trim(id->get<std::string>()).empty()) {
        e.rule_id = id->get<std::string>();
        if (seen_ids.count(e.rule_id)) {
          issue(loc + ".rule_id", "duplicate rule_id \"" + e.rule_id + "\" (first at entries[" +
                                      std::to_string(seen_ids[e.rule_id]) + "])");
          if (!duplicate) duplicate = e.rule_id;
          ok = false;
        } else {
          seen_ids[e.rule_id] = i;
        }
      } else {
        issue(loc + ".rule_id", "missing or empty");
        ok = false;
      }

      if (const auto msa = je.find("msa"); msa != je.end() && msa->is_string()) {
        e.msa_form = msa->get<std::string>();
        e.msa_tokens = normalized_tokens(e.msa_form);
        if (e.msa_tokens.empty() || e.msa_tokens.size() > 4) {
          issue(loc + ".msa", "must contain 1..4 tokens");
          ok = false;
        }
      } else {
        issue(loc + ".msa", "missing or not a string");
        ok = false;
      }
      const auto msa_norm = normalize_arabic(e.msa_form);

      const auto variants = je.find("variants");
      if (variants == je.end() || !variants->is_object() || variants->empty()) {
        issue(loc + ".variants", "missing or empty");
        ok = false;
      } else {
        for (const auto& [key, list] : variants->items()) {
          const std::string vloc = loc + ".variants." + key;
          const auto region = try_parse_region(key);
          if (!region) {
            issue(vloc, "unknown region \"" + key + "\"");
            ok = false;
            continue;
          }
          if (*region == Region::MsaGeneral) {
            issue(vloc, "MSA-General cannot carry dialect variants");
            ok = false;
            continue;
          }
          if (!list.is_array() || list.empty()) {
            issue(vloc, "variant list must be a non-empty array");
            ok = false;
            continue;
          }
          auto& out = e.variants[*region];
          for (std::size_t v = 0; v < list.size(); ++v) {
            const std::string iloc = vloc + "[" + std::to_string(v) + "]";
            if (!list[v].is_string() || trim(list[v].get<std::string>()).empty()) {
              issue(iloc, "expected a non-empty string");
              ok = false;
              continue;
            }
            const auto form = list[v].get<std::string>();
            if (normalize_arabic(form) == msa_norm) {
              issue(iloc, "variant equals the msa form after normalization");
              ok = false;
              continue;
            }
            for (const auto& tok : normalized_tokens(form)) {
              const auto m = lex.markers_.find(tok);
              if (m == lex.markers_.end() || !m->second.contains(*region)) {
                issue(iloc, "token \"" + tok + "\" missing from markers." +
                                std::string(to_string(*region)));
                ok = false;
              }
            }
            out.push_back(form);
          }
        }
      }

      if (const auto ctxs = je.find("contexts"); ctxs != je.end()) {
        if (!ctxs->is_array()) {
          issue(loc + ".contexts", "expected an array of Context labels");
          ok = false;
        } else {
          for (const auto& c : *ctxs) {
            const auto ctx = c.is_string() ? try_parse_context(c.get<std::string>()) : std::nullopt;
            if (!ctx) {
              issue(loc + ".contexts", "invalid Context label " + c.dump());
              ok = false;
            } else {
              e.contexts.push_back(*ctx);
            }
          }
        }
      }

      if (const auto reg = je.find("register"); reg != je.end()) {
        const auto r = reg->is_string() ? try_parse_register(reg->get<std::string>())
                                        : std::nullopt;
        if (!r) {
          issue(loc + ".register", "invalid Register label " + reg->dump());
          ok = false;
        } else {
          e.register_ = *r;
        }
      }

      if (ok) lex.entries_.push_back(std::move(e));
    }
  }

  if (duplicate) throw DuplicateRuleId(*duplicate, std::move(issues));
  if (!issues.empty()) throw LexiconFormatError(std::move(issues));
  lex.build_index();
  return lex;
}

inline Lexicon load_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LexiconFormatError({{path, "cannot open file"}});
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw LexiconFormatError({{path + ":byte " + std::to_string(e.byte), e.what()}});
  }
  return Lexicon::from_json(doc, path);
}

}  // namespace dforge
