#pragma once

// Corpus metrics (BLEU, chrF++, exact-match METEOR), the marker-based
// dialect-authenticity rubric, per-region reports and the audit prompt
// format.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "dforge/error.hpp"
#include "dforge/labels.hpp"
#include "dforge/lexicon.hpp"
#include "dforge/text.hpp"

namespace dforge {

struct EvalPair {
  std::string hypothesis;
  std::string reference;
  Region region = Region::MsaGeneral;
};

inline EvalPair eval_pair_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw PreconditionError("evaluation pair must be a JSON object");
  auto text = [&](const char* key) {
    const auto it = j.find(key);
    if (it == j.end() || !it->is_string() || trim(it->get<std::string>()).empty()) {
      throw PreconditionError(std::string("evaluation pair field \"") + key +
                              "\" must be a non-empty string");
    }
    return it->get<std::string>();
  };
  EvalPair p;
  p.hypothesis = text("hypothesis");
  p.reference = text("reference");
  p.region = parse_region(text("region"));
  return p;
}

namespace detail {

using NgramCounts = std::unordered_map<std::string, std::size_t>;

template <typename Seq>
NgramCounts ngram_counts(const Seq& units, std::size_t n, std::string_view sep) {
  NgramCounts counts;
  if (units.size() < n) return counts;
  for (std::size_t i = 0; i + n <= units.size(); ++i) {
    std::string key;
    for (std::size_t k = 0; k < n; ++k) {
      if (k) key += sep;
      key += units[i + k];
    }
    ++counts[key];
  }
  return counts;
}

inline std::size_t clipped_matches(const NgramCounts& hyp, const NgramCounts& ref) {
  std::size_t m = 0;
  for (const auto& [g, c] : hyp) {
    const auto it = ref.find(g);
    if (it != ref.end()) m += std::min(c, it->second);
  }
  return m;
}

inline std::size_t total(const NgramCounts& counts) {
  std::size_t t = 0;
  for (const auto& [g, c] : counts) t += c;
  return t;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// BLEU

struct BleuStats {
  std::array<double, 4> matches{};
  std::array<double, 4> totals{};
  double hyp_len = 0;
  double ref_len = 0;

  void add(std::string_view hypothesis, std::string_view reference) {
    const auto h = token_strings(hypothesis);
    const auto r = token_strings(reference);
    hyp_len += static_cast<double>(h.size());
    ref_len += static_cast<double>(r.size());
    for (std::size_t n = 1; n <= 4; ++n) {
      const auto hc = detail::ngram_counts(h, n, " ");
      const auto rc = detail::ngram_counts(r, n, " ");
      matches[n - 1] += static_cast<double>(detail::clipped_matches(hc, rc));
      totals[n - 1] += static_cast<double>(detail::total(hc));
    }
  }

  /// Geometric mean of modified precisions over the orders that have
  /// candidate n-grams, times the brevity penalty, on a 0..100 scale. An
  /// order with zero matches uses a match count of 1/(2 * total).
  double score() const {
    if (hyp_len == 0) return 0.0;
    double log_sum = 0.0;
    int orders = 0;
    for (std::size_t n = 0; n < 4; ++n) {
      if (totals[n] == 0) continue;
      const double m = matches[n] > 0 ? matches[n] : 1.0 / (2.0 * totals[n]);
      log_sum += std::log(m / totals[n]);
      ++orders;
    }
    const double bp = hyp_len < ref_len ? std::exp(1.0 - ref_len / hyp_len) : 1.0;
    return 100.0 * bp * std::exp(log_sum / orders);
  }
};

inline double bleu(const std::vector<EvalPair>& pairs) {
  if (pairs.empty()) throw EmptyEvalSet();
  BleuStats stats;
  for (const auto& p : pairs) stats.add(p.hypothesis, p.reference);
  return stats.score();
}

// ---------------------------------------------------------------------------
// chrF++

inline constexpr std::size_t kChrfCharOrder = 6;
inline constexpr std::size_t kChrfWordOrder = 2;
inline constexpr double kChrfBeta = 2.0;

/// Sentence chrF++ on a 0..100 scale: per-order F-beta over character
/// 1..6-grams (whitespace removed) and word 1..2-grams, averaged over the
/// orders that occur on either side.
inline double chrf_pp_sentence(std::string_view hypothesis, std::string_view reference) {
  auto chars = [](std::string_view s) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos < s.size()) {
      const std::size_t at = pos;
      const auto cp = utf8::next(s, pos);
      if (cp && is_space(*cp)) continue;
      out.emplace_back(s.substr(at, pos - at));
    }
    return out;
  };
  const auto hc = chars(hypothesis);
  const auto rc = chars(reference);
  const auto hw = token_strings(hypothesis);
  const auto rw = token_strings(reference);

  constexpr double b2 = kChrfBeta * kChrfBeta;
  double f_sum = 0.0;
  int orders = 0;
  auto add_order = [&](const detail::NgramCounts& h, const detail::NgramCounts& r) {
    const auto ht = detail::total(h);
    const auto rt = detail::total(r);
    if (ht == 0 && rt == 0) return;
    ++orders;
    if (ht == 0 || rt == 0) return;
    const double m = static_cast<double>(detail::clipped_matches(h, r));
    const double p = m / static_cast<double>(ht);
    const double rec = m / static_cast<double>(rt);
    if (p + rec > 0) f_sum += (1 + b2) * p * rec / (b2 * p + rec);
  };
  for (std::size_t n = 1; n <= kChrfCharOrder; ++n) {
    add_order(detail::ngram_counts(hc, n, ""), detail::ngram_counts(rc, n, ""));
  }
  for (std::size_t n = 1; n <= kChrfWordOrder; ++n) {
    add_order(detail::ngram_counts(hw, n, " "), detail::ngram_counts(rw, n, " "));
  }
  return orders == 0 ? 0.0 : 100.0 * f_sum / orders;
}

/// Mean sentence chrF++ over the pairs.
inline double chrf_pp(const std::vector<EvalPair>& pairs) {
  if (pairs.empty()) throw EmptyEvalSet();
  double sum = 0.0;
  for (const auto& p : pairs) sum += chrf_pp_sentence(p.hypothesis, p.reference);
  return sum / static_cast<double>(pairs.size());
}

// ---------------------------------------------------------------------------
// METEOR, exact matching only

struct MeteorAlignment {
  std::size_t matches = 0;
  std::size_t chunks = 0;
};

namespace detail {

class ChunkSearch {
 public:
  ChunkSearch(const std::vector<std::string>& hyp, const std::vector<std::string>& ref)
      : hyp_(hyp), ref_(ref), used_(ref.size(), false), align_(hyp.size(), kNone) {
    std::map<std::string, std::size_t> hc, rc;
    for (const auto& t : hyp) ++hc[t];
    for (const auto& t : ref) ++rc[t];
    for (const auto& [t, c] : hc) {
      const auto it = rc.find(t);
      const std::size_t need = it == rc.end() ? 0 : std::min(c, it->second);
      need_[t] = need;
      matches_ += need;
    }
    remaining_.assign(hyp.size() + 1, {});
    for (std::size_t i = hyp.size(); i-- > 0;) {
      remaining_[i] = remaining_[i + 1];
      ++remaining_[i][hyp[i]];
    }
  }

  MeteorAlignment run() {
    if (matches_ == 0) return {};
    best_ = matches_ + 1;
    dfs(0, 0);
    return {matches_, best_};
  }

 private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  static constexpr std::size_t kNodeBudget = 2'000'000;

  void dfs(std::size_t i, std::size_t chunks) {
    if (chunks >= best_) return;
    if (++nodes_ > kNodeBudget && best_ <= matches_) return;
    if (i == hyp_.size()) {
      best_ = chunks;
      return;
    }
    const auto& tok = hyp_[i];
    auto& need = need_[tok];
    const std::size_t prev = i > 0 ? align_[i - 1] : kNone;

    if (need > 0) {
      // contiguous extension first, then every other free occurrence
      auto try_j = [&](std::size_t j) {
        used_[j] = true;
        align_[i] = j;
        --need;
        const bool extends = prev != kNone && j == prev + 1;
        dfs(i + 1, chunks + (extends ? 0 : 1));
        ++need;
        align_[i] = kNone;
        used_[j] = false;
      };
      if (prev != kNone && prev + 1 < ref_.size() && !used_[prev + 1] && ref_[prev + 1] == tok) {
        try_j(prev + 1);
      }
      for (std::size_t j = 0; j < ref_.size(); ++j) {
        if (used_[j] || ref_[j] != tok || (prev != kNone && j == prev + 1)) continue;
        try_j(j);
      }
    }
    // leave position i unaligned only if enough later occurrences remain
    const auto rem = remaining_[i + 1].find(tok);
    const std::size_t later = rem == remaining_[i + 1].end() ? 0 : rem->second;
    if (later >= need) dfs(i + 1, chunks);
  }

  const std::vector<std::string>& hyp_;
  const std::vector<std::string>& ref_;
  std::vector<bool> used_;
  std::vector<std::size_t> align_;
  std::map<std::string, std::size_t> need_;
  std::vector<std::map<std::string, std::size_t>> remaining_;
  std::size_t matches_ = 0;
  std::size_t best_ = 0;
  std::size_t nodes_ = 0;
};

}  // namespace detail

/// Maximum exact unigram matching with the fewest chunks. A chunk is a run
/// of matched hypothesis tokens aligned to consecutive reference tokens.
inline MeteorAlignment meteor_align(const std::vector<std::string>& hyp,
                                    const std::vector<std::string>& ref) {
  return detail::ChunkSearch(hyp, ref).run();
}

inline double meteor_exact_sentence(std::string_view hypothesis, std::string_view reference) {
  const auto h = token_strings(hypothesis);
  const auto r = token_strings(reference);
  const auto a = meteor_align(h, r);
  if (a.matches == 0) return 0.0;
  const double m = static_cast<double>(a.matches);
  const double p = m / static_cast<double>(h.size());
  const double rec = m / static_cast<double>(r.size());
  const double f = 10.0 * p * rec / (rec + 9.0 * p);
  const double frag = static_cast<double>(a.chunks) / m;
  return f * (1.0 - 0.5 * frag * frag * frag);
}

inline double meteor_exact(const std::vector<EvalPair>& pairs) {
  if (pairs.empty()) throw EmptyEvalSet();
  double sum = 0.0;
  for (const auto& p : pairs) sum += meteor_exact_sentence(p.hypothesis, p.reference);
  return sum / static_cast<double>(pairs.size());
}

// ---------------------------------------------------------------------------
// Dialect authenticity

struct AuthenticityCounts {
  std::size_t target_markers = 0;   // tokens that are markers of the target region
  std::size_t foreign_markers = 0;  // marker tokens of other regions only
  std::size_t missed_msa = 0;       // msa forms the target region has a variant for
};

inline AuthenticityCounts authenticity_counts(std::string_view text, Region target,
                                              const Lexicon& lex) {
  AuthenticityCounts c;
  std::vector<std::string> norm;
  for (const auto& t : tokenize(text)) norm.push_back(normalize_arabic(t.text));
  for (const auto& tok : norm) {
    const auto regions = lex.marker_regions(tok);
    if (regions.contains(target)) {
      ++c.target_markers;
    } else if (!regions.empty()) {
      ++c.foreign_markers;
    }
  }
  for (std::size_t i = 0; i < norm.size();) {
    if (const auto* e = lex.match_any_at(norm, i, target)) {
      ++c.missed_msa;
      i += e->msa_tokens.size();
    } else {
      ++i;
    }
  }
  return c;
}

/// 1..5: 1 without target markers, 5 with target markers and nothing
/// foreign or missed, otherwise 1 + round(4 * share of target markers)
/// clamped to 2..4.
inline int authenticity_score(std::string_view text, Region target, const Lexicon& lex) {
  const auto c = authenticity_counts(text, target, lex);
  if (c.target_markers == 0) return 1;
  if (c.foreign_markers == 0 && c.missed_msa == 0) return 5;
  const double share = static_cast<double>(c.target_markers) /
                       static_cast<double>(c.target_markers + c.foreign_markers + c.missed_msa);
  const int score = 1 + static_cast<int>(std::lround(4.0 * share));
  return std::clamp(score, 2, 4);
}

// ---------------------------------------------------------------------------
// Reports

struct RegionScores {
  double bleu = 0;
  double chrf = 0;
  double meteor = 0;
  double authenticity = 0;
  std::size_t n_pairs = 0;
};

struct EvalReport {
  double corpus_bleu = 0;
  double corpus_chrf = 0;
  double corpus_meteor = 0;
  double avg_dialect_score = 0;
  std::map<Region, RegionScores> per_region;
  std::size_t n_pairs = 0;
};

/// Corpus scores plus per-region breakdowns. avg_dialect_score is the
/// unweighted mean of the per-region authenticity means over dialect
/// regions (MSA-General is excluded unless it is the only region present).
inline EvalReport per_region_report(const std::vector<EvalPair>& pairs, const Lexicon& lex) {
  if (pairs.empty()) throw EmptyEvalSet();
  EvalReport report;
  report.n_pairs = pairs.size();
  report.corpus_bleu = bleu(pairs);
  report.corpus_chrf = chrf_pp(pairs);
  report.corpus_meteor = meteor_exact(pairs);

  std::map<Region, std::vector<EvalPair>> groups;
  for (const auto& p : pairs) groups[p.region].push_back(p);

  double dialect_sum = 0.0, all_sum = 0.0;
  std::size_t dialect_groups = 0;
  for (const auto& [region, group] : groups) {
    RegionScores s;
    s.n_pairs = group.size();
    s.bleu = bleu(group);
    s.chrf = chrf_pp(group);
    s.meteor = meteor_exact(group);
    double auth = 0.0;
    for (const auto& p : group) auth += authenticity_score(p.hypothesis, region, lex);
    s.authenticity = auth / static_cast<double>(group.size());
    report.per_region[region] = s;
    all_sum += s.authenticity;
    if (region != Region::MsaGeneral) {
      dialect_sum += s.authenticity;
      ++dialect_groups;
    }
  }
  report.avg_dialect_score = dialect_groups > 0
                                 ? dialect_sum / static_cast<double>(dialect_groups)
                                 : all_sum / static_cast<double>(groups.size());
  return report;
}

inline nlohmann::ordered_json to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["corpus_bleu"] = r.corpus_bleu;
  j["corpus_chrf"] = r.corpus_chrf;
  j["corpus_meteor"] = r.corpus_meteor;
  j["avg_dialect_score"] = r.avg_dialect_score;
  j["n_pairs"] = r.n_pairs;
  auto& per = j["per_region"] = nlohmann::ordered_json::object();
  for (const auto& [region, s] : r.per_region) {
    auto& o = per[std::string(to_string(region))];
    o["bleu"] = s.bleu;
    o["chrf"] = s.chrf;
    o["meteor"] = s.meteor;
    o["authenticity"] = s.authenticity;
    o["n_pairs"] = s.n_pairs;
  }
  return j;
}

// ---------------------------------------------------------------------------
// LLM audit interface

inline std::string audit_prompt(std::string_view text, Region target) {
  const std::string label(to_string(target));
  std::string p;
  p += "You are auditing machine translation output for dialectal alignment.\n";
  p += "Target dialect: " + label + "\n";
  p += "System output (anonymized):\n<<<\n";
  p += text;
  p += "\n>>>\n";
  p += "Judge dialectal alignment rather than fluency or semantic adequacy: how well do the "
       "lexical choices and register match " + label + " Arabic?\n";
  p += "Rubric:\n";
  p += "5 - fully in the target dialect; region-appropriate markers, no standard-Arabic or "
       "other-dialect forms\n";
  p += "4 - mostly the target dialect with a minor standard or foreign form\n";
  p += "3 - mixed: target-dialect markers alongside standard Arabic forms\n";
  p += "2 - mostly standard Arabic or another dialect with a trace of the target\n";
  p += "1 - no target-dialect markers; standard Arabic or another variety\n";
  p += "Reply with a single integer from 1 to 5.\n";
  return p;
}

/// First standalone integer in 1..5 found in the response.
inline int parse_audit_response(std::string_view response) {
  std::size_t i = 0;
  while (i < response.size()) {
    if (!std::isdigit(static_cast<unsigned char>(response[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < response.size() && std::isdigit(static_cast<unsigned char>(response[j]))) ++j;
    if (j - i == 1 && response[i] >= '1' && response[i] <= '5') return response[i] - '0';
    i = j;
  }
  throw UnparseableAudit(std::string(response));
}

}  // namespace dforge
