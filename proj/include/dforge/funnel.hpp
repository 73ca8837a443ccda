#pragma once

// The funnel: deduplication, dialect-density scoring and threshold
// filtering, plus keyword-based context inference.

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "dforge/error.hpp"
#include "dforge/labels.hpp"
#include "dforge/lexicon.hpp"
#include "dforge/record.hpp"
#include "dforge/text.hpp"

namespace dforge {

enum class DedupMode { Exact, Normalized };

struct FunnelConfig {
  double density_threshold = 0.15;
  DedupMode dedup_mode = DedupMode::Normalized;
  bool keep_msa = true;

  void validate() const {
    if (!(density_threshold >= 0.0 && density_threshold <= 1.0)) {
      throw PreconditionError("density_threshold must lie in [0, 1]");
    }
  }
};

/// First-wins duplicate filter usable on a stream.
class Deduper {
 public:
  explicit Deduper(DedupMode mode) : mode_(mode) {}

  /// True the first time a key is offered.
  bool admit(const SentenceRecord& r) {
    std::string key;
    if (mode_ == DedupMode::Exact) {
      key = r.input + '\x1f' + r.target;
    } else {
      key = normalize_arabic(r.input) + '\x1f' + normalize_arabic(r.target);
    }
    return seen_.insert(std::move(key)).second;
  }

 private:
  DedupMode mode_;
  std::unordered_set<std::string> seen_;
};

inline std::vector<SentenceRecord> dedup(const std::vector<SentenceRecord>& records,
                                         DedupMode mode) {
  Deduper d(mode);
  std::vector<SentenceRecord> out;
  for (const auto& r : records) {
    if (d.admit(r)) out.push_back(r);
  }
  return out;
}

struct DensityCount {
  std::size_t markers = 0;
  std::size_t tokens = 0;

  double ratio() const {
    return tokens == 0 ? 0.0 : static_cast<double>(markers) / static_cast<double>(tokens);
  }
};

inline DensityCount dialect_density_count(std::string_view text, const Lexicon& lex) {
  DensityCount c;
  for (const auto& tok : tokenize(text)) {
    ++c.tokens;
    if (!lex.marker_regions(tok.text).empty()) ++c.markers;
  }
  return c;
}

/// Fraction of tokens that are dialect markers of any region; 0 for text
/// without tokens.
inline double dialect_density(std::string_view text, const Lexicon& lex) {
  return dialect_density_count(text, lex).ratio();
}

/// Region with the most marker hits in `text`; canonical order breaks ties.
/// MSA-General when no marker occurs.
inline Region dominant_marker_region(std::string_view text, const Lexicon& lex) {
  std::array<std::size_t, kAllRegions.size()> hits{};
  for (const auto& tok : tokenize(text)) {
    for (Region r : lex.marker_regions(tok.text).to_vector()) ++hits[index_of(r)];
  }
  Region best = Region::MsaGeneral;
  std::size_t best_hits = 0;
  for (Region r : kAllRegions) {
    if (hits[index_of(r)] > best_hits) {
      best = r;
      best_hits = hits[index_of(r)];
    }
  }
  return best;
}

enum class Bucket { Dialect, Msa, Rejected };

/// Routes one record by the dialect density of its target side. Dialect
/// rows still labelled MSA-General are relabelled to their dominant marker
/// region and Informal style; MSA rows are relabelled MSA-General.
inline Bucket classify(SentenceRecord& r, const FunnelConfig& config, const Lexicon& lex) {
  const auto count = dialect_density_count(r.target, lex);
  if (count.markers == 0) {
    if (!config.keep_msa) return Bucket::Rejected;
    r.region = Region::MsaGeneral;
    return Bucket::Msa;
  }
  if (count.ratio() < config.density_threshold) return Bucket::Rejected;
  if (r.region == Region::MsaGeneral) {
    r.region = dominant_marker_region(r.target, lex);
    r.style = Register::Informal;
  }
  return Bucket::Dialect;
}

struct FunnelResult {
  std::vector<SentenceRecord> dialect_pool;
  std::vector<SentenceRecord> msa_pool;
  std::vector<SentenceRecord> rejected;
};

inline FunnelResult filter_by_density(const std::vector<SentenceRecord>& records,
                                      const FunnelConfig& config, const Lexicon& lex) {
  config.validate();
  FunnelResult out;
  for (auto r : records) {
    switch (classify(r, config, lex)) {
      case Bucket::Dialect: out.dialect_pool.push_back(std::move(r)); break;
      case Bucket::Msa: out.msa_pool.push_back(std::move(r)); break;
      case Bucket::Rejected: out.rejected.push_back(std::move(r)); break;
    }
  }
  return out;
}

/// Keyword vote over the text's tokens. Ties go to the earlier context in
/// kContextPriority; General when nothing matches.
inline constexpr std::array<Context, 4> kContextPriority = {
    Context::Hospital, Context::Tourist, Context::Restaurant, Context::Education};

inline Context infer_context(std::string_view text, const Lexicon& lex) {
  std::array<std::size_t, kAllContexts.size()> hits{};
  for (const auto& tok : tokenize(text)) {
    if (auto c = lex.keyword_context(tok.text)) ++hits[index_of(*c)];
  }
  Context best = Context::General;
  std::size_t best_hits = 0;
  for (Context c : kContextPriority) {
    if (hits[index_of(c)] > best_hits) {
      best = c;
      best_hits = hits[index_of(c)];
    }
  }
  return best;
}

/// Turns raw bitext into records: MSA-General, Formal, context inferred from
/// both sides.
inline SentenceRecord ingest_pair(const BitextPair& p, const Lexicon& lex) {
  SentenceRecord r;
  r.input = p.source;
  r.target = p.target;
  r.region = Region::MsaGeneral;
  r.context = infer_context(p.source + " " + p.target, lex);
  r.style = Register::Formal;
  return r;
}

}  // namespace dforge
