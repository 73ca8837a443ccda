#pragma once

// Rule-based data augmentation: lexical injection, corpus expansion across
// regions, per-region balancing, tagging and corpus statistics.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <future>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "dforge/error.hpp"
#include "dforge/funnel.hpp"
#include "dforge/labels.hpp"
#include "dforge/lexicon.hpp"
#include "dforge/record.hpp"
#include "dforge/text.hpp"

namespace dforge {

/// One applied lexical injection. Token indices refer to tokenize(input);
/// the span is half-open, [start_token, end_token).
struct Substitution {
  std::size_t start_token = 0;
  std::size_t end_token = 0;
  std::string msa_form;  // surface text of the replaced span, as written in the input
  std::string dialect_form;
  std::string rule_id;

  friend bool operator==(const Substitution&, const Substitution&) = default;
};

inline nlohmann::ordered_json to_json(const Substitution& s) {
  nlohmann::ordered_json j;
  j["start_token"] = s.start_token;
  j["end_token"] = s.end_token;
  j["msa_form"] = s.msa_form;
  j["dialect_form"] = s.dialect_form;
  j["rule_id"] = s.rule_id;
  return j;
}

enum class VariantChoice { First, SeededRandom };

// ---------------------------------------------------------------------------
// Seeded sampling. std::uniform_int_distribution is implementation-defined,
// so bounded draws are done here to keep outputs identical across toolchains.

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint32_t a = 0, std::uint32_t b = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), a,
                    b};
  return std::mt19937_64(seq);
}

/// Uniform index in [0, n) by rejection sampling. n must be positive.
inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  const std::uint64_t bound = n;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return static_cast<std::size_t>(x % bound);
}

// ---------------------------------------------------------------------------
// Lexical injection

struct DialectalizeOptions {
  VariantChoice choice = VariantChoice::First;
  std::uint64_t seed = 0;
};

struct DialectalizeResult {
  std::string output;
  std::vector<Substitution> substitutions;
};

namespace detail {

inline std::string splice(std::string_view text, const std::vector<Token>& tokens,
                          const std::vector<Substitution>& subs) {
  std::string out;
  out.reserve(text.size() + 16);
  std::size_t cursor = 0;
  for (const auto& s : subs) {
    const std::size_t begin = tokens[s.start_token].begin;
    const std::size_t end = tokens[s.end_token - 1].end;
    out.append(text.substr(cursor, begin - cursor));
    out.append(s.dialect_form);
    cursor = end;
  }
  out.append(text.substr(cursor));
  return out;
}

}  // namespace detail

/// Greedy longest-first, left-to-right, non-overlapping replacement of
/// lexicon msa forms admitted by `cv`. Text outside replaced spans
/// (including punctuation around a span) is copied verbatim.
inline DialectalizeResult dialectalize(std::string_view text, const ControlVector& cv,
                                       const Lexicon& lex, const DialectalizeOptions& opts = {}) {
  const auto tokens = tokenize(text);
  std::vector<std::string> norm;
  norm.reserve(tokens.size());
  for (const auto& t : tokens) norm.push_back(normalize_arabic(t.text));

  std::optional<std::mt19937_64> rng;
  if (opts.choice == VariantChoice::SeededRandom) rng = make_rng(opts.seed);

  DialectalizeResult result;
  std::size_t i = 0;
  while (i < norm.size()) {
    const auto* e = lex.match_at(norm, i, cv);
    if (e == nullptr) {
      ++i;
      continue;
    }
    const auto& forms = e->variants.at(cv.region);
    const std::size_t pick = rng ? uniform_index(*rng, forms.size()) : 0;
    const std::size_t end = i + e->msa_tokens.size();
    const std::size_t begin_byte = tokens[i].begin;
    const std::size_t end_byte = tokens[end - 1].end;
    result.substitutions.push_back(Substitution{
        i, end, std::string(text.substr(begin_byte, end_byte - begin_byte)), forms[pick],
        e->rule_id});
    i = end;
  }
  result.output = detail::splice(text, tokens, result.substitutions);
  return result;
}

/// Applies a substitution list to the text it was computed from.
inline std::string replay_substitutions(std::string_view text,
                                        const std::vector<Substitution>& subs) {
  const auto tokens = tokenize(text);
  std::size_t prev_end = 0;
  for (const auto& s : subs) {
    if (s.start_token < prev_end || s.start_token >= s.end_token || s.end_token > tokens.size()) {
      throw PreconditionError("replay_substitutions: substitution spans out of order or range");
    }
    const std::size_t b = tokens[s.start_token].begin;
    const std::size_t e = tokens[s.end_token - 1].end;
    if (text.substr(b, e - b) != s.msa_form) {
      throw PreconditionError("replay_substitutions: span text does not match msa_form \"" +
                              s.msa_form + "\"");
    }
    prev_end = s.end_token;
  }
  return detail::splice(text, tokens, subs);
}

// ---------------------------------------------------------------------------
// Corpus expansion

struct AugmentConfig {
  /// Upper bound on augmented rows emitted per region, in input order.
  std::size_t target_per_region = std::numeric_limits<std::size_t>::max();
  std::vector<Region> regions{kDialectRegions.begin(), kDialectRegions.end()};
  std::uint64_t rng_seed = 42;
  bool keep_unchanged = false;
  VariantChoice variant_choice = VariantChoice::First;
  bool reinfer_context = false;

  void validate() const {
    if (target_per_region < 1) throw PreconditionError("target_per_region must be >= 1");
    if (regions.empty()) throw PreconditionError("at least one region is required");
  }
};

inline std::vector<Region> canonical_regions(const std::vector<Region>& regions) {
  RegionSet set;
  for (Region r : regions) set.insert(r);
  return set.to_vector();
}

namespace detail {

inline std::optional<SentenceRecord> augment_one(const SentenceRecord& row, std::size_t row_index,
                                                 Region region, const AugmentConfig& config,
                                                 const Lexicon& lex) {
  const ControlVector cv{region, row.context, Register::Informal};
  DialectalizeOptions opts;
  opts.choice = config.variant_choice;
  if (opts.choice == VariantChoice::SeededRandom) {
    // one independent stream per (row, region) keeps parallel runs identical
    auto rng = make_rng(config.rng_seed, static_cast<std::uint32_t>(row_index),
                        static_cast<std::uint32_t>(index_of(region)));
    opts.seed = rng();
  }
  auto res = dialectalize(row.target, cv, lex, opts);
  if (res.substitutions.empty() && !config.keep_unchanged) return std::nullopt;
  SentenceRecord out = row;
  out.target = std::move(res.output);
  out.region = region;
  out.style = Register::Informal;
  if (config.reinfer_context) out.context = infer_context(out.input + " " + out.target, lex);
  return out;
}

}  // namespace detail

/// For every MSA row and every configured region, emits the row with its
/// target dialectalized, region set and style Informal. Output is row-major
/// with regions in canonical order. `jobs` > 1 computes rows concurrently;
/// the result is identical to the sequential run.
inline std::vector<SentenceRecord> augment_corpus(const std::vector<SentenceRecord>& msa_pool,
                                                  const AugmentConfig& config, const Lexicon& lex,
                                                  std::size_t jobs = 1) {
  config.validate();
  if (msa_pool.empty()) throw EmptyPool();
  for (std::size_t i = 0; i < msa_pool.size(); ++i) {
    if (msa_pool[i].region != Region::MsaGeneral) {
      throw PreconditionError("augment_corpus: row " + std::to_string(i + 1) +
                              " is not MSA-General");
    }
  }
  const auto regions = canonical_regions(config.regions);
  using RowOut = std::vector<std::optional<SentenceRecord>>;
  std::vector<RowOut> per_row(msa_pool.size());

  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      per_row[i].reserve(regions.size());
      for (Region r : regions) {
        per_row[i].push_back(detail::augment_one(msa_pool[i], i, r, config, lex));
      }
    }
  };

  jobs = std::max<std::size_t>(1, std::min(jobs, msa_pool.size()));
  if (jobs == 1) {
    work(0, msa_pool.size());
  } else {
    std::vector<std::future<void>> tasks;
    const std::size_t chunk = (msa_pool.size() + jobs - 1) / jobs;
    for (std::size_t b = 0; b < msa_pool.size(); b += chunk) {
      tasks.push_back(std::async(std::launch::async, work, b, std::min(b + chunk, msa_pool.size())));
    }
    for (auto& t : tasks) t.get();
  }

  std::array<std::size_t, kAllRegions.size()> emitted{};
  std::vector<SentenceRecord> out;
  for (auto& row : per_row) {
    for (auto& rec : row) {
      if (!rec) continue;
      auto& n = emitted[index_of(rec->region)];
      if (n >= config.target_per_region) continue;
      ++n;
      out.push_back(std::move(*rec));
    }
  }
  return out;
}

/// The input rows followed by the augmentations of its MSA-General rows.
inline std::vector<SentenceRecord> expand_with_augmentations(
    const std::vector<SentenceRecord>& records, const AugmentConfig& config, const Lexicon& lex,
    std::size_t jobs = 1) {
  std::vector<SentenceRecord> msa;
  for (const auto& r : records) {
    if (r.region == Region::MsaGeneral) msa.push_back(r);
  }
  auto added = augment_corpus(msa, config, lex, jobs);
  std::vector<SentenceRecord> out = records;
  out.insert(out.end(), std::make_move_iterator(added.begin()),
             std::make_move_iterator(added.end()));
  return out;
}

// ---------------------------------------------------------------------------
// Balancing

/// Equalizes every region class to exactly `target_per_region` rows. Small
/// classes keep all their rows and are topped up by seeded draws with
/// replacement; large classes are cut down by seeded draws without
/// replacement (survivors keep their relative order). Classes are emitted in
/// canonical region order. Every region in `required` must be present.
inline std::vector<SentenceRecord> balance(const std::vector<SentenceRecord>& records,
                                           std::size_t target_per_region, std::uint64_t rng_seed,
                                           const std::vector<Region>& required = {}) {
  if (target_per_region < 1) throw PreconditionError("target_per_region must be >= 1");
  std::array<std::vector<const SentenceRecord*>, kAllRegions.size()> classes;
  for (const auto& r : records) classes[index_of(r.region)].push_back(&r);
  for (Region r : required) {
    if (classes[index_of(r)].empty()) throw MissingClass(std::string(to_string(r)));
  }

  std::vector<SentenceRecord> out;
  for (Region region : kAllRegions) {
    const auto& rows = classes[index_of(region)];
    if (rows.empty()) continue;
    auto rng = make_rng(rng_seed, static_cast<std::uint32_t>(index_of(region)));
    if (rows.size() <= target_per_region) {
      for (const auto* r : rows) out.push_back(*r);
      for (std::size_t k = rows.size(); k < target_per_region; ++k) {
        out.push_back(*rows[uniform_index(rng, rows.size())]);
      }
    } else {
      std::vector<std::size_t> idx(rows.size());
      for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
      for (std::size_t k = 0; k < target_per_region; ++k) {
        std::swap(idx[k], idx[k + uniform_index(rng, idx.size() - k)]);
      }
      idx.resize(target_per_region);
      std::sort(idx.begin(), idx.end());
      for (std::size_t k : idx) out.push_back(*rows[k]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tagging and statistics

inline std::vector<TaggedExample> tag_corpus(const std::vector<SentenceRecord>& records,
                                             TagMode mode = TagMode::TwoTag) {
  std::vector<TaggedExample> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(tag_record(r, mode));
  return out;
}

struct CorpusStats {
  std::array<std::size_t, kAllRegions.size()> regions{};
  std::array<std::size_t, kAllContexts.size()> contexts{};
  std::array<std::size_t, kAllRegisters.size()> styles{};
  std::size_t total = 0;

  void add(const SentenceRecord& r) {
    ++regions[index_of(r.region)];
    ++contexts[index_of(r.context)];
    ++styles[index_of(r.style)];
    ++total;
  }

  std::size_t count(Region r) const { return regions[index_of(r)]; }
  std::size_t count(Context c) const { return contexts[index_of(c)]; }
  std::size_t count(Register s) const { return styles[index_of(s)]; }

  friend bool operator==(const CorpusStats&, const CorpusStats&) = default;
};

inline CorpusStats corpus_stats(const std::vector<SentenceRecord>& records) {
  CorpusStats s;
  for (const auto& r : records) s.add(r);
  return s;
}

/// {"regions": {...}, "contexts": {...}, "styles": {...}, "total": n}, every
/// label present (zero counts included), canonical order.
inline nlohmann::ordered_json to_json(const CorpusStats& s) {
  nlohmann::ordered_json j;
  auto& regions = j["regions"] = nlohmann::ordered_json::object();
  for (Region r : kAllRegions) regions[std::string(to_string(r))] = s.count(r);
  auto& contexts = j["contexts"] = nlohmann::ordered_json::object();
  for (Context c : kAllContexts) contexts[std::string(to_string(c))] = s.count(c);
  auto& styles = j["styles"] = nlohmann::ordered_json::object();
  for (Register r : kAllRegisters) styles[std::string(to_string(r))] = s.count(r);
  j["total"] = s.total;
  return j;
}

}  // namespace dforge
