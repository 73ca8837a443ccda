#pragma once

// Stage functions shared by the individual CLI subcommands and the one-shot
// `build`, so that piping the stages and running `build` agree byte for byte.

#include <cstdint>
#include <optional>
#include <vector>

#include "dforge/funnel.hpp"
#include "dforge/lexicon.hpp"
#include "dforge/rbda.hpp"
#include "dforge/record.hpp"

namespace dforge {

struct FunnelOutput {
  std::vector<SentenceRecord> kept;  // dialect and MSA rows, input order
  std::vector<SentenceRecord> rejected;
  std::size_t duplicates = 0;
  std::size_t dialect = 0;
  std::size_t msa = 0;
};

/// Dedup followed by density routing, as one first-wins pass.
inline FunnelOutput run_funnel(const std::vector<SentenceRecord>& records,
                               const FunnelConfig& config, const Lexicon& lex) {
  config.validate();
  FunnelOutput out;
  Deduper dedup(config.dedup_mode);
  for (auto r : records) {
    if (!dedup.admit(r)) {
      ++out.duplicates;
      continue;
    }
    switch (classify(r, config, lex)) {
      case Bucket::Dialect:
        ++out.dialect;
        out.kept.push_back(std::move(r));
        break;
      case Bucket::Msa:
        ++out.msa;
        out.kept.push_back(std::move(r));
        break;
      case Bucket::Rejected:
        out.rejected.push_back(std::move(r));
        break;
    }
  }
  return out;
}

struct BuildConfig {
  FunnelConfig funnel;
  AugmentConfig augment;
  std::size_t target_per_region = 6400;
  std::vector<Region> required_regions;  // empty: balance whatever is present
  TagMode tag_mode = TagMode::TwoTag;
  std::size_t jobs = 1;
};

/// funnel -> augment -> balance, stopping before tagging.
inline std::vector<SentenceRecord> build_records(const std::vector<SentenceRecord>& records,
                                                 const BuildConfig& config, const Lexicon& lex) {
  const auto funneled = run_funnel(records, config.funnel, lex);
  const auto expanded = expand_with_augmentations(funneled.kept, config.augment, lex, config.jobs);
  return balance(expanded, config.target_per_region, config.augment.rng_seed,
                 config.required_regions);
}

inline std::vector<TaggedExample> build_corpus(const std::vector<SentenceRecord>& records,
                                               const BuildConfig& config, const Lexicon& lex) {
  return tag_corpus(build_records(records, config, lex), config.tag_mode);
}

}  // namespace dforge
