// forge: batch corpus pipeline and steering service front end.
//
//   forge ingest   raw TSV/JSONL -> schema JSONL
//   forge funnel   dedup + dialect-density filtering
//   forge augment  rule-based dialect augmentation of MSA rows
//   forge balance  equalize region classes
//   forge tag      prepend control tags
//   forge stats    region/context/style histograms
//   forge build    funnel | augment | balance | tag in one step
//   forge evaluate corpus + per-region metrics
//   forge steer    one-shot dialectalization
//   forge serve    HTTP steering service
//
// Exit codes: 0 success, 1 domain error, 2 usage error.

#include <chrono>
#include <csignal>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "httplib.h"

#include "dforge/audit_client.hpp"
#include "dforge/error.hpp"
#include "dforge/funnel.hpp"
#include "dforge/labels.hpp"
#include "dforge/lexicon.hpp"
#include "dforge/metrics.hpp"
#include "dforge/pipeline.hpp"
#include "dforge/rbda.hpp"
#include "dforge/record.hpp"
#include "dforge/service.hpp"

#ifndef DFORGE_DATA_DIR
#define DFORGE_DATA_DIR "data"
#endif

namespace {

using namespace dforge;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void log(const std::string& msg) { std::cerr << "forge: " << msg << '\n'; }

// "-" or empty means stdin/stdout.
class Input {
 public:
  explicit Input(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_ = std::make_unique<std::ifstream>(path);
    if (!*file_) throw UsageError("--in: cannot open " + path);
  }
  std::istream& stream() { return file_ ? *file_ : std::cin; }

 private:
  std::unique_ptr<std::ifstream> file_;
};

class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
    if (!*file_) throw UsageError("--out: cannot open " + path);
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

std::vector<Region> parse_region_list(const std::string& list) {
  if (list == "all") return {kAllRegions.begin(), kAllRegions.end()};
  if (list == "dialects") return {kDialectRegions.begin(), kDialectRegions.end()};
  std::vector<Region> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto r = try_parse_region(item);
    if (!r) throw UsageError("--regions: unknown region \"" + item + "\"");
    out.push_back(*r);
  }
  if (out.empty()) throw UsageError("--regions: empty list");
  return out;
}

std::vector<Region> without_msa(std::vector<Region> regions) {
  std::erase(regions, Region::MsaGeneral);
  if (regions.empty()) throw UsageError("--regions: no dialect region to augment into");
  return regions;
}

std::vector<SentenceRecord> read_all(const std::string& path, bool lenient) {
  Input in(path);
  return read_records(in.stream(), lenient ? ReadMode::Lenient : ReadMode::Strict,
                      [](const SchemaViolation& v) { log(std::string("skipped: ") + v.what()); });
}

struct Common {
  std::string in = "-";
  std::string out = "-";
  std::string lexicon = std::string(DFORGE_DATA_DIR) + "/lexicon.json";
  std::uint64_t seed = 42;
  std::size_t jobs = 1;
  bool lenient = false;
};

struct FunnelFlags {
  double threshold = 0.15;
  std::string dedup = "normalized";
  bool no_keep_msa = false;

  FunnelConfig config() const {
    FunnelConfig c;
    c.density_threshold = threshold;
    c.dedup_mode = dedup == "exact" ? DedupMode::Exact : DedupMode::Normalized;
    c.keep_msa = !no_keep_msa;
    return c;
  }
};

struct AugmentFlags {
  std::string regions = "dialects";
  std::optional<std::size_t> cap;
  bool keep_unchanged = false;
  std::string variant = "first";
  bool reinfer_context = false;

  AugmentConfig config(std::uint64_t seed) const {
    AugmentConfig c;
    c.regions = without_msa(parse_region_list(regions));
    if (cap) c.target_per_region = *cap;
    c.rng_seed = seed;
    c.keep_unchanged = keep_unchanged;
    c.variant_choice = variant == "random" ? VariantChoice::SeededRandom : VariantChoice::First;
    c.reinfer_context = reinfer_context;
    return c;
  }
};

void add_common(CLI::App* cmd, Common& c, bool lexicon, bool seed) {
  cmd->add_option("--in", c.in, "input file (default: stdin)");
  cmd->add_option("--out", c.out, "output file (default: stdout)");
  if (lexicon) cmd->add_option("--lexicon", c.lexicon, "lexicon JSON")->check(CLI::ExistingFile);
  if (seed) cmd->add_option("--seed", c.seed, "RNG seed")->capture_default_str();
  cmd->add_flag("--lenient", c.lenient, "repair or skip malformed JSONL lines instead of failing");
}

void add_funnel_flags(CLI::App* cmd, FunnelFlags& f) {
  cmd->add_option("--threshold", f.threshold, "minimum dialect density for the dialect pool")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cmd->add_option("--dedup", f.dedup, "dedup key: exact or normalized")
      ->check(CLI::IsMember({"exact", "normalized"}))
      ->capture_default_str();
  cmd->add_flag("--no-keep-msa", f.no_keep_msa, "reject zero-density rows instead of keeping them");
}

void add_augment_flags(CLI::App* cmd, AugmentFlags& a, bool with_cap) {
  cmd->add_option("--regions", a.regions,
                  "comma-separated regions, or 'all' / 'dialects'")
      ->capture_default_str();
  if (with_cap) {
    cmd->add_option("--target", a.cap, "maximum augmented rows per region")
        ->check(CLI::PositiveNumber);
  }
  cmd->add_flag("--keep-unchanged", a.keep_unchanged, "keep rows with zero substitutions");
  cmd->add_option("--variant", a.variant, "variant choice: first or random")
      ->check(CLI::IsMember({"first", "random"}))
      ->capture_default_str();
  cmd->add_flag("--reinfer-context", a.reinfer_context, "re-run keyword context inference");
}

int run(int argc, char** argv) {
  CLI::App app{"forge: dialect corpus pipeline and steering service"};
  app.require_subcommand(1);
  std::function<void()> action;

  // ingest ------------------------------------------------------------------
  Common ingest_c;
  std::string ingest_format = "auto";
  auto* ingest = app.add_subcommand("ingest", "convert raw TSV bitext (or loose JSONL) to records");
  add_common(ingest, ingest_c, true, false);
  ingest->add_option("--format", ingest_format, "tsv, jsonl or auto (by extension)")
      ->check(CLI::IsMember({"auto", "tsv", "jsonl"}));
  ingest->callback([&] {
    action = [&] {
      const auto lex = load_lexicon(ingest_c.lexicon);
      bool tsv = ingest_format == "tsv";
      if (ingest_format == "auto") tsv = ingest_c.in.ends_with(".tsv");
      Output out(ingest_c.out);
      std::size_t n = 0;
      if (tsv) {
        Input in(ingest_c.in);
        for (const auto& p : read_tsv(in.stream())) {
          write_record(out.stream(), ingest_pair(p, lex));
          ++n;
        }
      } else {
        for (const auto& r : read_all(ingest_c.in, ingest_c.lenient)) {
          write_record(out.stream(), r);
          ++n;
        }
      }
      log("ingest: wrote " + std::to_string(n) + " records");
    };
  });

  // funnel ------------------------------------------------------------------
  Common funnel_c;
  FunnelFlags funnel_f;
  std::string rejected_path;
  auto* funnel = app.add_subcommand("funnel", "deduplicate and filter by dialect density");
  add_common(funnel, funnel_c, true, false);
  add_funnel_flags(funnel, funnel_f);
  funnel->add_option("--rejected", rejected_path, "write rejected rows here");
  funnel->callback([&] {
    action = [&] {
      const auto lex = load_lexicon(funnel_c.lexicon);
      const auto config = funnel_f.config();
      Input in(funnel_c.in);
      Output out(funnel_c.out);
      std::optional<Output> rejected;
      if (!rejected_path.empty()) rejected.emplace(rejected_path);
      RecordReader reader(in.stream(), funnel_c.lenient ? ReadMode::Lenient : ReadMode::Strict,
                          [](const SchemaViolation& v) { log(std::string("skipped: ") + v.what()); });
      Deduper dedup(config.dedup_mode);
      std::size_t dup = 0, dia = 0, msa = 0, rej = 0;
      while (auto r = reader.next()) {
        if (!dedup.admit(*r)) {
          ++dup;
          continue;
        }
        switch (classify(*r, config, lex)) {
          case Bucket::Dialect: ++dia; write_record(out.stream(), *r); break;
          case Bucket::Msa: ++msa; write_record(out.stream(), *r); break;
          case Bucket::Rejected:
            ++rej;
            if (rejected) write_record(rejected->stream(), *r);
            break;
        }
      }
      log("funnel: dialect=" + std::to_string(dia) + " msa=" + std::to_string(msa) +
          " rejected=" + std::to_string(rej) + " duplicates=" + std::to_string(dup));
    };
  });

  // augment -----------------------------------------------------------------
  Common augment_c;
  AugmentFlags augment_f;
  bool only_augmented = false;
  auto* augment = app.add_subcommand("augment", "dialectalize MSA rows into target regions");
  add_common(augment, augment_c, true, true);
  add_augment_flags(augment, augment_f, true);
  augment->add_option("--jobs", augment_c.jobs, "worker threads")->check(CLI::PositiveNumber);
  augment->add_flag("--only-augmented", only_augmented, "emit only the new rows");
  augment->callback([&] {
    action = [&] {
      const auto lex = load_lexicon(augment_c.lexicon);
      const auto config = augment_f.config(augment_c.seed);
      const auto records = read_all(augment_c.in, augment_c.lenient);
      Output out(augment_c.out);
      if (only_augmented) {
        std::vector<SentenceRecord> msa;
        for (const auto& r : records) {
          if (r.region == Region::MsaGeneral) msa.push_back(r);
        }
        const auto added = augment_corpus(msa, config, lex, augment_c.jobs);
        write_records(out.stream(), added);
        log("augment: " + std::to_string(added.size()) + " augmented rows");
      } else {
        const auto all = expand_with_augmentations(records, config, lex, augment_c.jobs);
        write_records(out.stream(), all);
        log("augment: " + std::to_string(all.size() - records.size()) + " augmented rows");
      }
    };
  });

  // balance -----------------------------------------------------------------
  Common balance_c;
  std::size_t balance_target = 0;
  std::string balance_regions;
  auto* balance_cmd = app.add_subcommand("balance", "equalize region classes to --target rows");
  add_common(balance_cmd, balance_c, false, true);
  balance_cmd->add_option("--target", balance_target, "rows per region class")
      ->required()
      ->check(CLI::PositiveNumber);
  balance_cmd->add_option("--regions", balance_regions,
                          "regions that must be present ('all' for all nine)");
  balance_cmd->callback([&] {
    action = [&] {
      const auto records = read_all(balance_c.in, balance_c.lenient);
      const auto required =
          balance_regions.empty() ? std::vector<Region>{} : parse_region_list(balance_regions);
      const auto out_records = balance(records, balance_target, balance_c.seed, required);
      Output out(balance_c.out);
      write_records(out.stream(), out_records);
      log("balance: " + std::to_string(out_records.size()) + " rows");
    };
  });

  // tag ---------------------------------------------------------------------
  Common tag_c;
  bool tag_three = false;
  auto* tag = app.add_subcommand("tag", "prefix inputs with [Region] [Context] tags");
  add_common(tag, tag_c, false, false);
  tag->add_flag("--three-tag", tag_three, "also emit an [Informal] register tag");
  tag->callback([&] {
    action = [&] {
      Input in(tag_c.in);
      Output out(tag_c.out);
      RecordReader reader(in.stream(), tag_c.lenient ? ReadMode::Lenient : ReadMode::Strict,
                          [](const SchemaViolation& v) { log(std::string("skipped: ") + v.what()); });
      const auto mode = tag_three ? TagMode::ThreeTag : TagMode::TwoTag;
      while (auto r = reader.next()) write_tagged(out.stream(), tag_record(*r, mode));
    };
  });

  // stats -------------------------------------------------------------------
  Common stats_c;
  auto* stats = app.add_subcommand("stats", "region/context/style histograms as JSON");
  add_common(stats, stats_c, false, false);
  stats->callback([&] {
    action = [&] {
      Input in(stats_c.in);
      RecordReader reader(in.stream(), stats_c.lenient ? ReadMode::Lenient : ReadMode::Strict);
      CorpusStats s;
      while (auto r = reader.next()) s.add(*r);
      Output out(stats_c.out);
      out.stream() << to_json(s).dump(2) << '\n';
    };
  });

  // build -------------------------------------------------------------------
  Common build_c;
  FunnelFlags build_ff;
  AugmentFlags build_af;
  std::size_t build_target = 0;
  bool build_three = false;
  std::string build_records_out;
  auto* build = app.add_subcommand("build", "funnel, augment, balance and tag in one step");
  add_common(build, build_c, true, true);
  add_funnel_flags(build, build_ff);
  add_augment_flags(build, build_af, false);
  build->add_option("--target", build_target, "rows per region class")
      ->required()
      ->check(CLI::PositiveNumber);
  build->add_option("--aug-cap", build_af.cap, "maximum augmented rows per region")
      ->check(CLI::PositiveNumber);
  build->add_option("--jobs", build_c.jobs, "worker threads")->check(CLI::PositiveNumber);
  build->add_flag("--three-tag", build_three, "also emit an [Informal] register tag");
  build->add_option("--records-out", build_records_out, "also write the balanced records");
  build->callback([&] {
    action = [&] {
      const auto lex = load_lexicon(build_c.lexicon);
      BuildConfig config;
      config.funnel = build_ff.config();
      config.augment = build_af.config(build_c.seed);
      config.target_per_region = build_target;
      config.jobs = build_c.jobs;
      config.tag_mode = build_three ? TagMode::ThreeTag : TagMode::TwoTag;
      // balance requires exactly the regions named on the command line
      if (build_af.regions != "dialects") config.required_regions = parse_region_list(build_af.regions);
      const auto records = build_records(read_all(build_c.in, build_c.lenient), config, lex);
      if (!build_records_out.empty()) {
        Output rec_out(build_records_out);
        write_records(rec_out.stream(), records);
      }
      Output out(build_c.out);
      for (const auto& t : tag_corpus(records, config.tag_mode)) write_tagged(out.stream(), t);
      log("build: " + std::to_string(records.size()) + " tagged examples");
    };
  });

  // evaluate ----------------------------------------------------------------
  Common eval_c;
  bool eval_audit = false;
  auto* evaluate = app.add_subcommand(
      "evaluate", "score {hypothesis, reference, region} JSONL pairs");
  add_common(evaluate, eval_c, true, false);
  evaluate->add_flag("--audit", eval_audit, "also query the auditor at AUDIT_URL per pair");
  evaluate->callback([&] {
    action = [&] {
      const auto lex = load_lexicon(eval_c.lexicon);
      Input in(eval_c.in);
      std::vector<EvalPair> pairs;
      std::string line;
      std::size_t line_no = 0;
      while (std::getline(in.stream(), line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
          pairs.push_back(eval_pair_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::parse_error& e) {
          throw SchemaViolation(line_no, "<line>", e.what());
        } catch (const UnknownLabel& e) {
          throw SchemaViolation(line_no, "region", e.what());
        } catch (const PreconditionError& e) {
          throw SchemaViolation(line_no, "<pair>", e.what());
        }
      }
      auto report = to_json(per_region_report(pairs, lex));
      if (eval_audit) {
        const auto client = AuditClient::from_env();
        if (!client) throw ForgeError("--audit requires AUDIT_URL to be set");
        std::map<Region, std::pair<double, std::size_t>> sums;
        for (const auto& p : pairs) {
          auto& [sum, n] = sums[p.region];
          sum += client->score(p.hypothesis, p.region);
          ++n;
        }
        for (const auto& [region, acc] : sums) {
          report["per_region"][std::string(to_string(region))]["audit"] =
              acc.first / static_cast<double>(acc.second);
        }
      }
      Output out(eval_c.out);
      out.stream() << report.dump(2) << '\n';
    };
  });

  // steer -------------------------------------------------------------------
  Common steer_c;
  std::string steer_text, steer_region, steer_context = "General", steer_register = "Formal";
  bool steer_json_out = false, steer_three = false;
  auto* steer = app.add_subcommand("steer", "dialectalize one sentence");
  steer->add_option("--lexicon", steer_c.lexicon, "lexicon JSON")->check(CLI::ExistingFile);
  steer->add_option("--text", steer_text, "source text")->required();
  steer->add_option("--region", steer_region, "target region")->required();
  steer->add_option("--context", steer_context, "context label")->capture_default_str();
  steer->add_option("--register", steer_register, "register label")->capture_default_str();
  steer->add_flag("--json", steer_json_out, "print the full steering response as JSON");
  steer->add_flag("--three-tag", steer_three, "tagged_form carries an [Informal] tag");
  steer->callback([&] {
    action = [&] {
      ServiceState state;
      state.lexicon = load_lexicon(steer_c.lexicon);
      state.tag_mode = steer_three ? TagMode::ThreeTag : TagMode::TwoTag;
      const ControlVector cv{parse_region(steer_region), parse_context(steer_context),
                             parse_register(steer_register)};
      if (trim(steer_text).empty()) throw UsageError("--text: empty");
      if (steer_json_out) {
        std::cout << steer_json(steer_text, cv, state).dump(2) << '\n';
      } else {
        std::cout << dialectalize(steer_text, cv, state.lexicon).output << '\n';
      }
    };
  });

  // serve -------------------------------------------------------------------
  Common serve_c;
  std::string host = kDefaultHost, corpus_path, cors_origin = "*", static_dir;
  int port = kDefaultPort;
  bool serve_three = false;
  auto* serve = app.add_subcommand("serve", "run the HTTP steering service");
  serve->add_option("--lexicon", serve_c.lexicon, "lexicon JSON")->check(CLI::ExistingFile);
  serve->add_option("--host", host, "bind address")->capture_default_str();
  serve->add_option("--port", port, "bind port")->capture_default_str()->check(CLI::Range(0, 65535));
  serve->add_option("--corpus", corpus_path, "record JSONL served by /stats")
      ->check(CLI::ExistingFile);
  serve->add_option("--cors-origin", cors_origin, "Access-Control-Allow-Origin value")
      ->capture_default_str();
  serve->add_option("--static-dir", static_dir, "serve web UI assets from this directory")
      ->check(CLI::ExistingDirectory);
  serve->add_flag("--three-tag", serve_three, "tagged_form carries an [Informal] tag");
  serve->callback([&] {
    action = [&] {
      ServiceState state;
      state.lexicon = load_lexicon(serve_c.lexicon);
      state.cors_origin = cors_origin;
      state.tag_mode = serve_three ? TagMode::ThreeTag : TagMode::TwoTag;
      if (!corpus_path.empty()) state.corpus_stats = corpus_stats(read_all(corpus_path, false));
      httplib::Server server;
      mount(server, state);
      if (!static_dir.empty()) server.set_mount_point("/", static_dir);
      int bound = port;
      if (port == 0) {
        bound = server.bind_to_any_port(host);
      } else if (!server.bind_to_port(host, port)) {
        throw ForgeError("cannot bind " + host + ":" + std::to_string(port));
      }
      if (bound < 0) throw ForgeError("cannot bind " + host);
      // port 0 picks a free port; print it so callers can discover it
      std::cout << "listening on http://" << host << ":" << bound << std::endl;
      log("serving on " + host + ":" + std::to_string(bound));
      server.listen_after_bind();
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    action();
  } catch (const UsageError& e) {
    std::cerr << "forge: usage error: " << e.what() << '\n';
    return 2;
  } catch (const ForgeError& e) {
    std::cerr << "forge: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::ios::sync_with_stdio(false);
  return run(argc, argv);
}
