// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails. Usage: acceptance <work-dir>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include "dforge/funnel.hpp"
#include "dforge/metrics.hpp"
#include "dforge/pipeline.hpp"
#include "dforge/rbda.hpp"
#include "dforge/service.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace dforge;
using nlohmann::json;
using testing_support::data_path;
using testing_support::quote;
using testing_support::run;
using testing_support::seed_lexicon;
using testing_support::slurp;

namespace fs = std::filesystem;

namespace {

// Collects failure messages for one criterion.
struct Check {
  std::vector<std::string> failures;

  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string forge(const std::string& args) { return quote(FORGE_BIN) + " " + args; }

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

// --------------------------------------------------------------------------

void pipeline_shape(Check& c, const fs::path& work) {
  const std::string seed = quote(data_path("seed.jsonl"));

  auto t0 = std::chrono::steady_clock::now();
  const auto desk = run(forge("funnel --threshold 0.15 --in " + seed) + " | " +
                        forge("augment") + " | " +
                        forge("balance --regions all --target 100") + " | " + forge("tag"));
  const double desk_s = seconds_since(t0);
  c.expect(desk.exit_code == 0, "desk-scale pipeline exited " + std::to_string(desk.exit_code));
  std::array<std::size_t, kAllRegions.size()> per_class{};
  std::size_t lines = 0;
  std::istringstream in(desk.out);
  for (std::string line; std::getline(in, line);) {
    ++lines;
    const auto tagged = json::parse(line)["tagged_input"].get<std::string>();
    ++per_class[index_of(parse_control_prefix(tagged).control.region)];
  }
  c.expect(lines == 900, "desk-scale rows " + std::to_string(lines) + " != 900");
  for (Region r : kAllRegions) {
    c.expect(per_class[index_of(r)] == 100,
             std::string(to_string(r)) + " has " + std::to_string(per_class[index_of(r)]));
  }
  c.expect(desk_s < 5.0, "desk-scale run took " + std::to_string(desk_s) + " s");

  const auto records = (work / "full_records.jsonl").string();
  t0 = std::chrono::steady_clock::now();
  const auto full = run(forge("build --threshold 0.15 --regions all --target 6400 --in " + seed +
                              " --out " + quote((work / "full_tagged.jsonl").string()) +
                              " --records-out " + quote(records)));
  const auto stats = run(forge("stats --in " + quote(records)));
  const double full_s = seconds_since(t0);
  c.expect(full.exit_code == 0 && stats.exit_code == 0, "full-shape build or stats failed");
  if (stats.exit_code == 0) {
    const auto j = json::parse(stats.out);
    for (Region r : kAllRegions) {
      c.expect(j["regions"][std::string(to_string(r))] == 6400,
               std::string(to_string(r)) + " count is not 6400");
    }
    c.expect(j["regions"]["Levantine-North"].get<int>() + j["regions"]["Levantine-South"].get<int>() ==
                 12800,
             "Levantine N+S != 12800");
    c.expect(j["total"] == 57600, "total != 57600");
  }
  c.expect(full_s < 120.0, "full-shape run took " + std::to_string(full_s) + " s");
}

void steering_goldens(Check& c) {
  const auto& lex = seed_lexicon();
  auto steer = [&](const char* text, Region r, Context ctx) {
    return dialectalize(text, {r, ctx, Register::Informal}, lex).output;
  };
  const std::string want = "أريد أن أذهب إلى السوق";
  const std::string food = "الطعام لذيذ";

  const auto egy = steer(want.c_str(), Region::Egyptian, Context::General);
  c.expect(contains(egy, "عايز") && contains(egy, "أروح") && !contains(egy, "أريد"),
           "Egyptian market row: " + egy);
  const auto lev = steer(want.c_str(), parse_region("Levantine"), Context::General);
  c.expect(contains(lev, "بدي"), "Levantine market row: " + lev);
  const auto gulf = steer(food.c_str(), Region::Gulf, Context::Restaurant);
  c.expect(contains(gulf, "زين"), "Gulf food row: " + gulf);
  for (Region r : {Region::Moroccan, Region::Algerian}) {
    const auto out = steer(food.c_str(), r, Context::Restaurant);
    c.expect(contains(out, "الماكلة") && contains(out, "بنينة"),
             std::string(to_string(r)) + " food row: " + out);
  }
  const auto med = steer("معدتي تؤلمني", Region::Egyptian, parse_context("Medical"));
  c.expect(contains(med, "بتوجعني"), "Egyptian medical row: " + med);
}

void metric_oracles(Check& c) {
  std::mt19937 rng(2024);
  for (int i = 0; i < 200; ++i) {
    const auto h = oracle::random_sentence(rng, 8);
    const auto r = oracle::random_sentence(rng, 8);
    const std::vector<EvalPair> ps = {{h, r, Region::Gulf}};
    const double db = std::abs(bleu(ps) - oracle::bleu({{h, r}}));
    const double dc = std::abs(chrf_pp(ps) - oracle::chrf({{h, r}}));
    const double dm = std::abs(meteor_exact(ps) - oracle::meteor({{h, r}}));
    c.expect(db <= 1e-6 && dc <= 1e-6 && dm <= 1e-6, "oracle mismatch on \"" + h + "\" / \"" + r + "\"");
  }
  const std::vector<EvalPair> same = {
      {"بدي أروح إلى السوق كل يوم", "بدي أروح إلى السوق كل يوم", Region::LevantineNorth},
      {"a b c d e", "a b c d e", Region::Gulf}};
  c.expect(std::abs(bleu(same) - 100.0) < 1e-9, "identity BLEU != 100");
  c.expect(std::abs(chrf_pp(same) - 100.0) < 1e-9, "identity chrF++ != 100");
  c.expect(meteor_exact(same) >= 0.99, "identity METEOR < 0.99");
  const std::vector<EvalPair> disjoint = {
      {"a b c d e f", "s t u v w x", Region::Gulf},
      {"g h i j k l", "y z q r p o", Region::Gulf},
      {"m n aa bb cc dd", "ee ff gg hh ii jj", Region::Gulf}};
  c.expect(bleu(disjoint) <= 1.0, "disjoint BLEU > 1");
  c.expect(chrf_pp(disjoint) == 0.0, "disjoint chrF++ != 0");
  c.expect(meteor_exact(disjoint) == 0.0, "disjoint METEOR != 0");
}

void accuracy_paradox(Check& c) {
  const auto& lex = seed_lexicon();
  std::ifstream in(data_path("eval_fixture.jsonl"));
  std::vector<EvalPair> passthrough, dialectal;
  for (std::string line; std::getline(in, line);) {
    if (trim(line).empty()) continue;
    const auto j = json::parse(line);
    const auto src = j["source"].get<std::string>();
    const auto ref = j["reference"].get<std::string>();
    const Region region = parse_region(j["region"].get<std::string>());
    const Context ctx = parse_context(j["context"].get<std::string>());
    passthrough.push_back({src, ref, region});
    dialectal.push_back({dialectalize(src, {region, ctx, Register::Informal}, lex).output, ref,
                         region});
  }
  c.expect(!passthrough.empty(), "fixture is empty");
  if (passthrough.empty()) return;
  const auto pass = per_region_report(passthrough, lex);
  const auto dial = per_region_report(dialectal, lex);
  std::ostringstream msg;
  msg << "BLEU " << pass.corpus_bleu << " vs " << dial.corpus_bleu << ", authenticity "
      << pass.avg_dialect_score << " vs " << dial.avg_dialect_score;
  c.expect(pass.corpus_bleu > dial.corpus_bleu, "passthrough BLEU not higher: " + msg.str());
  c.expect(dial.avg_dialect_score >= 4.5, "dialectalized authenticity < 4.5: " + msg.str());
  c.expect(pass.avg_dialect_score == 1.0, "passthrough authenticity != 1.0: " + msg.str());
  c.expect(dial.avg_dialect_score > pass.avg_dialect_score, "authenticity not higher: " + msg.str());
  std::cout << "  fixture: " << msg.str() << '\n';
}

void property_suites(Check& c) {
  const auto& lex = seed_lexicon();
  std::mt19937 rng(7);
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };

  // tag round-trip
  for (int i = 0; i < 1000; ++i) {
    const ControlVector cv{kAllRegions[pick(9)], kAllContexts[pick(5)], kAllRegisters[pick(2)]};
    const std::string body = "body " + std::to_string(rng()) + (i % 2 ? " بدي" : " [x]");
    const auto p = parse_control_prefix(format_control_prefix(cv, body, TagMode::ThreeTag));
    if (!(p.control == cv && p.remainder == body)) {
      c.expect(false, "tag round-trip failed for " + body);
      break;
    }
  }

  // dedup idempotence
  const auto seed = testing_support::seed_records();
  for (auto mode : {DedupMode::Exact, DedupMode::Normalized}) {
    const auto once = dedup(seed, mode);
    c.expect(dedup(once, mode) == once && once.size() <= seed.size(), "dedup not idempotent");
  }

  // density range and monotonicity
  static const char* kWords[] = {"بدي", "أروح", "السوق", "إلى", "زين", "الطعام", "x"};
  const auto markers = lex.markers_of(Region::Gulf);
  for (int i = 0; i < 1000; ++i) {
    std::string s;
    for (std::size_t k = pick(8); k > 0; --k) s += std::string(kWords[pick(7)]) + " ";
    const auto before = dialect_density_count(s, lex);
    const auto after = dialect_density_count(s + markers[pick(markers.size())], lex);
    if (before.ratio() < 0 || before.ratio() > 1 || after.markers < before.markers) {
      c.expect(false, "density property failed for " + s);
      break;
    }
  }

  // balance exactness, membership, determinism
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<SentenceRecord> rs;
    std::size_t present = 0;
    for (Region r : kAllRegions) {
      const std::size_t n = pick(20);
      present += n > 0;
      for (std::size_t k = 0; k < n; ++k) {
        rs.push_back({std::to_string(k), "t", r, Context::General, Register::Formal});
      }
    }
    if (!present) continue;
    const std::size_t target = 1 + pick(25);
    const auto out = balance(rs, target, trial);
    bool ok = out.size() == target * present && balance(rs, target, trial) == out;
    for (const auto& r : out) ok = ok && std::find(rs.begin(), rs.end(), r) != rs.end();
    const auto stats = corpus_stats(out);
    for (Region r : kAllRegions) {
      ok = ok && (stats.count(r) == 0 || stats.count(r) == target);
    }
    if (!ok) {
      c.expect(false, "balance property failed in trial " + std::to_string(trial));
      break;
    }
  }

  // substitution replay
  static const char* kMsa[] = {"أريد", "أذهب", "الطعام", "لذيذ", "معدتي", "تؤلمني", "يجب",
                               "طبيب", "إلى", "،", "السوق"};
  for (int i = 0; i < 1000; ++i) {
    std::string s;
    for (std::size_t k = 1 + pick(8); k > 0; --k) s += std::string(kMsa[pick(11)]) + " ";
    const ControlVector cv{kAllRegions[pick(9)], kAllContexts[pick(5)], kAllRegisters[pick(2)]};
    const auto res = dialectalize(s, cv, lex);
    if (replay_substitutions(s, res.substitutions) != res.output) {
      c.expect(false, "replay mismatch for " + s);
      break;
    }
  }

  // seeded determinism of augment and balance
  BuildConfig cfg;
  cfg.target_per_region = 200;
  cfg.augment.variant_choice = VariantChoice::SeededRandom;
  const auto a = build_records(seed, cfg, lex);
  cfg.jobs = 4;
  c.expect(build_records(seed, cfg, lex) == a, "augment/balance not deterministic");
}

void service_contract(Check& c) {
  ServiceState state;
  state.lexicon = seed_lexicon();
  BuildConfig cfg;
  cfg.target_per_region = 100;
  state.corpus_stats = corpus_stats(build_records(testing_support::seed_records(), cfg, state.lexicon));

  httplib::Server server;
  mount(server, state);
  const int port = server.bind_to_any_port("127.0.0.1");
  if (port <= 0) {
    c.expect(false, "cannot bind an ephemeral port");
    return;
  }
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client cli("127.0.0.1", port);

  auto health = cli.Get("/healthz");
  c.expect(health && health->status == 200 && health->body == "ok", "/healthz");

  auto steer = cli.Post("/steer",
                        json{{"text", "أريد أن أذهب إلى السوق"}, {"region", "Levantine"}}.dump(),
                        "application/json");
  c.expect(steer && steer->status == 200 &&
               contains(json::parse(steer->body)["output"].get<std::string>(), "بدي"),
           "/steer Levantine");
  auto nomatch = cli.Post("/steer", R"({"text": "إلى", "region": "Gulf"})", "application/json");
  c.expect(nomatch && nomatch->status == 200 && json::parse(nomatch->body)["output"] == "إلى" &&
               json::parse(nomatch->body)["substitutions"].empty(),
           "/steer no-match");
  auto mars = cli.Post("/steer", R"({"text": "x", "region": "Mars"})", "application/json");
  c.expect(mars && mars->status == 400, "/steer unknown label");
  auto empty = cli.Post("/steer", R"({"text": "", "region": "Gulf"})", "application/json");
  c.expect(empty && empty->status == 422, "/steer empty text");

  auto eval = cli.Post("/evaluate",
                       R"([{"hypothesis": "a b c", "reference": "a b c", "region": "Gulf"}])",
                       "application/json");
  c.expect(eval && eval->status == 200 &&
               std::abs(json::parse(eval->body)["corpus_bleu"].get<double>() - 100.0) < 1e-9,
           "/evaluate identical pairs");
  auto bad = cli.Post("/evaluate", "{", "application/json");
  c.expect(bad && bad->status == 400, "/evaluate malformed body");

  auto stats = cli.Get("/stats");
  bool uniform = stats && stats->status == 200;
  if (uniform) {
    for (const auto& [k, v] : json::parse(stats->body)["regions"].items()) uniform = uniform && v == 100;
  }
  c.expect(uniform, "/stats uniform histogram");

  auto regions = cli.Get("/regions");
  c.expect(regions && regions->status == 200 &&
               json::parse(regions->body)["regions"].size() == 9 &&
               json::parse(regions->body)["aliases"]["Levantine"] == "Levantine-North",
           "/regions inventory");

  server.stop();
  t.join();

  ServiceState bare;
  bare.lexicon = seed_lexicon();
  c.expect(handle_stats(bare).status == 404, "/stats without corpus");
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "forge_acceptance";
  fs::create_directories(work);

  const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria = {
      {"pipeline shape (900 desk rows; 6,400 per class, 57,600 total)",
       [&](Check& c) { pipeline_shape(c, work); }},
      {"steering goldens (six table rows)", steering_goldens},
      {"metric oracle equivalence (BLEU, chrF++, METEOR-exact)", metric_oracles},
      {"accuracy-paradox direction on the bundled fixture", accuracy_paradox},
      {"property suites", property_suites},
      {"service contract (/steer /evaluate /stats /regions /healthz)", service_contract},
  };

  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Check c;
    try {
      fn(c);
    } catch (const std::exception& e) {
      c.failures.push_back(std::string("exception: ") + e.what());
    }
    std::cout << (c.failures.empty() ? "PASS " : "FAIL ") << name << '\n';
    for (const auto& f : c.failures) std::cout << "  - " << f << '\n';
    failed += !c.failures.empty();
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
