#include <gtest/gtest.h>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "httplib.h"
#include "json.hpp"
#include "test_support.hpp"

using testing_support::data_path;
using testing_support::quote;
using testing_support::run;
using testing_support::slurp;

namespace fs = std::filesystem;

namespace {

const std::string kForge = FORGE_BIN;

std::string forge(const std::string& args) { return quote(kForge) + " " + args; }

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("forge_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

const std::string kSeed = quote(data_path("seed.jsonl"));

}  // namespace

TEST_F(Cli, AugmentIsDeterministic) {
  const std::string args = "augment --in " + kSeed + " --lexicon " +
                           quote(data_path("lexicon.json")) +
                           " --regions Egyptian,Gulf --target 100 --seed 7";
  const auto a = run(forge(args + " --out " + quote(path("a.jsonl"))));
  const auto b = run(forge(args + " --out " + quote(path("b.jsonl"))));
  ASSERT_EQ(a.exit_code, 0);
  ASSERT_EQ(b.exit_code, 0);
  const auto out = slurp(path("a.jsonl"));
  EXPECT_FALSE(out.empty());
  EXPECT_EQ(out, slurp(path("b.jsonl")));
  const auto random1 = run(forge(args + " --variant random --jobs 3"));
  const auto random2 = run(forge(args + " --variant random"));
  EXPECT_EQ(random1.out, random2.out);
}

TEST_F(Cli, SteerMoroccan) {
  const auto r = run(forge("steer --text " + quote("الطعام لذيذ") + " --region Moroccan"));
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(r.out, "الماكلة بنينة\n");
}

TEST_F(Cli, SteerJson) {
  const auto r = run(forge("steer --json --text " + quote("أريد أن أذهب إلى السوق") +
                           " --region Levantine"));
  ASSERT_EQ(r.exit_code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["output"], "بدي أن أروح إلى السوق");
  EXPECT_EQ(j["substitutions"].size(), 2u);
}

TEST_F(Cli, PipedStagesEqualBuild) {
  const std::string piped = forge("funnel --in " + kSeed) + " | " + forge("augment") + " | " +
                            forge("balance --target 50") + " | " + forge("tag");
  const auto a = run(piped);
  const auto b = run(forge("build --in " + kSeed + " --target 50"));
  ASSERT_EQ(a.exit_code, 0);
  ASSERT_EQ(b.exit_code, 0);
  EXPECT_FALSE(a.out.empty());
  EXPECT_EQ(a.out, b.out);

  const std::string piped3 = forge("funnel --threshold 0.3 --in " + kSeed) + " | " +
                             forge("augment --seed 9 --variant random") + " | " +
                             forge("balance --target 20 --seed 9") + " | " +
                             forge("tag --three-tag");
  const auto c = run(piped3);
  const auto d = run(forge("build --threshold 0.3 --seed 9 --variant random --three-tag --in " +
                           kSeed + " --target 20 --jobs 4"));
  ASSERT_EQ(c.exit_code, 0);
  EXPECT_EQ(c.out, d.out);
}

TEST_F(Cli, StatsReportsUniformRegions) {
  ASSERT_EQ(run(forge("build --in " + kSeed + " --target 100 --records-out " +
                      quote(path("records.jsonl"))))
                .exit_code,
            0);
  const auto r = run(forge("stats --in " + quote(path("records.jsonl"))));
  ASSERT_EQ(r.exit_code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["total"], 900);
  for (const auto& [k, v] : j["regions"].items()) EXPECT_EQ(v, 100) << k;
}

TEST_F(Cli, IngestTsv) {
  const auto r = run(forge("ingest --in " + quote(data_path("raw_sample.tsv"))));
  ASSERT_EQ(r.exit_code, 0);
  std::istringstream in(r.out);
  const auto rs = dforge::read_records(in);
  ASSERT_EQ(rs.size(), 5u);
  EXPECT_EQ(rs[1].context, dforge::Context::Hospital);
  EXPECT_EQ(rs[2].context, dforge::Context::Tourist);
  EXPECT_EQ(rs[3].context, dforge::Context::Restaurant);
}

TEST_F(Cli, Evaluate) {
  {
    std::ofstream f(path("pairs.jsonl"));
    f << R"({"hypothesis": "a b c d", "reference": "a b c d", "region": "Gulf"})" << '\n';
  }
  const auto r = run(forge("evaluate --in " + quote(path("pairs.jsonl"))));
  ASSERT_EQ(r.exit_code, 0);
  EXPECT_NEAR(nlohmann::json::parse(r.out)["corpus_bleu"].get<double>(), 100.0, 1e-9);
}

TEST_F(Cli, ExitCodes) {
  // domain errors
  EXPECT_EQ(run(forge("steer --text x --region Mars")).exit_code, 1);
  EXPECT_EQ(run("echo 'not json' | " + forge("funnel")).exit_code, 1);
  EXPECT_EQ(run("printf '' | " + forge("augment")).exit_code, 1);
  {
    std::ofstream f(path("egyptian.jsonl"));
    f << R"({"input":"a","target":"عايز","region":"Egyptian","context":"General","style":"Informal"})"
      << '\n';
  }
  EXPECT_EQ(run(forge("balance --target 5 --regions Egyptian,Libyan --in " +
                      quote(path("egyptian.jsonl"))))
                .exit_code,
            1);
  // usage errors
  EXPECT_EQ(run(forge("frobnicate")).exit_code, 2);
  EXPECT_EQ(run(forge("balance")).exit_code, 2);
  EXPECT_EQ(run(forge("funnel --threshold 2 --in " + kSeed)).exit_code, 2);
  EXPECT_EQ(run(forge("augment --variant sometimes --in " + kSeed)).exit_code, 2);
  EXPECT_EQ(run(forge("augment --regions Egyptian,Mars --in " + kSeed)).exit_code, 2);
}

TEST_F(Cli, LenientSkipsBadLines) {
  {
    std::ofstream f(path("mixed.jsonl"));
    f << "garbage\n" << slurp(data_path("seed.jsonl"));
  }
  EXPECT_EQ(run(forge("funnel --in " + quote(path("mixed.jsonl")))).exit_code, 1);
  EXPECT_EQ(run(forge("funnel --lenient --in " + quote(path("mixed.jsonl")))).exit_code, 0);
}

TEST_F(Cli, ServeAnswersOverHttp) {
  ASSERT_EQ(run(forge("build --in " + kSeed + " --target 100 --records-out " +
                      quote(path("records.jsonl")) + " --out /dev/null"))
                .exit_code,
            0);
  int fds[2];
  ASSERT_EQ(::pipe(fds), 0);
  const pid_t pid = ::fork();
  ASSERT_GE(pid, 0);
  if (pid == 0) {
    ::dup2(fds[1], STDOUT_FILENO);
    ::close(fds[0]);
    ::close(fds[1]);
    const std::string corpus = path("records.jsonl");
    ::execl(kForge.c_str(), kForge.c_str(), "serve", "--port", "0", "--corpus", corpus.c_str(),
            static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(fds[1]);
  std::string line;
  char ch;
  while (::read(fds[0], &ch, 1) == 1 && ch != '\n') line += ch;
  ::close(fds[0]);
  const auto colon = line.rfind(':');
  ASSERT_NE(colon, std::string::npos) << line;
  const int port = std::stoi(line.substr(colon + 1));

  httplib::Client cli("127.0.0.1", port);
  auto health = cli.Get("/healthz");
  auto stats = cli.Get("/stats");
  auto steer = cli.Post("/steer", R"({"text": "الطعام لذيذ", "region": "Gulf"})",
                        "application/json");
  ::kill(pid, SIGTERM);
  int status = 0;
  ::waitpid(pid, &status, 0);

  ASSERT_TRUE(health);
  EXPECT_EQ(health->body, "ok");
  ASSERT_TRUE(stats);
  EXPECT_EQ(nlohmann::json::parse(stats->body)["total"], 900);
  ASSERT_TRUE(steer);
  EXPECT_EQ(nlohmann::json::parse(steer->body)["output"], "الأكل زين");
}
