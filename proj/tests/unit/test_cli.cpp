#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include "helpers.hpp"
#include "veriscribe/cli.hpp"
#include "veriscribe/io_util.hpp"

using namespace veriscribe;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::vector<const char*> argv = {"veriscribe"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("help enumerates every flag") {
  const Result r = run({"--help"});
  CHECK(r.code == 0);
  for (const char* word : {"schema", "synth", "partition", "calibrate", "train-laam", "verify", "evaluate", "explain",
                           "--mode", "--ratios", "--seed", "--pair-strategy", "--ocs", "--alpha", "--threshold",
                           "--laam-threshold", "--method", "--regime", "--format", "--soft-out", "--sharpness",
                           "--consistency", "--salience", "--bottom", "--config", "--model", "--seeds",
                           "VERISCRIBE_SEED"}) {
    CHECK_MESSAGE(r.out.find(word) != std::string::npos, word);
  }
}

TEST_CASE("usage errors exit 2") {
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"synth", "--writers", "3"}).code == 2);
  CHECK(run({"synth", "--writers", "x", "--samples", "2", "-o", "a"}).code == 2);
}

TEST_CASE("synth is deterministic and honours the seed variable") {
  test::TempDir dir;
  const std::string a = (dir / "a.csv").string(), b = (dir / "b.csv").string(), c = (dir / "c.csv").string();
  REQUIRE(run({"synth", "--writers", "20", "--samples", "10", "--consistency", "0.9", "--seed", "7", "-o", a}).code == 0);
  REQUIRE(run({"synth", "--writers", "20", "--samples", "10", "--consistency", "0.9", "--seed", "7", "-o", b}).code == 0);
  CHECK(read_text_file(a) == read_text_file(b));
  ::setenv("VERISCRIBE_SEED", "7", 1);
  REQUIRE(run({"synth", "--writers", "20", "--samples", "10", "--consistency", "0.9", "-o", c}).code == 0);
  ::unsetenv("VERISCRIBE_SEED");
  CHECK(read_text_file(c) == read_text_file(a));
}

TEST_CASE("pipeline") {
  test::TempDir dir;
  const std::string d = dir.path().string() + "/";
  REQUIRE(run({"synth", "--writers", "20", "--samples", "10", "--seed", "3", "-o", d + "l.csv", "--soft-out",
               d + "s.jsonl"})
              .code == 0);
  const std::string before = read_text_file(d + "s.jsonl");

  SUBCASE("daam without soft vectors names the input") {
    const Result r = run({"evaluate", "--method", "daam", "--regime", "unseen", "--input", d + "l.csv"});
    CHECK(r.code == 1);
    CHECK(r.err.find("l.csv") != std::string::npos);
    CHECK(r.out.empty());
  }
  SUBCASE("evaluate writes the report") {
    const Result r = run({"evaluate", "--input", d + "s.jsonl", "--seed", "3", "-o", d + "r.csv"});
    REQUIRE(r.code == 0);
    const std::string report = read_text_file(d + "r.csv");
    CHECK(report.rfind("method,regime,TP,FP,TN,FN,", 0) == 0);
    CHECK(std::count(report.begin(), report.end(), '\n') == 7);
    CHECK(run({"evaluate", "--method", "laam", "--regime", "seen", "--input", d + "l.csv"}).code == 0);
  }
  SUBCASE("partition") {
    const Result r = run({"partition", "--input", d + "s.jsonl", "--mode", "unseen", "--out-dir", d + "p",
                          "--pair-strategy", "all"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("train=120 val=40 test=40") != std::string::npos);
    CHECK(read_dataset(d + "p/val.jsonl", builtin_schema()).size() == 40);
    const std::string pairs = read_text_file(d + "p/val_pairs.csv");
    CHECK(std::count(pairs.begin(), pairs.end(), '\n') == 1 + 40 * 39 / 2);
  }
  SUBCASE("calibrate, train, verify, explain") {
    REQUIRE(run({"calibrate", "daam", "--input", d + "s.jsonl", "-o", d + "sweep.csv", "--threshold-out",
                 d + "t.cfg"})
                .code == 0);
    CHECK(read_text_file(d + "t.cfg").find("threshold=") != std::string::npos);
    REQUIRE(run({"train-laam", "--input", d + "l.csv", "-o", d + "m.json"}).code == 0);
    REQUIRE(run({"calibrate", "laam", "--input", d + "l.csv", "--model", d + "m.json", "-o", d + "lsweep.csv"}).code ==
            0);
    CHECK(run({"calibrate", "laam", "--input", d + "l.csv"}).code == 1);

    Result v = run({"verify", "--input", d + "s.jsonl", "--questioned", "w001/s001", "--known", "w001/s002",
                    "--config", d + "t.cfg"});
    CHECK(v.code == 0);
    CHECK(v.out.rfind("verdict=", 0) == 0);
    v = run({"verify", "--method", "laam", "--model", d + "m.json", "--input", d + "l.csv", "--questioned",
             "w001/s001", "--known", "w009/s002"});
    CHECK(v.code == 0);
    CHECK(run({"verify", "--input", d + "s.jsonl", "--questioned", "w001/s001", "--known", "w099/s001",
               "--threshold", "0.5"})
              .code == 1);
    CHECK(run({"verify", "--input", d + "s.jsonl", "--questioned", "w001/s001", "--known", "w002/s001"}).code == 1);

    const Result e = run({"explain", "--method", "laam", "--model", d + "m.json", "--input", d + "s.jsonl",
                          "--questioned", "w001/s001", "--known", "w002/s001", "--format", "plotdata"});
    CHECK(e.code == 0);
    CHECK(e.out.rfind("feature,q_class,k_class,code,log_same,log_different,contribution\n", 0) == 0);
    CHECK(run({"explain", "--input", d + "s.jsonl", "--questioned", "w001/s001", "--known", "w002/s001",
               "--threshold", "0.8", "--format", "json", "-o", d + "e.json"})
              .code == 0);
    CHECK(read_text_file(d + "e.json").find("\"lowlights\"") != std::string::npos);
  }
  SUBCASE("failed runs leave no output") {
    write_text_file_atomic(d + "broken.csv", "writer_id,sample_id\n");
    CHECK(run({"train-laam", "--input", d + "broken.csv", "-o", d + "never.json"}).code == 1);
    CHECK_FALSE(std::filesystem::exists(d + "never.json"));
  }
  SUBCASE("schema") {
    REQUIRE(run({"schema", "-o", d + "schema.txt"}).code == 0);
    const Result r = run({"schema", "--check", d + "schema.txt"});
    CHECK(r.code == 0);
    CHECK(r.out == "ok: 15 features, 10 edges\n");
    write_text_file_atomic(d + "bad.txt", "veriscribe-schema 1\nfeature f1\n  colour: red\n");
    CHECK(run({"schema", "--check", d + "bad.txt"}).code == 1);
    CHECK(run({"synth", "--writers", "2", "--samples", "2", "-o", d + "x.csv", "--schema", d + "schema.txt"}).code == 0);
  }
  CHECK(read_text_file(d + "s.jsonl") == before);
}
