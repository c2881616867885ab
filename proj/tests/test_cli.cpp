#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "spooftrace/png_io.hpp"

namespace fs = std::filesystem;

namespace {

#ifndef SPOOFTRACE_CLI_PATH
#error "SPOOFTRACE_CLI_PATH must be defined by the build"
#endif

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string(SPOOFTRACE_CLI_PATH) + " " + args + " 2>&1";
  std::array<char, 512> buf;
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  while (fgets(buf.data(), buf.size(), pipe)) r.output += buf.data();
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

int count_rows(const fs::path& csv) {
  std::ifstream in(csv);
  std::string line;
  int rows = -1;  // skip header
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  return rows;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

}  // namespace

TEST_CASE("make-toy-data generates balanced, reproducible datasets") {
  TempDir dir("spooftrace_cli_mk");

  SUBCASE("default flags give a balanced four-medium dataset") {
    const RunResult r = run_cli("make-toy-data --out " + dir.str() + "/d --count 40 --seed 4");
    CHECK(r.exit_code == 0);
    std::ifstream manifest(dir.path / "d" / "manifest.csv");
    REQUIRE(manifest.good());
    std::string line;
    std::getline(manifest, line);
    int live = 0, print = 0, replay = 0, mask = 0, partial = 0;
    while (std::getline(manifest, line)) {
      if (line.find(",live,") != std::string::npos) ++live;
      if (line.find(",print,") != std::string::npos) ++print;
      if (line.find(",replay,") != std::string::npos) ++replay;
      if (line.find(",mask,") != std::string::npos) ++mask;
      if (line.find(",partial,") != std::string::npos) ++partial;
    }
    CHECK(live == 20);
    CHECK(print == 5);
    CHECK(replay == 5);
    CHECK(mask == 5);
    CHECK(partial == 5);
  }

  SUBCASE("a repeated seed reproduces the directory byte for byte") {
    REQUIRE(run_cli("make-toy-data --out " + dir.str() + "/a --count 16 --seed 9").exit_code == 0);
    REQUIRE(run_cli("make-toy-data --out " + dir.str() + "/b --count 16 --seed 9").exit_code == 0);
    CHECK(slurp(dir.path / "a" / "manifest.csv") == slurp(dir.path / "b" / "manifest.csv"));
    CHECK(slurp(dir.path / "a" / "samples" / "s000003.png") ==
          slurp(dir.path / "b" / "samples" / "s000003.png"));
    CHECK(slurp(dir.path / "a" / "samples" / "s000010_traces.star") ==
          slurp(dir.path / "b" / "samples" / "s000010_traces.star"));
  }

  SUBCASE("count zero is a usage error") {
    const RunResult r = run_cli("make-toy-data --out " + dir.str() + "/z --count 0");
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("error[usage]") != std::string::npos);
  }

  SUBCASE("refuses to overwrite without --force") {
    REQUIRE(run_cli("make-toy-data --out " + dir.str() + "/c --count 8").exit_code == 0);
    const RunResult again = run_cli("make-toy-data --out " + dir.str() + "/c --count 8");
    CHECK(again.exit_code == 1);
    CHECK(again.output.find("error[runtime]") != std::string::npos);
    CHECK(run_cli("make-toy-data --out " + dir.str() + "/c --count 8 --force").exit_code == 0);
  }
}

TEST_CASE("train smoke runs, logs losses and is reproducible") {
  TempDir dir("spooftrace_cli_train");
  REQUIRE(run_cli("make-toy-data --out " + dir.str() + "/data --count 24 --seed 6").exit_code ==
          0);

  SUBCASE("a ten-iteration run writes ten loss rows and a manifest") {
    const RunResult r = run_cli("train --data " + dir.str() + "/data --out " + dir.str() +
                                "/run --desk --max-iter 10 --seed 3");
    CHECK(r.exit_code == 0);
    CHECK(count_rows(dir.path / "run" / "losses.csv") == 10);
    CHECK(fs::exists(dir.path / "run" / "checkpoint_final.star"));
    CHECK(fs::exists(dir.path / "run" / "run_manifest.json"));
  }

  SUBCASE("identical seeds give byte-identical loss logs") {
    REQUIRE(run_cli("train --data " + dir.str() + "/data --out " + dir.str() +
                    "/r1 --desk --max-iter 6 --seed 12")
                .exit_code == 0);
    REQUIRE(run_cli("train --data " + dir.str() + "/data --out " + dir.str() +
                    "/r2 --desk --max-iter 6 --seed 12")
                .exit_code == 0);
    const std::string a = slurp(dir.path / "r1" / "losses.csv");
    CHECK(!a.empty());
    CHECK(a == slurp(dir.path / "r2" / "losses.csv"));
  }

  SUBCASE("a missing dataset path is a clear runtime error") {
    const RunResult r =
        run_cli("train --data " + dir.str() + "/nope --out " + dir.str() + "/x --desk");
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("error[runtime]") != std::string::npos);
  }
}

TEST_CASE("eval, disentangle and synthesize consume a trained checkpoint") {
  TempDir dir("spooftrace_cli_eval");
  REQUIRE(run_cli("make-toy-data --out " + dir.str() + "/data --count 32 --seed 8").exit_code ==
          0);
  REQUIRE(run_cli("train --data " + dir.str() + "/data --out " + dir.str() +
                  "/run --desk --max-iter 8 --seed 2")
              .exit_code == 0);
  const std::string ckpt = dir.str() + "/run/checkpoint_final.star";

  SUBCASE("eval reports every published metric and is deterministic") {
    const std::string cmd = "eval --data " + dir.str() + "/data --checkpoint " + ckpt +
                            " --out " + dir.str() + "/m --protocol known";
    const RunResult r = run_cli(cmd);
    CHECK(r.exit_code == 0);
    const std::string report = slurp(dir.path / "m" / "report.txt");
    for (const char* key : {"EER", "APCER", "BPCER", "ACER", "TDR @ FDR=0.5%"})
      CHECK(report.find(key) != std::string::npos);
    const std::string scores = slurp(dir.path / "m" / "scores.csv");
    REQUIRE(run_cli("eval --data " + dir.str() + "/data --checkpoint " + ckpt + " --out " +
                    dir.str() + "/m2 --protocol known")
                .exit_code == 0);
    CHECK(scores == slurp(dir.path / "m2" / "scores.csv"));
    CHECK(scores.find("sample_id,score,label,medium") == 0);
  }

  SUBCASE("open-set evaluation needs a held-out medium") {
    const RunResult r = run_cli("eval --data " + dir.str() + "/data --checkpoint " + ckpt +
                                " --out " + dir.str() + "/m3 --protocol open-set");
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("error[usage]") != std::string::npos);
    CHECK(run_cli("eval --data " + dir.str() + "/data --checkpoint " + ckpt + " --out " +
                  dir.str() + "/m4 --protocol open-set --held-out mask")
              .exit_code == 0);
  }

  SUBCASE("the embeddings dump has one row per test sample") {
    REQUIRE(run_cli("eval --data " + dir.str() + "/data --checkpoint " + ckpt + " --out " +
                    dir.str() + "/m5 --dump-embeddings " + dir.str() + "/emb.csv")
                .exit_code == 0);
    CHECK(count_rows(dir.path / "emb.csv") == 32);
    std::ifstream emb(dir.path / "emb.csv");
    std::string header;
    std::getline(emb, header);
    CHECK(header.find("f1_0") != std::string::npos);
    CHECK(header.find("f3_127") != std::string::npos);
    CHECK(header.find("mean_abs_b") != std::string::npos);
  }

  SUBCASE("disentangle writes an eight-panel grid per input") {
    REQUIRE(run_cli("disentangle --checkpoint " + ckpt + " --data " + dir.str() + "/data --out " +
                    dir.str() + "/grids --count 3")
                .exit_code == 0);
    const auto grid = spooftrace::read_png_rgb((dir.path / "grids" / "s000000_grid.png").string());
    CHECK(grid.dims() == std::vector<int>{64, 8 * 64, 3});
  }

  SUBCASE("synthesize writes an (S+1) x (L+1) panel matrix") {
    REQUIRE(run_cli("synthesize --checkpoint " + ckpt + " --data " + dir.str() + "/data --out " +
                    dir.str() + "/syn.png --sources 3 --targets 2 --harder")
                .exit_code == 0);
    const auto m = spooftrace::read_png_rgb((dir.path / "syn.png").string());
    CHECK(m.dims() == std::vector<int>{(2 + 1) * 64, (3 + 1) * 64, 3});
  }
}
