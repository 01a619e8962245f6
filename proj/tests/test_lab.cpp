#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "rorlab/binio.hpp"
#include "rorlab/lab.hpp"
#include "rorlab/ortho.hpp"
#include "rorlab/rorrelation.hpp"

using namespace rorlab;
using namespace rorlab::lab;
namespace fs = std::filesystem;

namespace {

const char* kSmall = R"(# quick run
name = small
seed = 7
n = 16
ks = 2, 3
qsim_triples = 20
sign_samples = 20000
haar_seeds = 3
mc_samples = 3000
uniform_samples = 3000
moment_n = 64
moment_sets = 20
link_samples = 200
decomposition_trees = 5
goodness_pairs = 200
goodness_block = 4
tail_n = 64
tail_trials = 500
advantage_samples = 500
corpus_depth = 4
)";

fs::path temp_dir(const std::string& name) {
  auto d = fs::temp_directory_path() / ("rorlab_lab_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  auto b = binio::read_file(p);
  return {b.begin(), b.end()};
}

struct Run {
  int code;
  std::string out;
};

Run cli(const std::string& args, const fs::path& dir) {
  auto log = dir / "cli.out";
  std::string cmd = std::string(ROR_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  int status = std::system(cmd.c_str());
  int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return {code, fs::exists(log) ? slurp(log) : std::string()};
}

}  // namespace

TEST_CASE("config parsing") {
  auto c = parse_config(kSmall);
  CHECK(c.name == "small");
  CHECK(c.seed == 7);
  CHECK(c.ks == std::vector<int>{2, 3});
  CHECK(c.corpus_depth == 4);
  CHECK(c.matrix == "haar");

  ExperimentConfig d;
  CHECK(d.to_json() == parse_config("").to_json());
  CHECK(d.hash() == ExperimentConfig{}.hash());
  CHECK(d.hash() != c.hash());
  CHECK(d.hash() == binio::fnv1a64(d.to_json().dump()));

  CHECK_THROWS_WITH_AS(parse_config("bogus = 1"), doctest::Contains("bogus"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_config("n = 1"), doctest::Contains("n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("n = x"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("n 4"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("ks = 1"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("corpus_depth = 20"), std::invalid_argument);

  c.set("seed", "99");
  CHECK(c.seed == 99);
}

TEST_CASE("the shipped default config matches the built-in defaults") {
  auto shipped = load_config(fs::path(ROR_SOURCE_DIR) / "configs" / "default.conf");
  CHECK(shipped.to_json() == ExperimentConfig{}.to_json());
}

TEST_CASE("a bad matrix file fails before any check runs") {
  auto dir = temp_dir("ctx");
  auto u = ortho::sample_haar(16, 1);
  ortho::save_matrix(dir / "u.bin", u);
  auto c = parse_config(kSmall);
  c.matrix = (dir / "u.bin").string();
  auto ctx = make_context(c);
  CHECK(ctx.matrix->hash() == u.hash());

  auto bytes = binio::read_file(dir / "u.bin");
  bytes[50] ^= 0xff;
  binio::write_file_atomic(dir / "bad.bin", bytes);
  c.matrix = (dir / "bad.bin").string();
  CHECK_THROWS(make_context(c));
  c.matrix = (dir / "missing.bin").string();
  CHECK_THROWS(make_context(c));
  fs::remove_all(dir);
}

TEST_CASE("check registry") {
  const auto& all = checks();
  REQUIRE(all.size() == 12);
  for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i].id == static_cast<int>(i + 1));
  auto ctx = make_context(parse_config(kSmall));
  CHECK_THROWS(run_check(13, ctx));
}

TEST_CASE("small verification run is deterministic and round-trips") {
  auto ctx = make_context(parse_config(kSmall));
  auto m = verify_paper(ctx);
  REQUIRE(m.results.size() == 12);
  for (const auto& r : m.results) {
    INFO(r.id << " " << r.summary);
    CHECK(r.passed);
  }
  CHECK(m.all_passed());
  CHECK(m.config_hash == ctx.config.hash());

  auto again = verify_paper(ctx, {1, 4, 7});
  REQUIRE(again.results.size() == 3);
  for (const auto& r : again.results) {
    auto j = m.to_json()["checks"][static_cast<std::size_t>(r.id - 1)];
    CHECK(j["measurements"] == r.measurements);
  }

  auto dir = temp_dir("manifest");
  write_manifest(dir, m);
  CHECK(fs::exists(dir / "timing.json"));
  auto text = slurp(dir / "manifest.json");
  CHECK(text.find("seconds") == std::string::npos);
  auto back = read_manifest(dir / "manifest.json");
  CHECK(back.to_json() == m.to_json());

  auto files = build_report({{"a", m}, {"b", back}});
  std::istringstream csv(files.csv);
  std::string header;
  std::getline(csv, header);
  CHECK(header == "manifest,config_hash,check,quantity,N,k,measured,bound,relation");
  CHECK(files.markdown.find("| 12. determinism | PASS |") != std::string::npos);
  CHECK(files.shapes_csv.find("series") == 0);
  fs::remove_all(dir);
}

TEST_CASE("cli: sample-matrix round trip") {
  auto dir = temp_dir("cli_matrix");
  auto r = cli("sample-matrix --n 8 --seed 3 --out " + (dir / "u.bin").string() + " --csv " + (dir / "u.csv").string(), dir);
  REQUIRE(r.code == 0);
  auto u = ortho::load_matrix(dir / "u.bin");
  CHECK(u.matrix() == ortho::sample_haar(8, 3).matrix());
  CHECK(slurp(dir / "u.csv") == ortho::matrix_to_csv(u));
  fs::remove_all(dir);
}

TEST_CASE("cli: sample, classify and simulate") {
  auto dir = temp_dir("cli_pipeline");
  auto m = (dir / "u.bin").string();
  auto inst = (dir / "i.bin").string();
  REQUIRE(cli("sample-matrix --n 16 --seed 1 --out " + m, dir).code == 0);
  REQUIRE(cli("sample-dist --matrix " + m + " --k 3 --dist duk --count 5 --seed 2 --out " + inst, dir).code == 0);

  auto batch = rorrelation::load_batch(inst);
  CHECK(batch.k == 3);
  CHECK(batch.instances.size() == 5);

  auto cl = cli("classify --instances " + inst, dir);
  REQUIRE(cl.code == 0);
  auto u = rorrelation::resolve_matrix(batch);
  std::istringstream lines(cl.out);
  std::string line;
  std::size_t count = 0;
  while (std::getline(lines, line)) {
    auto j = nlohmann::json::parse(line);
    auto idx = j["index"].get<std::size_t>();
    CHECK(j["phi"].get<double>() == doctest::Approx(rorrelation::phi(*u, batch.instances[idx])).epsilon(1e-12));
    ++count;
  }
  CHECK(count == 5);

  auto q = cli("qsim --instances " + inst + " --repetitions 100 --seed 1", dir);
  REQUIRE(q.code == 0);
  auto first = nlohmann::json::parse(q.out.substr(0, q.out.find('\n')));
  CHECK(first["p_accept"].get<double>() == doctest::Approx((1 + first["phi"].get<double>()) / 2).epsilon(1e-10));
  CHECK(first["queries"] == 2);
  fs::remove_all(dir);
}

TEST_CASE("cli: errors exit with status 2 and write nothing") {
  auto dir = temp_dir("cli_errors");
  auto r = cli("sample-matrix --n 0 --out " + (dir / "u.bin").string(), dir);
  CHECK(r.code != 0);
  CHECK_FALSE(fs::exists(dir / "u.bin"));

  binio::write_file_atomic(dir / "junk.bin", std::string("not a matrix"));
  r = cli("sample-dist --matrix " + (dir / "junk.bin").string() + " --k 2 --count 2 --out " + (dir / "i.bin").string(), dir);
  CHECK(r.code == 2);
  CHECK(r.out.find("error:") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "i.bin"));

  r = cli("verify-paper --set bogus=1 --out " + (dir / "vp").string(), dir);
  CHECK(r.code == 2);
  CHECK_FALSE(fs::exists(dir / "vp"));
  fs::remove_all(dir);
}

TEST_CASE("cli: fourier of a family") {
  auto dir = temp_dir("cli_fourier");
  auto r = cli("fourier --family add --d 2 --convention pm1", dir);
  REQUIRE(r.code == 0);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["n"] == 6);
  CHECK(j["l1_levels"] == nlohmann::json::array({0.0, 1.0, 2.0, 1.0, 0.0, 0.0, 0.0}));
  fs::remove_all(dir);
}
