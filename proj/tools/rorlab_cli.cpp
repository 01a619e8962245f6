// rorlab: command-line front end for the experiment library.
//
// Every subcommand validates its inputs and computes its full result before
// writing anything, and every file is written atomically. ROR_WORKERS sets
// the worker count; results do not depend on it.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rorlab/binio.hpp"
#include "rorlab/boolfn.hpp"
#include "rorlab/dist.hpp"
#include "rorlab/distinguish.hpp"
#include "rorlab/dtree.hpp"
#include "rorlab/lab.hpp"
#include "rorlab/ortho.hpp"
#include "rorlab/qsim.hpp"
#include "rorlab/rng.hpp"
#include "rorlab/rorrelation.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rorlab;

namespace {

std::string read_text(const fs::path& p) {
  const auto bytes = binio::read_file(p);
  return std::string(bytes.begin(), bytes.end());
}

json read_json(const fs::path& p) {
  try {
    return json::parse(read_text(p));
  } catch (const json::exception& e) {
    throw std::runtime_error(p.string() + ": " + e.what());
  }
}

// Writes to `out`, or stdout when it is empty or "-".
void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    binio::write_file_atomic(out, text);
  }
}

std::string json_lines(const std::vector<json>& rows) {
  std::string s;
  for (const auto& r : rows) s += r.dump() + "\n";
  return s;
}

ortho::MatrixHandle matrix_from(const std::string& path, int n, std::uint64_t seed) {
  if (!path.empty()) return std::make_shared<const ortho::OrthogonalMatrix>(ortho::load_matrix(path));
  if (n < 1) throw std::invalid_argument("give --matrix or --n");
  return std::make_shared<const ortho::OrthogonalMatrix>(ortho::sample_haar(n, seed));
}

dtree::DecisionTree family_tree(const std::string& family, int d) {
  if (family == "maj") return dtree::make_majority(d);
  if (family == "add") return dtree::make_address(d);
  if (family == "addmaj") return dtree::make_address_of_majority(d);
  if (family == "and") return dtree::make_and(d);
  throw std::invalid_argument("unknown family '" + family + "' (maj, add, addmaj, and)");
}

boolfn::OutputConvention convention_of(const std::string& s) {
  if (s == "pm1") return boolfn::OutputConvention::PlusMinusOne;
  if (s == "01") return boolfn::OutputConvention::ZeroOne;
  throw std::invalid_argument("convention must be pm1 or 01");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rorlab: Rorrelation, hard distributions and decision-tree Fourier growth"};
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  std::string out;
  std::string matrix_path;
  std::string instances_path;
  int n = 0;
  int k = 2;

  // sample-matrix
  auto* sm = app.add_subcommand("sample-matrix", "Sample a Haar orthogonal matrix and write it as a matrix file");
  std::string csv_out;
  sm->add_option("--n", n, "Dimension")->required()->check(CLI::Range(1, 8192));
  sm->add_option("--seed", seed, "Seed");
  sm->add_option("--out", out, "Output matrix file")->required();
  sm->add_option("--csv", csv_out, "Also write the entries as CSV");

  // check-good
  auto* cg = app.add_subcommand("check-good", "Check sub-matrix norms against the goodness bound");
  int pairs = 10000;
  int max_block = 16;
  int identity_n = 0;
  cg->add_option("--matrix", matrix_path, "Matrix file (default: sample Haar with --n/--seed)");
  cg->add_option("--n", n, "Dimension when sampling");
  cg->add_option("--identity", identity_n, "Check the identity of this size instead")->check(CLI::Range(2, 8192));
  cg->add_option("--pairs", pairs, "Random (S, T) pairs")->check(CLI::NonNegativeNumber);
  cg->add_option("--max-block", max_block, "Largest |S| and |T| sampled")->check(CLI::PositiveNumber);
  cg->add_option("--seed", seed, "Seed");
  cg->add_option("--out", out, "Report JSON (default stdout)");
  int hadamard_log2 = 0;
  cg->add_option("--hadamard", hadamard_log2, "Report the Hadamard block for N = 2^value instead");

  // rorrelate
  auto* ro = app.add_subcommand("rorrelate", "Evaluate phi on instances, or the exact moments of a matrix");
  int exact_k = 0;
  ro->add_option("--instances", instances_path, "Instance file");
  ro->add_option("--matrix", matrix_path, "Matrix file (overrides the path recorded in the instance file)");
  ro->add_option("--exact", exact_k, "Print E_D[phi] and Var_U[phi] for this k instead")->check(CLI::Range(2, 64));
  ro->add_option("--out", out, "Output (default stdout)");

  // classify
  auto* cl = app.add_subcommand("classify", "Label instances YES / NO / AMBIGUOUS as JSON lines");
  cl->add_option("--instances", instances_path, "Instance file")->required();
  cl->add_option("--matrix", matrix_path, "Matrix file override");
  cl->add_option("--out", out, "Output (default stdout)");

  // sample-dist
  auto* sd = app.add_subcommand("sample-dist", "Sample instances from D_{U,k} or U_k");
  std::string which = "duk";
  std::uint64_t count = 1;
  sd->add_option("--matrix", matrix_path, "Matrix file")->required();
  sd->add_option("--k", k, "Fold count")->check(CLI::Range(2, 64));
  sd->add_option("--dist", which, "duk or uniform")->check(CLI::IsMember({"duk", "uniform"}));
  sd->add_option("--count", count, "Number of instances")->check(CLI::Range(1, 10000000));
  sd->add_option("--seed", seed, "Seed");
  sd->add_option("--out", out, "Instance file")->required();

  // moments
  auto* mo = app.add_subcommand("moments", "Audit |D_hat(S)| against the moment bound");
  int trials = 200;
  int max_size = 6;
  std::uint64_t link_samples = 2000;
  double c_const = 100.0;
  std::vector<std::string> sets;
  mo->add_option("--matrix", matrix_path, "Matrix file (default: sample Haar with --n/--seed)");
  mo->add_option("--n", n, "Dimension when sampling");
  mo->add_option("--k", k, "Fold count")->check(CLI::Range(2, 64));
  mo->add_option("--trials", trials, "Random sets")->check(CLI::PositiveNumber);
  mo->add_option("--max-size", max_size, "Largest |S|")->check(CLI::PositiveNumber);
  mo->add_option("--samples", link_samples, "Antithetic pairs per Monte Carlo link")->check(CLI::PositiveNumber);
  mo->add_option("--c", c_const, "Constant in the bound")->check(CLI::PositiveNumber);
  mo->add_option("--set", sets, "Explicit global set, 0-based comma list (repeatable)");
  mo->add_option("--seed", seed, "Seed");
  mo->add_option("--out", out, "Audit JSON (default stdout)");

  // qsim
  auto* qs = app.add_subcommand("qsim", "Simulate the quantum algorithm on instances");
  std::uint64_t reps = 0;
  qs->add_option("--instances", instances_path, "Instance file")->required();
  qs->add_option("--matrix", matrix_path, "Matrix file override");
  qs->add_option("--repetitions", reps, "Amplify with this many runs (0 = recommended ceil(64 * 4^k))");
  qs->add_option("--seed", seed, "Seed");
  qs->add_option("--out", out, "Output (default stdout)");

  // fourier
  auto* fo = app.add_subcommand("fourier", "Fourier spectrum of a tree or truth table");
  std::string tree_path;
  std::string family;
  std::string table_path;
  std::string convention = "pm1";
  int d = 3;
  fo->add_option("--tree", tree_path, "Tree JSON");
  fo->add_option("--family", family, "maj, add, addmaj or and");
  fo->add_option("--d", d, "Family parameter");
  fo->add_option("--truth-table", table_path, "Truth table: .csv of +-1 values or raw 0/1 bytes");
  fo->add_option("--n", n, "Variables of the truth table");
  fo->add_option("--convention", convention, "pm1 or 01")->check(CLI::IsMember({"pm1", "01"}));
  fo->add_option("--out", out, "Spectrum JSON (default stdout)");

  // tree-corpus
  auto* tc = app.add_subcommand("tree-corpus", "Write a tree corpus: one JSON file per tree plus corpus.jsonl");
  std::string kind = "fourier";
  int depth = 8;
  tc->add_option("--kind", kind, "fourier or distinguish")->check(CLI::IsMember({"fourier", "distinguish"}));
  tc->add_option("--matrix", matrix_path, "Matrix file (distinguish corpus)");
  tc->add_option("--k", k, "Fold count (distinguish corpus)")->check(CLI::Range(2, 64));
  tc->add_option("--depth", depth, "Largest depth (distinguish corpus)")->check(CLI::Range(2, 12));
  tc->add_option("--seed", seed, "Seed");
  tc->add_option("--out", out, "Output directory")->required();

  // advantage
  auto* ad = app.add_subcommand("advantage", "Estimate E[F(U_k)] - E[F(D_{U,k})] for trees");
  std::string corpus_dir;
  std::uint64_t samples = 20000;
  std::vector<int> flip;
  ad->add_option("--matrix", matrix_path, "Matrix file")->required();
  ad->add_option("--k", k, "Fold count")->check(CLI::Range(2, 64));
  ad->add_option("--tree", tree_path, "Tree JSON over kN variables");
  ad->add_option("--corpus", corpus_dir, "Directory written by tree-corpus --kind distinguish");
  ad->add_option("--samples", samples, "Draws per arm")->check(CLI::Range(2ULL, 100000000ULL));
  ad->add_option("--flip-block", flip, "Negate these blocks of D_{U,k} samples (repeatable)");
  ad->add_option("--seed", seed, "Seed");
  ad->add_option("--out", out, "JSON lines (default stdout)");

  // verify-paper
  auto* vp = app.add_subcommand("verify-paper", "Run the verification suite and write a manifest");
  std::string config_path;
  std::vector<std::string> overrides;
  std::vector<int> only;
  bool seed_given = false;
  vp->add_option("--config", config_path, "Config file (default: built-in defaults)");
  vp->add_option("--set", overrides, "key=value override (repeatable)");
  vp->add_option("--only", only, "Run only these check ids")->delimiter(',');
  vp->add_option("--seed", seed, "Override the config seed")->each([&](const std::string&) { seed_given = true; });
  vp->add_option("--out", out, "Output directory (default: config output_dir)");

  // report
  auto* rp = app.add_subcommand("report", "Aggregate manifests into CSV and Markdown tables");
  std::vector<std::string> manifests;
  rp->add_option("manifests", manifests, "manifest.json files")->required();
  rp->add_option("--out", out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (sm->parsed()) {
      const auto u = ortho::sample_haar(n, seed);
      const auto bytes = ortho::encode_matrix(u);
      const auto csv = csv_out.empty() ? std::string() : ortho::matrix_to_csv(u);
      binio::write_file_atomic(out, bytes);
      if (!csv_out.empty()) binio::write_file_atomic(csv_out, csv);
      std::cout << json{{"n", n}, {"seed", seed}, {"hash", binio::hex64(u.hash())}, {"out", out}}.dump() << "\n";
    } else if (cg->parsed()) {
      json report;
      if (hadamard_log2 > 0) {
        const auto h = ortho::hadamard_counterexample(hadamard_log2);
        report = {{"log2n", hadamard_log2}, {"side", h.side}, {"norm", h.norm}, {"bound", h.bound},
                  {"good", h.norm <= h.bound}};
      } else {
        const auto u = identity_n > 0 ? std::make_shared<const ortho::OrthogonalMatrix>(ortho::identity(identity_n))
                                    : matrix_from(matrix_path, n, seed);
        report = ortho::check_goodness(*u, pairs, max_block, seed).to_json();
      }
      emit(out, report.dump(2) + "\n");
    } else if (ro->parsed()) {
      std::vector<json> rows;
      if (exact_k > 0) {
        if (matrix_path.empty()) throw std::invalid_argument("--exact needs --matrix");
        const auto u = ortho::load_matrix(matrix_path);
        rows.push_back({{"N", u.n()},
                        {"k", exact_k},
                        {"expected_phi", rorrelation::exact_expected_phi(u, exact_k)},
                        {"floor", std::pow(2.0 / std::numbers::pi, exact_k - 1)},
                        {"uniform_variance", rorrelation::exact_uniform_variance(u, exact_k)},
                        {"uniform_no_probability_bound", rorrelation::uniform_no_probability_bound(exact_k, u.n())}});
      } else {
        if (instances_path.empty()) throw std::invalid_argument("give --instances or --exact");
        const auto batch = rorrelation::load_batch(instances_path);
        const auto u = rorrelation::resolve_matrix(batch, matrix_path);
        for (std::size_t i = 0; i < batch.instances.size(); ++i) {
          rows.push_back({{"index", i}, {"phi", rorrelation::phi(*u, batch.instances[i])}});
        }
      }
      emit(out, json_lines(rows));
    } else if (cl->parsed()) {
      const auto batch = rorrelation::load_batch(instances_path);
      const auto u = rorrelation::resolve_matrix(batch, matrix_path);
      std::vector<json> rows;
      for (std::size_t i = 0; i < batch.instances.size(); ++i) {
        rows.push_back(rorrelation::label_to_json(i, rorrelation::classify(*u, batch.instances[i])));
      }
      emit(out, json_lines(rows));
    } else if (sd->parsed()) {
      const auto u = ortho::load_matrix(matrix_path);
      rorrelation::InstanceBatch batch;
      batch.k = k;
      batch.n = u.n();
      batch.matrix_path = fs::absolute(matrix_path).lexically_normal().string();
      batch.matrix_hash = u.hash();
      for (std::uint64_t i = 0; i < count; ++i) {
        const auto s = derive_seed(seed, i);
        batch.instances.push_back(which == "duk" ? dist::sample_DUk_vectors(u, k, s)
                                                 : dist::sample_uniform_vectors(k, u.n(), s));
      }
      rorrelation::save_batch(out, batch);
      std::cout << json{{"count", count}, {"k", k}, {"N", u.n()}, {"dist", which}, {"out", out}}.dump() << "\n";
    } else if (mo->parsed()) {
      const auto u = matrix_from(matrix_path, n, seed);
      dist::AuditReport audit;
      if (!sets.empty()) {
        std::vector<boolfn::Subset> parsed;
        for (const auto& s : sets) {
          std::vector<std::uint32_t> members;
          std::stringstream ss(s);
          std::string item;
          while (std::getline(ss, item, ',')) members.push_back(static_cast<std::uint32_t>(std::stoul(item)) + 1);
          parsed.emplace_back(members);
        }
        audit = dist::moment_bound_audit_sets(*u, k, parsed, seed, link_samples, c_const);
      } else {
        audit = dist::moment_bound_audit(*u, k, trials, max_size, seed, link_samples, c_const);
      }
      emit(out, audit.to_json().dump(2) + "\n");
    } else if (qs->parsed()) {
      const auto batch = rorrelation::load_batch(instances_path);
      const auto u = rorrelation::resolve_matrix(batch, matrix_path);
      const auto m = reps > 0 ? reps : qsim::recommended_repetitions(batch.k);
      std::vector<json> rows;
      for (std::size_t i = 0; i < batch.instances.size(); ++i) {
        const auto run = qsim::run_rorrelation_circuit(*u, batch.instances[i]);
        const auto amp = qsim::amplify(run.p_accept, batch.k, m, derive_seed(seed, i));
        auto row = qsim::to_json(run, rorrelation::phi(*u, batch.instances[i]), &amp);
        row["index"] = i;
        rows.push_back(row);
      }
      emit(out, json_lines(rows));
    } else if (fo->parsed()) {
      const auto conv = convention_of(convention);
      boolfn::FourierSpectrum spec;
      if (!tree_path.empty()) {
        spec = dtree::sparse_fourier(dtree::tree_from_json(read_json(tree_path)), conv);
      } else if (!family.empty()) {
        spec = dtree::sparse_fourier(family_tree(family, d), conv);
      } else if (!table_path.empty()) {
        if (n < 1) throw std::invalid_argument("--truth-table needs --n");
        const bool csv = fs::path(table_path).extension() == ".csv";
        const auto values = csv ? boolfn::truth_table_from_csv(read_text(table_path), n)
                                : boolfn::truth_table_from_bytes(binio::read_file(table_path), n);
        spec = boolfn::fourier_from_truth_table(values, n);
        const auto native = csv ? boolfn::OutputConvention::PlusMinusOne : boolfn::OutputConvention::ZeroOne;
        spec = boolfn::convert(spec, native, conv);
      } else {
        throw std::invalid_argument("give --tree, --family or --truth-table");
      }
      json j = boolfn::spectrum_to_json(spec);
      json levels = json::array();
      for (int ell = 0; ell <= spec.n(); ++ell) levels.push_back(boolfn::l1_level(spec, ell));
      j["l1_levels"] = levels;
      j["convention"] = convention;
      emit(out, j.dump(2) + "\n");
    } else if (tc->parsed()) {
      std::vector<std::pair<std::string, dtree::DecisionTree>> trees;
      std::vector<std::string> families;
      if (kind == "fourier") {
        for (auto& e : dtree::fourier_corpus(seed)) {
          trees.emplace_back(e.id, std::move(e.tree));
          families.push_back("fourier");
        }
      } else {
        if (matrix_path.empty()) throw std::invalid_argument("--kind distinguish needs --matrix");
        const auto u = ortho::load_matrix(matrix_path);
        for (auto& e : distinguish::standard_corpus(u, k, depth, seed)) {
          trees.emplace_back(e.id, std::move(e.tree));
          families.push_back(e.family);
        }
      }
      std::vector<std::pair<std::string, std::string>> files;
      std::vector<json> manifest;
      for (std::size_t i = 0; i < trees.size(); ++i) {
        const auto text = dtree::to_json(trees[i].second).dump() + "\n";
        const auto hash = binio::hex64(binio::fnv1a64(text));
        files.emplace_back(hash + ".json", text);
        manifest.push_back({{"id", trees[i].first},
                            {"family", families[i]},
                            {"hash", hash},
                            {"file", hash + ".json"},
                            {"n", trees[i].second.n()},
                            {"depth", trees[i].second.depth()}});
      }
      const fs::path dir(out);
      for (const auto& [name, text] : files) binio::write_file_atomic(dir / name, text);
      binio::write_file_atomic(dir / "corpus.jsonl", json_lines(manifest));
      std::cout << json{{"trees", trees.size()}, {"out", out}}.dump() << "\n";
    } else if (ad->parsed()) {
      const auto u = ortho::load_matrix(matrix_path);
      std::vector<std::pair<std::string, dtree::DecisionTree>> trees;
      if (!tree_path.empty()) trees.emplace_back(fs::path(tree_path).stem().string(),
                                                 dtree::tree_from_json(read_json(tree_path)));
      if (!corpus_dir.empty()) {
        const auto text = read_text(fs::path(corpus_dir) / "corpus.jsonl");
        std::stringstream ss(text);
        std::string line;
        while (std::getline(ss, line)) {
          if (line.empty()) continue;
          const auto entry = json::parse(line);
          const auto file = fs::path(corpus_dir) / entry.at("file").get<std::string>();
          const auto body = read_text(file);
          if (binio::hex64(binio::fnv1a64(body)) != entry.at("hash").get<std::string>()) {
            throw std::runtime_error(file.string() + ": hash does not match corpus.jsonl");
          }
          trees.emplace_back(entry.at("id").get<std::string>(), dtree::tree_from_json(json::parse(body)));
        }
      }
      if (trees.empty()) throw std::invalid_argument("give --tree or --corpus");
      std::vector<json> rows;
      for (std::size_t i = 0; i < trees.size(); ++i) {
        distinguish::AdvantageOptions opt;
        opt.samples = samples;
        opt.seed = derive_seed(seed, i);
        opt.flip_blocks = flip;
        rows.push_back(distinguish::advantage(trees[i].second, u, k, opt, trees[i].first).to_json());
      }
      emit(out, json_lines(rows));
    } else if (vp->parsed()) {
      lab::ExperimentConfig config = config_path.empty() ? lab::ExperimentConfig{} : lab::load_config(config_path);
      for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + o + "'");
        config.set(o.substr(0, eq), o.substr(eq + 1));
      }
      if (seed_given) config.seed = seed;
      config.validate();
      const fs::path dir = out.empty() ? fs::path(config.output_dir) : fs::path(out);
      const auto ctx = lab::make_context(config);
      const auto manifest = lab::verify_paper(ctx, only, [](const lab::CheckResult& r) {
        std::cerr << (r.passed ? "PASS" : "FAIL") << "  " << r.id << ". " << r.name << ": " << r.summary << " ("
                  << r.seconds << " s)\n";
      });
      lab::write_manifest(dir, manifest);
      std::cout << (dir / "manifest.json").string() << "\n";
      return manifest.all_passed() ? 0 : 1;
    } else if (rp->parsed()) {
      std::vector<std::pair<std::string, lab::RunManifest>> loaded;
      for (const auto& m : manifests) loaded.emplace_back(m, lab::read_manifest(m));
      const auto files = lab::build_report(loaded);
      const fs::path dir(out);
      binio::write_file_atomic(dir / "report.csv", files.csv);
      binio::write_file_atomic(dir / "report.md", files.markdown);
      binio::write_file_atomic(dir / "bound_shapes.csv", files.shapes_csv);
      std::cout << (dir / "report.md").string() << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
