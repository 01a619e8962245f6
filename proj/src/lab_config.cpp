#include <charconv>
#include <stdexcept>

#include "rorlab/binio.hpp"
#include "rorlab/lab.hpp"

namespace rorlab::lab {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(std::string_view key, std::string_view v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw std::invalid_argument("config: " + std::string(key) + " expects an integer, got '" + std::string(v) + "'");
  }
  return out;
}

std::vector<int> parse_list(std::string_view key, std::string_view v) {
  std::vector<int> out;
  while (!v.empty()) {
    const auto comma = v.find(',');
    out.push_back(parse_number<int>(key, trim(v.substr(0, comma))));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  return out;
}

void require(bool ok, const char* key, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("config: ") + key + " " + what);
}

}  // namespace

void ExperimentConfig::set(std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "name") {
    name = value;
  } else if (key == "seed") {
    seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "n") {
    n = parse_number<int>(key, value);
  } else if (key == "ks") {
    ks = parse_list(key, value);
  } else if (key == "matrix") {
    matrix = value;
  } else if (key == "output_dir") {
    output_dir = value;
  } else if (key == "qsim_triples") {
    qsim_triples = parse_number<int>(key, value);
  } else if (key == "sign_samples") {
    sign_samples = parse_number<std::uint64_t>(key, value);
  } else if (key == "haar_seeds") {
    haar_seeds = parse_number<int>(key, value);
  } else if (key == "mc_samples") {
    mc_samples = parse_number<std::uint64_t>(key, value);
  } else if (key == "uniform_samples") {
    uniform_samples = parse_number<std::uint64_t>(key, value);
  } else if (key == "moment_n") {
    moment_n = parse_number<int>(key, value);
  } else if (key == "moment_sets") {
    moment_sets = parse_number<int>(key, value);
  } else if (key == "moment_max_size") {
    moment_max_size = parse_number<int>(key, value);
  } else if (key == "link_samples") {
    link_samples = parse_number<std::uint64_t>(key, value);
  } else if (key == "decomposition_trees") {
    decomposition_trees = parse_number<int>(key, value);
  } else if (key == "goodness_pairs") {
    goodness_pairs = parse_number<int>(key, value);
  } else if (key == "goodness_block") {
    goodness_block = parse_number<int>(key, value);
  } else if (key == "tail_n") {
    tail_n = parse_number<int>(key, value);
  } else if (key == "tail_trials") {
    tail_trials = parse_number<int>(key, value);
  } else if (key == "advantage_samples") {
    advantage_samples = parse_number<std::uint64_t>(key, value);
  } else if (key == "corpus_depth") {
    corpus_depth = parse_number<int>(key, value);
  } else {
    throw std::invalid_argument("config: unknown key '" + std::string(key) + "'");
  }
}

void ExperimentConfig::validate() const {
  require(!name.empty(), "name", "must not be empty");
  require(n >= 2, "n", "must be >= 2");
  require(!ks.empty(), "ks", "must list at least one k");
  for (int k : ks) require(k >= 2 && k <= 12, "ks", "entries must be in [2, 12]");
  require(!matrix.empty(), "matrix", "must be 'haar' or a path");
  require(!output_dir.empty(), "output_dir", "must not be empty");
  require(qsim_triples >= 1, "qsim_triples", "must be >= 1");
  require(sign_samples >= 1, "sign_samples", "must be >= 1");
  require(haar_seeds >= 1, "haar_seeds", "must be >= 1");
  require(mc_samples >= 2, "mc_samples", "must be >= 2");
  require(uniform_samples >= 2, "uniform_samples", "must be >= 2");
  require(moment_n >= 2, "moment_n", "must be >= 2");
  require(moment_sets >= 1, "moment_sets", "must be >= 1");
  require(moment_max_size >= 3, "moment_max_size", "must be >= 3");
  require(link_samples >= 2, "link_samples", "must be >= 2");
  require(decomposition_trees >= 1, "decomposition_trees", "must be >= 1");
  require(goodness_pairs >= 1, "goodness_pairs", "must be >= 1");
  require(goodness_block >= 1, "goodness_block", "must be >= 1");
  require(tail_n >= 2, "tail_n", "must be >= 2");
  require(tail_trials >= 1, "tail_trials", "must be >= 1");
  require(advantage_samples >= 2, "advantage_samples", "must be >= 2");
  require(corpus_depth >= 2 && corpus_depth <= 12, "corpus_depth", "must be in [2, 12]");
}

nlohmann::json ExperimentConfig::to_json() const {
  return {{"name", name},
          {"seed", seed},
          {"n", n},
          {"ks", ks},
          {"matrix", matrix},
          {"output_dir", output_dir},
          {"qsim_triples", qsim_triples},
          {"sign_samples", sign_samples},
          {"haar_seeds", haar_seeds},
          {"mc_samples", mc_samples},
          {"uniform_samples", uniform_samples},
          {"moment_n", moment_n},
          {"moment_sets", moment_sets},
          {"moment_max_size", moment_max_size},
          {"link_samples", link_samples},
          {"decomposition_trees", decomposition_trees},
          {"goodness_pairs", goodness_pairs},
          {"goodness_block", goodness_block},
          {"tail_n", tail_n},
          {"tail_trials", tail_trials},
          {"advantage_samples", advantage_samples},
          {"corpus_depth", corpus_depth}};
}

std::uint64_t ExperimentConfig::hash() const { return binio::fnv1a64(to_json().dump()); }

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig c;
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    }
    c.set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  const auto bytes = binio::read_file(path);
  return parse_config(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

}  // namespace rorlab::lab
