#include <cmath>
#include <sstream>
#include <stdexcept>

#include "rorlab/binio.hpp"
#include "rorlab/distinguish.hpp"
#include "rorlab/lab.hpp"

namespace rorlab::lab {

namespace {

using nlohmann::json;

json row_to_json(const BoundRow& r) {
  return {{"quantity", r.quantity}, {"N", r.n}, {"k", r.k}, {"measured", r.measured}, {"bound", r.bound},
          {"relation", r.relation}};
}

BoundRow row_from_json(const json& j) {
  return {j.at("quantity").get<std::string>(), j.at("N").get<int>(), j.at("k").get<int>(),
          j.at("measured").get<double>(), j.at("bound").get<double>(), j.at("relation").get<std::string>()};
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

std::string md_escape(std::string s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

bool RunManifest::all_passed() const {
  for (const auto& r : results) {
    if (!r.passed) return false;
  }
  return !results.empty();
}

json RunManifest::to_json() const {
  json checks = json::array();
  for (const auto& r : results) {
    json rows = json::array();
    for (const auto& row : r.rows) rows.push_back(row_to_json(row));
    checks.push_back({{"id", r.id},
                      {"name", r.name},
                      {"passed", r.passed},
                      {"summary", r.summary},
                      {"measurements", r.measurements},
                      {"rows", rows}});
  }
  return {{"artifact_version", version},
          {"config_hash", binio::hex64(config_hash)},
          {"config", config},
          {"matrix_hash", binio::hex64(matrix_hash)},
          {"all_passed", all_passed()},
          {"checks", checks}};
}

json RunManifest::timing_json() const {
  json t = json::array();
  for (const auto& r : results) t.push_back({{"id", r.id}, {"name", r.name}, {"seconds", r.seconds}});
  return {{"config_hash", binio::hex64(config_hash)}, {"checks", t}};
}

RunManifest RunManifest::from_json(const json& j) {
  RunManifest m;
  m.version = j.at("artifact_version").get<std::string>();
  m.config_hash = std::stoull(j.at("config_hash").get<std::string>(), nullptr, 16);
  m.config = j.at("config");
  m.matrix_hash = std::stoull(j.at("matrix_hash").get<std::string>(), nullptr, 16);
  for (const auto& c : j.at("checks")) {
    CheckResult r;
    r.id = c.at("id").get<int>();
    r.name = c.at("name").get<std::string>();
    r.passed = c.at("passed").get<bool>();
    r.summary = c.at("summary").get<std::string>();
    r.measurements = c.at("measurements");
    for (const auto& row : c.at("rows")) r.rows.push_back(row_from_json(row));
    m.results.push_back(std::move(r));
  }
  return m;
}

void write_manifest(const std::filesystem::path& dir, const RunManifest& m) {
  binio::write_file_atomic(dir / "manifest.json", m.to_json().dump(2) + "\n");
  binio::write_file_atomic(dir / "timing.json", m.timing_json().dump(2) + "\n");
}

RunManifest read_manifest(const std::filesystem::path& path) {
  const auto bytes = binio::read_file(path);
  try {
    return RunManifest::from_json(json::parse(bytes.begin(), bytes.end()));
  } catch (const json::exception& e) {
    throw std::runtime_error("manifest " + path.string() + ": " + e.what());
  }
}

ReportFiles build_report(const std::vector<std::pair<std::string, RunManifest>>& manifests) {
  if (manifests.empty()) throw std::invalid_argument("report: no manifests given");
  ReportFiles out;
  std::ostringstream csv;
  std::ostringstream md;
  std::ostringstream shapes;
  csv << "manifest,config_hash,check,quantity,N,k,measured,bound,relation\n";
  shapes << "series,k,N,d,value\n";

  md << "# Verification report\n\n## Checks\n\n";
  md << "| manifest | config | check | result | summary |\n|---|---|---|---|---|\n";
  for (const auto& [label, m] : manifests) {
    for (const auto& r : m.results) {
      md << "| " << md_escape(label) << " | " << binio::hex64(m.config_hash) << " | " << r.id << ". "
         << md_escape(r.name) << " | " << (r.passed ? "PASS" : "FAIL") << " | " << md_escape(r.summary) << " |\n";
    }
  }
  md << "\n## Measured against bounds\n\n";
  md << "| manifest | check | quantity | N | k | measured | relation | bound |\n|---|---|---|---|---|---|---|---|\n";
  for (const auto& [label, m] : manifests) {
    for (const auto& r : m.results) {
      for (const auto& row : r.rows) {
        csv << csv_field(label) << ',' << binio::hex64(m.config_hash) << ',' << r.id << ','
            << csv_field(row.quantity) << ',' << row.n << ',' << row.k << ',' << num(row.measured) << ','
            << num(row.bound) << ',' << row.relation << '\n';
        md << "| " << md_escape(label) << " | " << r.id << " | " << md_escape(row.quantity) << " | " << row.n
           << " | " << row.k << " | " << num(row.measured) << " | " << row.relation << " | " << num(row.bound)
           << " |\n";
        if (row.quantity.rfind("advantage ", 0) == 0) {
          const auto d_at = row.quantity.find("(d=");
          const int d = d_at == std::string::npos ? 0 : std::stoi(row.quantity.substr(d_at + 3));
          shapes << "measured_advantage:" << csv_field(label) << ',' << row.k << ',' << row.n << ',' << d << ','
                 << num(std::abs(row.measured)) << '\n';
        }
      }
    }
  }

  // Bound-shape evaluators (constants pinned to 1) on a fixed grid.
  for (int k : {2, 3, 4}) {
    for (int lg = 6; lg <= 20; lg += 2) {
      const int n = 1 << lg;
      shapes << "lower_bound_depth," << k << ',' << n << ",0," << num(distinguish::lower_bound_depth(k, n)) << '\n';
      for (int d : {1, 2, 4, 8, 16, 32, 64}) {
        shapes << "thm_main_bound," << k << ',' << n << ',' << d << ',' << num(distinguish::thm_main_bound(d, k, n))
               << '\n';
        shapes << "conjectured_bound," << k << ',' << n << ',' << d << ','
               << num(distinguish::conjectured_bound(d, k, n)) << '\n';
      }
    }
  }
  md << "\nBound-shape evaluators (constants pinned to 1) and measured advantages are in the CSV sidecar.\n";

  out.csv = csv.str();
  out.markdown = md.str();
  out.shapes_csv = shapes.str();
  return out;
}

}  // namespace rorlab::lab
