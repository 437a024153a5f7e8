#include "rccs/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>

namespace rccs {

namespace fs = std::filesystem;

namespace {

std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

RunSummary load_summary(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  Json doc;
  try {
    doc = Json::parse(in);
    RunSummary r;
    r.name = doc.at("name").get<std::string>();
    r.dir = file.parent_path().string();
    r.scenario = doc.value("scenario", Json());
    for (const auto& t : doc.at("tenants"))
      r.tenants.push_back({t.at("tenant").get<int>(), t.at("admitted").get<double>(), metrics_from_json(t.at("metrics"))});
    r.extra = doc.value("live", Json());
    return r;
  } catch (const std::exception& e) {
    throw std::runtime_error(file.string() + ": " + e.what());
  }
}

std::string family(const std::string& name) { return name.substr(0, name.find('_')); }

}  // namespace

std::string write_run(const ScenarioResult& result, const std::string& root, const Json& extra) {
  const fs::path dir = fs::path(root) / result.config.name;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
  Json doc;
  doc["name"] = result.config.name;
  doc["scenario"] = scenario_to_json(result.config);
  doc["tenants"] = Json::array();
  for (const auto& t : result.tenants) {
    export_trace(t.trace, (dir / ("tenant" + std::to_string(t.tenant) + ".csv")).string());
    doc["tenants"].push_back({{"tenant", t.tenant}, {"admitted", t.admitted}, {"metrics", metrics_to_json(t.metrics)}});
  }
  if (!extra.is_null()) doc["live"] = extra;
  write_text(dir / "summary.json", doc.dump(2) + "\n");
  return dir.string();
}

std::vector<RunSummary> collect_runs(const std::vector<std::string>& roots) {
  std::vector<RunSummary> runs;
  for (const auto& root : roots) {
    const fs::path p(root);
    if (!fs::is_directory(p)) throw std::runtime_error("not a directory: " + root);
    if (fs::exists(p / "summary.json")) {
      runs.push_back(load_summary(p / "summary.json"));
      continue;
    }
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(p))
      if (entry.is_directory() && fs::exists(entry.path() / "summary.json")) dirs.push_back(entry.path());
    std::sort(dirs.begin(), dirs.end());
    for (const auto& d : dirs) runs.push_back(load_summary(d / "summary.json"));
  }
  return runs;
}

ValidationTable validation_table(const std::vector<RunSummary>& runs) {
  ValidationTable table = empty_validation_table();
  const auto& cols = validation_columns();
  for (const auto& r : runs) {
    for (int sc = 1; sc <= 2; ++sc)
      for (std::size_t j = 0; j < cols.size(); ++j)
        if (r.name == "validation_sc" + std::to_string(sc) + "_" + cols[j].slug && !r.tenants.empty()) {
          table.clre[sc - 1][j] = r.tenants[0].metrics.clre;
          table.failed[sc - 1][j] = r.tenants[0].metrics.failed;
        }
  }
  return table;
}

std::string write_report(const std::vector<std::string>& roots, const std::string& out_dir, int stride) {
  if (stride < 1) throw std::invalid_argument("report: stride must be >= 1");
  const std::vector<RunSummary> runs = collect_runs(roots);
  if (runs.empty()) throw std::runtime_error("no runs (*/summary.json) found");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create " + out_dir + ": " + ec.message());

  std::string summary = "run,tenant,clre,failed,failure_time,miss_ratio,mean_frequency,median_frequency,"
                        "recovery_fraction,load,requests\n";
  std::string text;
  char line[256];
  std::snprintf(line, sizeof line, "%-28s %6s %10s %7s %8s %8s %9s\n", "run", "tenant", "CLRE", "failed", "miss",
                "f_med", "recovery");
  text += line;
  for (const auto& r : runs)
    for (const auto& t : r.tenants) {
      const MetricsSummary& m = t.metrics;
      summary += r.name + "," + std::to_string(t.tenant) + "," + csv_number(m.clre) + "," + (m.failed ? "1" : "0") +
                 "," + csv_number(m.failure_time) + "," + csv_number(m.miss_ratio) + "," +
                 csv_number(m.mean_frequency) + "," + csv_number(m.median_frequency) + "," +
                 csv_number(m.recovery_fraction) + "," + csv_number(m.load) + "," + std::to_string(m.requests) + "\n";
      std::snprintf(line, sizeof line, "%-28s %6d %10.3f %7s %8.3f %8.1f %9.3f\n", r.name.c_str(), t.tenant, m.clre,
                    m.failed ? "yes" : "no", m.miss_ratio, m.median_frequency, m.recovery_fraction);
      text += line;
    }
  write_text(fs::path(out_dir) / "runs.csv", summary);

  bool any_validation = false;
  for (const auto& r : runs) any_validation |= family(r.name) == "validation";
  if (any_validation) {
    const ValidationTable table = validation_table(runs);
    write_text(fs::path(out_dir) / "validation_table.csv", validation_table_csv(table));
    text = format_validation_table(table) + "\n" + text;
  }

  std::map<std::string, std::string> figures;
  for (const auto& r : runs) {
    std::string& fig = figures[family(r.name)];
    if (fig.empty()) fig = "run,tenant,t,position,setpoint,u,source,h_d,rho,clre\n";
    for (const auto& t : r.tenants) {
      const fs::path file = fs::path(r.dir) / ("tenant" + std::to_string(t.tenant) + ".csv");
      const Trace trace = import_trace(file.string());
      for (std::size_t i = 0; i < trace.size(); i += static_cast<std::size_t>(stride)) {
        const TraceRecord& x = trace[i];
        fig += r.name + "," + std::to_string(t.tenant) + "," + csv_number(x.t) + "," + csv_number(x.position) + "," +
               csv_number(x.setpoint) + "," + csv_number(x.u) + "," + to_string(x.source) + "," + csv_number(x.h_d) +
               "," + csv_number(x.rho) + "," + csv_number(x.clre) + "\n";
      }
    }
  }
  for (const auto& [name, content] : figures) write_text(fs::path(out_dir) / ("fig_" + name + ".csv"), content);
  return text;
}

}  // namespace rccs
