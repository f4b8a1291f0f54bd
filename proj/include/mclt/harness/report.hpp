#ifndef MCLT_HARNESS_REPORT_HPP
#define MCLT_HARNESS_REPORT_HPP

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mclt/errors.hpp"
#include "mclt/harness/config.hpp"
#include "mclt/numeric/stats.hpp"

namespace mclt::harness {

struct Gate {
  std::string name;
  std::string invariant;  // what the gate asserts, in words
  bool pass = false;
  std::string detail;     // the measured values behind the verdict
};

struct Row {
  std::vector<double> values;  // aligned with RunReport::columns; NaN = not available
  std::string error;           // non-empty when the row failed
};

struct FitSummary {
  std::string name;  // e.g. "ks_vs_n"
  std::string x, y;  // column names, both on log scale
  LinearFit fit;
};

struct RunReport {
  std::string kind;
  Config config;
  std::vector<std::string> columns;  // columns[0] is the sweep variable
  std::vector<Row> rows;             // sorted by the sweep variable
  std::vector<FitSummary> fits;
  std::vector<Gate> gates;
  nlohmann::json summary = nlohmann::json::object();  // kind-specific scalars
  std::optional<std::uint64_t> seed;
  std::string rng = "xoshiro256++, one jump stream per sweep point and chunk";
  std::size_t jobs = 1;
  double wall_seconds = 0.0;  // timing field, excluded from determinism

  bool all_pass() const {
    for (const auto& g : gates)
      if (!g.pass) return false;
    return true;
  }

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return static_cast<int>(i);
    return -1;
  }

  /// Finite values of a column, row order.
  std::vector<double> series(const std::string& name) const {
    const int c = column(name);
    if (c < 0) throw ArgumentError("report has no column '" + name + "'");
    std::vector<double> out;
    for (const auto& r : rows) out.push_back(r.values[c]);
    return out;
  }
};

// ---- number text -------------------------------------------------------------

/// Shortest round-trip decimal; "nan" for missing values.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::optional<double> parse_cell(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  return detail::parse_number<double>(s);
}

// ---- CSV ---------------------------------------------------------------------

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

inline std::string csv_header(const std::vector<std::string>& columns) {
  std::string s;
  for (const auto& c : columns) s += c + ",";
  return s + "error\n";
}

inline std::string csv_line(const Row& r) {
  std::string s;
  for (double v : r.values) s += format_number(v) + ",";
  return s + csv_escape(r.error) + "\n";
}

inline std::string to_csv(const RunReport& rep) {
  std::string s = csv_header(rep.columns);
  for (const auto& r : rep.rows) s += csv_line(r);
  return s;
}

/// Appends rows as they complete; flushes after each so a crash keeps the
/// finished prefix.
class CsvWriter {
public:
  CsvWriter() = default;
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns)
      : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw ArgumentError("cannot write " + path.string());
    out_ << csv_header(columns);
    out_.flush();
  }
  void write(const Row& r) {
    if (!out_.is_open()) return;
    out_ << csv_line(r);
    out_.flush();
  }

private:
  std::ofstream out_;
};

// ---- JSON ----------------------------------------------------------------------

inline nlohmann::json number_json(double v) {
  if (std::isfinite(v)) return v;
  return format_number(v);  // JSON has no NaN or infinity
}

inline double json_number(const nlohmann::json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    if (const auto v = parse_cell(j.get<std::string>())) return *v;
  }
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  throw ArgumentError("report: expected a number, got " + j.dump());
}

inline nlohmann::json fit_json(const LinearFit& f) {
  const auto [lo, hi] = f.slope_ci();
  return {{"slope", number_json(f.slope)},         {"intercept", number_json(f.intercept)},
          {"r_squared", number_json(f.r_squared)}, {"slope_se", number_json(f.slope_se)},
          {"slope_ci95", {number_json(lo), number_json(hi)}}, {"points", f.n}};
}

inline nlohmann::json to_json(const RunReport& rep) {
  nlohmann::json j;
  j["kind"] = rep.kind;
  j["config"] = rep.config.values();
  j["columns"] = rep.columns;
  auto rows = nlohmann::json::array();
  for (const auto& r : rep.rows) {
    nlohmann::json o;
    for (std::size_t c = 0; c < rep.columns.size(); ++c) o[rep.columns[c]] = number_json(r.values[c]);
    if (!r.error.empty()) o["error"] = r.error;
    rows.push_back(o);
  }
  j["rows"] = rows;
  auto fits = nlohmann::json::object();
  for (const auto& f : rep.fits) {
    auto o = fit_json(f.fit);
    o["x"] = "log " + f.x;
    o["y"] = "log " + f.y;
    fits[f.name] = o;
  }
  j["fits"] = fits;
  auto gates = nlohmann::json::array();
  for (const auto& g : rep.gates)
    gates.push_back({{"name", g.name}, {"invariant", g.invariant}, {"pass", g.pass}, {"detail", g.detail}});
  j["gates"] = gates;
  j["all_pass"] = rep.all_pass();
  j["summary"] = rep.summary;
  j["rng"] = {{"seed", rep.seed ? nlohmann::json(*rep.seed) : nlohmann::json(nullptr)}, {"generator", rep.rng}};
  j["timing"] = {{"wall_seconds", rep.wall_seconds}, {"jobs", rep.jobs}};
  return j;
}

inline RunReport report_from_json(const nlohmann::json& j) {
  try {
    RunReport rep;
    rep.kind = j.at("kind").get<std::string>();
    for (const auto& [k, v] : j.at("config").items()) rep.config.set(k, v.get<std::string>());
    rep.columns = j.at("columns").get<std::vector<std::string>>();
    for (const auto& o : j.at("rows")) {
      Row r;
      for (const auto& c : rep.columns) r.values.push_back(o.contains(c) ? json_number(o.at(c)) : std::nan(""));
      if (o.contains("error")) r.error = o.at("error").get<std::string>();
      rep.rows.push_back(std::move(r));
    }
    for (const auto& [name, o] : j.at("fits").items()) {
      FitSummary f;
      f.name = name;
      f.x = o.value("x", "");
      f.y = o.value("y", "");
      if (f.x.rfind("log ", 0) == 0) f.x.erase(0, 4);
      if (f.y.rfind("log ", 0) == 0) f.y.erase(0, 4);
      f.fit.slope = json_number(o.at("slope"));
      f.fit.intercept = json_number(o.at("intercept"));
      f.fit.r_squared = json_number(o.at("r_squared"));
      f.fit.slope_se = json_number(o.at("slope_se"));
      f.fit.n = o.at("points").get<std::size_t>();
      rep.fits.push_back(f);
    }
    for (const auto& g : j.at("gates"))
      rep.gates.push_back({g.at("name"), g.at("invariant"), g.at("pass"), g.value("detail", "")});
    rep.summary = j.value("summary", nlohmann::json::object());
    if (j.contains("rng") && j["rng"].at("seed").is_number_unsigned()) rep.seed = j["rng"]["seed"].get<std::uint64_t>();
    if (j.contains("timing")) {
      rep.wall_seconds = j["timing"].value("wall_seconds", 0.0);
      rep.jobs = j["timing"].value("jobs", std::size_t{1});
    }
    return rep;
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("malformed report: ") + e.what());
  }
}

inline RunReport load_report(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ArgumentError("cannot read report " + path.string());
  try {
    return report_from_json(nlohmann::json::parse(f));
  } catch (const nlohmann::json::parse_error& e) {
    throw ArgumentError("report " + path.string() + " is not JSON: " + e.what());
  }
}

/// Writes through a sibling temp file and renames it into place, so readers
/// see the old file or the complete new one.
inline void write_atomically(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ArgumentError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw ArgumentError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline void write_report_json(const RunReport& rep, const std::filesystem::path& path) {
  write_atomically(path, to_json(rep).dump(2) + "\n");
}

}  // namespace mclt::harness

#endif  // MCLT_HARNESS_REPORT_HPP
