#include "mbc/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace mbc {

using nlohmann::ordered_json;

DatasetFormat dataset_format_from_string(const std::string& s) {
  if (s == "canonical-jsonl" || s == "jsonl") return DatasetFormat::CanonicalJsonl;
  if (s == "csv-pair") return DatasetFormat::CsvPair;
  throw std::invalid_argument("unknown dataset format: " + s);
}

void ValidationReport::add(int line, std::string message) {
  issues.push_back({line, std::move(message)});
}

std::string ValidationReport::to_text() const {
  std::ostringstream os;
  for (const auto& issue : issues) {
    os << "line " << issue.line << ": " << issue.message << "\n";
  }
  return os.str();
}

namespace {

bool valid_iso_date(const std::string& s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u}) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  }
  return true;
}

void check_range(double v, double lo, double hi, const char* what) {
  if (!(v >= lo && v <= hi)) {
    throw std::invalid_argument(std::string(what) + " out of range: " +
                                shortest_double(v));
  }
}

double nullable_nonneg(const ordered_json& j, const char* what) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  const double v = j.get<double>();
  if (std::isnan(v) || v < 0.0) {
    throw std::invalid_argument(std::string(what) + " must be >= 0");
  }
  return v;
}

Datapoint datapoint_from_json(const ordered_json& j) {
  Datapoint dp;
  dp.animal_id = j.at("animal_id").get<std::string>();
  if (dp.animal_id.empty()) throw std::invalid_argument("empty animal_id");
  dp.day = j.at("day").get<std::string>();
  if (!valid_iso_date(dp.day)) {
    throw std::invalid_argument("day is not an ISO-8601 date: " + dp.day);
  }
  const auto& label = j.at("label");
  if (!label.is_null()) {
    dp.has_label = true;
    dp.label = behavior_from_string(label.get<std::string>());
  }

  const auto& accel = j.at("accel");
  dp.accel.sample_rate_hz = accel.at("sample_rate_hz").get<double>();
  if (!(dp.accel.sample_rate_hz > 0.0)) {
    throw std::invalid_argument("sample_rate_hz must be positive");
  }
  dp.accel.x = accel.at("x").get<std::vector<double>>();
  dp.accel.y = accel.at("y").get<std::vector<double>>();
  dp.accel.z = accel.at("z").get<std::vector<double>>();
  if (dp.accel.y.size() != dp.accel.x.size() ||
      dp.accel.z.size() != dp.accel.x.size()) {
    throw std::invalid_argument("axis length mismatch");
  }
  if (dp.accel.size() == 1) {
    throw std::invalid_argument("accel segment needs >= 2 samples (or 0 when absent)");
  }
  for (const auto* axis : {&dp.accel.x, &dp.accel.y, &dp.accel.z}) {
    for (double v : *axis) {
      if (!std::isfinite(v)) throw std::invalid_argument("non-finite accel sample");
    }
  }

  for (const auto& jf : j.at("gnss")) {
    GnssFix fix;
    fix.lat_deg = jf.at("lat_deg").get<double>();
    fix.lon_deg = jf.at("lon_deg").get<double>();
    check_range(fix.lat_deg, -90.0, 90.0, "lat_deg");
    check_range(fix.lon_deg, -180.0, 180.0, "lon_deg");
    fix.speed_mps = nullable_nonneg(jf.at("speed_mps"), "speed_mps");
    fix.ehpe_m = nullable_nonneg(jf.at("ehpe_m"), "ehpe_m");
    fix.t_unix = jf.at("t_unix").get<double>();
    dp.gnss.push_back(fix);
  }
  if (!dp.gnss.empty() && !dp.accel.empty()) {
    // The segment start is not stored, so the checkable form of the
    // window invariant is: fix timestamps span at most the segment
    // duration plus the 1 s slack on both ends.
    double lo = dp.gnss.front().t_unix, hi = lo;
    for (const GnssFix& f : dp.gnss) {
      lo = std::min(lo, f.t_unix);
      hi = std::max(hi, f.t_unix);
    }
    const double window = dp.accel.size() / dp.accel.sample_rate_hz;
    if (hi - lo > window + 2.0) {
      throw std::invalid_argument("gnss timestamps span more than the segment window + 2 s");
    }
  }

  const auto& wp = j.at("water_point");
  dp.water_point.lat_deg = wp.at("lat_deg").get<double>();
  dp.water_point.lon_deg = wp.at("lon_deg").get<double>();
  check_range(dp.water_point.lat_deg, -90.0, 90.0, "water_point.lat_deg");
  check_range(dp.water_point.lon_deg, -180.0, 180.0, "water_point.lon_deg");
  dp.water_point.valid_day = dp.day;
  return dp;
}

ordered_json number_or_null(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

}  // namespace

std::string serialize_datapoint(const Datapoint& dp) {
  ordered_json j;
  j["animal_id"] = dp.animal_id;
  j["day"] = dp.day;
  if (dp.has_label) {
    j["label"] = to_string(dp.label);
  } else {
    j["label"] = nullptr;
  }
  j["accel"] = {{"sample_rate_hz", dp.accel.sample_rate_hz},
                {"x", dp.accel.x},
                {"y", dp.accel.y},
                {"z", dp.accel.z}};
  ordered_json fixes = ordered_json::array();
  for (const GnssFix& f : dp.gnss) {
    fixes.push_back({{"lat_deg", f.lat_deg},
                     {"lon_deg", f.lon_deg},
                     {"speed_mps", number_or_null(f.speed_mps)},
                     {"ehpe_m", number_or_null(f.ehpe_m)},
                     {"t_unix", f.t_unix}});
  }
  j["gnss"] = std::move(fixes);
  j["water_point"] = {{"lat_deg", dp.water_point.lat_deg},
                      {"lon_deg", dp.water_point.lon_deg}};
  return j.dump();
}

void write_jsonl(const std::vector<Datapoint>& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const Datapoint& dp : data) out << serialize_datapoint(dp) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

ParseResult parse_jsonl_stream(std::istream& in) {
  ParseResult result;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      result.data.push_back(datapoint_from_json(ordered_json::parse(line)));
    } catch (const std::exception& e) {
      result.report.add(lineno, e.what());
    }
  }
  return result;
}

namespace {

// Minimal CSV row reader with double-quote support.
std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::vector<double> parse_sample_list(const std::string& s) {
  std::vector<double> out;
  std::istringstream is(s);
  double v;
  while (is >> v) out.push_back(v);
  return out;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;  // row i is source line i+2
  std::map<std::string, int> col;

  int require(const std::string& name) const {
    auto it = col.find(name);
    if (it == col.end()) throw std::runtime_error("missing CSV column: " + name);
    return it->second;
  }
};

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty CSV: " + path);
  t.header = split_csv_row(line);
  for (std::size_t i = 0; i < t.header.size(); ++i) {
    t.col[t.header[i]] = static_cast<int>(i);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    t.rows.push_back(split_csv_row(line));
  }
  return t;
}

double csv_double(const std::string& s) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("bad number: " + s);
  return v;
}

}  // namespace

ParseResult parse_csv_pair(const std::string& segments_csv,
                           const std::string& fixes_csv,
                           const std::string& water_csv) {
  const CsvTable segments = read_csv(segments_csv);
  const CsvTable fixes = read_csv(fixes_csv);
  const CsvTable water = read_csv(water_csv);

  std::map<std::string, WaterPoint> water_by_day;
  {
    const int c_day = water.require("day");
    const int c_lat = water.require("lat_deg");
    const int c_lon = water.require("lon_deg");
    for (const auto& row : water.rows) {
      WaterPoint wp;
      wp.valid_day = row[c_day];
      wp.lat_deg = csv_double(row[c_lat]);
      wp.lon_deg = csv_double(row[c_lon]);
      water_by_day[wp.valid_day] = wp;
    }
  }

  std::map<std::string, std::vector<GnssFix>> fixes_by_segment;
  ParseResult result;
  {
    const int c_id = fixes.require("segment_id");
    const int c_lat = fixes.require("lat_deg");
    const int c_lon = fixes.require("lon_deg");
    const int c_speed = fixes.require("speed_mps");
    const int c_ehpe = fixes.require("ehpe_m");
    const int c_t = fixes.require("t_unix");
    for (std::size_t i = 0; i < fixes.rows.size(); ++i) {
      const auto& row = fixes.rows[i];
      try {
        GnssFix fix;
        fix.lat_deg = csv_double(row.at(c_lat));
        fix.lon_deg = csv_double(row.at(c_lon));
        fix.speed_mps = csv_double(row.at(c_speed));
        fix.ehpe_m = csv_double(row.at(c_ehpe));
        fix.t_unix = csv_double(row.at(c_t));
        fixes_by_segment[row.at(c_id)].push_back(fix);
      } catch (const std::exception& e) {
        result.report.add(static_cast<int>(i) + 2,
                          std::string("fixes: ") + e.what());
      }
    }
  }

  const int c_id = segments.require("segment_id");
  const int c_animal = segments.require("animal_id");
  const int c_day = segments.require("day");
  const int c_label = segments.require("label");
  const int c_rate = segments.require("sample_rate_hz");
  const int c_x = segments.require("x");
  const int c_y = segments.require("y");
  const int c_z = segments.require("z");
  for (std::size_t i = 0; i < segments.rows.size(); ++i) {
    const auto& row = segments.rows[i];
    const int lineno = static_cast<int>(i) + 2;
    try {
      // Denormalize through the canonical JSON validator so csv-pair and
      // canonical records obey identical rules.
      Datapoint dp;
      dp.animal_id = row.at(c_animal);
      dp.day = row.at(c_day);
      const std::string& label = row.at(c_label);
      if (!label.empty()) {
        dp.has_label = true;
        dp.label = behavior_from_string(label);
      }
      dp.accel.sample_rate_hz = csv_double(row.at(c_rate));
      dp.accel.x = parse_sample_list(row.at(c_x));
      dp.accel.y = parse_sample_list(row.at(c_y));
      dp.accel.z = parse_sample_list(row.at(c_z));
      auto fit = fixes_by_segment.find(row.at(c_id));
      if (fit != fixes_by_segment.end()) dp.gnss = fit->second;
      auto wit = water_by_day.find(dp.day);
      if (wit == water_by_day.end()) {
        throw std::invalid_argument("no water point recorded for day " + dp.day);
      }
      dp.water_point = wit->second;
      const ordered_json reparsed = ordered_json::parse(serialize_datapoint(dp));
      result.data.push_back(datapoint_from_json(reparsed));
    } catch (const std::exception& e) {
      result.report.add(lineno, std::string("segments: ") + e.what());
    }
  }
  return result;
}

namespace {

std::string derive_sibling(const std::string& segments_path, const char* kind) {
  const std::string key = "segments.csv";
  const std::size_t pos = segments_path.rfind(key);
  if (pos == std::string::npos || pos + key.size() != segments_path.size()) {
    throw std::runtime_error(
        "csv-pair path must end with 'segments.csv' so sibling files can be derived: " +
        segments_path);
  }
  return segments_path.substr(0, pos) + kind + ".csv";
}

}  // namespace

ParseResult parse_dataset(const std::string& path, DatasetFormat format) {
  switch (format) {
    case DatasetFormat::CanonicalJsonl: {
      std::ifstream in(path);
      if (!in) throw std::runtime_error("cannot open: " + path);
      return parse_jsonl_stream(in);
    }
    case DatasetFormat::CsvPair:
      return parse_csv_pair(path, derive_sibling(path, "fixes"),
                            derive_sibling(path, "water"));
  }
  throw std::invalid_argument("unknown dataset format");
}

std::vector<Datapoint> filter_complete(const std::vector<Datapoint>& data) {
  std::vector<Datapoint> out;
  out.reserve(data.size());
  for (const Datapoint& dp : data) {
    if (!dp.accel.empty() && !dp.gnss.empty()) out.push_back(dp);
  }
  return out;
}

std::map<std::string, std::vector<Datapoint>> split_by_animal(
    const std::vector<Datapoint>& data) {
  std::map<std::string, std::vector<Datapoint>> groups;
  for (const Datapoint& dp : data) groups[dp.animal_id].push_back(dp);
  return groups;
}

Priors priors_from_counts(const std::vector<std::int64_t>& counts, double smoothing) {
  if (smoothing < 0.0) throw std::invalid_argument("smoothing must be >= 0");
  std::int64_t total = 0;
  for (std::int64_t c : counts) total += c;
  if (total == 0) throw std::invalid_argument("no labeled data");
  const double denom =
      static_cast<double>(total) + smoothing * static_cast<double>(counts.size());
  Priors priors;
  priors.p.reserve(counts.size());
  for (std::int64_t c : counts) {
    priors.p.push_back((static_cast<double>(c) + smoothing) / denom);
  }
  return priors;
}

Priors class_priors(const std::vector<Datapoint>& data, double smoothing) {
  std::vector<std::int64_t> counts(kNumClasses, 0);
  for (const Datapoint& dp : data) {
    if (dp.has_label) ++counts[static_cast<int>(dp.label)];
  }
  return priors_from_counts(counts, smoothing);
}

}  // namespace mbc
