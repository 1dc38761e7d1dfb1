#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

#include "mbc/ingest.hpp"
#include "mbc/synth.hpp"

using namespace mbc;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

std::string record_line(int n_samples, const std::string& label = "grazing") {
  std::string xs;
  for (int i = 0; i < n_samples; ++i) {
    xs += (i ? "," : "") + std::to_string(0.1 * i);
  }
  std::string full;
  for (int i = 0; i < 256; ++i) full += (i ? ",0.5" : "0.5");
  return R"({"animal_id":"cow1","day":"2020-03-23","label":")" + label +
         R"(","accel":{"sample_rate_hz":50.0,"x":[)" + xs + R"(],"y":[)" + full +
         R"(],"z":[)" + full +
         R"(]},"gnss":[{"lat_deg":-30.6,"lon_deg":151.5,"speed_mps":0.5,"ehpe_m":7.0,"t_unix":100.0}],)" +
         R"("water_point":{"lat_deg":-30.61,"lon_deg":151.54}})";
}

bool bit_equal(double a, double b) {
  return std::memcmp(&a, &b, sizeof(double)) == 0;
}

bool datapoints_bit_equal(const Datapoint& a, const Datapoint& b) {
  if (a.animal_id != b.animal_id || a.day != b.day || a.has_label != b.has_label)
    return false;
  if (a.has_label && a.label != b.label) return false;
  if (!bit_equal(a.accel.sample_rate_hz, b.accel.sample_rate_hz)) return false;
  for (auto [pa, pb] : {std::pair{&a.accel.x, &b.accel.x},
                        std::pair{&a.accel.y, &b.accel.y},
                        std::pair{&a.accel.z, &b.accel.z}}) {
    if (pa->size() != pb->size()) return false;
    for (std::size_t i = 0; i < pa->size(); ++i) {
      if (!bit_equal((*pa)[i], (*pb)[i])) return false;
    }
  }
  if (a.gnss.size() != b.gnss.size()) return false;
  for (std::size_t i = 0; i < a.gnss.size(); ++i) {
    const GnssFix& fa = a.gnss[i];
    const GnssFix& fb = b.gnss[i];
    const bool nan_ok = (std::isnan(fa.speed_mps) == std::isnan(fb.speed_mps)) &&
                        (std::isnan(fa.ehpe_m) == std::isnan(fb.ehpe_m));
    if (!nan_ok) return false;
    if (!bit_equal(fa.lat_deg, fb.lat_deg) || !bit_equal(fa.lon_deg, fb.lon_deg) ||
        !bit_equal(fa.t_unix, fb.t_unix))
      return false;
    if (!std::isnan(fa.speed_mps) && !bit_equal(fa.speed_mps, fb.speed_mps))
      return false;
    if (!std::isnan(fa.ehpe_m) && !bit_equal(fa.ehpe_m, fb.ehpe_m)) return false;
  }
  return bit_equal(a.water_point.lat_deg, b.water_point.lat_deg) &&
         bit_equal(a.water_point.lon_deg, b.water_point.lon_deg);
}

}  // namespace

TEST_SUITE("ingest") {

TEST_CASE("well-formed file parses clean") {
  const auto path = temp_file("mbc_ok.jsonl");
  {
    std::ofstream out(path);
    out << record_line(256) << "\n" << record_line(256, "walking") << "\n"
        << record_line(256, "drinking") << "\n";
  }
  const ParseResult r = parse_dataset(path.string(), DatasetFormat::CanonicalJsonl);
  CHECK(r.data.size() == 3);
  CHECK(r.report.clean());
  CHECK(r.data[1].label == BehaviorClass::Walking);
  std::filesystem::remove(path);
}

TEST_CASE("axis length mismatch is reported with the line number") {
  const auto path = temp_file("mbc_bad.jsonl");
  {
    std::ofstream out(path);
    out << record_line(256) << "\n" << record_line(255) << "\n";
  }
  const ParseResult r = parse_dataset(path.string(), DatasetFormat::CanonicalJsonl);
  CHECK(r.data.size() == 1);
  REQUIRE(r.report.issues.size() == 1);
  CHECK(r.report.issues[0].line == 2);
  CHECK(r.report.issues[0].message == "axis length mismatch");
  std::filesystem::remove(path);
}

TEST_CASE("unreadable file throws") {
  CHECK_THROWS_AS(parse_dataset("/nonexistent/nope.jsonl", DatasetFormat::CanonicalJsonl),
                  std::runtime_error);
}

TEST_CASE("unknown label and bad dates are collected, not thrown") {
  const auto path = temp_file("mbc_bad2.jsonl");
  {
    std::ofstream out(path);
    out << record_line(256, "surfing") << "\n";
    std::string line = record_line(256);
    const std::string from = "\"day\":\"2020-03-23\"";
    line.replace(line.find(from), from.size(), "\"day\":\"23/03/2020\"");
    out << line << "\n";
  }
  const ParseResult r = parse_dataset(path.string(), DatasetFormat::CanonicalJsonl);
  CHECK(r.data.empty());
  CHECK(r.report.issues.size() == 2);
  std::filesystem::remove(path);
}

TEST_CASE("gnss timestamps outside the segment window are rejected") {
  const auto path = temp_file("mbc_bad3.jsonl");
  {
    std::ofstream out(path);
    std::string line = record_line(256);
    const std::string from = "\"t_unix\":100.0";
    // second fix 60 s later: 256 samples @ 50 Hz span 5.12 s (+2 slack)
    line.replace(line.find(from), from.size(),
                 "\"t_unix\":100.0},{\"lat_deg\":-30.6,\"lon_deg\":151.5,"
                 "\"speed_mps\":0.5,\"ehpe_m\":7.0,\"t_unix\":160.0");
    out << line << "\n";
  }
  const ParseResult r = parse_dataset(path.string(), DatasetFormat::CanonicalJsonl);
  CHECK(r.data.empty());
  REQUIRE(r.report.issues.size() == 1);
  CHECK(r.report.issues[0].message ==
        "gnss timestamps span more than the segment window + 2 s");
  std::filesystem::remove(path);
}

TEST_CASE("parse-serialize-parse round-trips bit-exactly") {
  BehaviorSynthSpec spec;
  spec.num_animals = 2;
  spec.points_per_animal = 25;
  spec.segment_len = 16;
  spec.seed = 20240101;
  std::vector<Datapoint> data = gen_behavior_like(spec);
  // exercise null (NaN) speed/ehpe and the unlabeled path too
  data[0].gnss[0].speed_mps = std::numeric_limits<double>::quiet_NaN();
  data[1].gnss[0].ehpe_m = std::numeric_limits<double>::quiet_NaN();
  data[2].has_label = false;

  const auto path = temp_file("mbc_roundtrip.jsonl");
  write_jsonl(data, path.string());
  const ParseResult r1 = parse_dataset(path.string(), DatasetFormat::CanonicalJsonl);
  REQUIRE(r1.report.clean());
  REQUIRE(r1.data.size() == data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(datapoints_bit_equal(data[i], r1.data[i]));
  }
  // serialize the reparsed data again; the text must be identical
  const auto path2 = temp_file("mbc_roundtrip2.jsonl");
  write_jsonl(r1.data, path2.string());
  std::ifstream f1(path), f2(path2);
  std::string s1((std::istreambuf_iterator<char>(f1)), {});
  std::string s2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(s1 == s2);
  std::filesystem::remove(path);
  std::filesystem::remove(path2);
}

TEST_CASE("filter_complete") {
  BehaviorSynthSpec spec;
  spec.num_animals = 1;
  spec.points_per_animal = 4;
  spec.segment_len = 8;
  std::vector<Datapoint> data = gen_behavior_like(spec);
  data[0].gnss.clear();                         // excluded
  data[1].gnss.resize(1);                       // boundary: included
  data[2].accel = AccelSegment{};               // excluded
  const auto kept = filter_complete(data);
  CHECK(kept.size() == 2);
  CHECK(filter_complete({}).empty());
}

TEST_CASE("split_by_animal partitions the input") {
  BehaviorSynthSpec spec;
  spec.num_animals = 3;
  spec.points_per_animal = 10;
  spec.segment_len = 8;
  const std::vector<Datapoint> data = gen_behavior_like(spec);
  const auto groups = split_by_animal(data);
  CHECK(groups.size() == 3);
  std::size_t total = 0;
  for (const auto& [id, pts] : groups) {
    total += pts.size();
    for (const Datapoint& dp : pts) CHECK(dp.animal_id == id);
  }
  CHECK(total == data.size());

  const auto one = split_by_animal(std::vector<Datapoint>(data.begin(), data.begin() + 10));
  CHECK(one.size() == 1);
}

TEST_CASE("class_priors formula") {
  // Arm20c-like counts, no smoothing
  const Priors p0 = priors_from_counts({6156, 910, 4080, 594, 222}, 0.0);
  CHECK(p0[0] == doctest::Approx(6156.0 / 11962.0).epsilon(1e-15));

  const Priors uniform = priors_from_counts({1, 1, 1, 1, 1}, 0.0);
  for (int c = 0; c < 5; ++c) CHECK(uniform[c] == doctest::Approx(0.2).epsilon(1e-15));

  const Priors smoothed = priors_from_counts({4, 0, 0, 0, 0}, 1.0);
  CHECK(smoothed[0] == doctest::Approx(5.0 / 9.0).epsilon(1e-15));
  for (int c = 1; c < 5; ++c) {
    CHECK(smoothed[c] == doctest::Approx(1.0 / 9.0).epsilon(1e-15));
  }
}

TEST_CASE("class_priors sums to 1 for any smoothing") {
  for (double smoothing : {0.0, 0.5, 1.0, 10.0}) {
    const Priors p = priors_from_counts({17, 3, 0, 5, 25}, smoothing);
    double sum = 0.0;
    for (std::size_t c = 0; c < p.size(); ++c) sum += p[c];
    CHECK(std::fabs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("class_priors requires labeled data") {
  CHECK_THROWS_WITH(class_priors({}, 1.0), "no labeled data");
  Datapoint unlabeled;
  CHECK_THROWS_AS(class_priors({unlabeled}, 1.0), std::invalid_argument);
}

TEST_CASE("csv-pair adapter agrees with the canonical parser") {
  const auto seg_path = temp_file("mbc_pair.segments.csv");
  const auto fix_path = temp_file("mbc_pair.fixes.csv");
  const auto water_path = temp_file("mbc_pair.water.csv");
  {
    std::ofstream seg(seg_path);
    seg << "segment_id,animal_id,day,label,sample_rate_hz,x,y,z\n";
    seg << "s1,cow1,2020-03-23,grazing,50,\"0.1 0.2 0.3\",\"0.4 0.5 0.6\",\"9.7 9.8 9.9\"\n";
    seg << "s2,cow2,2020-03-23,,50,\"1 2\",\"3 4\",\"5 6\"\n";
    seg << "s3,cow2,2020-03-24,walking,50,\"1 2 3\",\"3 4\",\"5 6 7\"\n";  // bad
    std::ofstream fix(fix_path);
    fix << "segment_id,lat_deg,lon_deg,speed_mps,ehpe_m,t_unix\n";
    fix << "s1,-30.6,151.5,0.4,7.5,100\n";
    fix << "s1,-30.6,151.5,,8.5,101\n";  // missing speed -> NaN
    std::ofstream water(water_path);
    water << "day,lat_deg,lon_deg\n";
    water << "2020-03-23,-30.61,151.54\n";
    water << "2020-03-24,-30.62,151.55\n";
  }
  const ParseResult r = parse_dataset(seg_path.string(), DatasetFormat::CsvPair);
  REQUIRE(r.data.size() == 2);
  CHECK(r.report.issues.size() == 1);  // the ragged s3 row
  const Datapoint& d0 = r.data[0];
  CHECK(d0.animal_id == "cow1");
  CHECK(d0.accel.x == std::vector<double>{0.1, 0.2, 0.3});
  REQUIRE(d0.gnss.size() == 2);
  CHECK(std::isnan(d0.gnss[1].speed_mps));
  CHECK(d0.water_point.lat_deg == -30.61);
  CHECK(!r.data[1].has_label);
  for (const auto& p : {seg_path, fix_path, water_path}) std::filesystem::remove(p);
}

}  // TEST_SUITE
