#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mbc {

// The five mutually exclusive behavior classes. Codes are stable and
// used as row/column indices everywhere (confusion matrices, priors,
// MLP outputs).
enum class BehaviorClass : int {
  Grazing = 0,
  Walking = 1,
  Resting = 2,
  Drinking = 3,
  Alia = 4,
};

inline constexpr int kNumClasses = 5;

const char* to_string(BehaviorClass c);

// Throws std::invalid_argument on unknown names.
BehaviorClass behavior_from_string(const std::string& name);

// One GNSS receiver report. speed_mps / ehpe_m may be NaN when the
// source data lacks that field; per-field consumers skip NaN entries.
struct GnssFix {
  double lat_deg = 0.0;
  double lon_deg = 0.0;
  double speed_mps = 0.0;
  double ehpe_m = 0.0;
  double t_unix = 0.0;
};

struct WaterPoint {
  double lat_deg = 0.0;
  double lon_deg = 0.0;
  std::string valid_day;  // ISO-8601 date the coordinates were recorded for
};

// Fixed-length triaxial acceleration segment. All three axes have the
// same length; empty axes mean the accelerometry modality is absent.
struct AccelSegment {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> z;
  double sample_rate_hz = 50.0;

  std::size_t size() const { return x.size(); }
  bool empty() const { return x.empty(); }
};

// One labeled multimodal segment: the unit of classification.
struct Datapoint {
  std::string animal_id;
  std::string day;  // ISO-8601 date
  bool has_label = false;
  BehaviorClass label = BehaviorClass::Grazing;
  AccelSegment accel;
  std::vector<GnssFix> gnss;
  WaterPoint water_point;
};

// Class prior probabilities, strictly positive, summing to 1.
struct Priors {
  std::vector<double> p;

  std::size_t size() const { return p.size(); }
  double operator[](std::size_t c) const { return p[c]; }
};

// Ordered real-valued features plus the identifier of the recipe that
// produced them. Concatenation and model reuse rely on the schema_id.
struct FeatureVector {
  std::vector<double> values;
  std::string schema_id;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
};

// Shortest round-trip decimal representation of a double ("0.75", not
// "0.750000"). Used for schema ids and canonical serialization.
std::string shortest_double(double v);

}  // namespace mbc
