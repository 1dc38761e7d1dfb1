#pragma once

#include <string>
#include <vector>

#include "mbc/types.hpp"

namespace mbc {

enum class GnssFeature : int {
  Dtwp = 0,   // distance to water point, meters
  Speed = 1,  // median Doppler speed, m/s
  Error = 2,  // median EHPE, meters
};

// Which GNSS features are enabled (ablation support) and the earth
// radius used by the equirectangular distance.
struct GnssFeatureConfig {
  double earth_radius_m = 6371230.0;
  bool dtwp = true;
  bool speed = true;
  bool error = true;

  int feature_count() const {
    return (dtwp ? 1 : 0) + (speed ? 1 : 0) + (error ? 1 : 0);
  }
  bool none() const { return feature_count() == 0; }
  std::string schema_id() const;
  std::vector<std::string> feature_names() const;
  void validate() const;

  static GnssFeatureConfig from_subset(const std::string& subset);
  static GnssFeatureConfig none_config();
};

// Median with the even-count rule: mean of the two middle order
// statistics. Throws std::invalid_argument on empty input.
double median(std::vector<double> values);

// Equirectangular-projection distance in meters between a position and
// the water point. Inputs in degrees; converted to radians internally.
double dtwp(double lat_med_deg, double lon_med_deg, const WaterPoint& wp,
            double earth_radius_m);

// GNSS feature vector in the fixed order [dtwp, speed, error] restricted
// to the enabled subset. Medians skip NaN entries per field. Throws
// missing_modality_error (see fusion.hpp) when no usable fix data exists.
FeatureVector gnss_feature_vector(const Datapoint& dp,
                                  const GnssFeatureConfig& cfg);

// True when gnss_feature_vector would fail: no fixes, or some enabled
// field has zero valid (non-NaN) samples.
bool gnss_modality_missing(const Datapoint& dp, const GnssFeatureConfig& cfg);

}  // namespace mbc
