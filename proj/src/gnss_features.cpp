#include "mbc/gnss_features.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "mbc/fusion.hpp"

namespace mbc {

namespace {

constexpr double kDegToRad = 3.14159265358979323846 / 180.0;

void check_coords(double lat_deg, double lon_deg) {
  if (!(lat_deg >= -90.0 && lat_deg <= 90.0)) {
    throw std::invalid_argument("latitude out of range: " + shortest_double(lat_deg));
  }
  if (!(lon_deg >= -180.0 && lon_deg <= 180.0)) {
    throw std::invalid_argument("longitude out of range: " + shortest_double(lon_deg));
  }
}

// Median over the non-NaN entries of one fix field; nullopt when none.
template <typename Getter>
std::optional<double> field_median(const std::vector<GnssFix>& fixes, Getter get) {
  std::vector<double> vals;
  vals.reserve(fixes.size());
  for (const GnssFix& f : fixes) {
    double v = get(f);
    if (!std::isnan(v)) vals.push_back(v);
  }
  if (vals.empty()) return std::nullopt;
  return median(std::move(vals));
}

}  // namespace

std::string GnssFeatureConfig::schema_id() const {
  if (none()) return "gnss:none";
  std::string id = "gnss:";
  bool first = true;
  auto append = [&](const char* name) {
    if (!first) id += ",";
    id += name;
    first = false;
  };
  if (dtwp) append("dtwp");
  if (speed) append("speed");
  if (error) append("error");
  return id;
}

std::vector<std::string> GnssFeatureConfig::feature_names() const {
  std::vector<std::string> names;
  if (dtwp) names.push_back("dtwp_m");
  if (speed) names.push_back("speed_mps");
  if (error) names.push_back("ehpe_m");
  return names;
}

void GnssFeatureConfig::validate() const {
  if (!(earth_radius_m > 0.0)) {
    throw std::invalid_argument("earth radius must be positive");
  }
}

GnssFeatureConfig GnssFeatureConfig::from_subset(const std::string& subset) {
  GnssFeatureConfig cfg;
  if (subset == "all") return cfg;
  cfg.dtwp = cfg.speed = cfg.error = false;
  if (subset == "none" || subset.empty()) return cfg;
  std::size_t start = 0;
  while (start <= subset.size()) {
    std::size_t end = subset.find('+', start);
    if (end == std::string::npos) end = subset.size();
    std::string tok = subset.substr(start, end - start);
    if (tok == "dtwp") cfg.dtwp = true;
    else if (tok == "speed") cfg.speed = true;
    else if (tok == "error") cfg.error = true;
    else throw std::invalid_argument("unknown GNSS feature in subset: " + tok);
    start = end + 1;
  }
  return cfg;
}

GnssFeatureConfig GnssFeatureConfig::none_config() {
  GnssFeatureConfig cfg;
  cfg.dtwp = cfg.speed = cfg.error = false;
  return cfg;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("no GNSS values");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double dtwp(double lat_med_deg, double lon_med_deg, const WaterPoint& wp,
            double earth_radius_m) {
  check_coords(lat_med_deg, lon_med_deg);
  check_coords(wp.lat_deg, wp.lon_deg);
  const double phi = lat_med_deg * kDegToRad;
  const double lam = lon_med_deg * kDegToRad;
  const double phi_w = wp.lat_deg * kDegToRad;
  const double lam_w = wp.lon_deg * kDegToRad;
  const double cos_mid = std::cos(0.5 * (phi + phi_w));
  const double dlam = lam - lam_w;
  const double dphi = phi - phi_w;
  return earth_radius_m * std::sqrt(cos_mid * cos_mid * dlam * dlam + dphi * dphi);
}

bool gnss_modality_missing(const Datapoint& dp, const GnssFeatureConfig& cfg) {
  if (dp.gnss.empty()) return true;
  if (cfg.dtwp) {
    if (!field_median(dp.gnss, [](const GnssFix& f) { return f.lat_deg; }) ||
        !field_median(dp.gnss, [](const GnssFix& f) { return f.lon_deg; })) {
      return true;
    }
  }
  if (cfg.speed &&
      !field_median(dp.gnss, [](const GnssFix& f) { return f.speed_mps; })) {
    return true;
  }
  if (cfg.error &&
      !field_median(dp.gnss, [](const GnssFix& f) { return f.ehpe_m; })) {
    return true;
  }
  return false;
}

FeatureVector gnss_feature_vector(const Datapoint& dp,
                                  const GnssFeatureConfig& cfg) {
  cfg.validate();
  if (dp.gnss.empty()) {
    throw missing_modality_error("missing GNSS modality");
  }
  FeatureVector out;
  out.schema_id = cfg.schema_id();
  out.values.reserve(cfg.feature_count());

  if (cfg.dtwp) {
    auto lat = field_median(dp.gnss, [](const GnssFix& f) { return f.lat_deg; });
    auto lon = field_median(dp.gnss, [](const GnssFix& f) { return f.lon_deg; });
    if (!lat || !lon) throw missing_modality_error("no valid GNSS positions");
    out.values.push_back(dtwp(*lat, *lon, dp.water_point, cfg.earth_radius_m));
  }
  if (cfg.speed) {
    auto v = field_median(dp.gnss, [](const GnssFix& f) { return f.speed_mps; });
    if (!v) throw missing_modality_error("no valid GNSS speed values");
    out.values.push_back(*v);
  }
  if (cfg.error) {
    auto e = field_median(dp.gnss, [](const GnssFix& f) { return f.ehpe_m; });
    if (!e) throw missing_modality_error("no valid GNSS error values");
    out.values.push_back(*e);
  }
  return out;
}

}  // namespace mbc
