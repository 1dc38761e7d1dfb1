#include "mbc/accel_features.hpp"

#include <cmath>
#include <stdexcept>

namespace mbc {

std::string AccelFeatureConfig::schema_id() const {
  std::string id = "acc:";
  bool first = true;
  if (include_mean) {
    id += "m";
    first = false;
  }
  for (double g : gammas) {
    if (!first) id += ",";
    id += "s:" + shortest_double(g);
    first = false;
  }
  return id;
}

std::vector<std::string> AccelFeatureConfig::feature_names() const {
  static const char* axes[3] = {"x", "y", "z"};
  std::vector<std::string> names;
  if (include_mean) {
    for (const char* a : axes) names.push_back(std::string("m_") + a);
  }
  for (double g : gammas) {
    for (const char* a : axes) {
      names.push_back("s" + shortest_double(g) + "_" + a);
    }
  }
  return names;
}

void AccelFeatureConfig::validate() const {
  for (double g : gammas) {
    if (!(g > 0.0 && g < 1.0)) {
      throw std::invalid_argument("filter parameter gamma must lie strictly in (0,1), got " +
                                  shortest_double(g));
    }
  }
  if (feature_count() == 0) {
    throw std::invalid_argument("accel feature config selects no features");
  }
}

std::vector<double> highpass_filter(const std::vector<double>& x, double gamma) {
  std::vector<double> y(x.size());
  double x_prev = 0.0;  // zero pre-history
  double y_prev = 0.0;
  for (std::size_t n = 0; n < x.size(); ++n) {
    if (!std::isfinite(x[n])) {
      throw std::invalid_argument("non-finite sample at index " + std::to_string(n));
    }
    y[n] = gamma * y_prev + x[n] - x_prev;
    x_prev = x[n];
    y_prev = y[n];
  }
  return y;
}

namespace {

double mean_of(const std::vector<double>& v) {
  double sum = 0.0;
  for (double s : v) sum += s;
  return sum / static_cast<double>(v.size());
}

double mean_abs_filtered(const std::vector<double>& v, double gamma) {
  const std::vector<double> filtered = highpass_filter(v, gamma);
  double sum = 0.0;
  for (double s : filtered) sum += std::fabs(s);
  return sum / static_cast<double>(filtered.size());
}

void require_non_empty(const AccelSegment& seg) {
  if (seg.empty()) throw std::invalid_argument("empty accel segment");
  if (seg.y.size() != seg.x.size() || seg.z.size() != seg.x.size()) {
    throw std::invalid_argument("axis length mismatch");
  }
}

}  // namespace

std::array<double, 3> mean_features(const AccelSegment& seg) {
  require_non_empty(seg);
  return {mean_of(seg.x), mean_of(seg.y), mean_of(seg.z)};
}

std::array<double, 3> mas_features(const AccelSegment& seg, double gamma) {
  require_non_empty(seg);
  return {mean_abs_filtered(seg.x, gamma), mean_abs_filtered(seg.y, gamma),
          mean_abs_filtered(seg.z, gamma)};
}

FeatureVector accel_feature_vector(const AccelSegment& seg,
                                   const AccelFeatureConfig& cfg) {
  cfg.validate();
  FeatureVector out;
  out.schema_id = cfg.schema_id();
  out.values.reserve(cfg.feature_count());
  if (cfg.include_mean) {
    for (double m : mean_features(seg)) out.values.push_back(m);
  }
  for (double g : cfg.gammas) {
    for (double s : mas_features(seg, g)) out.values.push_back(s);
  }
  return out;
}

}  // namespace mbc
