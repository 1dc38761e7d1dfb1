#pragma once

#include <string>
#include <vector>

#include "mbc/types.hpp"

namespace mbc {

// Recipe for the accelerometry feature vector: the three per-axis means
// plus one mean-absolute-filtered triple per filter parameter gamma.
// Collar default is {0.75} (6 features); ear default {0.75, 0.5} (9).
struct AccelFeatureConfig {
  std::vector<double> gammas{0.75};
  bool include_mean = true;

  int feature_count() const {
    return (include_mean ? 3 : 0) + 3 * static_cast<int>(gammas.size());
  }
  std::string schema_id() const;
  std::vector<std::string> feature_names() const;
  void validate() const;  // throws std::invalid_argument
};

// First-order high-pass IIR filter y[n] = gamma*y[n-1] + x[n] - x[n-1]
// with zero initial conditions (x[-1] = y[-1] = 0, so y[0] = x[0]).
// Removes the gravity component from an axis.
std::vector<double> highpass_filter(const std::vector<double>& x, double gamma);

// Per-axis means (m_x, m_y, m_z); relate to neck/head pose.
std::array<double, 3> mean_features(const AccelSegment& seg);

// Per-axis means of |highpass_filter(axis, gamma)|; relate to the
// intensity of body movement.
std::array<double, 3> mas_features(const AccelSegment& seg, double gamma);

// Full accelerometry feature vector in the fixed order
// [m_x, m_y, m_z] then per gamma [s_x, s_y, s_z].
FeatureVector accel_feature_vector(const AccelSegment& seg,
                                   const AccelFeatureConfig& cfg);

}  // namespace mbc
