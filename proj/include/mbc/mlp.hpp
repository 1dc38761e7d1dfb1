#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mbc/types.hpp"

namespace mbc {

// Weights and biases of a single-hidden-layer ReLU MLP:
//   z = W2 * max(0, W1*f + b1) + b2
// W1 is L x F and W2 is C x L, both row-major.
struct MlpParams {
  int F = 0;
  int L = 0;
  int C = 0;
  std::vector<double> W1;  // L*F
  std::vector<double> b1;  // L
  std::vector<double> W2;  // C*L
  std::vector<double> b2;  // C

  static MlpParams zeros(int F, int L, int C);

  std::size_t flat_size() const { return W1.size() + b1.size() + W2.size() + b2.size(); }
  std::vector<double> to_flat() const;
  static MlpParams from_flat(const std::vector<double>& v, int F, int L, int C);
};

struct HiddenSizePolicy {
  enum class Kind { CeilAverage, FloorAverage, Explicit };
  Kind kind = Kind::CeilAverage;
  int explicit_size = 0;  // used when kind == Explicit

  static HiddenSizePolicy ceil_average() { return {Kind::CeilAverage, 0}; }
  static HiddenSizePolicy floor_average() { return {Kind::FloorAverage, 0}; }
  static HiddenSizePolicy explicit_size_of(int L) { return {Kind::Explicit, L}; }
};

struct TrainConfig {
  double l2_lambda = 0.0;
  int max_iter = 10000;
  std::uint64_t seed = 0;
  HiddenSizePolicy hidden;
  bool standardize = false;  // z-score features, fit on the training fold
};

// Labeled feature matrix, row-major, one row per sample.
struct LabeledFeatures {
  std::vector<double> x;   // rows * cols
  std::vector<int> y;      // labels in 0..C-1
  int rows = 0;
  int cols = 0;

  const double* row(int i) const { return x.data() + static_cast<std::size_t>(i) * cols; }
};

int hidden_size(int F, int C, const HiddenSizePolicy& policy);

// Uniform Glorot weights, zero biases. Deterministic given seed.
MlpParams init_params(int F, int L, int C, std::uint64_t seed);

// z = W2 * relu(W1*f + b1) + b2 for a single feature row of length F.
std::vector<double> forward_logits(const MlpParams& p, const double* f, int len);
std::vector<double> forward_logits(const MlpParams& p, const FeatureVector& f);

// Max-shifted stable softmax.
std::vector<double> softmax(const std::vector<double>& z);

// Mean cross-entropy over the batch plus (l2/(2*B)) * (|W1|^2 + |W2|^2);
// biases carry no penalty. `grad` receives the exact analytic gradient.
double loss_and_grad(const MlpParams& p, const LabeledFeatures& batch,
                     double l2_lambda, MlpParams& grad);

// argmax over logits, ties broken toward the lowest class index.
int predict(const MlpParams& p, const double* f, int len);
int predict(const MlpParams& p, const FeatureVector& f);

int argmax_lowest_tie(const std::vector<double>& v);

}  // namespace mbc
