#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mbc/mlp.hpp"

namespace mbc {

// Objective: fills `grad` (same size as x) and returns the value.
using Objective =
    std::function<double(const std::vector<double>& x, std::vector<double>& grad)>;

struct OptimConfig {
  int memory = 10;        // curvature pairs kept
  double c1 = 1e-4;       // Armijo constant
  double c2 = 0.9;        // strong-Wolfe curvature constant
  double grad_tol = 1e-6; // infinity-norm stop
  double f_rel_tol = 1e-12;  // relative loss stall over two iterations
  int max_iter = 10000;
  int max_line_search = 25;  // objective evaluations per line search
  // Observer called with (iteration, value) after each accepted step.
  std::function<void(int, double)> iteration_callback;
};

enum class OptimStatus { Converged, MaxIter, LineSearchFailure };

const char* to_string(OptimStatus s);

struct OptimResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  OptimStatus status = OptimStatus::Converged;
  std::string reason;  // "grad-tol", "f-stall", ...
};

// Limited-memory BFGS with a strong-Wolfe line search (bracket + zoom,
// cubic interpolation). Curvature pairs with s'y <= 1e-10*|s||y| are
// skipped; the initial Hessian scale is s'y / y'y.
OptimResult lbfgs_minimize(const Objective& objective,
                           const std::vector<double>& x0,
                           const OptimConfig& cfg);

struct TrainedMlp {
  MlpParams params;
  OptimResult opt;
  bool single_class_fold = false;
  // Standardization fitted on the training data (empty when disabled).
  std::vector<double> feature_mean;
  std::vector<double> feature_std;
};

// Full-batch training of the regularized cross-entropy loss starting
// from init_params(F, L, C, seed). Deterministic given data order,
// seed, and configs.
TrainedMlp train_mlp(const LabeledFeatures& data, int num_classes,
                     const TrainConfig& train_cfg, const OptimConfig& optim_cfg);

// Applies a TrainedMlp's standardization (if any) to a feature row.
std::vector<double> apply_standardization(const TrainedMlp& m,
                                          const std::vector<double>& f);

std::vector<double> trained_logits(const TrainedMlp& m, const std::vector<double>& f);
int trained_predict(const TrainedMlp& m, const std::vector<double>& f);

}  // namespace mbc
