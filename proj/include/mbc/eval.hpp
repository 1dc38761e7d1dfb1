#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mbc/fusion.hpp"
#include "mbc/ingest.hpp"

namespace mbc {

// Rows = true class, columns = predicted class.
struct ConfusionMatrix {
  std::array<std::array<std::int64_t, kNumClasses>, kNumClasses> counts{};

  std::int64_t total() const;
  std::int64_t trace() const;
  std::int64_t row_sum(int t) const;
  std::int64_t col_sum(int p) const;
  void merge(const ConfusionMatrix& other);
  std::string to_csv() const;
};

ConfusionMatrix confusion_matrix(const std::vector<int>& truth,
                                 const std::vector<int>& pred);

// Multiclass MCC (zero denominator -> 0 by convention).
double mcc_overall(const ConfusionMatrix& cm);

// One-vs-rest binary MCC for class c; nullopt when the denominator is
// zero (rendered "-").
std::optional<double> mcc_per_class(const ConfusionMatrix& cm, int c);

// mean +/- std over repeats; undefined repeats are excluded, and a cell
// defined in no repeat stays undefined.
struct MccCell {
  double mean = 0.0;
  double stddev = 0.0;
  int defined_repeats = 0;

  bool defined() const { return defined_repeats > 0; }
  std::string render() const;  // "0.8847+/-0.0043" or "-"
};

struct MccReport {
  std::array<MccCell, kNumClasses> per_class;
  MccCell overall;
  int repeats = 0;
};

MccCell aggregate_cell(const std::vector<std::optional<double>>& values);

enum class Pipeline { Gnss, Acc, Fc, Pf };

const char* to_string(Pipeline p);
Pipeline pipeline_from_string(const std::string& s);

// Everything needed to train and apply one classification pipeline.
struct PipelineSpec {
  Pipeline kind = Pipeline::Pf;
  AccelFeatureConfig accel_cfg;
  GnssFeatureConfig gnss_cfg;
  TrainConfig train;  // seed/hidden fields are overridden per model
  OptimConfig optim;
  HiddenSizePolicy acc_hidden;
  HiddenSizePolicy gnss_hidden;
  HiddenSizePolicy fc_hidden;
  double prior_smoothing = 1.0;
  std::vector<double> l2_grid;  // non-empty: nested per-fold selection
};

// Deterministic seed mixing so concurrent and sequential execution
// agree: splitmix64 chain over (base, repeat, fold, role).
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t repeat,
                       std::uint64_t fold, std::uint64_t role);

inline constexpr std::uint64_t kRoleAcc = 0xACC;
inline constexpr std::uint64_t kRoleGnss = 0x655;
inline constexpr std::uint64_t kRoleFc = 0xFC0;

struct CvRunResult {
  MccReport report;
  std::vector<ConfusionMatrix> per_repeat_cm;  // pooled across folds
  std::vector<std::string> animals;            // fold order (sorted ids)
};

// Leave-one-animal-out cross-validation: for each repeat and fold,
// train on the other animals and predict the held-out animal; pool each
// repeat's folds into one confusion matrix; aggregate across repeats.
// Throws std::invalid_argument with fewer than two animals.
CvRunResult loao_cv(const std::vector<Datapoint>& data, const PipelineSpec& spec,
                    int repeats, std::uint64_t base_seed, int jobs = 0);

// Trains the spec's pipeline on all of `data` (single model, no CV).
FusionModel train_pipeline(const std::vector<Datapoint>& data,
                           const PipelineSpec& spec, std::uint64_t seed);

// One loao_cv run per GNSS-feature subset ("all", "dtwp+speed", "none",
// ...); under PF the GNSS classifier's inputs are restricted, under FC
// the concatenation is reduced. Preserves subset order.
std::vector<std::pair<std::string, CvRunResult>> ablate_gnss(
    const std::vector<Datapoint>& data, const PipelineSpec& base,
    const std::vector<std::string>& subsets, int repeats,
    std::uint64_t base_seed, int jobs = 0);

// Parameter and arithmetic-operation counts for one MLP or a fused
// pair. `parameters` follows the weights-only convention; the
// with-biases variant is reported alongside.
struct OpCountReport {
  std::int64_t parameters = 0;
  std::int64_t parameters_with_biases = 0;
  std::int64_t multiplications = 0;
  std::int64_t additions_subtractions = 0;
  std::int64_t relu_operations = 0;

  std::int64_t sum_of_operations() const {
    return multiplications + additions_subtractions + relu_operations;
  }
};

OpCountReport count_ops_mlp(int F, int L, int C);
// PF stores C extra log-prior constants and spends 2*C extra
// additions/subtractions (logit adds + prior subtractions).
OpCountReport count_ops_pf(int Fa, int La, int Fg, int Lg, int C);
OpCountReport count_ops(const FusionModel& model);

// Report rendering (CSV cells are "mean+/-std", undefined "-").
std::string render_mcc_table_csv(
    const std::vector<std::pair<std::string, MccReport>>& columns);
std::string render_op_count_csv(
    const std::vector<std::pair<std::string, OpCountReport>>& columns);

}  // namespace mbc
