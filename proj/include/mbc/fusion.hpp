#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "mbc/accel_features.hpp"
#include "mbc/gnss_features.hpp"
#include "mbc/optim.hpp"
#include "mbc/types.hpp"

namespace mbc {

struct missing_modality_error : std::runtime_error {
  explicit missing_modality_error(const std::string& what)
      : std::runtime_error(what) {}
};

enum class FusionMode { FeatureConcat, PosteriorFusion };

const char* to_string(FusionMode m);

// [fa || fg] with a composed schema id. Throws std::invalid_argument
// when the schemas are not accel-type / gnss-type respectively.
FeatureVector concat_features(const FeatureVector& fa, const FeatureVector& fg);

// q_c = pa_c * pg_c / priors_c, renormalized. Inputs must each sum to 1
// within 1e-9 and priors must be strictly positive.
std::vector<double> fuse_posteriors(const std::vector<double>& pa,
                                    const std::vector<double>& pg,
                                    const Priors& priors);

// argmax_c (za_c + zg_c - ln_priors_c), ties to the lowest index.
// Log-domain shortcut: no exponentiation.
int fused_argmax(const std::vector<double>& za, const std::vector<double>& zg,
                 const std::vector<double>& ln_priors);

// A trained multimodal classifier. FeatureConcat holds one MLP over the
// concatenated features; PosteriorFusion holds one MLP per modality
// plus the log-priors used in the fusion rule. Single-modality models
// (the GNSS and Acc pipelines, or a PF ablated to "none") are the
// PosteriorFusion mode with one side disabled.
struct FusionModel {
  FusionMode mode = FusionMode::PosteriorFusion;
  AccelFeatureConfig accel_cfg;
  GnssFeatureConfig gnss_cfg;
  bool has_acc = true;
  bool has_gnss = true;
  TrainedMlp fc;       // FeatureConcat only
  TrainedMlp acc;      // PosteriorFusion with has_acc
  TrainedMlp gnss;     // PosteriorFusion with has_gnss
  std::vector<double> ln_priors;  // length C, finite (priors smoothed > 0)
};

enum class ModalityStatus { Ok, GnssAbsent, AccelAbsent };

const char* to_string(ModalityStatus s);

struct Prediction {
  int cls = 0;
  std::vector<double> posterior;
  ModalityStatus status = ModalityStatus::Ok;
};

// Optional EHPE ceiling for marking fixes invalid (disabled by default).
struct FallbackPolicy {
  bool ehpe_ceiling_enabled = false;
  double ehpe_ceiling_m = 0.0;
};

// Classifies one datapoint. Under PF a missing/invalid modality falls
// back to the other classifier (flagged); under FC a missing modality
// throws missing_modality_error. Both missing always throws.
Prediction predict_with_fallback(const FusionModel& model, const Datapoint& dp,
                                 const FallbackPolicy& policy = {});

}  // namespace mbc
