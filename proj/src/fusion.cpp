#include "mbc/fusion.hpp"

#include <algorithm>
#include <cmath>

#include "mbc/mlp.hpp"

namespace mbc {

const char* to_string(FusionMode m) {
  switch (m) {
    case FusionMode::FeatureConcat: return "fc";
    case FusionMode::PosteriorFusion: return "pf";
  }
  return "unknown";
}

const char* to_string(ModalityStatus s) {
  switch (s) {
    case ModalityStatus::Ok: return "ok";
    case ModalityStatus::GnssAbsent: return "gnss-absent";
    case ModalityStatus::AccelAbsent: return "accel-absent";
  }
  return "unknown";
}

FeatureVector concat_features(const FeatureVector& fa, const FeatureVector& fg) {
  if (fa.schema_id.rfind("acc:", 0) != 0) {
    throw std::invalid_argument("first operand must carry an accel schema, got " +
                                fa.schema_id);
  }
  if (fg.schema_id.rfind("gnss:", 0) != 0) {
    throw std::invalid_argument("second operand must carry a gnss schema, got " +
                                fg.schema_id);
  }
  FeatureVector out;
  out.schema_id = fa.schema_id + "|" + fg.schema_id;
  out.values = fa.values;
  out.values.insert(out.values.end(), fg.values.begin(), fg.values.end());
  return out;
}

std::vector<double> fuse_posteriors(const std::vector<double>& pa,
                                    const std::vector<double>& pg,
                                    const Priors& priors) {
  const std::size_t C = priors.size();
  if (pa.size() != C || pg.size() != C) {
    throw std::invalid_argument("posterior length mismatch");
  }
  double sum_a = 0.0, sum_g = 0.0;
  for (std::size_t c = 0; c < C; ++c) {
    sum_a += pa[c];
    sum_g += pg[c];
  }
  if (std::fabs(sum_a - 1.0) > 1e-9 || std::fabs(sum_g - 1.0) > 1e-9) {
    throw std::invalid_argument("posteriors must sum to 1");
  }
  std::vector<double> q(C);
  double total = 0.0;
  for (std::size_t c = 0; c < C; ++c) {
    if (!(priors[c] > 0.0)) {
      throw std::invalid_argument("priors must be strictly positive");
    }
    q[c] = pa[c] * pg[c] / priors[c];
    total += q[c];
  }
  if (total <= 0.0) {
    // Both classifiers put mass ~0 everywhere they agree; fall back to
    // the uninformative answer rather than dividing by zero.
    std::fill(q.begin(), q.end(), 1.0 / static_cast<double>(C));
    return q;
  }
  for (double& v : q) v /= total;
  return q;
}

int fused_argmax(const std::vector<double>& za, const std::vector<double>& zg,
                 const std::vector<double>& ln_priors) {
  if (za.size() != zg.size() || za.size() != ln_priors.size()) {
    throw std::invalid_argument("logit/prior length mismatch");
  }
  int best = 0;
  double best_score = za[0] + zg[0] - ln_priors[0];
  for (std::size_t c = 1; c < za.size(); ++c) {
    const double score = za[c] + zg[c] - ln_priors[c];
    if (score > best_score) {
      best_score = score;
      best = static_cast<int>(c);
    }
  }
  return best;
}

namespace {

bool gnss_invalid(const Datapoint& dp, const GnssFeatureConfig& cfg,
                  const FallbackPolicy& policy) {
  if (!policy.ehpe_ceiling_enabled) return gnss_modality_missing(dp, cfg);
  Datapoint gated = dp;
  gated.gnss.clear();
  for (const GnssFix& f : dp.gnss) {
    if (std::isnan(f.ehpe_m) || f.ehpe_m <= policy.ehpe_ceiling_m) {
      gated.gnss.push_back(f);
    }
  }
  return gnss_modality_missing(gated, cfg);
}

Prediction accel_only(const FusionModel& model, const Datapoint& dp,
                      ModalityStatus status) {
  const FeatureVector fa = accel_feature_vector(dp.accel, model.accel_cfg);
  const std::vector<double> za = trained_logits(model.acc, fa.values);
  Prediction pred;
  pred.cls = argmax_lowest_tie(za);
  pred.posterior = softmax(za);
  pred.status = status;
  return pred;
}

Prediction gnss_only(const FusionModel& model, const Datapoint& dp,
                     ModalityStatus status) {
  const FeatureVector fg = gnss_feature_vector(dp, model.gnss_cfg);
  const std::vector<double> zg = trained_logits(model.gnss, fg.values);
  Prediction pred;
  pred.cls = argmax_lowest_tie(zg);
  pred.posterior = softmax(zg);
  pred.status = status;
  return pred;
}

}  // namespace

Prediction predict_with_fallback(const FusionModel& model, const Datapoint& dp,
                                 const FallbackPolicy& policy) {
  const bool accel_missing = dp.accel.empty();
  const bool use_gnss = model.mode == FusionMode::FeatureConcat
                            ? !model.gnss_cfg.none()
                            : model.has_gnss;
  const bool use_acc = model.mode == FusionMode::FeatureConcat ? true : model.has_acc;
  const bool gnss_missing = use_gnss && gnss_invalid(dp, model.gnss_cfg, policy);

  if (accel_missing && (gnss_missing || !use_gnss)) {
    throw missing_modality_error("no valid sensor data");
  }

  if (model.mode == FusionMode::FeatureConcat) {
    if (accel_missing || gnss_missing) {
      throw missing_modality_error("FC requires all features");
    }
    const FeatureVector fa = accel_feature_vector(dp.accel, model.accel_cfg);
    FeatureVector f = fa;
    if (use_gnss) {
      f = concat_features(fa, gnss_feature_vector(dp, model.gnss_cfg));
    }
    const std::vector<double> z = trained_logits(model.fc, f.values);
    Prediction pred;
    pred.cls = argmax_lowest_tie(z);
    pred.posterior = softmax(z);
    return pred;
  }

  // Posterior fusion, possibly degenerate to one modality.
  if (!use_gnss) {
    if (accel_missing) throw missing_modality_error("no valid sensor data");
    return accel_only(model, dp, ModalityStatus::Ok);
  }
  if (!use_acc) {
    if (gnss_missing) throw missing_modality_error("no valid sensor data");
    return gnss_only(model, dp, ModalityStatus::Ok);
  }
  if (gnss_missing) return accel_only(model, dp, ModalityStatus::GnssAbsent);
  if (accel_missing) return gnss_only(model, dp, ModalityStatus::AccelAbsent);

  const FeatureVector fa = accel_feature_vector(dp.accel, model.accel_cfg);
  const FeatureVector fg = gnss_feature_vector(dp, model.gnss_cfg);
  const std::vector<double> za = trained_logits(model.acc, fa.values);
  const std::vector<double> zg = trained_logits(model.gnss, fg.values);

  Prediction pred;
  pred.cls = fused_argmax(za, zg, model.ln_priors);
  Priors priors;
  priors.p.resize(model.ln_priors.size());
  for (std::size_t c = 0; c < priors.p.size(); ++c) {
    priors.p[c] = std::exp(model.ln_priors[c]);
  }
  pred.posterior = fuse_posteriors(softmax(za), softmax(zg), priors);
  return pred;
}

}  // namespace mbc
