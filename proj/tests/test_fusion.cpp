#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "mbc/eval.hpp"
#include "mbc/fusion.hpp"
#include "mbc/model_io.hpp"
#include "mbc/rng.hpp"
#include "mbc/synth.hpp"

using namespace mbc;

namespace {

FeatureVector fv(std::vector<double> values, std::string schema) {
  return FeatureVector{std::move(values), std::move(schema)};
}

std::vector<double> random_simplex(Rng& rng, int n) {
  std::vector<double> v(n);
  double sum = 0.0;
  for (double& x : v) {
    x = -std::log(1.0 - rng.uniform());
    sum += x;
  }
  for (double& x : v) x /= sum;
  return v;
}

// A PF model over the coupling-0 synthetic data, small but genuinely
// trained, reused by the fallback tests.
FusionModel trained_pf_model() {
  static const FusionModel model = [] {
    const std::vector<Datapoint> data = gen_coupling0_datapoints(600, 3, 77);
    PipelineSpec spec;
    spec.kind = Pipeline::Pf;
    spec.train.max_iter = 300;
    spec.acc_hidden = HiddenSizePolicy::ceil_average();
    spec.gnss_hidden = HiddenSizePolicy::ceil_average();
    return train_pipeline(data, spec, 2020);
  }();
  return model;
}

FusionModel trained_fc_model() {
  static const FusionModel model = [] {
    const std::vector<Datapoint> data = gen_coupling0_datapoints(600, 3, 77);
    PipelineSpec spec;
    spec.kind = Pipeline::Fc;
    spec.train.max_iter = 300;
    spec.fc_hidden = HiddenSizePolicy::ceil_average();
    return train_pipeline(data, spec, 2020);
  }();
  return model;
}

}  // namespace

TEST_SUITE("fusion") {

TEST_CASE("concat_features lengths and schema") {
  const FeatureVector fa = fv(std::vector<double>(6, 1.0), "acc:m,s:0.75");
  const FeatureVector fg = fv({1.0, 2.0, 3.0}, "gnss:dtwp,speed,error");
  const FeatureVector f = concat_features(fa, fg);
  CHECK(f.size() == 9);
  CHECK(f.schema_id == "acc:m,s:0.75|gnss:dtwp,speed,error");

  const FeatureVector fa9 = fv(std::vector<double>(9, 1.0), "acc:m,s:0.75,s:0.5");
  CHECK(concat_features(fa9, fg).size() == 12);

  const FeatureVector none = fv({}, "gnss:none");
  const FeatureVector same = concat_features(fa, none);
  CHECK(same.values == fa.values);

  CHECK_THROWS_AS(concat_features(fg, fa), std::invalid_argument);
}

TEST_CASE("fuse_posteriors hand-checked case") {
  const Priors priors{{0.5, 0.5}};
  const auto q = fuse_posteriors({0.8, 0.2}, {0.6, 0.4}, priors);
  CHECK(q[0] == doctest::Approx(6.0 / 7.0).epsilon(1e-12));
  CHECK(q[1] == doctest::Approx(1.0 / 7.0).epsilon(1e-12));
}

TEST_CASE("fuse_posteriors identities") {
  const Priors uniform{{0.2, 0.2, 0.2, 0.2, 0.2}};
  Rng rng(31);
  const std::vector<double> pa = random_simplex(rng, 5);
  const std::vector<double> pg(5, 0.2);
  const auto q = fuse_posteriors(pa, pg, uniform);
  for (int c = 0; c < 5; ++c) CHECK(q[c] == doctest::Approx(pa[c]).epsilon(1e-12));

  const Priors skew{{0.4, 0.3, 0.1, 0.1, 0.1}};
  const auto r = fuse_posteriors(skew.p, skew.p, skew);
  for (int c = 0; c < 5; ++c) CHECK(r[c] == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("fuse_posteriors validates inputs") {
  const Priors priors{{0.5, 0.5}};
  CHECK_THROWS_AS(fuse_posteriors({0.9, 0.2}, {0.5, 0.5}, priors),
                  std::invalid_argument);
  const Priors zero{{1.0, 0.0}};
  CHECK_THROWS_AS(fuse_posteriors({0.5, 0.5}, {0.5, 0.5}, zero),
                  std::invalid_argument);
}

TEST_CASE("fuse_posteriors output sums to one") {
  Rng rng(32);
  const Priors priors{random_simplex(rng, 5)};
  for (int trial = 0; trial < 100; ++trial) {
    const auto q =
        fuse_posteriors(random_simplex(rng, 5), random_simplex(rng, 5), priors);
    double sum = 0.0;
    for (double v : q) sum += v;
    CHECK(std::fabs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("fused_argmax hand cases") {
  CHECK(fused_argmax({1.0, 0.0}, {0.0, 0.5},
                     {std::log(0.5), std::log(0.5)}) == 0);

  // zero logits: the smallest prior wins through -ln p
  const std::vector<double> zero(5, 0.0);
  std::vector<double> ln_priors;
  for (double p : {0.5, 0.2, 0.1, 0.1, 0.1}) ln_priors.push_back(std::log(p));
  CHECK(fused_argmax(zero, zero, ln_priors) == 2);
}

TEST_CASE("fused_argmax equals the argmax of the normalized fused posterior") {
  Rng rng(501);
  int checked = 0;
  for (int trial = 0; trial < 100000; ++trial) {
    std::vector<double> za(5), zg(5);
    for (double& v : za) v = rng.uniform(-4.0, 4.0);
    for (double& v : zg) v = rng.uniform(-4.0, 4.0);
    const Priors priors{random_simplex(rng, 5)};
    std::vector<double> ln_priors(5);
    for (int c = 0; c < 5; ++c) ln_priors[c] = std::log(priors[c]);

    const auto q = fuse_posteriors(softmax(za), softmax(zg), priors);
    // skip near-ties; the two routes may round differently there
    std::vector<double> sorted = q;
    std::sort(sorted.begin(), sorted.end());
    if (sorted[4] - sorted[3] < 1e-12) continue;
    ++checked;
    CHECK(fused_argmax(za, zg, ln_priors) == argmax_lowest_tie(q));
  }
  CHECK(checked > 99000);
}

TEST_CASE("fused_argmax is invariant to scaling all priors") {
  Rng rng(502);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> za(5), zg(5), lp(5);
    for (double& v : za) v = rng.uniform(-3.0, 3.0);
    for (double& v : zg) v = rng.uniform(-3.0, 3.0);
    for (double& v : lp) v = rng.uniform(-4.0, -0.1);
    const int base = fused_argmax(za, zg, lp);
    std::vector<double> scaled = lp;
    const double ln_k = std::log(3.7);
    for (double& v : scaled) v += ln_k;
    CHECK(fused_argmax(za, zg, scaled) == base);
  }
}

TEST_CASE("predict_with_fallback: PF falls back per modality") {
  const FusionModel model = trained_pf_model();
  const std::vector<Datapoint> data = gen_coupling0_datapoints(40, 3, 991);

  // both modalities: agrees with the raw fused_argmax route
  {
    const Datapoint& dp = data[0];
    const Prediction pred = predict_with_fallback(model, dp);
    CHECK(pred.status == ModalityStatus::Ok);
    const auto fa = accel_feature_vector(dp.accel, model.accel_cfg);
    const auto fg = gnss_feature_vector(dp, model.gnss_cfg);
    const int direct = fused_argmax(trained_logits(model.acc, fa.values),
                                    trained_logits(model.gnss, fg.values),
                                    model.ln_priors);
    CHECK(pred.cls == direct);
    double sum = 0.0;
    for (double v : pred.posterior) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }

  // GNSS missing: accel-only prediction, flagged
  {
    Datapoint dp = data[1];
    dp.gnss.clear();
    const Prediction pred = predict_with_fallback(model, dp);
    CHECK(pred.status == ModalityStatus::GnssAbsent);
    const auto fa = accel_feature_vector(dp.accel, model.accel_cfg);
    CHECK(pred.cls == trained_predict(model.acc, fa.values));
  }

  // accel missing: symmetric
  {
    Datapoint dp = data[2];
    dp.accel = AccelSegment{};
    const Prediction pred = predict_with_fallback(model, dp);
    CHECK(pred.status == ModalityStatus::AccelAbsent);
    const auto fg = gnss_feature_vector(dp, model.gnss_cfg);
    CHECK(pred.cls == trained_predict(model.gnss, fg.values));
  }

  // both missing
  {
    Datapoint dp = data[3];
    dp.gnss.clear();
    dp.accel = AccelSegment{};
    CHECK_THROWS_WITH(predict_with_fallback(model, dp), "no valid sensor data");
  }
}

TEST_CASE("predict_with_fallback: FC requires every feature") {
  const FusionModel model = trained_fc_model();
  std::vector<Datapoint> data = gen_coupling0_datapoints(10, 3, 992);
  CHECK_NOTHROW(predict_with_fallback(model, data[0]));
  data[0].gnss.clear();
  CHECK_THROWS_WITH(predict_with_fallback(model, data[0]),
                    "FC requires all features");
}

TEST_CASE("optional EHPE ceiling gates fixes") {
  const FusionModel model = trained_pf_model();
  std::vector<Datapoint> data = gen_coupling0_datapoints(5, 3, 993);
  FallbackPolicy policy;
  policy.ehpe_ceiling_enabled = true;
  policy.ehpe_ceiling_m = 1.0;  // every synthetic fix has ehpe 7
  const Prediction pred = predict_with_fallback(model, data[0], policy);
  CHECK(pred.status == ModalityStatus::GnssAbsent);
}

TEST_CASE("fusion model serialization round-trips") {
  const FusionModel model = trained_pf_model();
  const auto path = std::filesystem::temp_directory_path() / "mbc_model.json";
  save_fusion_model(model, path.string());
  const FusionModel loaded = load_fusion_model(path.string());
  CHECK(loaded.mode == model.mode);
  CHECK(loaded.acc.params.W1 == model.acc.params.W1);
  CHECK(loaded.gnss.params.W2 == model.gnss.params.W2);
  CHECK(loaded.ln_priors == model.ln_priors);
  CHECK(loaded.accel_cfg.gammas == model.accel_cfg.gammas);
  // loaded model predicts identically
  const std::vector<Datapoint> data = gen_coupling0_datapoints(20, 3, 994);
  for (const Datapoint& dp : data) {
    CHECK(predict_with_fallback(loaded, dp).cls ==
          predict_with_fallback(model, dp).cls);
  }
  std::filesystem::remove(path);
}

}  // TEST_SUITE
