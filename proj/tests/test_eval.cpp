#include <doctest.h>

#include <cmath>

#include "mbc/eval.hpp"
#include "mbc/rng.hpp"
#include "mbc/synth.hpp"

using namespace mbc;

namespace {

ConfusionMatrix binary_cm(std::int64_t tp, std::int64_t fn, std::int64_t fp,
                          std::int64_t tn) {
  ConfusionMatrix cm;
  cm.counts[0][0] = tp;
  cm.counts[0][1] = fn;
  cm.counts[1][0] = fp;
  cm.counts[1][1] = tn;
  return cm;
}

// Classical binary MCC straight from TP/TN/FP/FN; oracle only.
double binary_mcc(double tp, double fn, double fp, double tn) {
  const double denom =
      std::sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn));
  if (denom == 0.0) return 0.0;
  return (tp * tn - fp * fn) / denom;
}

std::vector<Datapoint> small_synthetic(int animals, int points, std::uint64_t seed) {
  BehaviorSynthSpec spec;
  spec.num_animals = animals;
  spec.points_per_animal = points;
  spec.segment_len = 16;
  spec.seed = seed;
  return gen_behavior_like(spec);
}

PipelineSpec fast_spec(Pipeline kind) {
  PipelineSpec spec;
  spec.kind = kind;
  spec.train.max_iter = 60;
  spec.optim.grad_tol = 1e-4;
  return spec;
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("confusion_matrix basics") {
  const ConfusionMatrix perfect = confusion_matrix({0, 1, 2, 3, 4}, {0, 1, 2, 3, 4});
  CHECK(perfect.trace() == 5);
  CHECK(perfect.total() == 5);

  const ConfusionMatrix cm = confusion_matrix({0, 0, 1}, {0, 1, 1});
  CHECK(cm.counts[0][0] == 1);
  CHECK(cm.counts[0][1] == 1);
  CHECK(cm.counts[1][1] == 1);

  CHECK_THROWS_AS(confusion_matrix({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(confusion_matrix({0, 1}, {0}), std::invalid_argument);
  CHECK_THROWS_AS(confusion_matrix({0, 9}, {0, 1}), std::invalid_argument);
}

TEST_CASE("mcc_overall trivia") {
  const ConfusionMatrix perfect = confusion_matrix({0, 1, 2, 3, 4}, {0, 1, 2, 3, 4});
  CHECK(mcc_overall(perfect) == doctest::Approx(1.0).epsilon(1e-12));

  // everything predicted as one class: zero-denominator convention
  const ConfusionMatrix degenerate = confusion_matrix({0, 1, 2}, {0, 0, 0});
  CHECK(mcc_overall(degenerate) == 0.0);

  CHECK(mcc_overall(binary_cm(2, 1, 1, 2)) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("mcc_overall at C=2 equals the classical binary formula") {
  Rng rng(42);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto tp = static_cast<std::int64_t>(rng.next_u64() % 20);
    const auto fn = static_cast<std::int64_t>(rng.next_u64() % 20);
    const auto fp = static_cast<std::int64_t>(rng.next_u64() % 20);
    const auto tn = static_cast<std::int64_t>(rng.next_u64() % 20);
    if (tp + fn + fp + tn == 0) continue;
    const double ours = mcc_overall(binary_cm(tp, fn, fp, tn));
    const double ref = binary_mcc(static_cast<double>(tp), static_cast<double>(fn),
                                  static_cast<double>(fp), static_cast<double>(tn));
    CHECK(std::fabs(ours - ref) < 1e-12);
  }
}

TEST_CASE("mcc_overall is invariant to consistent label permutation") {
  Rng rng(43);
  std::vector<int> truth(200), pred(200);
  for (int i = 0; i < 200; ++i) {
    truth[i] = static_cast<int>(rng.next_u64() % 5);
    pred[i] = static_cast<int>(rng.next_u64() % 5);
  }
  const double base = mcc_overall(confusion_matrix(truth, pred));
  const int perm[5] = {3, 0, 4, 1, 2};
  std::vector<int> t2(200), p2(200);
  for (int i = 0; i < 200; ++i) {
    t2[i] = perm[truth[i]];
    p2[i] = perm[pred[i]];
  }
  CHECK(mcc_overall(confusion_matrix(t2, p2)) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("mcc_per_class binarization and undefined marker") {
  const ConfusionMatrix perfect = confusion_matrix({0, 1, 2, 3, 4}, {0, 1, 2, 3, 4});
  for (int c = 0; c < 5; ++c) {
    REQUIRE(mcc_per_class(perfect, c).has_value());
    CHECK(*mcc_per_class(perfect, c) == doctest::Approx(1.0));
  }

  // class 4 never true and never predicted -> undefined
  const ConfusionMatrix cm = confusion_matrix({0, 1, 0, 1}, {0, 1, 1, 0});
  CHECK(!mcc_per_class(cm, 4).has_value());

  CHECK(*mcc_per_class(binary_cm(2, 1, 1, 2), 0) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("aggregate_cell excludes undefined repeats") {
  const MccCell cell = aggregate_cell({0.5, std::nullopt, 0.7});
  CHECK(cell.defined_repeats == 2);
  CHECK(cell.mean == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(cell.stddev == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(cell.render() == "0.6000±0.1000");

  const MccCell undefined = aggregate_cell({std::nullopt, std::nullopt});
  CHECK(!undefined.defined());
  CHECK(undefined.render() == "-");
}

TEST_CASE("count_ops reproduces the published complexity figures") {
  // single MLPs
  const OpCountReport gnss = count_ops_mlp(3, 4, 5);
  CHECK(gnss.parameters == 32);
  CHECK(gnss.multiplications == 32);
  CHECK(gnss.additions_subtractions == 32);
  CHECK(gnss.relu_operations == 4);
  CHECK(gnss.sum_of_operations() == 68);

  const OpCountReport acc_c = count_ops_mlp(6, 5, 5);
  CHECK(acc_c.parameters == 55);
  CHECK(acc_c.sum_of_operations() == 115);

  const OpCountReport fc_c = count_ops_mlp(9, 7, 5);
  CHECK(fc_c.parameters == 98);
  CHECK(fc_c.sum_of_operations() == 203);

  const OpCountReport pf_c = count_ops_pf(6, 5, 3, 4, 5);
  CHECK(pf_c.parameters == 92);
  CHECK(pf_c.multiplications == 87);
  CHECK(pf_c.additions_subtractions == 97);
  CHECK(pf_c.relu_operations == 9);
  CHECK(pf_c.sum_of_operations() == 193);

  const OpCountReport acc_e = count_ops_mlp(9, 7, 5);
  CHECK(acc_e.parameters == 98);

  const OpCountReport fc_e = count_ops_mlp(12, 9, 5);
  CHECK(fc_e.parameters == 153);
  CHECK(fc_e.sum_of_operations() == 315);

  const OpCountReport pf_e = count_ops_pf(9, 7, 3, 4, 5);
  CHECK(pf_e.parameters == 135);
  CHECK(pf_e.multiplications == 130);
  CHECK(pf_e.additions_subtractions == 140);
  CHECK(pf_e.relu_operations == 11);
  CHECK(pf_e.sum_of_operations() == 281);
}

TEST_CASE("op count invariant: sum equals the three op kinds") {
  const OpCountReport r = count_ops_pf(9, 7, 3, 4, 5);
  CHECK(r.sum_of_operations() ==
        r.multiplications + r.additions_subtractions + r.relu_operations);
}

TEST_CASE("mix_seed is stable and role-sensitive") {
  CHECK(mix_seed(1, 2, 3, 4) == mix_seed(1, 2, 3, 4));
  CHECK(mix_seed(1, 2, 3, kRoleAcc) != mix_seed(1, 2, 3, kRoleGnss));
  CHECK(mix_seed(1, 0, 3, kRoleAcc) != mix_seed(1, 1, 3, kRoleAcc));
}

TEST_CASE("loao_cv evaluates every datapoint exactly once per repeat") {
  const std::vector<Datapoint> data = small_synthetic(3, 40, 555);
  const CvRunResult run = loao_cv(data, fast_spec(Pipeline::Acc), 2, 99, 2);
  CHECK(run.animals.size() == 3);
  REQUIRE(run.per_repeat_cm.size() == 2);
  for (const ConfusionMatrix& cm : run.per_repeat_cm) {
    CHECK(cm.total() == static_cast<std::int64_t>(data.size()));
  }
}

TEST_CASE("loao_cv is deterministic and thread-count independent") {
  const std::vector<Datapoint> data = small_synthetic(3, 30, 556);
  const PipelineSpec spec = fast_spec(Pipeline::Pf);
  const CvRunResult a = loao_cv(data, spec, 2, 123, 1);
  const CvRunResult b = loao_cv(data, spec, 2, 123, 2);
  for (int r = 0; r < 2; ++r) {
    CHECK(a.per_repeat_cm[r].counts == b.per_repeat_cm[r].counts);
  }
  CHECK(a.report.overall.mean == b.report.overall.mean);
}

TEST_CASE("loao_cv rejects single-animal data") {
  const std::vector<Datapoint> data = small_synthetic(1, 10, 557);
  CHECK_THROWS_AS(loao_cv(data, fast_spec(Pipeline::Acc), 1, 1, 1),
                  std::invalid_argument);
}

TEST_CASE("ablation: subset all matches plain PF; none matches accel-only") {
  const std::vector<Datapoint> data = small_synthetic(3, 60, 558);
  const PipelineSpec spec = fast_spec(Pipeline::Pf);
  const CvRunResult plain_pf = loao_cv(data, spec, 1, 7, 2);
  const CvRunResult plain_acc = loao_cv(data, fast_spec(Pipeline::Acc), 1, 7, 2);

  const auto table = ablate_gnss(data, spec, {"all", "none"}, 1, 7, 2);
  REQUIRE(table.size() == 2);
  CHECK(table[0].second.per_repeat_cm[0].counts == plain_pf.per_repeat_cm[0].counts);
  CHECK(std::fabs(table[0].second.report.overall.mean -
                  plain_pf.report.overall.mean) <= 1e-12);
  CHECK(table[1].second.per_repeat_cm[0].counts == plain_acc.per_repeat_cm[0].counts);
  CHECK(std::fabs(table[1].second.report.overall.mean -
                  plain_acc.report.overall.mean) <= 1e-12);
}

TEST_CASE("report rendering shape") {
  const std::vector<Datapoint> data = small_synthetic(2, 20, 559);
  const CvRunResult run = loao_cv(data, fast_spec(Pipeline::Acc), 1, 3, 2);
  const std::string csv = render_mcc_table_csv({{"acc", run.report}});
  CHECK(csv.find("behavior,acc") == 0);
  CHECK(csv.find("overall,") != std::string::npos);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);  // header + 5 classes + overall

  const std::string ops = render_op_count_csv({{"gnss", count_ops_mlp(3, 4, 5)}});
  CHECK(ops.find("sum_of_operations,68") != std::string::npos);
}

}  // TEST_SUITE
