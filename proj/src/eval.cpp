#include "mbc/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

namespace mbc {

std::int64_t ConfusionMatrix::total() const {
  std::int64_t t = 0;
  for (const auto& row : counts) {
    for (std::int64_t v : row) t += v;
  }
  return t;
}

std::int64_t ConfusionMatrix::trace() const {
  std::int64_t t = 0;
  for (int c = 0; c < kNumClasses; ++c) t += counts[c][c];
  return t;
}

std::int64_t ConfusionMatrix::row_sum(int t) const {
  std::int64_t s = 0;
  for (std::int64_t v : counts[t]) s += v;
  return s;
}

std::int64_t ConfusionMatrix::col_sum(int p) const {
  std::int64_t s = 0;
  for (int t = 0; t < kNumClasses; ++t) s += counts[t][p];
  return s;
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  for (int t = 0; t < kNumClasses; ++t) {
    for (int p = 0; p < kNumClasses; ++p) counts[t][p] += other.counts[t][p];
  }
}

std::string ConfusionMatrix::to_csv() const {
  std::ostringstream os;
  os << "true\\pred";
  for (int p = 0; p < kNumClasses; ++p) {
    os << "," << to_string(static_cast<BehaviorClass>(p));
  }
  os << "\n";
  for (int t = 0; t < kNumClasses; ++t) {
    os << to_string(static_cast<BehaviorClass>(t));
    for (int p = 0; p < kNumClasses; ++p) os << "," << counts[t][p];
    os << "\n";
  }
  return os.str();
}

ConfusionMatrix confusion_matrix(const std::vector<int>& truth,
                                 const std::vector<int>& pred) {
  if (truth.size() != pred.size()) {
    throw std::invalid_argument("truth/prediction length mismatch");
  }
  if (truth.empty()) throw std::invalid_argument("empty inputs");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= kNumClasses || pred[i] < 0 ||
        pred[i] >= kNumClasses) {
      throw std::invalid_argument("class index out of range");
    }
    ++cm.counts[truth[i]][pred[i]];
  }
  return cm;
}

double mcc_overall(const ConfusionMatrix& cm) {
  const double c = static_cast<double>(cm.trace());
  const double s = static_cast<double>(cm.total());
  double sum_pt = 0.0, sum_pp = 0.0, sum_tt = 0.0;
  for (int k = 0; k < kNumClasses; ++k) {
    const double p = static_cast<double>(cm.col_sum(k));
    const double t = static_cast<double>(cm.row_sum(k));
    sum_pt += p * t;
    sum_pp += p * p;
    sum_tt += t * t;
  }
  const double denom = std::sqrt((s * s - sum_pp) * (s * s - sum_tt));
  if (denom == 0.0) return 0.0;
  return (c * s - sum_pt) / denom;
}

std::optional<double> mcc_per_class(const ConfusionMatrix& cm, int c) {
  if (c < 0 || c >= kNumClasses) throw std::invalid_argument("class out of range");
  const double tp = static_cast<double>(cm.counts[c][c]);
  const double fn = static_cast<double>(cm.row_sum(c)) - tp;
  const double fp = static_cast<double>(cm.col_sum(c)) - tp;
  const double tn = static_cast<double>(cm.total()) - tp - fn - fp;
  const double denom =
      std::sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn));
  if (denom == 0.0) return std::nullopt;
  return (tp * tn - fp * fn) / denom;
}

std::string MccCell::render() const {
  if (!defined()) return "-";
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << mean << "±" << stddev;
  return os.str();
}

MccCell aggregate_cell(const std::vector<std::optional<double>>& values) {
  MccCell cell;
  double sum = 0.0;
  for (const auto& v : values) {
    if (v) {
      sum += *v;
      ++cell.defined_repeats;
    }
  }
  if (cell.defined_repeats == 0) return cell;
  cell.mean = sum / cell.defined_repeats;
  double sq = 0.0;
  for (const auto& v : values) {
    if (v) {
      const double d = *v - cell.mean;
      sq += d * d;
    }
  }
  cell.stddev = std::sqrt(sq / cell.defined_repeats);
  return cell;
}

const char* to_string(Pipeline p) {
  switch (p) {
    case Pipeline::Gnss: return "gnss";
    case Pipeline::Acc: return "acc";
    case Pipeline::Fc: return "fc";
    case Pipeline::Pf: return "pf";
  }
  return "unknown";
}

Pipeline pipeline_from_string(const std::string& s) {
  if (s == "gnss") return Pipeline::Gnss;
  if (s == "acc") return Pipeline::Acc;
  if (s == "fc") return Pipeline::Fc;
  if (s == "pf") return Pipeline::Pf;
  throw std::invalid_argument("unknown pipeline: " + s);
}

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t repeat,
                       std::uint64_t fold, std::uint64_t role) {
  std::uint64_t state = base;
  const auto absorb = [&state](std::uint64_t v) {
    state += 0x9E3779B97F4A7C15ull + v;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    state = z ^ (z >> 31);
  };
  absorb(repeat);
  absorb(fold);
  absorb(role);
  return state;
}

namespace {

void run_parallel(int jobs, int total, const std::function<void(int)>& work) {
  if (total <= 0) return;
  if (jobs <= 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
  jobs = std::max(1, std::min(jobs, total));
  if (jobs == 1) {
    for (int i = 0; i < total; ++i) work(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex mu;
  std::exception_ptr error;
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (int t = 0; t < jobs; ++t) {
    pool.emplace_back([&] {
      while (true) {
        const int i = next.fetch_add(1);
        if (i >= total) return;
        try {
          work(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!error) error = std::current_exception();
          next.store(total);
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

// Feature matrices and labels for the whole dataset, extracted once and
// shared (read-only) by every fold and repeat.
struct PreparedData {
  std::vector<std::string> animals;          // sorted fold order
  std::vector<int> animal_index;             // per datapoint
  std::vector<int> labels;                   // per datapoint
  std::vector<std::vector<double>> acc_f;    // empty when unused
  std::vector<std::vector<double>> gnss_f;
  std::vector<std::vector<double>> fc_f;
  int n = 0;

  std::vector<int> rows_of_fold(int fold, bool validation) const {
    std::vector<int> rows;
    for (int i = 0; i < n; ++i) {
      if ((animal_index[i] == fold) == validation) rows.push_back(i);
    }
    return rows;
  }
};

bool uses_accel(Pipeline k) { return k != Pipeline::Gnss; }
bool uses_gnss(Pipeline k) { return k != Pipeline::Acc; }

PreparedData prepare(const std::vector<Datapoint>& data, const PipelineSpec& spec) {
  PreparedData prep;
  std::map<std::string, int> animal_ids;
  for (const Datapoint& dp : data) {
    if (!dp.has_label) continue;
    animal_ids.emplace(dp.animal_id, 0);
  }
  for (auto& [id, idx] : animal_ids) {
    idx = static_cast<int>(prep.animals.size());
    prep.animals.push_back(id);
  }

  const bool need_acc = uses_accel(spec.kind);
  const bool need_gnss = uses_gnss(spec.kind) && !spec.gnss_cfg.none();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Datapoint& dp = data[i];
    if (!dp.has_label) continue;
    FeatureVector fa, fg;
    try {
      if (need_acc) fa = accel_feature_vector(dp.accel, spec.accel_cfg);
      if (need_gnss) fg = gnss_feature_vector(dp, spec.gnss_cfg);
    } catch (const std::exception& e) {
      throw std::invalid_argument("datapoint " + std::to_string(i) +
                                  " unusable for this pipeline: " + e.what());
    }
    if (spec.kind == Pipeline::Fc) {
      prep.fc_f.push_back(need_gnss ? concat_features(fa, fg).values : fa.values);
    }
    if (need_acc) prep.acc_f.push_back(std::move(fa.values));
    if (need_gnss) prep.gnss_f.push_back(std::move(fg.values));
    prep.labels.push_back(static_cast<int>(dp.label));
    prep.animal_index.push_back(animal_ids.at(dp.animal_id));
  }
  prep.n = static_cast<int>(prep.labels.size());
  if (prep.n == 0) throw std::invalid_argument("no labeled data");
  return prep;
}

LabeledFeatures gather(const std::vector<std::vector<double>>& feats,
                       const std::vector<int>& labels,
                       const std::vector<int>& rows) {
  LabeledFeatures out;
  out.rows = static_cast<int>(rows.size());
  out.cols = out.rows > 0 ? static_cast<int>(feats[rows[0]].size()) : 0;
  out.x.reserve(static_cast<std::size_t>(out.rows) * out.cols);
  out.y.reserve(rows.size());
  for (int r : rows) {
    out.x.insert(out.x.end(), feats[r].begin(), feats[r].end());
    out.y.push_back(labels[r]);
  }
  return out;
}

std::vector<std::int64_t> label_counts(const std::vector<int>& labels,
                                       const std::vector<int>& rows) {
  std::vector<std::int64_t> counts(kNumClasses, 0);
  for (int r : rows) ++counts[labels[r]];
  return counts;
}

struct UnitModels {
  TrainedMlp acc, gnss, fc;
  std::vector<double> ln_priors;
};

TrainConfig model_cfg(const PipelineSpec& spec, const HiddenSizePolicy& hidden,
                      std::uint64_t seed, double lambda) {
  TrainConfig cfg = spec.train;
  cfg.hidden = hidden;
  cfg.seed = seed;
  cfg.l2_lambda = lambda;
  return cfg;
}

// Effective pipeline: PF with an empty GNSS subset degenerates to Acc
// (and shares the Acc seed role, so the two runs coincide exactly).
Pipeline effective_kind(const PipelineSpec& spec) {
  if (spec.kind == Pipeline::Pf && spec.gnss_cfg.none()) return Pipeline::Acc;
  if (spec.kind == Pipeline::Fc) return Pipeline::Fc;
  return spec.kind;
}

int predict_unit(Pipeline kind, const UnitModels& m, const PreparedData& prep,
                 int row) {
  switch (kind) {
    case Pipeline::Gnss:
      return trained_predict(m.gnss, prep.gnss_f[row]);
    case Pipeline::Acc:
      return trained_predict(m.acc, prep.acc_f[row]);
    case Pipeline::Fc:
      return trained_predict(m.fc, prep.fc_f[row]);
    case Pipeline::Pf: {
      const std::vector<double> za = trained_logits(m.acc, prep.acc_f[row]);
      const std::vector<double> zg = trained_logits(m.gnss, prep.gnss_f[row]);
      return fused_argmax(za, zg, m.ln_priors);
    }
  }
  throw std::logic_error("unreachable");
}

double tune_lambda_inner(const PipelineSpec& spec, const PreparedData& prep,
                         const std::vector<std::vector<double>>& feats,
                         const HiddenSizePolicy& hidden,
                         const std::vector<int>& train_rows, int outer_fold,
                         std::uint64_t unit_seed, std::uint64_t role);

UnitModels train_unit(const PipelineSpec& spec, const PreparedData& prep,
                      const std::vector<int>& train_rows, int fold, int repeat,
                      std::uint64_t base_seed) {
  const Pipeline kind = effective_kind(spec);
  UnitModels m;
  const std::uint64_t r = static_cast<std::uint64_t>(repeat);
  const std::uint64_t f = static_cast<std::uint64_t>(fold);

  const auto tuned = [&](const std::vector<std::vector<double>>& feats,
                         const HiddenSizePolicy& hidden, std::uint64_t role) {
    if (spec.l2_grid.empty()) return spec.train.l2_lambda;
    return tune_lambda_inner(spec, prep, feats, hidden, train_rows, fold,
                             mix_seed(base_seed, r, f, 0x5EEDull), role);
  };

  if (kind == Pipeline::Acc || kind == Pipeline::Pf) {
    const double lambda = tuned(prep.acc_f, spec.acc_hidden, kRoleAcc);
    m.acc = train_mlp(gather(prep.acc_f, prep.labels, train_rows), kNumClasses,
                      model_cfg(spec, spec.acc_hidden,
                                mix_seed(base_seed, r, f, kRoleAcc), lambda),
                      spec.optim);
  }
  if (kind == Pipeline::Gnss || kind == Pipeline::Pf) {
    const double lambda = tuned(prep.gnss_f, spec.gnss_hidden, kRoleGnss);
    m.gnss = train_mlp(gather(prep.gnss_f, prep.labels, train_rows), kNumClasses,
                       model_cfg(spec, spec.gnss_hidden,
                                 mix_seed(base_seed, r, f, kRoleGnss), lambda),
                       spec.optim);
  }
  if (kind == Pipeline::Fc) {
    const double lambda = tuned(prep.fc_f, spec.fc_hidden, kRoleFc);
    m.fc = train_mlp(gather(prep.fc_f, prep.labels, train_rows), kNumClasses,
                     model_cfg(spec, spec.fc_hidden,
                               mix_seed(base_seed, r, f, kRoleFc), lambda),
                     spec.optim);
  }
  if (kind == Pipeline::Pf) {
    const Priors priors =
        priors_from_counts(label_counts(prep.labels, train_rows), spec.prior_smoothing);
    m.ln_priors.resize(priors.size());
    for (std::size_t c = 0; c < priors.size(); ++c) m.ln_priors[c] = std::log(priors[c]);
  }
  return m;
}

// Nested selection over the lambda grid: inner leave-one-animal-out over
// the training animals, scored by pooled overall MCC of the classifier
// being tuned. Ties resolve to the earliest grid entry.
double tune_lambda_inner(const PipelineSpec& spec, const PreparedData& prep,
                         const std::vector<std::vector<double>>& feats,
                         const HiddenSizePolicy& hidden,
                         const std::vector<int>& train_rows, int outer_fold,
                         std::uint64_t unit_seed, std::uint64_t role) {
  std::vector<int> inner_animals;
  for (int a = 0; a < static_cast<int>(prep.animals.size()); ++a) {
    if (a != outer_fold) inner_animals.push_back(a);
  }
  if (inner_animals.size() < 2) return spec.train.l2_lambda;

  double best_lambda = spec.l2_grid.front();
  double best_score = -2.0;
  for (std::size_t li = 0; li < spec.l2_grid.size(); ++li) {
    const double lambda = spec.l2_grid[li];
    ConfusionMatrix pooled;
    for (std::size_t bi = 0; bi < inner_animals.size(); ++bi) {
      const int b = inner_animals[bi];
      std::vector<int> inner_train, inner_val;
      for (int rrow : train_rows) {
        (prep.animal_index[rrow] == b ? inner_val : inner_train).push_back(rrow);
      }
      if (inner_train.empty() || inner_val.empty()) continue;
      const TrainedMlp model =
          train_mlp(gather(feats, prep.labels, inner_train), kNumClasses,
                    model_cfg(spec, hidden, mix_seed(unit_seed, bi, li, role), lambda),
                    spec.optim);
      for (int v : inner_val) {
        ++pooled.counts[prep.labels[v]][trained_predict(model, feats[v])];
      }
    }
    const double score = mcc_overall(pooled);
    if (score > best_score + 1e-15) {
      best_score = score;
      best_lambda = lambda;
    }
  }
  return best_lambda;
}

MccReport report_from_cms(const std::vector<ConfusionMatrix>& per_repeat) {
  MccReport report;
  report.repeats = static_cast<int>(per_repeat.size());
  std::vector<std::optional<double>> overall;
  overall.reserve(per_repeat.size());
  for (const auto& cm : per_repeat) overall.emplace_back(mcc_overall(cm));
  report.overall = aggregate_cell(overall);
  for (int c = 0; c < kNumClasses; ++c) {
    std::vector<std::optional<double>> vals;
    vals.reserve(per_repeat.size());
    for (const auto& cm : per_repeat) vals.push_back(mcc_per_class(cm, c));
    report.per_class[c] = aggregate_cell(vals);
  }
  return report;
}

}  // namespace

CvRunResult loao_cv(const std::vector<Datapoint>& data, const PipelineSpec& spec,
                    int repeats, std::uint64_t base_seed, int jobs) {
  if (repeats < 1) throw std::invalid_argument("repeats must be >= 1");
  const PreparedData prep = prepare(data, spec);
  const int folds = static_cast<int>(prep.animals.size());
  if (folds < 2) {
    throw std::invalid_argument("leave-one-animal-out needs at least 2 animals");
  }

  const Pipeline kind = effective_kind(spec);
  const int total_units = repeats * folds;
  std::vector<ConfusionMatrix> unit_cm(total_units);

  run_parallel(jobs, total_units, [&](int unit) {
    const int repeat = unit / folds;
    const int fold = unit % folds;
    const std::vector<int> train_rows = prep.rows_of_fold(fold, false);
    const std::vector<int> val_rows = prep.rows_of_fold(fold, true);
    for (int rrow : train_rows) {
      if (prep.animal_index[rrow] == fold) {
        throw std::logic_error("validation animal leaked into training fold");
      }
    }
    const UnitModels models =
        train_unit(spec, prep, train_rows, fold, repeat, base_seed);
    ConfusionMatrix cm;
    for (int v : val_rows) {
      ++cm.counts[prep.labels[v]][predict_unit(kind, models, prep, v)];
    }
    unit_cm[unit] = cm;
  });

  CvRunResult result;
  result.animals = prep.animals;
  result.per_repeat_cm.resize(repeats);
  for (int r = 0; r < repeats; ++r) {
    for (int f = 0; f < folds; ++f) {
      result.per_repeat_cm[r].merge(unit_cm[r * folds + f]);
    }
  }
  result.report = report_from_cms(result.per_repeat_cm);
  return result;
}

FusionModel train_pipeline(const std::vector<Datapoint>& data,
                           const PipelineSpec& spec, std::uint64_t seed) {
  const PreparedData prep = prepare(data, spec);
  std::vector<int> all_rows(prep.n);
  for (int i = 0; i < prep.n; ++i) all_rows[i] = i;
  const UnitModels m = train_unit(spec, prep, all_rows, 0, 0, seed);

  FusionModel model;
  model.accel_cfg = spec.accel_cfg;
  model.gnss_cfg = spec.gnss_cfg;
  switch (effective_kind(spec)) {
    case Pipeline::Fc:
      model.mode = FusionMode::FeatureConcat;
      model.fc = m.fc;
      break;
    case Pipeline::Acc:
      model.mode = FusionMode::PosteriorFusion;
      model.has_gnss = false;
      model.acc = m.acc;
      break;
    case Pipeline::Gnss:
      model.mode = FusionMode::PosteriorFusion;
      model.has_acc = false;
      model.gnss = m.gnss;
      break;
    case Pipeline::Pf:
      model.mode = FusionMode::PosteriorFusion;
      model.acc = m.acc;
      model.gnss = m.gnss;
      model.ln_priors = m.ln_priors;
      break;
  }
  if (model.mode == FusionMode::PosteriorFusion && model.ln_priors.empty()) {
    // Degenerate models keep usable priors for serialization round-trips.
    const Priors priors =
        priors_from_counts(label_counts(prep.labels, all_rows), spec.prior_smoothing);
    model.ln_priors.resize(priors.size());
    for (std::size_t c = 0; c < priors.size(); ++c) {
      model.ln_priors[c] = std::log(priors[c]);
    }
  }
  return model;
}

std::vector<std::pair<std::string, CvRunResult>> ablate_gnss(
    const std::vector<Datapoint>& data, const PipelineSpec& base,
    const std::vector<std::string>& subsets, int repeats,
    std::uint64_t base_seed, int jobs) {
  std::vector<std::pair<std::string, CvRunResult>> table;
  table.reserve(subsets.size());
  for (const std::string& subset : subsets) {
    PipelineSpec spec = base;
    const double radius = base.gnss_cfg.earth_radius_m;
    spec.gnss_cfg = GnssFeatureConfig::from_subset(subset);
    spec.gnss_cfg.earth_radius_m = radius;
    table.emplace_back(subset, loao_cv(data, spec, repeats, base_seed, jobs));
  }
  return table;
}

OpCountReport count_ops_mlp(int F, int L, int C) {
  OpCountReport r;
  const std::int64_t weights =
      static_cast<std::int64_t>(L) * F + static_cast<std::int64_t>(C) * L;
  r.parameters = weights;
  r.parameters_with_biases = weights + L + C;
  // One multiply and one add per weight: bias adds stand in for the
  // final accumulate of each dot product.
  r.multiplications = weights;
  r.additions_subtractions = weights;
  r.relu_operations = L;
  return r;
}

OpCountReport count_ops_pf(int Fa, int La, int Fg, int Lg, int C) {
  const OpCountReport a = count_ops_mlp(Fa, La, C);
  const OpCountReport g = count_ops_mlp(Fg, Lg, C);
  OpCountReport r;
  r.parameters = a.parameters + g.parameters + C;  // stored ln-priors
  r.parameters_with_biases = a.parameters_with_biases + g.parameters_with_biases + C;
  r.multiplications = a.multiplications + g.multiplications;
  // C logit additions plus C prior subtractions; no extra multiplies.
  r.additions_subtractions =
      a.additions_subtractions + g.additions_subtractions + 2 * C;
  r.relu_operations = a.relu_operations + g.relu_operations;
  return r;
}

OpCountReport count_ops(const FusionModel& model) {
  if (model.mode == FusionMode::FeatureConcat) {
    return count_ops_mlp(model.fc.params.F, model.fc.params.L, model.fc.params.C);
  }
  if (model.has_acc && model.has_gnss) {
    return count_ops_pf(model.acc.params.F, model.acc.params.L,
                        model.gnss.params.F, model.gnss.params.L,
                        model.acc.params.C);
  }
  const MlpParams& p = model.has_acc ? model.acc.params : model.gnss.params;
  return count_ops_mlp(p.F, p.L, p.C);
}

std::string render_mcc_table_csv(
    const std::vector<std::pair<std::string, MccReport>>& columns) {
  std::ostringstream os;
  os << "behavior";
  for (const auto& [name, report] : columns) os << "," << name;
  os << "\n";
  for (int c = 0; c < kNumClasses; ++c) {
    os << to_string(static_cast<BehaviorClass>(c));
    for (const auto& [name, report] : columns) {
      os << "," << report.per_class[c].render();
    }
    os << "\n";
  }
  os << "overall";
  for (const auto& [name, report] : columns) os << "," << report.overall.render();
  os << "\n";
  return os.str();
}

std::string render_op_count_csv(
    const std::vector<std::pair<std::string, OpCountReport>>& columns) {
  std::ostringstream os;
  os << "complexity";
  for (const auto& [name, r] : columns) os << "," << name;
  os << "\n";
  const auto row = [&](const char* label, auto getter) {
    os << label;
    for (const auto& [name, r] : columns) os << "," << getter(r);
    os << "\n";
  };
  row("parameters", [](const OpCountReport& r) { return r.parameters; });
  row("parameters_with_biases",
      [](const OpCountReport& r) { return r.parameters_with_biases; });
  row("multiplications", [](const OpCountReport& r) { return r.multiplications; });
  row("additions_subtractions",
      [](const OpCountReport& r) { return r.additions_subtractions; });
  row("relu_operations", [](const OpCountReport& r) { return r.relu_operations; });
  row("sum_of_operations",
      [](const OpCountReport& r) { return r.sum_of_operations(); });
  return os.str();
}

}  // namespace mbc
