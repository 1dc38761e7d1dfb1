#include "mbc/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace mbc {

using nlohmann::ordered_json;

namespace {

ordered_json mlp_to_json(const TrainedMlp& m, const std::string& schema_id) {
  ordered_json j;
  j["schema_id"] = schema_id;
  j["dims"] = {{"F", m.params.F}, {"L", m.params.L}, {"C", m.params.C}};
  j["W1"] = m.params.W1;  // row-major L x F
  j["b1"] = m.params.b1;
  j["W2"] = m.params.W2;  // row-major C x L
  j["b2"] = m.params.b2;
  j["single_class_fold"] = m.single_class_fold;
  if (!m.feature_mean.empty()) {
    j["feature_mean"] = m.feature_mean;
    j["feature_std"] = m.feature_std;
  }
  return j;
}

TrainedMlp mlp_from_json(const ordered_json& j) {
  TrainedMlp m;
  const auto& dims = j.at("dims");
  m.params = MlpParams::zeros(dims.at("F").get<int>(), dims.at("L").get<int>(),
                              dims.at("C").get<int>());
  m.params.W1 = j.at("W1").get<std::vector<double>>();
  m.params.b1 = j.at("b1").get<std::vector<double>>();
  m.params.W2 = j.at("W2").get<std::vector<double>>();
  m.params.b2 = j.at("b2").get<std::vector<double>>();
  if (m.params.W1.size() != static_cast<std::size_t>(m.params.L) * m.params.F ||
      m.params.b1.size() != static_cast<std::size_t>(m.params.L) ||
      m.params.W2.size() != static_cast<std::size_t>(m.params.C) * m.params.L ||
      m.params.b2.size() != static_cast<std::size_t>(m.params.C)) {
    throw std::runtime_error("model document has inconsistent weight shapes");
  }
  m.single_class_fold = j.value("single_class_fold", false);
  if (j.contains("feature_mean")) {
    m.feature_mean = j.at("feature_mean").get<std::vector<double>>();
    m.feature_std = j.at("feature_std").get<std::vector<double>>();
  }
  return m;
}

ordered_json accel_cfg_to_json(const AccelFeatureConfig& cfg) {
  return {{"gammas", cfg.gammas}, {"include_mean", cfg.include_mean}};
}

AccelFeatureConfig accel_cfg_from_json(const ordered_json& j) {
  AccelFeatureConfig cfg;
  cfg.gammas = j.at("gammas").get<std::vector<double>>();
  cfg.include_mean = j.at("include_mean").get<bool>();
  return cfg;
}

ordered_json gnss_cfg_to_json(const GnssFeatureConfig& cfg) {
  return {{"earth_radius_m", cfg.earth_radius_m},
          {"dtwp", cfg.dtwp},
          {"speed", cfg.speed},
          {"error", cfg.error}};
}

GnssFeatureConfig gnss_cfg_from_json(const ordered_json& j) {
  GnssFeatureConfig cfg;
  cfg.earth_radius_m = j.at("earth_radius_m").get<double>();
  cfg.dtwp = j.at("dtwp").get<bool>();
  cfg.speed = j.at("speed").get<bool>();
  cfg.error = j.at("error").get<bool>();
  return cfg;
}

}  // namespace

std::string fusion_model_to_json(const FusionModel& model) {
  ordered_json j;
  j["format"] = kModelFormatTag;
  j["mode"] = to_string(model.mode);
  j["accel_cfg"] = accel_cfg_to_json(model.accel_cfg);
  j["gnss_cfg"] = gnss_cfg_to_json(model.gnss_cfg);
  j["has_acc"] = model.has_acc;
  j["has_gnss"] = model.has_gnss;
  if (model.mode == FusionMode::FeatureConcat) {
    const std::string schema =
        model.accel_cfg.schema_id() + "|" + model.gnss_cfg.schema_id();
    j["fc"] = mlp_to_json(model.fc, schema);
  } else {
    if (model.has_acc) j["acc"] = mlp_to_json(model.acc, model.accel_cfg.schema_id());
    if (model.has_gnss) j["gnss"] = mlp_to_json(model.gnss, model.gnss_cfg.schema_id());
  }
  j["ln_priors"] = model.ln_priors;
  return j.dump(2);
}

FusionModel fusion_model_from_json(const std::string& text) {
  const ordered_json j = ordered_json::parse(text);
  if (j.at("format").get<std::string>() != kModelFormatTag) {
    throw std::runtime_error("unsupported model format tag: " +
                             j.at("format").get<std::string>());
  }
  FusionModel model;
  const std::string mode = j.at("mode").get<std::string>();
  if (mode == "fc") {
    model.mode = FusionMode::FeatureConcat;
  } else if (mode == "pf") {
    model.mode = FusionMode::PosteriorFusion;
  } else {
    throw std::runtime_error("unknown fusion mode: " + mode);
  }
  model.accel_cfg = accel_cfg_from_json(j.at("accel_cfg"));
  model.gnss_cfg = gnss_cfg_from_json(j.at("gnss_cfg"));
  model.has_acc = j.at("has_acc").get<bool>();
  model.has_gnss = j.at("has_gnss").get<bool>();
  if (model.mode == FusionMode::FeatureConcat) {
    model.fc = mlp_from_json(j.at("fc"));
  } else {
    if (model.has_acc) model.acc = mlp_from_json(j.at("acc"));
    if (model.has_gnss) model.gnss = mlp_from_json(j.at("gnss"));
  }
  model.ln_priors = j.at("ln_priors").get<std::vector<double>>();
  return model;
}

void save_fusion_model(const FusionModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << fusion_model_to_json(model) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

FusionModel load_fusion_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return fusion_model_from_json(os.str());
}

}  // namespace mbc
