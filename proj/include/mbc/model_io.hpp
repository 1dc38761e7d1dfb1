#pragma once

#include <string>

#include "mbc/fusion.hpp"

namespace mbc {

// Versioned JSON documents. A fusion model bundles the per-modality MLP
// documents plus priors and the mode tag.
inline constexpr const char* kModelFormatTag = "mbc-model/1";

std::string fusion_model_to_json(const FusionModel& model);
FusionModel fusion_model_from_json(const std::string& text);

void save_fusion_model(const FusionModel& model, const std::string& path);
FusionModel load_fusion_model(const std::string& path);

}  // namespace mbc
