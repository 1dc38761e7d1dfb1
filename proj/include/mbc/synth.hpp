#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "mbc/types.hpp"

namespace mbc {

// Discrete two-modality generative model: class -> symbol tables with a
// coupling knob. coupling = 0 makes the modalities conditionally
// independent given the class; coupling = 1 makes modality g a copy of
// modality a (mod its alphabet size).
struct DiscreteSynthSpec {
  std::vector<double> priors;               // length = num classes
  std::vector<std::vector<double>> pa;      // class -> P(symbol_a | class)
  std::vector<std::vector<double>> pg;      // class -> P(symbol_g | class)
  double coupling = 0.0;
  int num_samples = 0;
  std::uint64_t seed = 0;

  int num_classes() const { return static_cast<int>(priors.size()); }
  int alphabet_a() const { return pa.empty() ? 0 : static_cast<int>(pa[0].size()); }
  int alphabet_g() const { return pg.empty() ? 0 : static_cast<int>(pg[0].size()); }
  void validate() const;
};

struct DiscreteSample {
  int cls = 0;
  int sym_a = 0;
  int sym_g = 0;
};

struct DiscreteSynthResult {
  std::vector<DiscreteSample> samples;
  // Exact Bayes posteriors from the generative tables.
  std::function<std::vector<double>(int sym_a, int sym_g)> joint_posterior;
  std::function<std::vector<double>(int sym_a)> posterior_a;
  std::function<std::vector<double>(int sym_g)> posterior_g;
  Priors priors;
};

DiscreteSynthResult gen_discrete(const DiscreteSynthSpec& spec);

// Behavior-shaped canonical generator: accel segments drawn per class
// (pose offsets + motion-intensity noise) and GNSS fixes per class
// (drinking near the water point, walking at speed). Deterministic
// given seed.
struct BehaviorSynthSpec {
  int num_animals = 8;
  int points_per_animal = 1500;
  std::vector<double> priors;  // empty -> herd-like default
  int segment_len = 256;
  double sample_rate_hz = 50.0;
  std::uint64_t seed = 20200318;
};

std::vector<Datapoint> gen_behavior_like(const BehaviorSynthSpec& spec);

// The discrete coupling-0 model rendered as canonical datapoints: the
// modality-a symbol is encoded in the accel mean and the modality-g
// symbol in the GNSS speed, so the standard feature extractors recover
// them. Used by the `synth --preset coupling0` CLI path.
std::vector<Datapoint> gen_coupling0_datapoints(int num_samples, int num_animals,
                                                std::uint64_t seed);

// The DiscreteSynthSpec behind gen_coupling0_datapoints.
DiscreteSynthSpec coupling0_spec(int num_samples, std::uint64_t seed);

}  // namespace mbc
