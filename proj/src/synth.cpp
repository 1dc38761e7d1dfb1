#include "mbc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "mbc/rng.hpp"

namespace mbc {

namespace {

void check_distribution(const std::vector<double>& p, const char* what) {
  if (p.empty()) throw std::invalid_argument(std::string(what) + " is empty");
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) throw std::invalid_argument(std::string(what) + " has negative mass");
    sum += v;
  }
  if (std::fabs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument(std::string(what) + " does not sum to 1");
  }
}

std::vector<double> normalized(std::vector<double> v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  for (double& x : v) x /= sum;
  return v;
}

}  // namespace

void DiscreteSynthSpec::validate() const {
  if (num_classes() < 2) throw std::invalid_argument("need at least 2 classes");
  check_distribution(priors, "priors");
  for (double v : priors) {
    if (!(v > 0.0)) throw std::invalid_argument("priors must be strictly positive");
  }
  if (static_cast<int>(pa.size()) != num_classes() ||
      static_cast<int>(pg.size()) != num_classes()) {
    throw std::invalid_argument("per-class tables must have one row per class");
  }
  if (alphabet_a() < 1 || alphabet_a() > 10 || alphabet_g() < 1 || alphabet_g() > 10) {
    throw std::invalid_argument("alphabets must have 1..10 symbols");
  }
  for (const auto& row : pa) {
    if (static_cast<int>(row.size()) != alphabet_a()) {
      throw std::invalid_argument("ragged pa table");
    }
    check_distribution(row, "pa row");
  }
  for (const auto& row : pg) {
    if (static_cast<int>(row.size()) != alphabet_g()) {
      throw std::invalid_argument("ragged pg table");
    }
    check_distribution(row, "pg row");
  }
  if (!(coupling >= 0.0 && coupling <= 1.0)) {
    throw std::invalid_argument("coupling must lie in [0,1]");
  }
}

DiscreteSynthResult gen_discrete(const DiscreteSynthSpec& spec) {
  spec.validate();
  const int C = spec.num_classes();
  const int Sa = spec.alphabet_a();
  const int Sg = spec.alphabet_g();
  const double coupling = spec.coupling;
  const auto priors = spec.priors;
  const auto pa = spec.pa;
  const auto pg = spec.pg;

  // P(g | a, c) marginalized over the coupling coin.
  const auto g_given_ac = [=](int g, int a, int c) {
    const double copied = (g == a % Sg) ? 1.0 : 0.0;
    return (1.0 - coupling) * pg[c][g] + coupling * copied;
  };

  DiscreteSynthResult result;
  result.priors.p = priors;

  Rng rng(spec.seed);
  result.samples.reserve(spec.num_samples);
  for (int i = 0; i < spec.num_samples; ++i) {
    DiscreteSample s;
    s.cls = rng.categorical(priors);
    s.sym_a = rng.categorical(pa[s.cls]);
    if (rng.uniform() < coupling) {
      s.sym_g = s.sym_a % Sg;
    } else {
      s.sym_g = rng.categorical(pg[s.cls]);
    }
    result.samples.push_back(s);
  }

  result.joint_posterior = [=](int a, int g) {
    std::vector<double> post(C);
    for (int c = 0; c < C; ++c) {
      post[c] = priors[c] * pa[c][a] * g_given_ac(g, a, c);
    }
    return normalized(std::move(post));
  };
  result.posterior_a = [=](int a) {
    std::vector<double> post(C);
    for (int c = 0; c < C; ++c) post[c] = priors[c] * pa[c][a];
    return normalized(std::move(post));
  };
  result.posterior_g = [=](int g) {
    std::vector<double> post(C);
    for (int c = 0; c < C; ++c) {
      // True marginal of g given c under the coupling mixture.
      double pg_c = 0.0;
      for (int a = 0; a < Sa; ++a) pg_c += pa[c][a] * g_given_ac(g, a, c);
      post[c] = priors[c] * pg_c;
    }
    return normalized(std::move(post));
  };
  return result;
}

namespace {

constexpr const char* kDays[5] = {"2020-03-23", "2020-03-24", "2020-03-25",
                                  "2020-03-26", "2020-03-27"};

constexpr double kMetersPerDegLat = 111120.0;

// Per-class generator constants: mean collar pose (m/s^2), motion
// intensity (std of the white accel noise), distance-to-water range,
// and per-fix speed distribution. Drinking shares the grazing pose and
// sits between resting and grazing in intensity, so accelerometry alone
// confuses it; its position near the water point is what separates it.
struct ClassProfile {
  double pose[3];
  double intensity;
  double dist_lo, dist_hi;   // meters from the day's water point
  double speed_mean, speed_std;
};

constexpr ClassProfile kProfiles[kNumClasses] = {
    /* grazing  */ {{0.30, -3.20, 9.00}, 0.38, 10.0, 130.0, 0.12, 0.08},
    /* walking  */ {{0.10, -0.80, 9.70}, 0.85, 40.0, 160.0, 1.40, 0.35},
    /* resting  */ {{0.00, 0.30, 9.80}, 0.06, 10.0, 130.0, 0.03, 0.03},
    /* drinking */ {{0.30, -3.20, 9.00}, 0.22, 0.0, 0.0, 0.04, 0.03},
    /* alia     */ {{0.10, -1.20, 9.50}, 0.50, 10.0, 130.0, 0.15, 0.15},
};

WaterPoint water_point_for_day(int day_index) {
  WaterPoint wp;
  // Base site moved a few tens of meters each day.
  wp.lat_deg = -30.6078 + (day_index * 37.0) / kMetersPerDegLat;
  wp.lon_deg = 151.5443 + (day_index * 53.0) /
                              (kMetersPerDegLat * std::cos(-30.6078 * M_PI / 180.0));
  wp.valid_day = kDays[day_index % 5];
  return wp;
}

}  // namespace

std::vector<Datapoint> gen_behavior_like(const BehaviorSynthSpec& spec) {
  if (spec.num_animals < 1 || spec.points_per_animal < 1) {
    throw std::invalid_argument("need at least one animal and one point");
  }
  if (spec.segment_len < 2) throw std::invalid_argument("segment_len must be >= 2");
  std::vector<double> priors =
      spec.priors.empty()
          ? std::vector<double>{0.515, 0.076, 0.341, 0.0497, 0.0183}
          : spec.priors;
  if (static_cast<int>(priors.size()) != kNumClasses) {
    throw std::invalid_argument("priors must have 5 entries");
  }
  priors = normalized(std::move(priors));

  const double cos_lat = std::cos(-30.6078 * M_PI / 180.0);
  std::vector<Datapoint> out;
  out.reserve(static_cast<std::size_t>(spec.num_animals) * spec.points_per_animal);

  for (int animal = 0; animal < spec.num_animals; ++animal) {
    Rng rng(mbc::Rng(spec.seed + 1000003ull * animal).next_u64());
    char id[16];
    std::snprintf(id, sizeof(id), "synth%02d", animal + 1);

    // Collar placement varies a little per animal.
    const double animal_pose[3] = {rng.normal(0.0, 0.25), rng.normal(0.0, 0.25),
                                   rng.normal(0.0, 0.25)};

    for (int i = 0; i < spec.points_per_animal; ++i) {
      const int day_index = (i * 5) / spec.points_per_animal;
      const WaterPoint wp = water_point_for_day(day_index);
      const int cls = rng.categorical(priors);
      const ClassProfile& prof = kProfiles[cls];

      Datapoint dp;
      dp.animal_id = id;
      dp.day = wp.valid_day;
      dp.water_point = wp;
      dp.has_label = true;
      dp.label = static_cast<BehaviorClass>(cls);

      // Accelerometry: per-point pose jitter plus intensity-scaled noise.
      const double jitter[3] = {rng.normal(0.0, 0.35), rng.normal(0.0, 0.35),
                                rng.normal(0.0, 0.35)};
      const double intensity = prof.intensity * std::exp(rng.normal(0.0, 0.40));
      dp.accel.sample_rate_hz = spec.sample_rate_hz;
      dp.accel.x.resize(spec.segment_len);
      dp.accel.y.resize(spec.segment_len);
      dp.accel.z.resize(spec.segment_len);
      for (int n = 0; n < spec.segment_len; ++n) {
        dp.accel.x[n] = prof.pose[0] + animal_pose[0] + jitter[0] + intensity * rng.normal();
        dp.accel.y[n] = prof.pose[1] + animal_pose[1] + jitter[1] + intensity * rng.normal();
        dp.accel.z[n] = prof.pose[2] + animal_pose[2] + jitter[2] + intensity * rng.normal();
      }

      // Position of the segment relative to the day's water point.
      double north_m, east_m;
      if (cls == static_cast<int>(BehaviorClass::Drinking)) {
        const double r = 4.0 * std::sqrt(-2.0 * std::log(1.0 - rng.uniform()));
        const double theta = rng.uniform(0.0, 2.0 * M_PI);
        north_m = r * std::cos(theta);
        east_m = r * std::sin(theta);
      } else {
        const double r = rng.uniform(prof.dist_lo, prof.dist_hi);
        const double theta = rng.uniform(0.0, 2.0 * M_PI);
        north_m = r * std::cos(theta);
        east_m = r * std::sin(theta);
      }

      const int num_fixes = 3 + static_cast<int>(rng.next_u64() % 5);  // 3..7
      const double t0 = 1584921600.0 + day_index * 86400.0 + i * 30.0;
      for (int k = 0; k < num_fixes; ++k) {
        GnssFix fix;
        const double fix_north = north_m + rng.normal(0.0, 3.0);
        const double fix_east = east_m + rng.normal(0.0, 3.0);
        fix.lat_deg = wp.lat_deg + fix_north / kMetersPerDegLat;
        fix.lon_deg = wp.lon_deg + fix_east / (kMetersPerDegLat * cos_lat);
        fix.speed_mps = std::max(0.0, rng.normal(prof.speed_mean, prof.speed_std));
        fix.ehpe_m = 7.0 * std::exp(rng.normal(0.0, 0.2));
        fix.t_unix = t0 + k;
        dp.gnss.push_back(fix);
      }
      out.push_back(std::move(dp));
    }
  }
  return out;
}

DiscreteSynthSpec coupling0_spec(int num_samples, std::uint64_t seed) {
  DiscreteSynthSpec spec;
  spec.priors = {0.36, 0.14, 0.28, 0.12, 0.10};
  // Modality a separates the pairs {0,1} vs {2,3} vs {4}; modality g
  // separates within the pairs. Neither alone identifies the class.
  spec.pa = {
      {0.80, 0.10, 0.05, 0.05},
      {0.80, 0.10, 0.05, 0.05},
      {0.05, 0.05, 0.80, 0.10},
      {0.05, 0.05, 0.80, 0.10},
      {0.25, 0.25, 0.25, 0.25},
  };
  spec.pg = {
      {0.80, 0.05, 0.10, 0.05},
      {0.05, 0.80, 0.05, 0.10},
      {0.80, 0.05, 0.10, 0.05},
      {0.05, 0.80, 0.05, 0.10},
      {0.10, 0.10, 0.40, 0.40},
  };
  spec.coupling = 0.0;
  spec.num_samples = num_samples;
  spec.seed = seed;
  return spec;
}

std::vector<Datapoint> gen_coupling0_datapoints(int num_samples, int num_animals,
                                                std::uint64_t seed) {
  if (num_animals < 2) throw std::invalid_argument("need at least 2 animals");
  const DiscreteSynthResult model = gen_discrete(coupling0_spec(num_samples, seed));

  const WaterPoint wp = water_point_for_day(0);
  const double cos_lat = std::cos(wp.lat_deg * M_PI / 180.0);
  std::vector<Datapoint> out;
  out.reserve(model.samples.size());
  for (std::size_t i = 0; i < model.samples.size(); ++i) {
    const DiscreteSample& s = model.samples[i];
    Datapoint dp;
    char id[16];
    std::snprintf(id, sizeof(id), "synth%02d",
                  static_cast<int>(i % num_animals) + 1);
    dp.animal_id = id;
    dp.day = kDays[0];
    dp.has_label = true;
    dp.label = static_cast<BehaviorClass>(s.cls);

    // Symbol a lives in the accel mean; symbol g in the GNSS speed.
    dp.accel.sample_rate_hz = 50.0;
    dp.accel.x.assign(32, 1.0 + s.sym_a);
    dp.accel.y.assign(32, 0.5);
    dp.accel.z.assign(32, 9.8);

    const double t0 = 1584921600.0 + static_cast<double>(i);
    for (int k = 0; k < 3; ++k) {
      GnssFix fix;
      fix.lat_deg = wp.lat_deg + 30.0 / kMetersPerDegLat;
      fix.lon_deg = wp.lon_deg + 10.0 / (kMetersPerDegLat * cos_lat);
      fix.speed_mps = 0.4 * s.sym_g;
      fix.ehpe_m = 7.0;
      fix.t_unix = t0 + 0.2 * k;
      dp.gnss.push_back(fix);
    }
    dp.water_point = wp;
    out.push_back(std::move(dp));
  }
  return out;
}

}  // namespace mbc
