#include "mbc/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mbc {

namespace {

// splitmix64; also the step function behind seed mixing in eval.
std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Uniform double in [0,1) from explicit bit manipulation; identical on
// any platform with IEEE-754 doubles.
double uniform01(std::uint64_t& state) {
  return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
}

void check_dims(int F, int L, int C) {
  if (F < 1 || L < 1 || C < 2) {
    throw std::invalid_argument("invalid MLP dimensions F=" + std::to_string(F) +
                                " L=" + std::to_string(L) + " C=" + std::to_string(C));
  }
}

}  // namespace

MlpParams MlpParams::zeros(int F, int L, int C) {
  check_dims(F, L, C);
  MlpParams p;
  p.F = F;
  p.L = L;
  p.C = C;
  p.W1.assign(static_cast<std::size_t>(L) * F, 0.0);
  p.b1.assign(L, 0.0);
  p.W2.assign(static_cast<std::size_t>(C) * L, 0.0);
  p.b2.assign(C, 0.0);
  return p;
}

std::vector<double> MlpParams::to_flat() const {
  std::vector<double> v;
  v.reserve(flat_size());
  v.insert(v.end(), W1.begin(), W1.end());
  v.insert(v.end(), b1.begin(), b1.end());
  v.insert(v.end(), W2.begin(), W2.end());
  v.insert(v.end(), b2.begin(), b2.end());
  return v;
}

MlpParams MlpParams::from_flat(const std::vector<double>& v, int F, int L, int C) {
  MlpParams p = zeros(F, L, C);
  if (v.size() != p.flat_size()) {
    throw std::invalid_argument("flat parameter vector has wrong length");
  }
  auto it = v.begin();
  std::copy(it, it + p.W1.size(), p.W1.begin());
  it += p.W1.size();
  std::copy(it, it + p.b1.size(), p.b1.begin());
  it += p.b1.size();
  std::copy(it, it + p.W2.size(), p.W2.begin());
  it += p.W2.size();
  std::copy(it, it + p.b2.size(), p.b2.begin());
  return p;
}

int hidden_size(int F, int C, const HiddenSizePolicy& policy) {
  if (F < 1 || C < 2) throw std::invalid_argument("hidden_size needs F >= 1, C >= 2");
  switch (policy.kind) {
    case HiddenSizePolicy::Kind::CeilAverage:
      return (F + C + 1) / 2;
    case HiddenSizePolicy::Kind::FloorAverage:
      return (F + C) / 2;
    case HiddenSizePolicy::Kind::Explicit:
      if (policy.explicit_size < 1) {
        throw std::invalid_argument("explicit hidden size must be >= 1");
      }
      return policy.explicit_size;
  }
  throw std::invalid_argument("unknown hidden size policy");
}

MlpParams init_params(int F, int L, int C, std::uint64_t seed) {
  MlpParams p = MlpParams::zeros(F, L, C);
  std::uint64_t state = seed;
  const double bound1 = std::sqrt(6.0 / (F + L));
  for (double& w : p.W1) w = (2.0 * uniform01(state) - 1.0) * bound1;
  const double bound2 = std::sqrt(6.0 / (L + C));
  for (double& w : p.W2) w = (2.0 * uniform01(state) - 1.0) * bound2;
  return p;  // biases stay zero
}

std::vector<double> forward_logits(const MlpParams& p, const double* f, int len) {
  if (len != p.F) {
    throw std::invalid_argument("feature length mismatch: expected " +
                                std::to_string(p.F) + ", got " + std::to_string(len));
  }
  std::vector<double> hidden(p.L);
  for (int l = 0; l < p.L; ++l) {
    double acc = p.b1[l];
    const double* w = p.W1.data() + static_cast<std::size_t>(l) * p.F;
    for (int i = 0; i < p.F; ++i) acc += w[i] * f[i];
    hidden[l] = acc > 0.0 ? acc : 0.0;
  }
  std::vector<double> z(p.C);
  for (int c = 0; c < p.C; ++c) {
    double acc = p.b2[c];
    const double* w = p.W2.data() + static_cast<std::size_t>(c) * p.L;
    for (int l = 0; l < p.L; ++l) acc += w[l] * hidden[l];
    z[c] = acc;
  }
  return z;
}

std::vector<double> forward_logits(const MlpParams& p, const FeatureVector& f) {
  return forward_logits(p, f.values.data(), static_cast<int>(f.values.size()));
}

std::vector<double> softmax(const std::vector<double>& z) {
  double zmax = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double sum = 0.0;
  for (std::size_t c = 0; c < z.size(); ++c) {
    p[c] = std::exp(z[c] - zmax);
    sum += p[c];
  }
  for (double& v : p) v /= sum;
  return p;
}

double loss_and_grad(const MlpParams& p, const LabeledFeatures& batch,
                     double l2_lambda, MlpParams& grad) {
  if (batch.rows < 1) throw std::invalid_argument("empty batch");
  if (batch.cols != p.F) {
    throw std::invalid_argument("feature length mismatch: expected " +
                                std::to_string(p.F) + ", got " +
                                std::to_string(batch.cols));
  }
  if (grad.F != p.F || grad.L != p.L || grad.C != p.C) {
    grad = MlpParams::zeros(p.F, p.L, p.C);
  } else {
    std::fill(grad.W1.begin(), grad.W1.end(), 0.0);
    std::fill(grad.b1.begin(), grad.b1.end(), 0.0);
    std::fill(grad.W2.begin(), grad.W2.end(), 0.0);
    std::fill(grad.b2.begin(), grad.b2.end(), 0.0);
  }

  const int B = batch.rows;
  const double inv_b = 1.0 / static_cast<double>(B);
  double loss = 0.0;

  std::vector<double> pre(p.L), hidden(p.L), z(p.C), prob(p.C), dz(p.C), dh(p.L);
  for (int i = 0; i < B; ++i) {
    const double* f = batch.row(i);
    const int y = batch.y[i];
    if (y < 0 || y >= p.C) throw std::invalid_argument("label out of range");

    for (int l = 0; l < p.L; ++l) {
      double acc = p.b1[l];
      const double* w = p.W1.data() + static_cast<std::size_t>(l) * p.F;
      for (int k = 0; k < p.F; ++k) acc += w[k] * f[k];
      pre[l] = acc;
      hidden[l] = acc > 0.0 ? acc : 0.0;
    }
    for (int c = 0; c < p.C; ++c) {
      double acc = p.b2[c];
      const double* w = p.W2.data() + static_cast<std::size_t>(c) * p.L;
      for (int l = 0; l < p.L; ++l) acc += w[l] * hidden[l];
      z[c] = acc;
    }

    // -ln softmax(z)[y] via the log-sum-exp form
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (int c = 0; c < p.C; ++c) {
      prob[c] = std::exp(z[c] - zmax);
      sum += prob[c];
    }
    loss += (std::log(sum) + zmax - z[y]) * inv_b;

    for (int c = 0; c < p.C; ++c) {
      dz[c] = (prob[c] / sum - (c == y ? 1.0 : 0.0)) * inv_b;
    }
    std::fill(dh.begin(), dh.end(), 0.0);
    for (int c = 0; c < p.C; ++c) {
      double* gw = grad.W2.data() + static_cast<std::size_t>(c) * p.L;
      const double* w = p.W2.data() + static_cast<std::size_t>(c) * p.L;
      const double d = dz[c];
      for (int l = 0; l < p.L; ++l) {
        gw[l] += d * hidden[l];
        dh[l] += d * w[l];
      }
      grad.b2[c] += d;
    }
    for (int l = 0; l < p.L; ++l) {
      if (pre[l] <= 0.0) continue;  // ReLU gate
      const double d = dh[l];
      double* gw = grad.W1.data() + static_cast<std::size_t>(l) * p.F;
      for (int k = 0; k < p.F; ++k) gw[k] += d * f[k];
      grad.b1[l] += d;
    }
  }

  if (l2_lambda > 0.0) {
    const double scale = l2_lambda * inv_b;
    double sq = 0.0;
    for (std::size_t i = 0; i < p.W1.size(); ++i) {
      sq += p.W1[i] * p.W1[i];
      grad.W1[i] += scale * p.W1[i];
    }
    for (std::size_t i = 0; i < p.W2.size(); ++i) {
      sq += p.W2[i] * p.W2[i];
      grad.W2[i] += scale * p.W2[i];
    }
    loss += 0.5 * scale * sq;
  }
  return loss;
}

int argmax_lowest_tie(const std::vector<double>& v) {
  int best = 0;
  for (int c = 1; c < static_cast<int>(v.size()); ++c) {
    if (v[c] > v[best]) best = c;
  }
  return best;
}

int predict(const MlpParams& p, const double* f, int len) {
  return argmax_lowest_tie(forward_logits(p, f, len));
}

int predict(const MlpParams& p, const FeatureVector& f) {
  return predict(p, f.values.data(), static_cast<int>(f.values.size()));
}

}  // namespace mbc
