#include "mbc/optim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <set>
#include <stdexcept>

namespace mbc {

const char* to_string(OptimStatus s) {
  switch (s) {
    case OptimStatus::Converged: return "converged";
    case OptimStatus::MaxIter: return "max-iter";
    case OptimStatus::LineSearchFailure: return "line-search-failure";
  }
  return "unknown";
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

double norm_inf(const std::vector<double>& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::fabs(v));
  return m;
}

bool all_finite(const std::vector<double>& a) {
  for (double v : a) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

// Minimizer of the cubic interpolant through (a, fa, da), (b, fb, db);
// NaN when the interpolant has no interior minimizer.
double cubic_minimizer(double a, double fa, double da, double b, double fb,
                       double db) {
  const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - da * db;
  if (disc < 0.0) return std::numeric_limits<double>::quiet_NaN();
  double d2 = std::sqrt(disc);
  if (b < a) d2 = -d2;
  const double denom = db - da + 2.0 * d2;
  if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return b - (b - a) * (db + d2 - d1) / denom;
}

struct LineSearchResult {
  bool ok = false;
  double alpha = 0.0;
  double f = 0.0;
  std::vector<double> x;
  std::vector<double> g;
};

// Strong-Wolfe bracketing line search (bracket + zoom with cubic
// interpolation and bisection safeguard). `evals` is charged against
// cfg.max_line_search.
class WolfeSearch {
 public:
  WolfeSearch(const Objective& obj, const OptimConfig& cfg,
              const std::vector<double>& x0, const std::vector<double>& dir,
              double f0, double dphi0, int& eval_counter)
      : obj_(obj), cfg_(cfg), x0_(x0), dir_(dir), f0_(f0), dphi0_(dphi0),
        evals_(eval_counter), trial_x_(x0.size()), trial_g_(x0.size()) {}

  LineSearchResult run(double alpha_init) {
    double alpha_prev = 0.0;
    double phi_prev = f0_;
    double dphi_prev = dphi0_;
    double alpha = alpha_init;

    for (int i = 0; budget_left(); ++i) {
      double phi, dphi;
      if (!eval(alpha, phi, dphi)) {
        // Non-finite trial: halve toward the last good point.
        alpha = 0.5 * (alpha_prev + alpha);
        continue;
      }
      if (phi > f0_ + cfg_.c1 * alpha * dphi0_ || (i > 0 && phi >= phi_prev)) {
        return zoom(alpha_prev, phi_prev, dphi_prev, alpha, phi, dphi);
      }
      if (std::fabs(dphi) <= -cfg_.c2 * dphi0_) {
        return accept(alpha, phi);
      }
      if (dphi >= 0.0) {
        return zoom(alpha, phi, dphi, alpha_prev, phi_prev, dphi_prev);
      }
      alpha_prev = alpha;
      phi_prev = phi;
      dphi_prev = dphi;
      alpha = std::min(2.0 * alpha, kAlphaMax);
    }
    return {};
  }

 private:
  static constexpr double kAlphaMax = 1e20;

  bool budget_left() const { return evals_local_ < cfg_.max_line_search; }

  bool eval(double alpha, double& phi, double& dphi) {
    for (std::size_t j = 0; j < x0_.size(); ++j) trial_x_[j] = x0_[j] + alpha * dir_[j];
    phi = obj_(trial_x_, trial_g_);
    ++evals_;
    ++evals_local_;
    if (!std::isfinite(phi) || !all_finite(trial_g_)) return false;
    dphi = dot(trial_g_, dir_);
    return true;
  }

  LineSearchResult accept(double alpha, double phi) {
    LineSearchResult r;
    r.ok = true;
    r.alpha = alpha;
    r.f = phi;
    r.x = trial_x_;
    r.g = trial_g_;
    return r;
  }

  LineSearchResult zoom(double lo, double phi_lo, double dphi_lo, double hi,
                        double phi_hi, double dphi_hi) {
    while (budget_left()) {
      const double width = hi - lo;
      if (std::fabs(width) <= 1e-16 * std::max(1.0, std::fabs(lo))) break;

      double alpha = cubic_minimizer(lo, phi_lo, dphi_lo, hi, phi_hi, dphi_hi);
      const double left = std::min(lo, hi);
      const double right = std::max(lo, hi);
      const double margin = 0.1 * (right - left);
      if (!std::isfinite(alpha) || alpha <= left + 1e-3 * margin ||
          alpha >= right - 1e-3 * margin) {
        alpha = 0.5 * (lo + hi);
      } else {
        alpha = std::clamp(alpha, left + 1e-3 * margin, right - 1e-3 * margin);
      }

      double phi, dphi;
      if (!eval(alpha, phi, dphi)) {
        hi = alpha;  // squeeze away from the bad region
        phi_hi = std::numeric_limits<double>::infinity();
        dphi_hi = 0.0;
        continue;
      }
      if (phi > f0_ + cfg_.c1 * alpha * dphi0_ || phi >= phi_lo) {
        hi = alpha;
        phi_hi = phi;
        dphi_hi = dphi;
      } else {
        if (std::fabs(dphi) <= -cfg_.c2 * dphi0_) {
          return accept(alpha, phi);
        }
        if (dphi * (hi - lo) >= 0.0) {
          hi = lo;
          phi_hi = phi_lo;
          dphi_hi = dphi_lo;
        }
        lo = alpha;
        phi_lo = phi;
        dphi_lo = dphi;
      }
    }
    return {};
  }

  const Objective& obj_;
  const OptimConfig& cfg_;
  const std::vector<double>& x0_;
  const std::vector<double>& dir_;
  double f0_;
  double dphi0_;
  int& evals_;
  int evals_local_ = 0;
  std::vector<double> trial_x_;
  std::vector<double> trial_g_;
};

}  // namespace

OptimResult lbfgs_minimize(const Objective& objective,
                           const std::vector<double>& x0,
                           const OptimConfig& cfg) {
  if (cfg.memory < 1 || !(cfg.c1 > 0.0 && cfg.c1 < cfg.c2 && cfg.c2 < 1.0)) {
    throw std::invalid_argument("invalid optimizer configuration");
  }
  const std::size_t n = x0.size();

  OptimResult res;
  res.x = x0;
  std::vector<double> g(n);
  res.value = objective(res.x, g);
  res.evaluations = 1;
  if (!std::isfinite(res.value) || !all_finite(g)) {
    throw std::invalid_argument("objective is not finite at the starting point");
  }

  if (norm_inf(g) <= cfg.grad_tol) {
    res.status = OptimStatus::Converged;
    res.reason = "grad-tol";
    return res;
  }

  std::deque<std::vector<double>> hist_s, hist_y;
  std::deque<double> hist_rho;
  double gamma = 1.0;  // initial Hessian scale

  std::vector<double> dir(n), q(n);
  std::deque<double> recent_f{res.value};

  for (int iter = 0; iter < cfg.max_iter; ++iter) {
    // Two-loop recursion over the stored curvature pairs.
    q = g;
    const int m = static_cast<int>(hist_s.size());
    std::vector<double> alpha_coef(m);
    for (int i = m - 1; i >= 0; --i) {
      alpha_coef[i] = hist_rho[i] * dot(hist_s[i], q);
      for (std::size_t j = 0; j < n; ++j) q[j] -= alpha_coef[i] * hist_y[i][j];
    }
    for (double& v : q) v *= gamma;
    for (int i = 0; i < m; ++i) {
      const double beta = hist_rho[i] * dot(hist_y[i], q);
      for (std::size_t j = 0; j < n; ++j) q[j] += (alpha_coef[i] - beta) * hist_s[i][j];
    }
    for (std::size_t j = 0; j < n; ++j) dir[j] = -q[j];

    double dphi0 = dot(g, dir);
    if (dphi0 >= 0.0) {
      // Not a descent direction; fall back to steepest descent.
      hist_s.clear();
      hist_y.clear();
      hist_rho.clear();
      gamma = 1.0;
      for (std::size_t j = 0; j < n; ++j) dir[j] = -g[j];
      dphi0 = dot(g, dir);
      if (dphi0 >= 0.0) {
        res.status = OptimStatus::LineSearchFailure;
        res.reason = "no descent direction";
        return res;
      }
    }

    const double alpha_init = hist_s.empty() ? 1.0 / std::max(norm2(dir), 1e-12) : 1.0;
    WolfeSearch search(objective, cfg, res.x, dir, res.value, dphi0,
                       res.evaluations);
    LineSearchResult ls = search.run(alpha_init);
    if (!ls.ok) {
      res.status = OptimStatus::LineSearchFailure;
      res.reason = "line search exhausted";
      return res;
    }

    std::vector<double> s(n), yv(n);
    for (std::size_t j = 0; j < n; ++j) {
      s[j] = ls.x[j] - res.x[j];
      yv[j] = ls.g[j] - g[j];
    }
    res.x = std::move(ls.x);
    res.value = ls.f;
    g = std::move(ls.g);
    res.iterations = iter + 1;
    if (cfg.iteration_callback) cfg.iteration_callback(res.iterations, res.value);

    const double sy = dot(s, yv);
    if (sy > 1e-10 * norm2(s) * norm2(yv)) {
      const double yy = dot(yv, yv);
      gamma = yy > 0.0 ? sy / yy : 1.0;
      hist_s.push_back(std::move(s));
      hist_y.push_back(std::move(yv));
      hist_rho.push_back(1.0 / sy);
      if (static_cast<int>(hist_s.size()) > cfg.memory) {
        hist_s.pop_front();
        hist_y.pop_front();
        hist_rho.pop_front();
      }
    }

    if (norm_inf(g) <= cfg.grad_tol) {
      res.status = OptimStatus::Converged;
      res.reason = "grad-tol";
      return res;
    }
    recent_f.push_back(res.value);
    if (recent_f.size() > 3) recent_f.pop_front();
    if (recent_f.size() == 3) {
      const double change = std::fabs(recent_f.front() - res.value);
      if (change <= cfg.f_rel_tol * std::max(1.0, std::fabs(res.value))) {
        res.status = OptimStatus::Converged;
        res.reason = "f-stall";
        return res;
      }
    }
  }
  res.status = OptimStatus::MaxIter;
  res.reason = "max-iter";
  return res;
}

TrainedMlp train_mlp(const LabeledFeatures& data, int num_classes,
                     const TrainConfig& train_cfg, const OptimConfig& optim_cfg) {
  if (data.rows < 1) throw std::invalid_argument("no training samples");
  const int F = data.cols;
  const int C = num_classes;
  const int L = hidden_size(F, C, train_cfg.hidden);

  TrainedMlp out;
  std::set<int> distinct(data.y.begin(), data.y.end());
  out.single_class_fold = distinct.size() == 1;

  const LabeledFeatures* training = &data;
  LabeledFeatures standardized;
  if (train_cfg.standardize) {
    out.feature_mean.assign(F, 0.0);
    out.feature_std.assign(F, 1.0);
    for (int i = 0; i < data.rows; ++i) {
      const double* r = data.row(i);
      for (int j = 0; j < F; ++j) out.feature_mean[j] += r[j];
    }
    for (double& m : out.feature_mean) m /= data.rows;
    std::vector<double> var(F, 0.0);
    for (int i = 0; i < data.rows; ++i) {
      const double* r = data.row(i);
      for (int j = 0; j < F; ++j) {
        const double d = r[j] - out.feature_mean[j];
        var[j] += d * d;
      }
    }
    for (int j = 0; j < F; ++j) {
      const double sd = std::sqrt(var[j] / data.rows);
      out.feature_std[j] = sd > 1e-12 ? sd : 1.0;
    }
    standardized = data;
    for (int i = 0; i < data.rows; ++i) {
      double* r = standardized.x.data() + static_cast<std::size_t>(i) * F;
      for (int j = 0; j < F; ++j) r[j] = (r[j] - out.feature_mean[j]) / out.feature_std[j];
    }
    training = &standardized;
  }

  const MlpParams init = init_params(F, L, C, train_cfg.seed);
  MlpParams grad_buf = MlpParams::zeros(F, L, C);
  const double lambda = train_cfg.l2_lambda;
  const LabeledFeatures& batch = *training;
  Objective objective = [&](const std::vector<double>& x, std::vector<double>& g) {
    const MlpParams p = MlpParams::from_flat(x, F, L, C);
    const double loss = loss_and_grad(p, batch, lambda, grad_buf);
    g = grad_buf.to_flat();
    return loss;
  };

  OptimConfig ocfg = optim_cfg;
  ocfg.max_iter = train_cfg.max_iter;
  out.opt = lbfgs_minimize(objective, init.to_flat(), ocfg);
  out.params = MlpParams::from_flat(out.opt.x, F, L, C);
  return out;
}

std::vector<double> apply_standardization(const TrainedMlp& m,
                                          const std::vector<double>& f) {
  if (m.feature_mean.empty()) return f;
  std::vector<double> out(f.size());
  for (std::size_t j = 0; j < f.size(); ++j) {
    out[j] = (f[j] - m.feature_mean[j]) / m.feature_std[j];
  }
  return out;
}

std::vector<double> trained_logits(const TrainedMlp& m, const std::vector<double>& f) {
  const std::vector<double> z = apply_standardization(m, f);
  return forward_logits(m.params, z.data(), static_cast<int>(z.size()));
}

int trained_predict(const TrainedMlp& m, const std::vector<double>& f) {
  return argmax_lowest_tie(trained_logits(m, f));
}

}  // namespace mbc
