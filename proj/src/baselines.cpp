#include "triad/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "triad/error.hpp"
#include "triad/simd.hpp"
#include "triad/solver.hpp"

namespace triad {

namespace {

void check_sizes(const WeightVector& w, std::size_t n) {
  if (w.size() != n) throw Error(Errc::DimensionMismatch, "weights and relatives differ in length");
}

double centered_norm_sq(std::span<const double> x, double mean) {
  double s = 0.0;
  for (double v : x) s += (v - mean) * (v - mean);
  return s;
}

double mean_of(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

}  // namespace

WeightVector crp_weights(std::size_t n) { return WeightVector::uniform(n); }

WeightVector eg_update(const WeightVector& w, std::span<const double> relatives, double eta) {
  check_sizes(w, relatives.size());
  const double wx = simd::dot(w.values(), relatives);
  std::vector<double> out(w.size());
  double total = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) total += (out[i] = w[i] * std::exp(eta * relatives[i] / wx));
  for (double& v : out) v /= total;
  return simplex_repair(out);
}

WeightVector olmar_step(const WeightVector& w, std::span<const double> predicted, double epsilon) {
  check_sizes(w, predicted.size());
  const double xbar = mean_of(predicted);
  const double denom = centered_norm_sq(predicted, xbar);
  const double lambda = denom > 0.0 ? std::max(0.0, (epsilon - simd::dot(w.values(), predicted)) / denom) : 0.0;
  if (lambda == 0.0) return w;
  std::vector<double> out(w.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = w[i] + lambda * (predicted[i] - xbar);
  return simplex_repair(out);
}

WeightVector olmar_update(const WeightVector& w, const Matrix& prices, std::size_t window, double epsilon) {
  if (window < 2 || prices.rows() < window) throw Error(Errc::InsufficientHistory, "olmar needs w >= 2 price rows");
  const std::size_t n = prices.cols();
  const std::size_t last = prices.rows() - 1;
  std::vector<double> pred(n, 0.0);
  for (std::size_t k = 0; k < window; ++k)
    for (std::size_t i = 0; i < n; ++i) pred[i] += prices(last - k, i);
  for (std::size_t i = 0; i < n; ++i) pred[i] /= static_cast<double>(window) * prices(last, i);
  return olmar_step(w, pred, epsilon);
}

WeightVector pamr_update(const WeightVector& w, std::span<const double> relatives, double epsilon) {
  check_sizes(w, relatives.size());
  const double loss = std::max(0.0, simd::dot(w.values(), relatives) - epsilon);
  const double xbar = mean_of(relatives);
  const double denom = centered_norm_sq(relatives, xbar);
  if (loss == 0.0 || denom == 0.0) return w;
  const double tau = loss / denom;
  std::vector<double> out(w.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = w[i] - tau * (relatives[i] - xbar);
  return simplex_repair(out);
}

L1MedianResult l1_median(const Matrix& points, std::size_t max_iter, double tol) {
  const std::size_t m = points.rows(), n = points.cols();
  if (m == 0) throw Error(Errc::InsufficientData, "l1 median of no points");
  L1MedianResult res;
  std::vector<double> y(n, 0.0);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t i = 0; i < n; ++i) y[i] += points(r, i) / static_cast<double>(m);
  res.trace.push_back(y);

  std::vector<double> next(n), pull(n), diff(n);
  for (std::size_t it = 0; it < max_iter; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    std::fill(pull.begin(), pull.end(), 0.0);
    double weight_sum = 0.0;
    double coincident = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
      const auto p = points.row(r);
      for (std::size_t i = 0; i < n; ++i) diff[i] = p[i] - y[i];
      const double d = norm2(diff);
      if (d <= 1e-15) {
        coincident += 1.0;
        continue;
      }
      weight_sum += 1.0 / d;
      for (std::size_t i = 0; i < n; ++i) {
        next[i] += p[i] / d;
        pull[i] += diff[i] / d;
      }
    }
    if (weight_sum == 0.0) break;  // every point coincides with y
    for (double& v : next) v /= weight_sum;
    if (coincident > 0.0) {
      const double r = norm2(pull);
      if (r <= coincident) break;  // y is the median
      const double blend = coincident / r;
      for (std::size_t i = 0; i < n; ++i) next[i] = (1.0 - blend) * next[i] + blend * y[i];
    }
    for (std::size_t i = 0; i < n; ++i) diff[i] = next[i] - y[i];
    const double moved = norm2(diff);
    y = next;
    res.trace.push_back(y);
    res.iterations = it + 1;
    if (moved <= tol * std::max(1.0, norm2(y))) break;
  }
  res.median = std::move(y);
  return res;
}

WeightVector rmr_update(const WeightVector& w, const Matrix& prices, std::size_t window, double epsilon) {
  if (window < 2 || prices.rows() < window) throw Error(Errc::InsufficientHistory, "rmr needs w price rows");
  const std::size_t n = prices.cols();
  const std::size_t first = prices.rows() - window;
  Matrix recent(window, n);
  for (std::size_t r = 0; r < window; ++r)
    for (std::size_t i = 0; i < n; ++i) recent(r, i) = prices(first + r, i);
  auto med = l1_median(recent).median;
  for (std::size_t i = 0; i < n; ++i) med[i] /= prices(prices.rows() - 1, i);
  return olmar_step(w, med, epsilon);
}

WeightVector log_optimal_weights(const std::vector<std::vector<double>>& samples, std::size_t n,
                                 std::size_t iterations, double step) {
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  if (samples.empty()) return WeightVector(std::move(w));
  std::vector<double> grad(n);
  const double inv = 1.0 / static_cast<double>(samples.size());
  for (std::size_t it = 0; it < iterations; ++it) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (const auto& x : samples) simd::axpy(inv / simd::dot(w, x), x, grad);
    for (std::size_t i = 0; i < n; ++i) w[i] += step * grad[i];
    w = simplex_repair(w).vec();
  }
  return WeightVector(std::move(w));
}

WeightVector corn_weights(const Matrix& relatives, std::size_t window, double rho) {
  const std::size_t t = relatives.rows(), n = relatives.cols();
  if (window < 1 || t < 2 * window) throw Error(Errc::InsufficientHistory, "corn needs 2w days of relatives");
  const std::size_t len = window * n;
  const auto flat = relatives.data();
  const auto current = flat.subspan((t - window) * n, len);

  auto pearson = [len](std::span<const double> a, std::span<const double> b) {
    const double ma = mean_of(a), mb = mean_of(b);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      sab += (a[i] - ma) * (b[i] - mb);
      saa += (a[i] - ma) * (a[i] - ma);
      sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa <= 0.0 || sbb <= 0.0) return -2.0;  // undefined: never matches
    return sab / std::sqrt(saa * sbb);
  };

  std::vector<std::vector<double>> matched;
  // Candidate windows end at day e - 1 and are followed by relatives row e.
  for (std::size_t e = window; e + window <= t; ++e) {
    const auto past = flat.subspan((e - window) * n, len);
    if (pearson(past, current) >= rho) {
      const auto next = relatives.row(e);
      matched.emplace_back(next.begin(), next.end());
    }
  }
  if (matched.empty()) return WeightVector::uniform(n);
  return log_optimal_weights(matched, n);
}

void StrategyParams::validate() const {
  if (!(eg_eta >= 0.0)) throw Error(Errc::InvalidConfig, "eg eta must be >= 0");
  if (olmar_window < 2 || rmr_window < 2 || corn_window < 1) throw Error(Errc::InvalidConfig, "bad baseline window");
  if (!(olmar_epsilon > 0.0 && pamr_epsilon >= 0.0 && rmr_epsilon > 0.0)) {
    throw Error(Errc::InvalidConfig, "bad baseline epsilon");
  }
  if (!(corn_rho >= -1.0 && corn_rho <= 1.0)) throw Error(Errc::InvalidConfig, "corn rho must lie in [-1, 1]");
}

namespace {

Matrix close_rows(const OhlcvSeries& s, std::size_t first, std::size_t last) {
  Matrix m(last - first + 1, s.assets());
  for (std::size_t r = first; r <= last; ++r)
    for (std::size_t i = 0; i < s.assets(); ++i) m(r - first, i) = s.close(r, i);
  return m;
}

class Crp final : public Strategy {
 public:
  std::string name() const override { return "crp"; }
  void reset(std::size_t assets) override { n_ = assets; }
  WeightVector decide(const OhlcvSeries&, std::size_t) override { return crp_weights(n_); }

 private:
  std::size_t n_ = 1;
};

/// Shared plumbing: uniform on the first call, then update from the latest
/// information; falls back to the previous weights while history is short.
class Stateful : public Strategy {
 public:
  void reset(std::size_t assets) override {
    w_ = WeightVector::uniform(assets);
    started_ = false;
  }
  WeightVector decide(const OhlcvSeries& s, std::size_t t) override {
    if (!started_) {
      started_ = true;
      return w_;
    }
    try {
      w_ = update(s, t);
    } catch (const Error& e) {
      if (e.code() != Errc::InsufficientHistory) throw;
    }
    return w_;
  }

 protected:
  virtual WeightVector update(const OhlcvSeries& s, std::size_t t) = 0;
  WeightVector w_;
  bool started_ = false;
};

class Eg final : public Stateful {
 public:
  explicit Eg(double eta) : eta_(eta) {}
  std::string name() const override { return "eg"; }

 protected:
  WeightVector update(const OhlcvSeries& s, std::size_t t) override {
    return eg_update(w_, price_relatives(s, t), eta_);
  }

 private:
  double eta_;
};

class Olmar final : public Stateful {
 public:
  Olmar(std::size_t w, double eps) : window_(w), eps_(eps) {}
  std::string name() const override { return "olmar"; }

 protected:
  WeightVector update(const OhlcvSeries& s, std::size_t t) override {
    if (t + 1 < window_) throw Error(Errc::InsufficientHistory, "short history");
    return olmar_update(w_, close_rows(s, t + 1 - window_, t), window_, eps_);
  }

 private:
  std::size_t window_;
  double eps_;
};

class Pamr final : public Stateful {
 public:
  explicit Pamr(double eps) : eps_(eps) {}
  std::string name() const override { return "pamr"; }

 protected:
  WeightVector update(const OhlcvSeries& s, std::size_t t) override {
    return pamr_update(w_, price_relatives(s, t), eps_);
  }

 private:
  double eps_;
};

class Rmr final : public Stateful {
 public:
  Rmr(std::size_t w, double eps) : window_(w), eps_(eps) {}
  std::string name() const override { return "rmr"; }

 protected:
  WeightVector update(const OhlcvSeries& s, std::size_t t) override {
    if (t + 1 < window_) throw Error(Errc::InsufficientHistory, "short history");
    return rmr_update(w_, close_rows(s, t + 1 - window_, t), window_, eps_);
  }

 private:
  std::size_t window_;
  double eps_;
};

class Corn final : public Stateful {
 public:
  Corn(std::size_t w, double rho) : window_(w), rho_(rho) {}
  std::string name() const override { return "corn"; }

 protected:
  WeightVector update(const OhlcvSeries& s, std::size_t t) override {
    if (t < 2 * window_) throw Error(Errc::InsufficientHistory, "short history");
    Matrix rel(t, s.assets());
    for (std::size_t d = 1; d <= t; ++d) {
      const auto x = price_relatives(s, d);
      std::copy(x.begin(), x.end(), rel.row(d - 1).begin());
    }
    return corn_weights(rel, window_, rho_);
  }

 private:
  std::size_t window_;
  double rho_;
};

}  // namespace

std::unique_ptr<Strategy> make_strategy(const std::string& name, const StrategyParams& p) {
  p.validate();
  if (name == "crp") return std::make_unique<Crp>();
  if (name == "eg") return std::make_unique<Eg>(p.eg_eta);
  if (name == "olmar") return std::make_unique<Olmar>(p.olmar_window, p.olmar_epsilon);
  if (name == "pamr") return std::make_unique<Pamr>(p.pamr_epsilon);
  if (name == "rmr") return std::make_unique<Rmr>(p.rmr_window, p.rmr_epsilon);
  if (name == "corn") return std::make_unique<Corn>(p.corn_window, p.corn_rho);
  throw Error(Errc::InvalidConfig, "unknown strategy '" + name + "'");
}

const std::vector<std::string>& baseline_names() {
  static const std::vector<std::string> names{"crp", "eg", "olmar", "pamr", "rmr", "corn"};
  return names;
}

}  // namespace triad
