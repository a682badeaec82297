#include "proxy3d/posenc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <numbers>

#include "proxy3d/error.hpp"
#include "proxy3d/random.hpp"

namespace proxy3d {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.allFinite();
}

Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, double stddev, std::uint64_t key) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(r, c) = stddev * rng::gaussian(rng::mix({key, static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(c)}));
    }
  }
  return m;
}

}  // namespace

void PosEncParams::validate() const {
  if (channels == 0 || channels % 2 != 0) {
    throw Error(Errc::OddChannels, "positional encoding needs an even channel count, got " + std::to_string(channels));
  }
  if (fourier_dirs.cols() != 2 || fourier_dirs.rows() == 0) {
    throw Error(Errc::ShapeMismatch, "Fourier directions must be (D_f/2) x 2");
  }
  const auto df = static_cast<Eigen::Index>(fourier_dim());
  const auto C = static_cast<Eigen::Index>(channels);
  if (w1.cols() != df || b1.size() != w1.rows() || w2.cols() != w1.rows() || w2.rows() != C || b2.size() != C) {
    throw Error(Errc::ShapeMismatch, "Fourier MLP shapes are inconsistent");
  }
  if (!(vert_bin > 0.0) || vert_max_index < 0 || !(rope_base > 0.0)) {
    throw Error(Errc::InvalidArgument, "vertical bin, index range and RoPE base must be positive");
  }
  if (!all_finite(fourier_dirs) || !all_finite(w1) || !all_finite(b1) || !all_finite(w2) || !all_finite(b2)) {
    throw Error(Errc::InvariantViolation, "positional encoding parameters contain non-finite values");
  }
}

PosEncParams init_posenc(std::size_t channels, std::uint64_t seed, std::size_t fourier_dim, std::size_t hidden_dim) {
  if (fourier_dim == 0 || fourier_dim % 2 != 0) {
    throw Error(Errc::InvalidArgument, "Fourier dimension must be even and positive");
  }
  if (hidden_dim == 0) throw Error(Errc::InvalidArgument, "hidden dimension must be positive");
  PosEncParams p;
  p.channels = channels;
  p.init_seed = seed;
  const auto df = static_cast<Eigen::Index>(fourier_dim);
  const auto dh = static_cast<Eigen::Index>(hidden_dim);
  const auto C = static_cast<Eigen::Index>(channels);
  p.fourier_dirs = gaussian_matrix(df / 2, 2, 1.0, rng::mix({seed, 0xF0}));
  p.w1 = gaussian_matrix(dh, df, 1.0 / std::sqrt(static_cast<double>(df)), rng::mix({seed, 0xF1}));
  p.b1 = Eigen::VectorXd::Zero(dh);
  p.w2 = gaussian_matrix(C, dh, 1.0 / std::sqrt(static_cast<double>(dh)), rng::mix({seed, 0xF2}));
  p.b2 = Eigen::VectorXd::Zero(C);
  p.validate();
  return p;
}

int vert_index(const Vec3& c, double z_min, const PosEncParams& params) {
  const double steps = std::round((c[kVerticalAxis] - z_min) / params.vert_bin);
  if (!(steps > 0.0)) return 0;
  if (steps >= static_cast<double>(params.vert_max_index)) return params.vert_max_index;
  return static_cast<int>(steps);
}

Eigen::VectorXd rope_rotate(const Eigen::Ref<const Eigen::VectorXd>& z, double index, double base) {
  const Eigen::Index C = z.size();
  if (C % 2 != 0) throw Error(Errc::OddChannels, "RoPE needs an even channel count, got " + std::to_string(C));
  Eigen::VectorXd out(C);
  for (Eigen::Index d = 0; d < C / 2; ++d) {
    const double theta = index * std::pow(base, -2.0 * static_cast<double>(d) / static_cast<double>(C));
    const double c = std::cos(theta), s = std::sin(theta);
    const double x = z(2 * d), y = z(2 * d + 1);
    out(2 * d) = c * x - s * y;
    out(2 * d + 1) = s * x + c * y;
  }
  return out;
}

FourierBatch fourier_forward_batch(const PosEncParams& params, const Eigen::Ref<const Eigen::Matrix2Xd>& planes) {
  const Eigen::Index half = params.fourier_dirs.rows();
  const double scale = 1.0 / std::sqrt(static_cast<double>(2 * half));
  FourierBatch b;
  b.phase = params.fourier_dirs * planes;
  b.gamma.resize(2 * half, planes.cols());
  b.gamma.topRows(half) = scale * b.phase.array().cos();
  b.gamma.bottomRows(half) = scale * b.phase.array().sin();
  b.hidden = (params.w1 * b.gamma).colwise() + params.b1;
  b.active = b.hidden.unaryExpr([](double h) { return h * sigmoid(h); });
  b.output = (params.w2 * b.active).colwise() + params.b2;
  return b;
}

Eigen::VectorXd fourier_forward(const PosEncParams& params, const Eigen::Vector2d& plane) {
  return fourier_forward_batch(params, plane).output.col(0);
}

FourierGrad FourierGrad::zeros_like(const PosEncParams& params) {
  FourierGrad g;
  g.fourier_dirs = Eigen::MatrixXd::Zero(params.fourier_dirs.rows(), params.fourier_dirs.cols());
  g.w1 = Eigen::MatrixXd::Zero(params.w1.rows(), params.w1.cols());
  g.b1 = Eigen::VectorXd::Zero(params.b1.size());
  g.w2 = Eigen::MatrixXd::Zero(params.w2.rows(), params.w2.cols());
  g.b2 = Eigen::VectorXd::Zero(params.b2.size());
  return g;
}

FourierGrad& FourierGrad::operator+=(const FourierGrad& other) {
  fourier_dirs += other.fourier_dirs;
  w1 += other.w1;
  b1 += other.b1;
  w2 += other.w2;
  b2 += other.b2;
  plane += other.plane;
  return *this;
}

FourierGrad fourier_grad(const PosEncParams& params, const Eigen::Vector2d& plane,
                         const Eigen::Ref<const Eigen::VectorXd>& upstream) {
  if (upstream.size() != static_cast<Eigen::Index>(params.channels)) {
    throw Error(Errc::ShapeMismatch, "upstream gradient length differs from channel count");
  }
  const Eigen::Index half = params.fourier_dirs.rows();
  const double scale = 1.0 / std::sqrt(static_cast<double>(2 * half));

  const Eigen::VectorXd phase = params.fourier_dirs * plane;
  Eigen::VectorXd gamma(2 * half);
  for (Eigen::Index k = 0; k < half; ++k) {
    gamma(k) = scale * std::cos(phase(k));
    gamma(half + k) = scale * std::sin(phase(k));
  }
  const Eigen::VectorXd hidden = params.w1 * gamma + params.b1;
  Eigen::VectorXd active(hidden.size()), slope(hidden.size());
  for (Eigen::Index i = 0; i < hidden.size(); ++i) {
    const double s = sigmoid(hidden(i));
    active(i) = hidden(i) * s;
    slope(i) = s * (1.0 + hidden(i) * (1.0 - s));
  }

  FourierGrad g;
  g.b2 = upstream;
  g.w2 = upstream * active.transpose();
  const Eigen::VectorXd d_hidden = (params.w2.transpose() * upstream).cwiseProduct(slope);
  g.b1 = d_hidden;
  g.w1 = d_hidden * gamma.transpose();
  const Eigen::VectorXd d_gamma = params.w1.transpose() * d_hidden;
  Eigen::VectorXd d_phase(half);
  for (Eigen::Index k = 0; k < half; ++k) {
    d_phase(k) = scale * (-d_gamma(k) * std::sin(phase(k)) + d_gamma(half + k) * std::cos(phase(k)));
  }
  g.fourier_dirs = d_phase * plane.transpose();
  g.plane = params.fourier_dirs.transpose() * d_phase;
  return g;
}

FourierGrad fourier_grad_batch(const PosEncParams& params, const FourierBatch& batch,
                               const Eigen::Ref<const Eigen::Matrix2Xd>& planes,
                               const Eigen::Ref<const Eigen::MatrixXd>& upstream) {
  const Eigen::Index half = params.fourier_dirs.rows();
  const double scale = 1.0 / std::sqrt(static_cast<double>(2 * half));
  FourierGrad g;
  g.b2 = upstream.rowwise().sum();
  g.w2 = upstream * batch.active.transpose();
  const Eigen::MatrixXd slope = batch.hidden.unaryExpr([](double h) {
    const double s = sigmoid(h);
    return s * (1.0 + h * (1.0 - s));
  });
  const Eigen::MatrixXd d_hidden = (params.w2.transpose() * upstream).cwiseProduct(slope);
  g.b1 = d_hidden.rowwise().sum();
  g.w1 = d_hidden * batch.gamma.transpose();
  const Eigen::MatrixXd d_gamma = params.w1.transpose() * d_hidden;
  const Eigen::MatrixXd d_phase =
      scale * (d_gamma.bottomRows(half).array() * batch.phase.array().cos() -
               d_gamma.topRows(half).array() * batch.phase.array().sin())
                  .matrix();
  g.fourier_dirs = d_phase * planes.transpose();
  return g;
}

EncodedProxy encode(const Proxy& proxy, const PosEncParams& params, double z_min) {
  if (proxy.feature.size() != params.channels) {
    throw Error(Errc::ShapeMismatch, "proxy has " + std::to_string(proxy.feature.size()) +
                                         " channels, encoder expects " + std::to_string(params.channels));
  }
  EncodedProxy e;
  e.vert_index = vert_index(proxy.coord, z_min, params);
  e.plane = Eigen::Vector2d(proxy.coord[0], proxy.coord[1]);
  const Eigen::Map<const Eigen::VectorXd> z(proxy.feature.data(), static_cast<Eigen::Index>(proxy.feature.size()));
  e.feature = rope_rotate(z, e.vert_index, params.rope_base) + fourier_forward(params, e.plane);
  return e;
}

double encode_sequence(ProxySequence& seq, const PosEncParams& params) {
  params.validate();
  if (seq.channels != params.channels) {
    throw Error(Errc::ShapeMismatch, "sequence channel count differs from encoder channels");
  }
  if (seq.k == 0) return 0.0;
  double z_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < seq.k; ++i) z_min = std::min(z_min, double{seq.coords[3 * i + kVerticalAxis]});

  const std::size_t C = seq.channels;
  Proxy p;
  p.feature.resize(C);
  for (std::size_t i = 0; i < seq.k; ++i) {
    for (std::size_t c = 0; c < C; ++c) p.feature[c] = seq.tokens[i * C + c];
    p.coord = {seq.coords[3 * i], seq.coords[3 * i + 1], seq.coords[3 * i + 2]};
    const EncodedProxy e = encode(p, params, z_min);
    for (std::size_t c = 0; c < C; ++c) seq.tokens[i * C + c] = static_cast<float>(e.feature(static_cast<Eigen::Index>(c)));
  }
  return z_min;
}

// ---------------------------------------------------------------------------
// Coordinate alignment trainer

namespace {

struct AdamSlot {
  Eigen::MatrixXd m, v;
};

class Adam {
 public:
  Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void begin_step() { ++t_; }
  void set_lr(double lr) { lr_ = lr; }

  template <typename Param, typename Grad>
  void update(std::size_t slot, Eigen::MatrixBase<Param>& param, const Eigen::MatrixBase<Grad>& grad) {
    if (slots_.size() <= slot) slots_.resize(slot + 1);
    AdamSlot& s = slots_[slot];
    if (s.m.size() == 0) {
      s.m = Eigen::MatrixXd::Zero(param.rows(), param.cols());
      s.v = Eigen::MatrixXd::Zero(param.rows(), param.cols());
    }
    s.m = beta1_ * s.m + (1.0 - beta1_) * grad;
    s.v = beta2_ * s.v + (1.0 - beta2_) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    param -= (lr_ * (s.m.array() / c1) / ((s.v.array() / c2).sqrt() + eps_)).matrix();
  }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::vector<AdamSlot> slots_;
};

struct Dataset {
  Eigen::Matrix3Xd coords;
  Eigen::Matrix2Xd planes;
  Eigen::MatrixXd rotated;  // C x N, rotary part of the encoding
};

Dataset make_dataset(std::size_t n, const AlignConfig& cfg, const Eigen::VectorXd& base,
                     const PosEncParams& params, rng::Stream& stream) {
  Dataset d;
  d.coords.resize(3, static_cast<Eigen::Index>(n));
  d.planes.resize(2, static_cast<Eigen::Index>(n));
  d.rotated.resize(static_cast<Eigen::Index>(cfg.channels), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
    const Vec3 c{stream.uniform(-cfg.box[0] / 2, cfg.box[0] / 2), stream.uniform(-cfg.box[1] / 2, cfg.box[1] / 2),
                 stream.uniform(0.0, cfg.box[2])};
    d.coords.col(i) << c[0], c[1], c[2];
    d.planes.col(i) << c[0], c[1];
    d.rotated.col(i) = rope_rotate(base, vert_index(c, 0.0, params), params.rope_base);
  }
  return d;
}

struct Readout {
  Eigen::MatrixXd weight;  // 3 x C
  Eigen::VectorXd bias;    // 3
};

Eigen::MatrixXd predict(const PosEncParams& params, const Readout& head, const Eigen::MatrixXd& rotated,
                        const Eigen::Matrix2Xd& planes) {
  const FourierBatch fb = fourier_forward_batch(params, planes);
  return (head.weight * (rotated + fb.output)).colwise() + head.bias;
}

struct Evaluation {
  double mse = 0.0;
  std::array<double, 3> r2{};
};

Evaluation evaluate(const PosEncParams& params, const Readout& head, const Dataset& d) {
  const Eigen::MatrixXd pred = predict(params, head, d.rotated, d.planes);
  const Eigen::MatrixXd err = pred - d.coords;
  Evaluation e;
  e.mse = err.squaredNorm() / static_cast<double>(err.size());
  for (int a = 0; a < 3; ++a) {
    const double mean = d.coords.row(a).mean();
    const double total = (d.coords.row(a).array() - mean).square().sum();
    e.r2[a] = total > 0.0 ? 1.0 - err.row(a).squaredNorm() / total : 0.0;
  }
  return e;
}

}  // namespace

nlohmann::json AlignMetrics::to_json() const {
  nlohmann::json traj = nlohmann::json::array();
  for (const auto& s : trajectory) {
    traj.push_back({{"step", s.step}, {"train_mse", s.train_mse}, {"eval_mse", s.eval_mse}, {"r2", s.r2}});
  }
  return {{"steps", steps},
          {"log_every", log_every},
          {"final_train_mse", final_train_mse},
          {"final_eval_mse", final_eval_mse},
          {"r2", r2},
          {"loss_curve", loss_curve},
          {"trajectory", traj}};
}

AlignMetrics train_coordinate_alignment(const AlignConfig& cfg) {
  if (cfg.batch == 0 || cfg.train_samples == 0 || cfg.eval_samples == 0 || cfg.log_every == 0) {
    throw Error(Errc::InvalidArgument, "batch, sample counts and log cadence must be positive");
  }
  if (!(cfg.lr >= 0.0) || !std::isfinite(cfg.lr)) throw Error(Errc::InvalidArgument, "learning rate must be >= 0");

  PosEncParams params = init_posenc(cfg.channels, rng::mix({cfg.seed, 0xA11}), cfg.fourier_dim, cfg.hidden_dim);
  rng::Stream stream(rng::mix({cfg.seed, 0xDA7A}));
  Eigen::VectorXd base(static_cast<Eigen::Index>(cfg.channels));
  for (auto& v : base) v = stream.normal();
  const Dataset train = make_dataset(cfg.train_samples, cfg, base, params, stream);
  const Dataset held = make_dataset(cfg.eval_samples, cfg, base, params, stream);

  Readout head;
  head.weight = gaussian_matrix(3, static_cast<Eigen::Index>(cfg.channels),
                                1.0 / std::sqrt(static_cast<double>(cfg.channels)), rng::mix({cfg.seed, 0xEAD}));
  head.bias = Eigen::VectorXd::Zero(3);

  AlignMetrics metrics;
  metrics.steps = cfg.steps;
  metrics.log_every = cfg.log_every;
  auto log_point = [&](std::size_t step) {
    const Evaluation tr = evaluate(params, head, train);
    const Evaluation ev = evaluate(params, head, held);
    if (!std::isfinite(tr.mse) || !std::isfinite(ev.mse)) {
      throw Error(Errc::DivergenceDetected, "loss became non-finite at step " + std::to_string(step));
    }
    metrics.loss_curve.push_back(tr.mse);
    metrics.trajectory.push_back({step, tr.mse, ev.mse, ev.r2});
  };
  log_point(0);

  Adam adam(cfg.lr);
  std::vector<Eigen::Index> order(cfg.train_samples);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::size_t cursor = order.size();
  const std::size_t batch = std::min(cfg.batch, cfg.train_samples);
  Eigen::Matrix2Xd planes(2, static_cast<Eigen::Index>(batch));
  Eigen::MatrixXd rotated(static_cast<Eigen::Index>(cfg.channels), static_cast<Eigen::Index>(batch));
  Eigen::Matrix3Xd target(3, static_cast<Eigen::Index>(batch));

  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    for (Eigen::Index b = 0; b < static_cast<Eigen::Index>(batch); ++b) {
      if (cursor == order.size()) {
        for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[stream.below(i + 1)]);
        cursor = 0;
      }
      const Eigen::Index s = order[cursor++];
      planes.col(b) = train.planes.col(s);
      rotated.col(b) = train.rotated.col(s);
      target.col(b) = train.coords.col(s);
    }
    const FourierBatch fb = fourier_forward_batch(params, planes);
    const Eigen::MatrixXd encoded = rotated + fb.output;
    const Eigen::MatrixXd pred = (head.weight * encoded).colwise() + head.bias;
    const Eigen::MatrixXd d_pred = (2.0 / static_cast<double>(pred.size())) * (pred - target);
    if (!d_pred.allFinite()) {
      throw Error(Errc::DivergenceDetected, "loss became non-finite at step " + std::to_string(step));
    }
    const Eigen::MatrixXd d_weight = d_pred * encoded.transpose();
    const Eigen::VectorXd d_bias = d_pred.rowwise().sum();
    const Eigen::MatrixXd d_encoded = head.weight.transpose() * d_pred;
    const FourierGrad g = fourier_grad_batch(params, fb, planes, d_encoded);

    adam.begin_step();
    if (cfg.cosine_decay) {
      const double progress = static_cast<double>(step - 1) / static_cast<double>(cfg.steps);
      adam.set_lr(0.5 * cfg.lr * (1.0 + std::cos(std::numbers::pi * progress)));
    }
    adam.update(0, params.fourier_dirs, g.fourier_dirs);
    adam.update(1, params.w1, g.w1);
    adam.update(2, params.b1, g.b1);
    adam.update(3, params.w2, g.w2);
    adam.update(4, params.b2, g.b2);
    adam.update(5, head.weight, d_weight);
    adam.update(6, head.bias, d_bias);

    if (step % cfg.log_every == 0 || step == cfg.steps) log_point(step);
  }

  const AlignSnapshot& last = metrics.trajectory.back();
  metrics.final_train_mse = last.train_mse;
  metrics.final_eval_mse = last.eval_mse;
  metrics.r2 = last.r2;
  return metrics;
}

}  // namespace proxy3d
