#pragma once

// 3D positional encoding of proxy tokens: a rotary rotation driven by the
// quantised vertical coordinate plus a learnable Fourier embedding of the
// horizontal plane, and a toy trainer that checks the encoding carries
// recoverable geometry.

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "proxy3d/geometry.hpp"
#include "proxy3d/proxyclust.hpp"
#include "proxy3d/scene_io.hpp"

namespace proxy3d {

struct PosEncParams {
  double rope_base = 10000.0;
  std::size_t channels = 0;
  double vert_bin = 0.05;       // scene units per vertical index
  int vert_max_index = 1023;
  Eigen::MatrixXd fourier_dirs;  // (D_f/2) x 2
  Eigen::MatrixXd w1;            // D_h x D_f
  Eigen::VectorXd b1;            // D_h
  Eigen::MatrixXd w2;            // C x D_h
  Eigen::VectorXd b2;            // C
  std::uint64_t init_seed = 0;

  std::size_t fourier_dim() const { return static_cast<std::size_t>(2 * fourier_dirs.rows()); }
  std::size_t hidden_dim() const { return static_cast<std::size_t>(w1.rows()); }

  /// Throws OddChannels, ShapeMismatch or InvariantViolation (non-finite).
  void validate() const;
};

/// Gaussian(1) Fourier directions, fan-in scaled Gaussian MLP weights and
/// zero biases, all drawn from `seed`.
PosEncParams init_posenc(std::size_t channels, std::uint64_t seed, std::size_t fourier_dim = 64,
                         std::size_t hidden_dim = 128);

/// clamp(round((c_z - z_min) / vert_bin), 0, vert_max_index).
int vert_index(const Vec3& c, double z_min, const PosEncParams& params);

/// Rotates channel pair (2d, 2d+1) by index * base^(-2d/C).
Eigen::VectorXd rope_rotate(const Eigen::Ref<const Eigen::VectorXd>& z, double index, double base = 10000.0);

/// D_f^(-1/2) [cos(W p); sin(W p)] -> affine -> SiLU -> affine.
Eigen::VectorXd fourier_forward(const PosEncParams& params, const Eigen::Vector2d& plane);

/// Gradients of <upstream, fourier_forward(params, plane)>.
struct FourierGrad {
  Eigen::MatrixXd fourier_dirs;
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;
  Eigen::VectorXd b2;
  Eigen::Vector2d plane = Eigen::Vector2d::Zero();

  static FourierGrad zeros_like(const PosEncParams& params);
  FourierGrad& operator+=(const FourierGrad& other);
};

FourierGrad fourier_grad(const PosEncParams& params, const Eigen::Vector2d& plane,
                         const Eigen::Ref<const Eigen::VectorXd>& upstream);

/// Column-batched forward pass with the intermediates the backward pass needs.
struct FourierBatch {
  Eigen::MatrixXd phase;   // (D_f/2) x B
  Eigen::MatrixXd gamma;   // D_f x B
  Eigen::MatrixXd hidden;  // D_h x B, pre-activation
  Eigen::MatrixXd active;  // D_h x B
  Eigen::MatrixXd output;  // C x B
};

FourierBatch fourier_forward_batch(const PosEncParams& params, const Eigen::Ref<const Eigen::Matrix2Xd>& planes);

/// Sum over the batch of per-sample fourier_grad; plane gradients are not
/// accumulated.
FourierGrad fourier_grad_batch(const PosEncParams& params, const FourierBatch& batch,
                               const Eigen::Ref<const Eigen::Matrix2Xd>& planes,
                               const Eigen::Ref<const Eigen::MatrixXd>& upstream);

struct EncodedProxy {
  Eigen::VectorXd feature;
  int vert_index = 0;
  Eigen::Vector2d plane = Eigen::Vector2d::Zero();
};

/// z' = R(vert_index(c)) z + F(c_x, c_y).
EncodedProxy encode(const Proxy& proxy, const PosEncParams& params, double z_min);

/// Encodes every token of `seq` in place against the sequence's own minimum
/// vertical coordinate, which is returned.
double encode_sequence(ProxySequence& seq, const PosEncParams& params);

struct AlignConfig {
  std::size_t steps = 5000;
  double lr = 1e-3;
  bool cosine_decay = true;  // lr * (1 + cos(pi * t / steps)) / 2
  std::size_t batch = 256;
  std::size_t train_samples = 2048;
  std::size_t eval_samples = 512;
  std::uint64_t seed = 0;
  std::size_t channels = 64;
  std::size_t fourier_dim = 64;
  std::size_t hidden_dim = 128;
  std::size_t log_every = 10;          // full training-set loss cadence
  Vec3 box{5.0, 5.0, 3.0};            // x, y centred on 0; z from 0
};

struct AlignSnapshot {
  std::size_t step = 0;
  double train_mse = 0.0;
  double eval_mse = 0.0;
  std::array<double, 3> r2{};
};

struct AlignMetrics {
  std::size_t steps = 0;
  std::size_t log_every = 0;
  double final_train_mse = 0.0;
  double final_eval_mse = 0.0;
  std::array<double, 3> r2{};
  std::vector<double> loss_curve;  // training-set MSE every log_every steps, from step 0
  std::vector<AlignSnapshot> trajectory;

  nlohmann::json to_json() const;
};

/// Fits the Fourier MLP jointly with a linear coordinate read-out using Adam
/// (0.9, 0.999, 1e-8) on synthetic coordinates. `lr` is the peak rate. Throws DivergenceDetected if
/// the loss becomes non-finite.
AlignMetrics train_coordinate_alignment(const AlignConfig& config);

}  // namespace proxy3d
