// Copyright 2026 The whirl-sim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef WHIRL_NN_H_
#define WHIRL_NN_H_

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "whirl/random.h"

// Small dense networks with hand-written reverse-mode gradients, Adam, and
// the conditional VAE used for the task and exploration policies.
//
// Batched tensors are column-major: one example per column.
namespace whirl::nn {

enum class Activation { kRelu = 0, kTanh = 1 };

struct MlpParams {
  std::vector<int> layer_sizes;           // input, hidden..., output
  std::vector<Eigen::MatrixXd> weights;   // weights[l] is sizes[l+1] x sizes[l]
  std::vector<Eigen::VectorXd> biases;
  Activation activation = Activation::kRelu;  // hidden layers; output is linear

  int input_dim() const { return layer_sizes.front(); }
  int output_dim() const { return layer_sizes.back(); }
  int num_layers() const { return static_cast<int>(weights.size()); }

  MlpParams ZerosLike() const;
  std::vector<std::span<double>> Blocks();
  std::vector<std::span<const double>> Blocks() const;
  bool operator==(const MlpParams&) const;
};

// Throws ShapeError when consecutive layer shapes disagree.
void ValidateMlp(const MlpParams& params);

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases.
MlpParams InitMlp(const std::vector<int>& layer_sizes, Activation activation, Rng& rng);

struct MlpTape {
  std::vector<Eigen::MatrixXd> inputs;  // input to each layer
  std::vector<Eigen::MatrixXd> pre;     // pre-activation of each layer
};

Eigen::MatrixXd MlpForward(const MlpParams& params, const Eigen::MatrixXd& input,
                           MlpTape* tape = nullptr);

struct MlpGradients {
  MlpParams params;       // summed over the batch
  Eigen::MatrixXd input;  // per example
};

MlpGradients MlpBackward(const MlpParams& params, const MlpTape& tape,
                         const Eigen::MatrixXd& output_grad);
MlpGradients MlpBackward(const MlpParams& params, const Eigen::MatrixXd& input,
                         const Eigen::MatrixXd& output_grad);

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  bool operator==(const AdamOptions&) const = default;
};

struct AdamState {
  std::vector<Eigen::VectorXd> first_moment;
  std::vector<Eigen::VectorXd> second_moment;
  long step = 0;
  AdamOptions options;
};

AdamState MakeAdamState(const std::vector<std::span<double>>& blocks,
                        const AdamOptions& options = {});
void AdamStep(AdamState& state, const std::vector<std::span<double>>& params,
              const std::vector<std::span<const double>>& grads);

struct CvaeArchitecture {
  int x_dim = 15;
  int c_dim = 0;
  std::vector<int> hidden{64, 64, 64};
  int latent_dim = 4;
  double beta = 5e-4;
  Activation activation = Activation::kRelu;

  bool operator==(const CvaeArchitecture&) const = default;
};

struct CvaeParams {
  MlpParams encoder;  // (x ++ c) -> (mu, log sigma^2)
  MlpParams decoder;  // (z ++ c) -> x_hat
  int latent_dim = 4;
  double beta = 5e-4;

  int x_dim() const { return decoder.output_dim(); }
  int c_dim() const { return decoder.input_dim() - latent_dim; }
  CvaeParams ZerosLike() const;
  std::vector<std::span<double>> Blocks();
  std::vector<std::span<const double>> Blocks() const;
  bool operator==(const CvaeParams&) const;
};

void ValidateCvae(const CvaeParams& params);
CvaeParams InitCvae(const CvaeArchitecture& arch, Rng& rng);

struct CvaeLoss {
  double total = 0.0;
  double reconstruction = 0.0;
  double kl = 0.0;
};

// Batch-mean loss ||x - decoder(z ++ c)||^2 + beta * KL(q(z|x,c) || N(0, I))
// with z = mu + sigma * eps. `grads` may be null.
CvaeLoss CvaeLossAndGrads(const CvaeParams& params, const Eigen::MatrixXd& x,
                          const Eigen::MatrixXd& c, const Eigen::MatrixXd& eps,
                          CvaeParams* grads);
CvaeLoss CvaeLossAndGrads(const CvaeParams& params, const Eigen::MatrixXd& x,
                          const Eigen::MatrixXd& c, Rng& rng, CvaeParams* grads);

struct Example {
  Eigen::VectorXd x;
  Eigen::VectorXd c;
};

struct FitOptions {
  int epochs = 300;
  int batch_size = 10;
  AdamOptions adam;

  bool operator==(const FitOptions&) const = default;
};

struct FitReport {
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

// Adam on the mean CVAE loss. Losses in the report are measured on the whole
// dataset with one fixed noise draw so they are comparable.
CvaeParams CvaeFit(const CvaeParams& params, const std::vector<Example>& dataset,
                   const FitOptions& options, Rng& rng, FitReport* report = nullptr);

// Decoder output for z ~ N(0, I).
Eigen::VectorXd CvaeSample(const CvaeParams& params, const Eigen::VectorXd& c, Rng& rng);

// Plain L2 regression of `targets` on `inputs` (one example per column).
MlpParams FitRegression(const MlpParams& params, const Eigen::MatrixXd& inputs,
                        const Eigen::MatrixXd& targets, const FitOptions& options, Rng& rng,
                        FitReport* report = nullptr);

// Binary checkpoints: magic bytes, a layer-size header, then row-major weight
// blocks (see README).
void WriteMlp(std::ostream& out, const MlpParams& params);
MlpParams ReadMlp(std::istream& in);
void WriteCvae(std::ostream& out, const CvaeParams& params);
CvaeParams ReadCvae(std::istream& in);
void SaveCvae(const std::filesystem::path& path, const CvaeParams& params);
CvaeParams LoadCvae(const std::filesystem::path& path);

}  // namespace whirl::nn

#endif  // WHIRL_NN_H_
