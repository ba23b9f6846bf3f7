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

#include "whirl/nn.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <utility>

#include "whirl/errors.h"

namespace whirl::nn {
namespace {

constexpr char kMlpMagic[8] = {'W', 'H', 'R', 'L', 'M', 'L', 'P', '1'};
constexpr char kCvaeMagic[8] = {'W', 'H', 'R', 'L', 'C', 'V', 'A', '1'};

Eigen::MatrixXd Activate(const Eigen::MatrixXd& pre, Activation a) {
  if (a == Activation::kRelu) return pre.cwiseMax(0.0);
  return pre.array().tanh().matrix();
}

// Derivative of the activation, evaluated from the pre-activation.
Eigen::MatrixXd ActivationGrad(const Eigen::MatrixXd& pre, Activation a) {
  if (a == Activation::kRelu) return (pre.array() > 0.0).cast<double>().matrix();
  return (1.0 - pre.array().tanh().square()).matrix();
}

void WriteU32(std::ostream& out, uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }
void WriteF64(std::ostream& out, double v) { out.write(reinterpret_cast<const char*>(&v), 8); }
uint32_t ReadU32(std::istream& in) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
double ReadF64(std::istream& in) {
  double v = 0.0;
  in.read(reinterpret_cast<char*>(&v), 8);
  return v;
}

void ExpectMagic(std::istream& in, const char (&magic)[8]) {
  char got[8] = {};
  in.read(got, 8);
  if (!in || std::memcmp(got, magic, 8) != 0) throw DataError("bad checkpoint magic bytes");
}

Eigen::MatrixXd Stack(const Eigen::MatrixXd& top, const Eigen::MatrixXd& bottom) {
  Eigen::MatrixXd out(top.rows() + bottom.rows(), top.cols());
  out << top, bottom;
  return out;
}

}  // namespace

MlpParams MlpParams::ZerosLike() const {
  MlpParams z = *this;
  for (auto& w : z.weights) w.setZero();
  for (auto& b : z.biases) b.setZero();
  return z;
}

std::vector<std::span<double>> MlpParams::Blocks() {
  std::vector<std::span<double>> out;
  for (int l = 0; l < num_layers(); ++l) {
    out.emplace_back(weights[l].data(), weights[l].size());
    out.emplace_back(biases[l].data(), biases[l].size());
  }
  return out;
}

std::vector<std::span<const double>> MlpParams::Blocks() const {
  std::vector<std::span<const double>> out;
  for (int l = 0; l < num_layers(); ++l) {
    out.emplace_back(weights[l].data(), weights[l].size());
    out.emplace_back(biases[l].data(), biases[l].size());
  }
  return out;
}

bool MlpParams::operator==(const MlpParams& o) const {
  if (layer_sizes != o.layer_sizes || activation != o.activation) return false;
  for (int l = 0; l < num_layers(); ++l) {
    if (weights[l] != o.weights[l] || biases[l] != o.biases[l]) return false;
  }
  return true;
}

void ValidateMlp(const MlpParams& p) {
  if (p.layer_sizes.size() < 2 || p.weights.size() + 1 != p.layer_sizes.size() ||
      p.biases.size() != p.weights.size()) {
    throw ShapeError("mlp layer list is inconsistent");
  }
  for (int l = 0; l < p.num_layers(); ++l) {
    if (p.weights[l].rows() != p.layer_sizes[l + 1] || p.weights[l].cols() != p.layer_sizes[l] ||
        p.biases[l].size() != p.layer_sizes[l + 1]) {
      throw ShapeError("mlp layer " + std::to_string(l) + " has incompatible dimensions");
    }
  }
}

MlpParams InitMlp(const std::vector<int>& sizes, Activation activation, Rng& rng) {
  if (sizes.size() < 2) throw ShapeError("mlp needs at least input and output sizes");
  MlpParams p;
  p.layer_sizes = sizes;
  p.activation = activation;
  for (size_t l = 0; l + 1 < sizes.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(sizes[l]));
    std::uniform_real_distribution<double> u(-bound, bound);
    Eigen::MatrixXd w(sizes[l + 1], sizes[l]);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = u(rng);
    Eigen::VectorXd b(sizes[l + 1]);
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = u(rng);
    p.weights.push_back(std::move(w));
    p.biases.push_back(std::move(b));
  }
  return p;
}

Eigen::MatrixXd MlpForward(const MlpParams& params, const Eigen::MatrixXd& input, MlpTape* tape) {
  if (input.rows() != params.input_dim()) {
    throw ShapeError("mlp input has " + std::to_string(input.rows()) + " rows, expected " +
                     std::to_string(params.input_dim()));
  }
  if (tape) {
    tape->inputs.clear();
    tape->pre.clear();
  }
  Eigen::MatrixXd h = input;
  for (int l = 0; l < params.num_layers(); ++l) {
    Eigen::MatrixXd pre = (params.weights[l] * h).colwise() + params.biases[l];
    const bool last = l + 1 == params.num_layers();
    Eigen::MatrixXd next = last ? pre : Activate(pre, params.activation);
    if (tape) {
      tape->inputs.push_back(std::move(h));
      tape->pre.push_back(std::move(pre));
    }
    h = std::move(next);
  }
  return h;
}

MlpGradients MlpBackward(const MlpParams& params, const MlpTape& tape,
                         const Eigen::MatrixXd& output_grad) {
  if (output_grad.rows() != params.output_dim() ||
      static_cast<int>(tape.inputs.size()) != params.num_layers()) {
    throw ShapeError("mlp output gradient does not match the network");
  }
  MlpGradients g{params.ZerosLike(), {}};
  Eigen::MatrixXd delta = output_grad;
  for (int l = params.num_layers() - 1; l >= 0; --l) {
    if (l + 1 != params.num_layers()) {
      delta = delta.cwiseProduct(ActivationGrad(tape.pre[l], params.activation));
    }
    g.params.weights[l] = delta * tape.inputs[l].transpose();
    g.params.biases[l] = delta.rowwise().sum();
    delta = params.weights[l].transpose() * delta;
  }
  g.input = std::move(delta);
  return g;
}

MlpGradients MlpBackward(const MlpParams& params, const Eigen::MatrixXd& input,
                         const Eigen::MatrixXd& output_grad) {
  MlpTape tape;
  MlpForward(params, input, &tape);
  return MlpBackward(params, tape, output_grad);
}

AdamState MakeAdamState(const std::vector<std::span<double>>& blocks, const AdamOptions& options) {
  AdamState s;
  s.options = options;
  for (const auto& b : blocks) {
    s.first_moment.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(b.size())));
    s.second_moment.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(b.size())));
  }
  return s;
}

void AdamStep(AdamState& s, const std::vector<std::span<double>>& params,
              const std::vector<std::span<const double>>& grads) {
  if (params.size() != s.first_moment.size() || grads.size() != params.size()) {
    throw ShapeError("adam state does not match the parameter blocks");
  }
  ++s.step;
  const AdamOptions& o = s.options;
  const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(s.step));
  for (size_t b = 0; b < params.size(); ++b) {
    if (params[b].size() != grads[b].size() ||
        static_cast<Eigen::Index>(params[b].size()) != s.first_moment[b].size()) {
      throw ShapeError("adam block shape mismatch");
    }
    Eigen::Map<Eigen::VectorXd> p(params[b].data(), static_cast<Eigen::Index>(params[b].size()));
    Eigen::Map<const Eigen::VectorXd> g(grads[b].data(), static_cast<Eigen::Index>(grads[b].size()));
    Eigen::VectorXd& m = s.first_moment[b];
    Eigen::VectorXd& v = s.second_moment[b];
    m = o.beta1 * m + (1.0 - o.beta1) * g;
    v = o.beta2 * v + (1.0 - o.beta2) * g.cwiseAbs2();
    p.array() -= o.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + o.epsilon);
  }
}

CvaeParams CvaeParams::ZerosLike() const {
  return {encoder.ZerosLike(), decoder.ZerosLike(), latent_dim, beta};
}

std::vector<std::span<double>> CvaeParams::Blocks() {
  auto out = encoder.Blocks();
  auto dec = decoder.Blocks();
  out.insert(out.end(), dec.begin(), dec.end());
  return out;
}

std::vector<std::span<const double>> CvaeParams::Blocks() const {
  auto out = encoder.Blocks();
  auto dec = decoder.Blocks();
  out.insert(out.end(), dec.begin(), dec.end());
  return out;
}

bool CvaeParams::operator==(const CvaeParams& o) const {
  return latent_dim == o.latent_dim && beta == o.beta && encoder == o.encoder &&
         decoder == o.decoder;
}

void ValidateCvae(const CvaeParams& p) {
  ValidateMlp(p.encoder);
  ValidateMlp(p.decoder);
  if (p.encoder.output_dim() != 2 * p.latent_dim) {
    throw ShapeError("cvae encoder must output 2 * latent_dim values");
  }
  if (p.decoder.input_dim() <= p.latent_dim) {
    throw ShapeError("cvae decoder input must be latent_dim + conditioning size");
  }
  if (p.encoder.input_dim() != p.x_dim() + p.c_dim()) {
    throw ShapeError("cvae encoder input must be x_dim + conditioning size");
  }
}

CvaeParams InitCvae(const CvaeArchitecture& arch, Rng& rng) {
  std::vector<int> enc{arch.x_dim + arch.c_dim};
  enc.insert(enc.end(), arch.hidden.begin(), arch.hidden.end());
  enc.push_back(2 * arch.latent_dim);
  std::vector<int> dec{arch.latent_dim + arch.c_dim};
  dec.insert(dec.end(), arch.hidden.begin(), arch.hidden.end());
  dec.push_back(arch.x_dim);
  CvaeParams p;
  p.encoder = InitMlp(enc, arch.activation, rng);
  p.decoder = InitMlp(dec, arch.activation, rng);
  p.latent_dim = arch.latent_dim;
  p.beta = arch.beta;
  return p;
}

CvaeLoss CvaeLossAndGrads(const CvaeParams& params, const Eigen::MatrixXd& x,
                          const Eigen::MatrixXd& c, const Eigen::MatrixXd& eps,
                          CvaeParams* grads) {
  const int latent = params.latent_dim;
  const Eigen::Index batch = x.cols();
  if (x.rows() != params.x_dim() || c.rows() != params.c_dim() || c.cols() != batch ||
      eps.rows() != latent || eps.cols() != batch || batch == 0) {
    throw ShapeError("cvae batch shapes do not match the model");
  }
  MlpTape enc_tape;
  MlpTape dec_tape;
  const Eigen::MatrixXd enc_out = MlpForward(params.encoder, Stack(x, c), &enc_tape);
  const Eigen::MatrixXd mu = enc_out.topRows(latent);
  const Eigen::MatrixXd logvar = enc_out.bottomRows(latent);
  const Eigen::MatrixXd sigma = (0.5 * logvar.array()).exp().matrix();
  const Eigen::MatrixXd z = mu + sigma.cwiseProduct(eps);
  const Eigen::MatrixXd x_hat = MlpForward(params.decoder, Stack(z, c), &dec_tape);

  const Eigen::MatrixXd diff = x_hat - x;
  const double inv_b = 1.0 / static_cast<double>(batch);
  CvaeLoss loss;
  loss.reconstruction = diff.squaredNorm() * inv_b;
  loss.kl = 0.5 * (mu.array().square() + logvar.array().exp() - 1.0 - logvar.array()).sum() * inv_b;
  loss.total = loss.reconstruction + params.beta * loss.kl;

  if (grads) {
    const MlpGradients dec = MlpBackward(params.decoder, dec_tape, 2.0 * inv_b * diff);
    const Eigen::MatrixXd dz = dec.input.topRows(latent);
    const Eigen::MatrixXd dmu = dz + params.beta * inv_b * mu;
    const Eigen::MatrixXd dlogvar =
        (dz.array() * eps.array() * 0.5 * sigma.array() +
         params.beta * inv_b * 0.5 * (logvar.array().exp() - 1.0))
            .matrix();
    const MlpGradients enc = MlpBackward(params.encoder, enc_tape, Stack(dmu, dlogvar));
    grads->encoder = enc.params;
    grads->decoder = dec.params;
    grads->latent_dim = params.latent_dim;
    grads->beta = params.beta;
  }
  return loss;
}

CvaeLoss CvaeLossAndGrads(const CvaeParams& params, const Eigen::MatrixXd& x,
                          const Eigen::MatrixXd& c, Rng& rng, CvaeParams* grads) {
  const Eigen::MatrixXd eps = StandardNormalMatrix(rng, params.latent_dim, x.cols());
  return CvaeLossAndGrads(params, x, c, eps, grads);
}

CvaeParams CvaeFit(const CvaeParams& params, const std::vector<Example>& dataset,
                   const FitOptions& options, Rng& rng, FitReport* report) {
  if (dataset.empty()) throw ParameterError("cannot fit a cvae to an empty dataset");
  ValidateCvae(params);
  const Eigen::Index n = static_cast<Eigen::Index>(dataset.size());
  Eigen::MatrixXd xs(params.x_dim(), n);
  Eigen::MatrixXd cs(params.c_dim(), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (dataset[i].x.size() != xs.rows() || dataset[i].c.size() != cs.rows()) {
      throw ShapeError("cvae example does not match the model");
    }
    xs.col(i) = dataset[i].x;
    cs.col(i) = dataset[i].c;
  }
  Rng eval_rng(0x5eed);
  const Eigen::MatrixXd eval_eps = StandardNormalMatrix(eval_rng, params.latent_dim, n);

  CvaeParams fitted = params;
  if (report) report->initial_loss = CvaeLossAndGrads(fitted, xs, cs, eval_eps, nullptr).total;

  AdamState adam = MakeAdamState(fitted.Blocks(), options.adam);
  const int batch = std::max(1, std::min<int>(options.batch_size, static_cast<int>(n)));
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  CvaeParams grads = fitted.ZerosLike();
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index start = 0; start < n; start += batch) {
      const Eigen::Index m = std::min<Eigen::Index>(batch, n - start);
      Eigen::MatrixXd bx(xs.rows(), m);
      Eigen::MatrixXd bc(cs.rows(), m);
      for (Eigen::Index j = 0; j < m; ++j) {
        bx.col(j) = xs.col(order[start + j]);
        bc.col(j) = cs.col(order[start + j]);
      }
      CvaeLossAndGrads(fitted, bx, bc, rng, &grads);
      AdamStep(adam, fitted.Blocks(), std::as_const(grads).Blocks());
    }
  }
  if (report) report->final_loss = CvaeLossAndGrads(fitted, xs, cs, eval_eps, nullptr).total;
  return fitted;
}

Eigen::VectorXd CvaeSample(const CvaeParams& params, const Eigen::VectorXd& c, Rng& rng) {
  if (c.size() != params.c_dim()) throw ShapeError("conditioning vector has the wrong size");
  Eigen::VectorXd in(params.latent_dim + c.size());
  in << StandardNormalVector(rng, params.latent_dim), c;
  return MlpForward(params.decoder, in).col(0);
}

MlpParams FitRegression(const MlpParams& params, const Eigen::MatrixXd& inputs,
                        const Eigen::MatrixXd& targets, const FitOptions& options, Rng& rng,
                        FitReport* report) {
  const Eigen::Index n = inputs.cols();
  if (n == 0) throw ParameterError("cannot fit a regression to an empty dataset");
  if (targets.cols() != n || targets.rows() != params.output_dim()) {
    throw ShapeError("regression targets do not match the network");
  }
  auto loss_of = [&](const MlpParams& p) {
    return (MlpForward(p, inputs) - targets).squaredNorm() / static_cast<double>(n);
  };
  MlpParams fitted = params;
  if (report) report->initial_loss = loss_of(fitted);
  AdamState adam = MakeAdamState(fitted.Blocks(), options.adam);
  const int batch = std::max(1, std::min<int>(options.batch_size, static_cast<int>(n)));
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index start = 0; start < n; start += batch) {
      const Eigen::Index m = std::min<Eigen::Index>(batch, n - start);
      Eigen::MatrixXd bx(inputs.rows(), m);
      Eigen::MatrixXd by(targets.rows(), m);
      for (Eigen::Index j = 0; j < m; ++j) {
        bx.col(j) = inputs.col(order[start + j]);
        by.col(j) = targets.col(order[start + j]);
      }
      MlpTape tape;
      const Eigen::MatrixXd out = MlpForward(fitted, bx, &tape);
      const MlpGradients g =
          MlpBackward(fitted, tape, (2.0 / static_cast<double>(m)) * (out - by));
      AdamStep(adam, fitted.Blocks(), g.params.Blocks());
    }
  }
  if (report) report->final_loss = loss_of(fitted);
  return fitted;
}

void WriteMlp(std::ostream& out, const MlpParams& p) {
  ValidateMlp(p);
  out.write(kMlpMagic, 8);
  WriteU32(out, static_cast<uint32_t>(p.layer_sizes.size()));
  for (int s : p.layer_sizes) WriteU32(out, static_cast<uint32_t>(s));
  WriteU32(out, static_cast<uint32_t>(p.activation));
  for (int l = 0; l < p.num_layers(); ++l) {
    const Eigen::MatrixXd& w = p.weights[l];
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) WriteF64(out, w(i, j));
    for (Eigen::Index i = 0; i < p.biases[l].size(); ++i) WriteF64(out, p.biases[l][i]);
  }
}

MlpParams ReadMlp(std::istream& in) {
  ExpectMagic(in, kMlpMagic);
  MlpParams p;
  const uint32_t n = ReadU32(in);
  if (!in || n < 2 || n > 64) throw DataError("bad mlp layer count in checkpoint");
  for (uint32_t i = 0; i < n; ++i) p.layer_sizes.push_back(static_cast<int>(ReadU32(in)));
  const uint32_t act = ReadU32(in);
  if (act > 1) throw DataError("bad activation tag in checkpoint");
  p.activation = static_cast<Activation>(act);
  for (uint32_t l = 0; l + 1 < n; ++l) {
    Eigen::MatrixXd w(p.layer_sizes[l + 1], p.layer_sizes[l]);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = ReadF64(in);
    Eigen::VectorXd b(p.layer_sizes[l + 1]);
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = ReadF64(in);
    p.weights.push_back(std::move(w));
    p.biases.push_back(std::move(b));
  }
  if (!in) throw DataError("truncated mlp checkpoint");
  return p;
}

void WriteCvae(std::ostream& out, const CvaeParams& p) {
  ValidateCvae(p);
  out.write(kCvaeMagic, 8);
  WriteU32(out, static_cast<uint32_t>(p.latent_dim));
  WriteF64(out, p.beta);
  WriteMlp(out, p.encoder);
  WriteMlp(out, p.decoder);
}

CvaeParams ReadCvae(std::istream& in) {
  ExpectMagic(in, kCvaeMagic);
  CvaeParams p;
  p.latent_dim = static_cast<int>(ReadU32(in));
  p.beta = ReadF64(in);
  p.encoder = ReadMlp(in);
  p.decoder = ReadMlp(in);
  ValidateCvae(p);
  return p;
}

void SaveCvae(const std::filesystem::path& path, const CvaeParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  WriteCvae(out, params);
}

CvaeParams LoadCvae(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  return ReadCvae(in);
}

}  // namespace whirl::nn
