// Copyright 2026 The robust-loss-lab Authors.
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

#include "models.hpp"

#include <cmath>
#include <json.hpp>
#include <numbers>

#include "errors.hpp"
#include "rng.hpp"

namespace rll {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMap = Eigen::Map<const RowMajor>;

}  // namespace

FeatureMap FeatureMap::identity(int input_dim) {
  FeatureMap f;
  f.kind = FeatureKind::Identity;
  f.input_dim = input_dim;
  return f;
}

FeatureMap FeatureMap::append_constant(int input_dim) {
  FeatureMap f = identity(input_dim);
  f.kind = FeatureKind::AppendConstant;
  return f;
}

FeatureMap FeatureMap::random_fourier(int input_dim, int dim, double bandwidth, std::uint64_t seed) {
  if (dim < 1 || !(bandwidth > 0.0)) fail(ErrorCode::Config, "random Fourier features need dim >= 1 and bandwidth > 0");
  FeatureMap f;
  f.kind = FeatureKind::RandomFourier;
  f.input_dim = input_dim;
  f.rff_dim = dim;
  f.bandwidth = bandwidth;
  f.seed = seed;
  Rng rng(seed);
  f.rff_weights.resize(dim, input_dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < input_dim; ++j) f.rff_weights(i, j) = rng.normal() / bandwidth;
  f.rff_phase.resize(dim);
  for (auto& b : f.rff_phase) b = 2.0 * std::numbers::pi * rng.uniform();
  return f;
}

int FeatureMap::output_dim() const {
  switch (kind) {
    case FeatureKind::Identity: return input_dim;
    case FeatureKind::AppendConstant: return input_dim + 1;
    case FeatureKind::RandomFourier: return rff_dim;
  }
  return 0;
}

Matrix FeatureMap::apply(const Matrix& x) const {
  if (x.cols() != input_dim) fail(ErrorCode::Shape, "feature map expects " + std::to_string(input_dim) + " input columns");
  switch (kind) {
    case FeatureKind::Identity:
      return x;
    case FeatureKind::AppendConstant: {
      Matrix out(x.rows(), input_dim + 1);
      out.leftCols(input_dim) = x;
      out.col(input_dim).setOnes();
      return out;
    }
    case FeatureKind::RandomFourier: {
      Matrix proj = (x * rff_weights.transpose()).rowwise() + rff_phase.transpose();
      return std::sqrt(2.0 / rff_dim) * proj.array().cos().matrix();
    }
  }
  return {};
}

Model Model::linear(FeatureMap phi, int num_classes, bool reduced) {
  if (num_classes < 2) fail(ErrorCode::Config, "model needs C >= 2");
  Model m;
  m.arch_ = ArchKind::Linear;
  m.num_classes_ = num_classes;
  m.reduced_ = reduced;
  m.input_dim_ = phi.input_dim;
  m.phi_ = std::move(phi);
  m.theta_ = Vector::Zero(m.num_params());
  return m;
}

Model Model::mlp2(int input_dim, int hidden, int num_classes, bool reduced) {
  if (num_classes < 2 || hidden < 1 || input_dim < 1) fail(ErrorCode::Config, "mlp2 needs C >= 2, hidden >= 1, d >= 1");
  Model m;
  m.arch_ = ArchKind::Mlp2;
  m.num_classes_ = num_classes;
  m.reduced_ = reduced;
  m.input_dim_ = input_dim;
  m.hidden_ = hidden;
  m.phi_ = FeatureMap::identity(input_dim);
  m.theta_ = Vector::Zero(m.num_params());
  return m;
}

Eigen::Index Model::num_params() const {
  const Eigen::Index k = output_dim();
  if (arch_ == ArchKind::Linear) return k * phi_.output_dim();
  return static_cast<Eigen::Index>(hidden_) * input_dim_ + k * hidden_;
}

void Model::set_theta(Vector theta) {
  if (theta.size() != num_params()) fail(ErrorCode::Shape, "parameter vector has wrong length");
  theta_ = std::move(theta);
}

void Model::check_input(const Matrix& x, const Vector& theta) const {
  if (x.cols() != input_dim_) {
    fail(ErrorCode::Shape, "model expects " + std::to_string(input_dim_) + " features, got " + std::to_string(x.cols()));
  }
  if (theta.size() != num_params()) fail(ErrorCode::Shape, "parameter vector has wrong length");
}

ModelOutput Model::forward(const Matrix& x, const Vector& theta) const {
  check_input(x, theta);
  const Eigen::Index k = output_dim();
  if (arch_ == ArchKind::Linear) {
    const ConstRowMap w(theta.data(), k, phi_.output_dim());
    return phi_.apply(x) * w.transpose();
  }
  const ConstRowMap w1(theta.data(), hidden_, input_dim_);
  const ConstRowMap w2(theta.data() + static_cast<Eigen::Index>(hidden_) * input_dim_, k, hidden_);
  const Matrix h = (x * w1.transpose()).array().tanh().matrix();
  return h * w2.transpose();
}

Vector Model::backward(const Matrix& x, const Vector& theta, const Matrix& dz) const {
  check_input(x, theta);
  const Eigen::Index k = output_dim();
  if (dz.rows() != x.rows() || dz.cols() != k) fail(ErrorCode::Shape, "output gradient has wrong shape");
  Vector grad(num_params());
  if (arch_ == ArchKind::Linear) {
    RowMajor g = dz.transpose() * phi_.apply(x);
    grad = Eigen::Map<const Vector>(g.data(), g.size());
    return grad;
  }
  const Eigen::Index n1 = static_cast<Eigen::Index>(hidden_) * input_dim_;
  const ConstRowMap w1(theta.data(), hidden_, input_dim_);
  const ConstRowMap w2(theta.data() + n1, k, hidden_);
  const Matrix h = (x * w1.transpose()).array().tanh().matrix();
  const RowMajor g2 = dz.transpose() * h;
  const Matrix dpre = ((dz * w2).array() * (1.0 - h.array().square())).matrix();
  const RowMajor g1 = dpre.transpose() * x;
  grad.head(n1) = Eigen::Map<const Vector>(g1.data(), g1.size());
  grad.tail(g2.size()) = Eigen::Map<const Vector>(g2.data(), g2.size());
  return grad;
}

ModelOutput Model::jvp(const Matrix& x, const Vector& theta, const Vector& v) const {
  check_input(x, theta);
  if (v.size() != num_params()) fail(ErrorCode::Shape, "direction has wrong length");
  const Eigen::Index k = output_dim();
  if (arch_ == ArchKind::Linear) return forward(x, v);
  const Eigen::Index n1 = static_cast<Eigen::Index>(hidden_) * input_dim_;
  const ConstRowMap w1(theta.data(), hidden_, input_dim_);
  const ConstRowMap w2(theta.data() + n1, k, hidden_);
  const ConstRowMap dw1(v.data(), hidden_, input_dim_);
  const ConstRowMap dw2(v.data() + n1, k, hidden_);
  const Matrix h = (x * w1.transpose()).array().tanh().matrix();
  const Matrix dh = ((x * dw1.transpose()).array() * (1.0 - h.array().square())).matrix();
  return h * dw2.transpose() + dh * w2.transpose();
}

Vector Model::output_scaled_theta(double t) const {
  Vector out = theta_;
  if (arch_ == ArchKind::Linear) return out * t;
  const Eigen::Index n1 = static_cast<Eigen::Index>(hidden_) * input_dim_;
  out.tail(out.size() - n1) *= t;
  return out;
}

Vector Model::origin_theta(std::uint64_t seed, double scale) const {
  Vector out = Vector::Zero(num_params());
  if (arch_ == ArchKind::Linear) return out;
  Rng rng(seed);
  const double s = scale / std::sqrt(static_cast<double>(input_dim_));
  const Eigen::Index n1 = static_cast<Eigen::Index>(hidden_) * input_dim_;
  for (Eigen::Index i = 0; i < n1; ++i) out[i] = s * rng.normal();
  return out;
}

namespace {

nlohmann::json matrix_json(const double* data, Eigen::Index rows, Eigen::Index cols) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < rows; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < cols; ++j) row.push_back(data[i * cols + j]);
    arr.push_back(std::move(row));
  }
  return arr;
}

void read_matrix_json(const nlohmann::json& arr, double* out, Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (!arr.is_array() || static_cast<Eigen::Index>(arr.size()) != rows) {
    fail(ErrorCode::Parse, std::string("checkpoint: ") + what + " must have " + std::to_string(rows) + " rows");
  }
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = arr[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      fail(ErrorCode::Parse, std::string("checkpoint: ") + what + " row " + std::to_string(i) + " must have " + std::to_string(cols) + " entries");
    }
    for (Eigen::Index j = 0; j < cols; ++j) out[i * cols + j] = row[static_cast<std::size_t>(j)].get<double>();
  }
}

const char* feature_kind_name(FeatureKind k) {
  switch (k) {
    case FeatureKind::Identity: return "identity";
    case FeatureKind::AppendConstant: return "append_constant";
    case FeatureKind::RandomFourier: return "random_fourier";
  }
  return "identity";
}

}  // namespace

std::string Model::to_json() const {
  nlohmann::ordered_json j;
  j["v"] = "v1";
  j["num_classes"] = num_classes_;
  j["reduced"] = reduced_;
  j["input_dim"] = input_dim_;
  const Eigen::Index k = output_dim();
  if (arch_ == ArchKind::Linear) {
    j["arch"] = "linear";
    nlohmann::ordered_json fm;
    fm["kind"] = feature_kind_name(phi_.kind);
    if (phi_.kind == FeatureKind::RandomFourier) {
      fm["dim"] = phi_.rff_dim;
      fm["bandwidth"] = phi_.bandwidth;
      fm["seed"] = phi_.seed;
    }
    j["feature_map"] = fm;
    j["theta"] = matrix_json(theta_.data(), k, phi_.output_dim());
  } else {
    j["arch"] = "mlp2";
    j["hidden"] = hidden_;
    j["activation"] = "tanh";
    j["w1"] = matrix_json(theta_.data(), hidden_, input_dim_);
    j["w2"] = matrix_json(theta_.data() + static_cast<Eigen::Index>(hidden_) * input_dim_, k, hidden_);
  }
  return j.dump(2) + "\n";
}

Model Model::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    if (j.at("v").get<std::string>() != "v1") fail(ErrorCode::Parse, "checkpoint: unsupported version");
    const int c = j.at("num_classes").get<int>();
    const bool reduced = j.at("reduced").get<bool>();
    const int d = j.at("input_dim").get<int>();
    const std::string arch = j.at("arch").get<std::string>();
    Model m;
    if (arch == "linear") {
      const auto& fm = j.at("feature_map");
      const std::string kind = fm.at("kind").get<std::string>();
      FeatureMap phi;
      if (kind == "identity") {
        phi = FeatureMap::identity(d);
      } else if (kind == "append_constant") {
        phi = FeatureMap::append_constant(d);
      } else if (kind == "random_fourier") {
        phi = FeatureMap::random_fourier(d, fm.at("dim").get<int>(), fm.at("bandwidth").get<double>(), fm.at("seed").get<std::uint64_t>());
      } else {
        fail(ErrorCode::Parse, "checkpoint: unknown feature map '" + kind + "'");
      }
      m = Model::linear(std::move(phi), c, reduced);
      Vector theta(m.num_params());
      read_matrix_json(j.at("theta"), theta.data(), m.output_dim(), m.phi_.output_dim(), "theta");
      m.set_theta(std::move(theta));
    } else if (arch == "mlp2") {
      m = Model::mlp2(d, j.at("hidden").get<int>(), c, reduced);
      Vector theta(m.num_params());
      const Eigen::Index n1 = static_cast<Eigen::Index>(m.hidden_) * d;
      read_matrix_json(j.at("w1"), theta.data(), m.hidden_, d, "w1");
      read_matrix_json(j.at("w2"), theta.data() + n1, m.output_dim(), m.hidden_, "w2");
      m.set_theta(std::move(theta));
    } else {
      fail(ErrorCode::Parse, "checkpoint: unknown arch '" + arch + "'");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Parse, std::string("checkpoint: ") + e.what());
  }
}

std::vector<int> predict(const ModelOutput& z) {
  if (!z.allFinite()) fail(ErrorCode::Domain, "predict: non-finite outputs");
  std::vector<int> out(static_cast<std::size_t>(z.rows()));
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < z.cols(); ++j)
      if (z(i, j) > z(i, best)) best = j;
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

ModelOutput class_scores(const ModelOutput& z, bool reduced) {
  if (!reduced) return z;
  ModelOutput out = ModelOutput::Zero(z.rows(), z.cols() + 1);
  out.leftCols(z.cols()) = z;
  return out;
}

double agreement(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size() || a.empty()) fail(ErrorCode::Shape, "agreement needs equal non-empty label vectors");
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += a[i] == b[i];
  return static_cast<double>(same) / static_cast<double>(a.size());
}

double norm_l2(const ModelOutput& z) {
  if (z.rows() == 0) return 0.0;
  return std::sqrt(z.squaredNorm() / static_cast<double>(z.rows()));
}

LossEval row_loss(const LossSpec& loss, const Eigen::Ref<const Vector>& row, int y, bool reduced) {
  if (!reduced) return loss_eval(loss, row, y);
  LossEval e = loss_eval(loss, embed(row), y);
  e.grad.conservativeResize(row.size());
  return e;
}

namespace {

bool batched_loss(const LossSpec& loss) { return loss.kind == LossKind::Muh || loss.kind == LossKind::SoftmaxCe; }

/// Row i is onehot(y_i), or the flip distribution of y_i under noise.
Matrix label_targets(const std::vector<int>& labels, int c, const std::optional<NoiseSpec>& noise) {
  Matrix flip = Matrix::Identity(c, c);
  if (noise) {
    for (int y = 0; y < c; ++y) flip.row(y) = flip_distribution(y, *noise).transpose();
  }
  Matrix t(static_cast<Eigen::Index>(labels.size()), c);
  for (std::size_t i = 0; i < labels.size(); ++i) t.row(static_cast<Eigen::Index>(i)) = flip.row(labels[i]);
  return t;
}

/// Losses linear in the label (MUH, softmax CE) on all rows at once, so the
/// expectation over flips is the loss at the soft target.
ValueGrad batched_objective(const Model& model, const Vector& theta, const Dataset& data, const ObjectiveTerms& terms,
                            const ModelOutput& z) {
  const int c = model.num_classes();
  const bool reduced = model.reduced();
  if (!z.allFinite()) fail(ErrorCode::Domain, "objective: model outputs are not finite");
  const Eigen::Index n = z.rows();
  Matrix f(n, c);
  if (reduced) {
    f.leftCols(c - 1) = z;
    f.col(c - 1).setZero();
  } else {
    f = z;
  }
  const Vector m = f.rowwise().maxCoeff();
  const Vector lse = m.array() + (f.colwise() - m).array().exp().rowwise().sum().log();
  const Matrix p = (f.colwise() - lse).array().exp().matrix();

  Matrix gfull = Matrix::Zero(n, c);
  Matrix gout = Matrix::Zero(n, z.cols());
  double loss_sum = 0.0;
  double reg_sum = 0.0;
  if (terms.loss_weight != 0.0) {
    const Matrix t = label_targets(data.labels, c, terms.noise);
    const double dot = (t.array() * f.array()).sum();
    if (terms.loss.kind == LossKind::Muh) {
      loss_sum = f.sum() / c - dot;
      gfull -= terms.loss_weight * (t.array() - 1.0 / c).matrix();
    } else {
      loss_sum = lse.sum() - dot;
      gfull += terms.loss_weight * (p - t);
    }
  }
  if (terms.reg_weight != 0.0) {
    switch (terms.reg.kind) {
      case RegKind::Quadratic: {
        const Matrix za = z * terms.reg.a;
        reg_sum = (z.array() * za.array()).sum();
        gout += terms.reg_weight * 2.0 * za;
        break;
      }
      case RegKind::Entropy: {
        const Matrix logp = f.colwise() - lse;
        const Vector ent = (p.array() * logp.array()).rowwise().sum();
        reg_sum = ent.sum();
        gfull += terms.reg_weight * (p.array() * (logp.colwise() - ent).array()).matrix();
        break;
      }
      case RegKind::LabelSmoothing: {
        reg_sum = lse.sum() - f.sum() / c;
        gfull += terms.reg_weight * (p.array() - 1.0 / c).matrix();
        break;
      }
    }
  }
  gout += gfull.leftCols(z.cols());
  const double inv_n = 1.0 / static_cast<double>(n);
  ValueGrad out;
  out.value = (terms.loss_weight * loss_sum + terms.reg_weight * reg_sum) * inv_n;
  out.grad = model.backward(data.features, theta, inv_n * gout);
  return out;
}

}  // namespace

ValueGrad objective_grad(const Model& model, const Vector& theta, const Dataset& data, const ObjectiveTerms& terms) {
  const int c = model.num_classes();
  const bool reduced = model.reduced();
  if (data.num_classes != c || terms.loss.num_classes != c || terms.reg.num_classes != c) {
    fail(ErrorCode::Config, "objective: class counts of model, data, loss and regularizer differ");
  }
  if (terms.reg.dim() != model.output_dim()) {
    fail(ErrorCode::Config, "objective: regularizer acts on " + std::to_string(terms.reg.dim()) + "-dim outputs but model emits " +
                                std::to_string(model.output_dim()));
  }
  if (terms.noise && terms.noise->num_classes != c) fail(ErrorCode::Config, "objective: noise spec has wrong C");

  const ModelOutput z = model.forward(data.features, theta);
  if (batched_loss(terms.loss)) return batched_objective(model, theta, data, terms, z);
  const Eigen::Index n = z.rows();
  const double inv_n = 1.0 / static_cast<double>(n);
  Matrix dz(n, z.cols());
  Matrix flip;
  if (terms.noise) {
    flip.resize(c, c);
    for (int y = 0; y < c; ++y) flip.row(y) = flip_distribution(y, *terms.noise).transpose();
  }
  double loss_sum = 0.0;
  double reg_sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector zi = z.row(i).transpose();
    const int y = data.labels[static_cast<std::size_t>(i)];
    Vector gi = Vector::Zero(z.cols());
    if (terms.loss_weight != 0.0) {
      if (terms.noise) {
        for (int j = 0; j < c; ++j) {
          const double pj = flip(y, j);
          if (pj == 0.0) continue;
          const LossEval e = row_loss(terms.loss, zi, j, reduced);
          loss_sum += pj * e.value;
          gi += terms.loss_weight * pj * e.grad;
        }
      } else {
        const LossEval e = row_loss(terms.loss, zi, y, reduced);
        loss_sum += e.value;
        gi += terms.loss_weight * e.grad;
      }
    }
    if (terms.reg_weight != 0.0) {
      const RegEval r = reg_eval(terms.reg, zi);
      reg_sum += r.value;
      gi += terms.reg_weight * r.grad;
    }
    dz.row(i) = inv_n * gi.transpose();
  }
  ValueGrad out;
  out.value = terms.loss_weight * loss_sum * inv_n + terms.reg_weight * reg_sum * inv_n;
  out.grad = model.backward(data.features, theta, dz);
  return out;
}

}  // namespace rll
