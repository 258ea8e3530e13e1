// Copyright 2026 The rnncoref Authors.
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

// Numeric kernel: sparse-input tanh layers, the LSTM cell and its backward
// pass, dropout, AdaGrad and a central-difference gradient checker.
// Gradients are derived by hand per layer; there is no autodiff.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rnncoref/features.hpp"

namespace rnncoref {

using Real = double;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Rng = std::mt19937_64;

// Learning-rate groups; each has its own rate.
enum class ParamGroup { kAnaphoric, kPairwise, kCluster, kLocal, kLstm, kNa };

inline constexpr ParamGroup kAllGroups[] = {ParamGroup::kAnaphoric, ParamGroup::kPairwise,
                                            ParamGroup::kCluster,   ParamGroup::kLocal,
                                            ParamGroup::kLstm,      ParamGroup::kNa};

inline std::string_view to_string(ParamGroup g) {
  switch (g) {
    case ParamGroup::kAnaphoric: return "ha";
    case ParamGroup::kPairwise: return "hp";
    case ParamGroup::kCluster: return "hc";
    case ParamGroup::kLocal: return "local";
    case ParamGroup::kLstm: return "lstm";
    case ParamGroup::kNa: return "na";
  }
  return "?";
}

// A learned tensor with its gradient and AdaGrad accumulator. Vectors are
// stored as single-column matrices.
struct Parameter {
  std::string name;
  ParamGroup group = ParamGroup::kLocal;
  Matrix value;
  Matrix grad;
  Matrix accum;

  Parameter() = default;
  Parameter(std::string n, ParamGroup g, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(n)),
        group(g),
        value(Matrix::Zero(rows, cols)),
        grad(Matrix::Zero(rows, cols)),
        accum(Matrix::Zero(rows, cols)) {}

  auto vec() { return value.col(0); }
  auto vec() const { return value.col(0); }
  auto gvec() { return grad.col(0); }
  Real &scalar() { return value(0, 0); }
  Real scalar() const { return value(0, 0); }

  void zero_grad() { grad.setZero(); }
  Eigen::Index size() const { return value.size(); }
};

// tanh(W phi + b), touching only the active columns of W.
inline Vector sparse_affine_tanh(const Matrix &w, const Eigen::Ref<const Vector> &b,
                                 const SparseFeatures &feats) {
  Vector pre = b;
  for (const FeatureEntry &e : feats) {
    if (e.index < 0 || e.index >= w.cols()) {
      throw std::out_of_range("feature index " + std::to_string(e.index) +
                              " outside weight matrix with " + std::to_string(w.cols()) +
                              " columns");
    }
    pre.noalias() += e.value * w.col(e.index);
  }
  return pre.array().tanh().matrix();
}

// Given out = tanh(W phi + b) and dL/dout, accumulates dL/dW and dL/db.
inline void sparse_affine_tanh_backward(Matrix &dw, Eigen::Ref<Vector> db,
                                        const SparseFeatures &feats, const Vector &out,
                                        const Vector &dout) {
  const Vector dpre = dout.array() * (1.0 - out.array().square());
  db += dpre;
  for (const FeatureEntry &e : feats) dw.col(e.index) += e.value * dpre;
}

inline Vector sigmoid(const Vector &x) {
  return (1.0 / (1.0 + (-x.array()).exp())).matrix();
}

// Single-layer LSTM without peepholes. Each gate matrix is
// hidden x (input + hidden) and acts on [x; h_prev].
struct LstmParams {
  int input_dim = 0;
  int hidden_dim = 0;
  Parameter w_i, w_f, w_o, w_g;
  Parameter b_i, b_f, b_o, b_g;

  LstmParams() = default;
  LstmParams(int input, int hidden)
      : input_dim(input),
        hidden_dim(hidden),
        w_i("lstm.w_i", ParamGroup::kLstm, hidden, input + hidden),
        w_f("lstm.w_f", ParamGroup::kLstm, hidden, input + hidden),
        w_o("lstm.w_o", ParamGroup::kLstm, hidden, input + hidden),
        w_g("lstm.w_g", ParamGroup::kLstm, hidden, input + hidden),
        b_i("lstm.b_i", ParamGroup::kLstm, hidden, 1),
        b_f("lstm.b_f", ParamGroup::kLstm, hidden, 1),
        b_o("lstm.b_o", ParamGroup::kLstm, hidden, 1),
        b_g("lstm.b_g", ParamGroup::kLstm, hidden, 1) {}

  std::vector<Parameter *> parameters() {
    return {&w_i, &w_f, &w_o, &w_g, &b_i, &b_f, &b_o, &b_g};
  }
};

// Everything the backward pass needs from one step.
struct LstmCache {
  Vector x, h_prev, c_prev;
  Vector i, f, o, g;
  Vector c, tanh_c, h;
};

inline LstmCache lstm_forward(const LstmParams &p, const Vector &x, const Vector &h_prev,
                              const Vector &c_prev) {
  if (x.size() != p.input_dim || h_prev.size() != p.hidden_dim ||
      c_prev.size() != p.hidden_dim) {
    throw std::invalid_argument("lstm_step: dimension mismatch");
  }
  const int in = p.input_dim;
  const int hid = p.hidden_dim;
  auto gate = [&](const Parameter &w, const Parameter &b) {
    Vector pre = b.vec();
    pre.noalias() += w.value.leftCols(in) * x;
    pre.noalias() += w.value.rightCols(hid) * h_prev;
    return pre;
  };
  LstmCache k;
  k.x = x;
  k.h_prev = h_prev;
  k.c_prev = c_prev;
  k.i = sigmoid(gate(p.w_i, p.b_i));
  k.f = sigmoid(gate(p.w_f, p.b_f));
  k.o = sigmoid(gate(p.w_o, p.b_o));
  k.g = gate(p.w_g, p.b_g).array().tanh().matrix();
  k.c = k.f.cwiseProduct(c_prev) + k.i.cwiseProduct(k.g);
  k.tanh_c = k.c.array().tanh().matrix();
  k.h = k.o.cwiseProduct(k.tanh_c);
  return k;
}

inline std::pair<Vector, Vector> lstm_step(const LstmParams &p, const Vector &x,
                                           const Vector &h_prev, const Vector &c_prev) {
  LstmCache k = lstm_forward(p, x, h_prev, c_prev);
  return {std::move(k.h), std::move(k.c)};
}

struct LstmStepGrads {
  Vector dx;
  Vector dh_prev;
  Vector dc_prev;
};

// Backward through one step given dL/dh and dL/dc (from the next step).
// Accumulates parameter gradients into p when `accumulate` is set.
inline LstmStepGrads lstm_backward(LstmParams &p, const LstmCache &k, const Vector &dh,
                                   const Vector &dc_next, bool accumulate = true) {
  const int in = p.input_dim;
  const int hid = p.hidden_dim;
  const Vector d_o = dh.cwiseProduct(k.tanh_c);
  const Vector dc = dc_next + dh.cwiseProduct(k.o).cwiseProduct(
                                  (1.0 - k.tanh_c.array().square()).matrix());
  const Vector d_i = dc.cwiseProduct(k.g);
  const Vector d_g = dc.cwiseProduct(k.i);
  const Vector d_f = dc.cwiseProduct(k.c_prev);

  const Vector a_i = d_i.array() * k.i.array() * (1.0 - k.i.array());
  const Vector a_f = d_f.array() * k.f.array() * (1.0 - k.f.array());
  const Vector a_o = d_o.array() * k.o.array() * (1.0 - k.o.array());
  const Vector a_g = d_g.array() * (1.0 - k.g.array().square());

  LstmStepGrads out;
  out.dx = Vector::Zero(in);
  out.dh_prev = Vector::Zero(hid);
  out.dc_prev = dc.cwiseProduct(k.f);
  const std::pair<Parameter *, const Vector *> gates[] = {
      {&p.w_i, &a_i}, {&p.w_f, &a_f}, {&p.w_o, &a_o}, {&p.w_g, &a_g}};
  for (const auto &[w, a] : gates) {
    out.dx.noalias() += w->value.leftCols(in).transpose() * *a;
    out.dh_prev.noalias() += w->value.rightCols(hid).transpose() * *a;
  }
  if (accumulate) {
    const std::pair<Parameter *, const Vector *> biases[] = {
        {&p.b_i, &a_i}, {&p.b_f, &a_f}, {&p.b_o, &a_o}, {&p.b_g, &a_g}};
    for (const auto &[w, a] : gates) {
      w->grad.leftCols(in).noalias() += *a * k.x.transpose();
      w->grad.rightCols(hid).noalias() += *a * k.h_prev.transpose();
    }
    for (const auto &[b, a] : biases) b->gvec() += *a;
  }
  return out;
}

enum class Mode { kTrain, kEval };

// Inverted-dropout mask: entries are 0 with probability `rate`, otherwise
// 1/(1-rate).
inline Vector dropout_mask(Eigen::Index n, Real rate, Rng &rng) {
  if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout rate must be in [0,1)");
  Vector mask(n);
  if (rate == 0.0) {
    mask.setOnes();
    return mask;
  }
  std::bernoulli_distribution keep(1.0 - rate);
  const Real scale = 1.0 / (1.0 - rate);
  for (Eigen::Index i = 0; i < n; ++i) mask(i) = keep(rng) ? scale : 0.0;
  return mask;
}

inline Vector dropout(const Vector &v, Real rate, Mode mode, Rng &rng) {
  if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout rate must be in [0,1)");
  if (mode == Mode::kEval || rate == 0.0) return v;
  return v.cwiseProduct(dropout_mask(v.size(), rate, rng));
}

inline constexpr Real kAdagradEpsilon = 1e-10;

// Clamps (optionally), accumulates squared gradients, steps, zeroes grad.
inline void adagrad_update(Parameter &p, Real lr,
                           std::optional<std::pair<Real, Real>> clip = std::nullopt) {
  if (clip) p.grad = p.grad.cwiseMax(clip->first).cwiseMin(clip->second);
  p.accum.array() += p.grad.array().square();
  p.value.array() -= lr * p.grad.array() / (p.accum.array().sqrt() + kAdagradEpsilon);
  p.grad.setZero();
}

inline void init_uniform(Parameter &p, Real bound, Rng &rng) {
  std::uniform_real_distribution<Real> dist(-bound, bound);
  for (Eigen::Index c = 0; c < p.value.cols(); ++c) {
    for (Eigen::Index r = 0; r < p.value.rows(); ++r) p.value(r, c) = dist(rng);
  }
}

inline bool all_finite(const Matrix &m) { return m.allFinite(); }

// --- Finite-difference gradient check -------------------------------------

struct GradientCheckReport {
  Real max_relative_error = 0.0;
  std::string worst_parameter;
  Eigen::Index worst_index = -1;
  Real analytic = 0.0;
  Real numeric = 0.0;
  std::size_t coordinates = 0;
};

// Relative error with a floor on the denominator so that coordinates whose
// true gradient is ~0 are judged on absolute error.
inline Real relative_error(Real analytic, Real numeric, Real floor) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), floor});
}

// Compares each parameter's current `grad` (the analytic gradient, filled by
// the caller) against (L(theta+eps) - L(theta-eps)) / 2eps. `loss` must be
// deterministic and may overwrite grads; the analytic values are copied
// first and restored afterwards.
inline GradientCheckReport finite_difference_check(const std::function<Real()> &loss,
                                                   std::span<Parameter *const> params,
                                                   Real eps = 1e-5, Real floor = 1e-6) {
  std::vector<Matrix> analytic;
  analytic.reserve(params.size());
  for (const Parameter *p : params) analytic.push_back(p->grad);
  GradientCheckReport report;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter &p = *params[k];
    for (Eigen::Index i = 0; i < p.value.size(); ++i) {
      const Real saved = p.value.data()[i];
      p.value.data()[i] = saved + eps;
      const Real plus = loss();
      p.value.data()[i] = saved - eps;
      const Real minus = loss();
      p.value.data()[i] = saved;
      const Real numeric = (plus - minus) / (2.0 * eps);
      const Real a = analytic[k].data()[i];
      const Real err = relative_error(a, numeric, floor);
      ++report.coordinates;
      if (err > report.max_relative_error || report.worst_index < 0) {
        report.max_relative_error = err;
        report.worst_parameter = p.name;
        report.worst_index = i;
        report.analytic = a;
        report.numeric = numeric;
      }
    }
  }
  for (std::size_t k = 0; k < params.size(); ++k) params[k]->grad = analytic[k];
  return report;
}

}  // namespace rnncoref
