// include/visualtts/nn.h

// Copyright 2026  The VisualTTS Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef VISUALTTS_NN_H_
#define VISUALTTS_NN_H_

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "visualtts/common.h"
#include "visualtts/tensor.h"

// Hand-rolled neural network primitives, templated on the scalar type so the
// same code runs in float for training and in double for finite-difference
// gradient checks.  Every layer is split into an explicit forward that fills
// a cache and a backward that consumes it; there is no tape.
//
// Weight layout convention: a weight is [out x in] and acts on column
// vectors as y = W x; batched rows X (one example or time step per row) use
// Y = X * W^T.  Recurrent cells therefore return their pre-activation rows
// so the caller can stack them across time and run one
// dW += dPre^T * X GEMM per sequence instead of one rank-1 update per step.

namespace visualtts::nn {

template <typename S>
struct Param {
  std::string name;
  MatX<S> value;
  MatX<S> grad;  // 0 x 0 while frozen
  std::vector<std::uint32_t> file_dims;
  bool frozen = false;

  Eigen::Index rows() const { return value.rows(); }
  Eigen::Index cols() const { return value.cols(); }
  Eigen::Index size() const { return value.size(); }
};

// Owns every parameter of a model in registration order.  Registration order
// is the canonical order for initialization, optimizer state and checkpoint
// indexes, which is what makes runs with the same seed bit-identical.
template <typename S>
class ParamRegistry {
 public:
  Param<S> *Add(const std::string &name, Eigen::Index rows, Eigen::Index cols,
                bool frozen = false) {
    std::vector<std::uint32_t> dims;
    if (cols == 1) {
      dims = {static_cast<std::uint32_t>(rows)};
    } else {
      dims = {static_cast<std::uint32_t>(rows), static_cast<std::uint32_t>(cols)};
    }
    return AddWithDims(name, rows, cols, dims, frozen);
  }

  Param<S> *AddWithDims(const std::string &name, Eigen::Index rows, Eigen::Index cols,
                        std::vector<std::uint32_t> file_dims, bool frozen = false) {
    if (index_.count(name) != 0) {
      throw ValidationError("duplicate parameter name " + name);
    }
    std::size_t numel = 1;
    for (std::uint32_t d : file_dims) numel *= d;
    if (file_dims.empty() || numel != static_cast<std::size_t>(rows * cols)) {
      throw ValidationError("file dims for " + name + " do not match matrix shape");
    }
    auto p = std::make_unique<Param<S>>();
    p->name = name;
    p->value = MatX<S>::Zero(rows, cols);
    if (!frozen) p->grad = MatX<S>::Zero(rows, cols);
    p->file_dims = std::move(file_dims);
    p->frozen = frozen;
    Param<S> *raw = p.get();
    index_[name] = params_.size();
    params_.push_back(std::move(p));
    return raw;
  }

  Param<S> *Find(const std::string &name) {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : params_[it->second].get();
  }

  const std::vector<std::unique_ptr<Param<S>>> &params() const { return params_; }

  void ZeroGrads() {
    for (auto &p : params_) {
      if (!p->frozen) p->grad.setZero();
    }
  }

  std::size_t NumScalars(bool trainable_only) const {
    std::size_t n = 0;
    for (const auto &p : params_) {
      if (!trainable_only || !p->frozen) n += static_cast<std::size_t>(p->size());
    }
    return n;
  }

 private:
  std::vector<std::unique_ptr<Param<S>>> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

// ---- initialization ----

template <typename S>
void UniformInit(Param<S> *p, double limit, std::mt19937 &rng) {
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (Eigen::Index i = 0; i < p->value.size(); ++i) {
    p->value.data()[i] = static_cast<S>(dist(rng));
  }
}

// Fan counts follow the [out x in] layout: fan_in = cols, fan_out = rows.
template <typename S>
void GlorotInit(Param<S> *p, std::mt19937 &rng) {
  const double fan_in = static_cast<double>(p->cols());
  const double fan_out = static_cast<double>(p->rows());
  UniformInit(p, std::sqrt(6.0 / (fan_in + fan_out)), rng);
}

template <typename S>
void NormalInit(Param<S> *p, double stddev, std::mt19937 &rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (Eigen::Index i = 0; i < p->value.size(); ++i) {
    p->value.data()[i] = static_cast<S>(dist(rng));
  }
}

// ---- elementwise activations ----

template <typename Derived>
typename Derived::PlainObject Sigmoid(const Eigen::MatrixBase<Derived> &x) {
  using S = typename Derived::Scalar;
  return ((-x.array()).exp() + S(1)).inverse().matrix();
}

template <typename Derived>
typename Derived::PlainObject Relu(const Eigen::MatrixBase<Derived> &x) {
  using S = typename Derived::Scalar;
  return x.cwiseMax(S(0));
}

// ---- softmax over rows ----

template <typename S>
MatX<S> SoftmaxRows(const MatX<S> &x) {
  MatX<S> y(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const S max = x.row(r).maxCoeff();
    y.row(r) = (x.row(r).array() - max).exp();
    y.row(r) /= y.row(r).sum();
  }
  return y;
}

template <typename S>
VecX<S> SoftmaxVec(const VecX<S> &x) {
  const S max = x.maxCoeff();
  VecX<S> y = (x.array() - max).exp();
  return y / y.sum();
}

// dL/dx for y = softmax(x) computed row-wise from y and dL/dy.
template <typename S>
MatX<S> SoftmaxRowsBackward(const MatX<S> &y, const MatX<S> &dy) {
  MatX<S> dx(y.rows(), y.cols());
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    const S dot = y.row(r).dot(dy.row(r));
    dx.row(r) = y.row(r).array() * (dy.row(r).array() - dot);
  }
  return dx;
}

template <typename S>
VecX<S> SoftmaxVecBackward(const VecX<S> &y, const VecX<S> &dy) {
  const S dot = y.dot(dy);
  return (y.array() * (dy.array() - dot)).matrix();
}

// ---- dropout ----

// Inverted dropout: entries are 0 with probability `rate`, else 1/(1-rate),
// so expectations match eval mode where the mask is all ones.
template <typename S>
MatX<S> DropoutMask(Eigen::Index rows, Eigen::Index cols, double rate,
                    std::mt19937 &rng) {
  if (rate <= 0.0) return MatX<S>::Constant(rows, cols, S(1));
  if (rate >= 1.0) throw ValidationError("dropout rate must be below 1");
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  const S keep = static_cast<S>(1.0 / (1.0 - rate));
  MatX<S> mask(rows, cols);
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = dist(rng) < rate ? S(0) : keep;
  }
  return mask;
}

// ---- batch normalization over rows (features are columns) ----

template <typename S>
struct BatchNormParams {
  Param<S> *gamma = nullptr;
  Param<S> *beta = nullptr;
  Param<S> *running_mean = nullptr;  // frozen buffers, updated by FoldStats
  Param<S> *running_var = nullptr;
};

template <typename S>
struct BatchNormCache {
  VecX<S> mean, inv_std;
  MatX<S> xhat;
};

constexpr double kBatchNormEps = 1e-5;

template <typename S>
BatchNormParams<S> AddBatchNorm(ParamRegistry<S> &reg, const std::string &prefix,
                                Eigen::Index dim, bool frozen = false) {
  BatchNormParams<S> bn;
  bn.gamma = reg.Add(prefix + ".gamma", dim, 1, frozen);
  bn.beta = reg.Add(prefix + ".beta", dim, 1, frozen);
  bn.running_mean = reg.Add(prefix + ".running_mean", dim, 1, /*frozen=*/true);
  bn.running_var = reg.Add(prefix + ".running_var", dim, 1, /*frozen=*/true);
  bn.gamma->value.setOnes();
  bn.running_var->value.setOnes();
  return bn;
}

template <typename S>
MatX<S> BatchNormForwardBatch(const BatchNormParams<S> &bn, const MatX<S> &x,
                              BatchNormCache<S> *cache) {
  const S n = static_cast<S>(x.rows());
  cache->mean = x.colwise().sum() / n;
  MatX<S> centered = x.rowwise() - cache->mean.transpose();
  VecX<S> var = centered.array().square().colwise().sum() / n;
  cache->inv_std = (var.array() + S(kBatchNormEps)).rsqrt();
  cache->xhat = centered.array().rowwise() * cache->inv_std.transpose().array();
  return (cache->xhat.array().rowwise() * bn.gamma->value.col(0).transpose().array())
             .rowwise() +
         bn.beta->value.col(0).transpose().array();
}

template <typename S>
MatX<S> BatchNormForwardRunning(const BatchNormParams<S> &bn, const MatX<S> &x) {
  const VecX<S> inv_std =
      (bn.running_var->value.col(0).array() + S(kBatchNormEps)).rsqrt();
  MatX<S> xhat =
      (x.rowwise() - bn.running_mean->value.col(0).transpose()).array().rowwise() *
      inv_std.transpose().array();
  return (xhat.array().rowwise() * bn.gamma->value.col(0).transpose().array())
             .rowwise() +
         bn.beta->value.col(0).transpose().array();
}

template <typename S>
MatX<S> BatchNormBackward(const BatchNormParams<S> &bn, const BatchNormCache<S> &cache,
                          const MatX<S> &dy) {
  const S n = static_cast<S>(dy.rows());
  bn.gamma->grad.col(0) +=
      (dy.array() * cache.xhat.array()).matrix().colwise().sum().transpose();
  bn.beta->grad.col(0) += dy.colwise().sum().transpose();

  // dx = gamma * inv_std / n * (n dxhat - sum(dxhat) - xhat * sum(dxhat*xhat))
  MatX<S> dxhat = dy.array().rowwise() * bn.gamma->value.col(0).transpose().array();
  const VecX<S> sum_dxhat = dxhat.colwise().sum();
  const VecX<S> sum_dxhat_xhat = (dxhat.array() * cache.xhat.array()).colwise().sum();
  MatX<S> dx =
      (dxhat * n).rowwise() - sum_dxhat.transpose();
  dx.array() -= cache.xhat.array().rowwise() * sum_dxhat_xhat.transpose().array();
  dx.array().rowwise() *= (cache.inv_std / n).transpose().array();
  return dx;
}

template <typename S>
void BatchNormFoldStats(const BatchNormParams<S> &bn, const BatchNormCache<S> &cache,
                        double momentum) {
  const S m = static_cast<S>(momentum);
  VecX<S> var = cache.inv_std.array().square().inverse() - S(kBatchNormEps);
  bn.running_mean->value.col(0) =
      (S(1) - m) * bn.running_mean->value.col(0) + m * cache.mean;
  bn.running_var->value.col(0) = (S(1) - m) * bn.running_var->value.col(0) + m * var;
}

// ---- 1-D convolution over time (rows), same padding, stride 1 ----

template <typename S>
struct Conv1dCache {
  MatX<S> xcol;  // T x (k * Cin)
  Eigen::Index cin = 0;
  int k = 0;
};

template <typename S>
MatX<S> Conv1dForward(const MatX<S> &x, const Param<S> &w, const Param<S> &b, int k,
                      Conv1dCache<S> *cache) {
  const Eigen::Index t_len = x.rows(), cin = x.cols();
  if (w.cols() != k * cin) {
    throw ValidationError("conv weight " + w.name + " expects " +
                          std::to_string(w.cols()) + " inputs, got k*Cin = " +
                          std::to_string(k * cin));
  }
  const int left = (k - 1) / 2;
  MatX<S> xcol = MatX<S>::Zero(t_len, k * cin);
  for (int dt = 0; dt < k; ++dt) {
    const Eigen::Index src_lo = std::max<Eigen::Index>(0, left - dt);
    const Eigen::Index src_hi = std::min<Eigen::Index>(t_len, t_len + left - dt);
    if (src_hi <= src_lo) continue;
    xcol.block(src_lo, dt * cin, src_hi - src_lo, cin) =
        x.block(src_lo + dt - left, 0, src_hi - src_lo, cin);
  }
  MatX<S> y = xcol * w.value.transpose();
  y.rowwise() += b.value.col(0).transpose();
  if (cache != nullptr) {
    cache->xcol = std::move(xcol);
    cache->cin = cin;
    cache->k = k;
  }
  return y;
}

template <typename S>
MatX<S> Conv1dBackward(Param<S> &w, Param<S> &b, const Conv1dCache<S> &cache,
                       const MatX<S> &dy) {
  w.grad += dy.transpose() * cache.xcol;
  b.grad.col(0) += dy.colwise().sum().transpose();
  const MatX<S> dxcol = dy * w.value;
  const Eigen::Index t_len = dy.rows(), cin = cache.cin;
  const int k = cache.k, left = (k - 1) / 2;
  MatX<S> dx = MatX<S>::Zero(t_len, cin);
  for (int dt = 0; dt < k; ++dt) {
    const Eigen::Index dst_lo = std::max<Eigen::Index>(0, left - dt);
    const Eigen::Index dst_hi = std::min<Eigen::Index>(t_len, t_len + left - dt);
    if (dst_hi <= dst_lo) continue;
    dx.block(dst_lo + dt - left, 0, dst_hi - dst_lo, cin) +=
        dxcol.block(dst_lo, dt * cin, dst_hi - dst_lo, cin);
  }
  return dx;
}

// ---- max pooling over time, width 2, stride 1, same length ----

template <typename S>
struct MaxPoolCache {
  MatX<std::uint8_t> take_next;  // 1 where x(t+1) won
};

template <typename S>
MatX<S> MaxPool1dForward(const MatX<S> &x, MaxPoolCache<S> *cache) {
  const Eigen::Index t_len = x.rows(), c = x.cols();
  MatX<S> y(t_len, c);
  cache->take_next = MatX<std::uint8_t>::Zero(t_len, c);
  for (Eigen::Index t = 0; t < t_len; ++t) {
    for (Eigen::Index j = 0; j < c; ++j) {
      if (t + 1 < t_len && x(t + 1, j) > x(t, j)) {
        y(t, j) = x(t + 1, j);
        cache->take_next(t, j) = 1;
      } else {
        y(t, j) = x(t, j);
      }
    }
  }
  return y;
}

template <typename S>
MatX<S> MaxPool1dBackward(const MaxPoolCache<S> &cache, const MatX<S> &dy) {
  const Eigen::Index t_len = dy.rows(), c = dy.cols();
  MatX<S> dx = MatX<S>::Zero(t_len, c);
  for (Eigen::Index t = 0; t < t_len; ++t) {
    for (Eigen::Index j = 0; j < c; ++j) {
      dx(t + cache.take_next(t, j), j) += dy(t, j);
    }
  }
  return dx;
}

// ---- LSTM cell ----

// Gate order in the stacked 4H dimension: input, forget, cell, output.
template <typename S>
struct LstmParams {
  Param<S> *w = nullptr;  // 4H x In
  Param<S> *u = nullptr;  // 4H x H
  Param<S> *b = nullptr;  // 4H
};

template <typename S>
LstmParams<S> AddLstm(ParamRegistry<S> &reg, const std::string &prefix,
                      Eigen::Index in_dim, Eigen::Index hidden) {
  LstmParams<S> p;
  p.w = reg.Add(prefix + ".w", 4 * hidden, in_dim);
  p.u = reg.Add(prefix + ".u", 4 * hidden, hidden);
  p.b = reg.Add(prefix + ".b", 4 * hidden, 1);
  return p;
}

template <typename S>
struct LstmStepCache {
  VecX<S> x, h_prev, c_prev;
  VecX<S> i, f, g, o;       // post-activation gates
  VecX<S> c_new, tanh_c;    // candidate cell and its tanh
  VecX<S> mask_h, mask_c;   // keep-old weights in [0, 1]
};

/// State update with zoneout expressed as elementwise keep-old weights:
// c_out = m_c * c_prev + (1 - m_c) * c_new, likewise for h with the freshly
// computed o * tanh(c_new).  Sampled masks are 0/1; evaluation passes the
// zoneout rate as a constant mask, the expectation of the sampled update.
// h_out/c_out may alias h_prev/c_prev.
template <typename S>
void LstmForwardStep(const LstmParams<S> &p, const VecX<S> &x, const VecX<S> &h_prev,
                     const VecX<S> &c_prev, const VecX<S> &mask_h,
                     const VecX<S> &mask_c, VecX<S> *h_out, VecX<S> *c_out,
                     LstmStepCache<S> *cache) {
  const Eigen::Index h_dim = h_prev.size();
  VecX<S> pre = p.w->value * x + p.u->value * h_prev + p.b->value.col(0);
  LstmStepCache<S> local;
  LstmStepCache<S> &c = cache != nullptr ? *cache : local;
  if (cache != nullptr) {
    c.x = x;
    c.h_prev = h_prev;
    c.c_prev = c_prev;
    c.mask_h = mask_h;
    c.mask_c = mask_c;
  }
  c.i = Sigmoid(pre.segment(0, h_dim));
  c.f = Sigmoid(pre.segment(h_dim, h_dim));
  c.g = pre.segment(2 * h_dim, h_dim).array().tanh();
  c.o = Sigmoid(pre.segment(3 * h_dim, h_dim));
  c.c_new = (c.f.array() * c_prev.array() + c.i.array() * c.g.array()).matrix();
  c.tanh_c = c.c_new.array().tanh();
  VecX<S> h_new = (mask_h.array() * h_prev.array() +
                   (S(1) - mask_h.array()) * c.o.array() * c.tanh_c.array())
                      .matrix();
  *c_out = (mask_c.array() * c_prev.array() +
            (S(1) - mask_c.array()) * c.c_new.array())
               .matrix();
  *h_out = std::move(h_new);
}

// Returns the pre-activation gradient (4H) through *dpre so the caller can
// stack it across steps; dx/dh_prev/dc_prev receive this step's input-side
// gradients (dh_prev and dc_prev are overwritten, not accumulated).
template <typename S>
void LstmBackwardStep(const LstmParams<S> &p, const LstmStepCache<S> &c,
                      const VecX<S> &dh_out, const VecX<S> &dc_out, VecX<S> *dx,
                      VecX<S> *dh_prev, VecX<S> *dc_prev, VecX<S> *dpre) {
  const Eigen::Index h_dim = c.h_prev.size();
  const VecX<S> dh_cell = (dh_out.array() * (S(1) - c.mask_h.array())).matrix();
  const VecX<S> d_o = (dh_cell.array() * c.tanh_c.array()).matrix();
  VecX<S> dc_new =
      (dh_cell.array() * c.o.array() * (S(1) - c.tanh_c.array().square()) +
       dc_out.array() * (S(1) - c.mask_c.array()))
          .matrix();
  *dc_prev = (dc_out.array() * c.mask_c.array() + dc_new.array() * c.f.array()).matrix();
  const VecX<S> d_i = (dc_new.array() * c.g.array()).matrix();
  const VecX<S> d_f = (dc_new.array() * c.c_prev.array()).matrix();
  const VecX<S> d_g = (dc_new.array() * c.i.array()).matrix();

  dpre->resize(4 * h_dim);
  dpre->segment(0, h_dim) = (d_i.array() * c.i.array() * (S(1) - c.i.array())).matrix();
  dpre->segment(h_dim, h_dim) =
      (d_f.array() * c.f.array() * (S(1) - c.f.array())).matrix();
  dpre->segment(2 * h_dim, h_dim) =
      (d_g.array() * (S(1) - c.g.array().square())).matrix();
  dpre->segment(3 * h_dim, h_dim) =
      (d_o.array() * c.o.array() * (S(1) - c.o.array())).matrix();

  *dx = p.w->value.transpose() * *dpre;
  *dh_prev = (dh_out.array() * c.mask_h.array()).matrix();
  *dh_prev += p.u->value.transpose() * *dpre;
}

// ---- GRU cell ----

// Gate order in the stacked 3H dimension: reset, update, candidate.
template <typename S>
struct GruParams {
  Param<S> *w = nullptr;  // 3H x In
  Param<S> *u = nullptr;  // 3H x H
  Param<S> *b = nullptr;  // 3H
};

template <typename S>
GruParams<S> AddGru(ParamRegistry<S> &reg, const std::string &prefix,
                    Eigen::Index in_dim, Eigen::Index hidden) {
  GruParams<S> p;
  p.w = reg.Add(prefix + ".w", 3 * hidden, in_dim);
  p.u = reg.Add(prefix + ".u", 3 * hidden, hidden);
  p.b = reg.Add(prefix + ".b", 3 * hidden, 1);
  return p;
}

template <typename S>
struct GruStepCache {
  VecX<S> x, h_prev;
  VecX<S> r, z, n;  // post-activation
  VecX<S> uh_n;     // U_n * h_prev, needed for the reset-gate gradient
};

// h_out = (1 - z) * n + z * h_prev with n = tanh(W_n x + r * (U_n h) + b_n).
// h_out may alias h_prev.
template <typename S>
void GruForwardStep(const GruParams<S> &p, const VecX<S> &x, const VecX<S> &h_prev,
                    VecX<S> *h_out, GruStepCache<S> *cache) {
  const Eigen::Index h_dim = h_prev.size();
  const VecX<S> wx = p.w->value * x + p.b->value.col(0);
  const VecX<S> uh = p.u->value * h_prev;
  GruStepCache<S> local;
  GruStepCache<S> &c = cache != nullptr ? *cache : local;
  if (cache != nullptr) {
    c.x = x;
    c.h_prev = h_prev;
  }
  c.r = Sigmoid(VecX<S>(wx.segment(0, h_dim) + uh.segment(0, h_dim)));
  c.z = Sigmoid(VecX<S>(wx.segment(h_dim, h_dim) + uh.segment(h_dim, h_dim)));
  c.uh_n = uh.segment(2 * h_dim, h_dim);
  c.n = (wx.segment(2 * h_dim, h_dim).array() + c.r.array() * c.uh_n.array())
            .tanh()
            .matrix();
  *h_out = ((S(1) - c.z.array()) * c.n.array() + c.z.array() * h_prev.array()).matrix();
}

// dpre_w feeds dW += dpre_w^T-stack * X and db; dpre_u feeds dU, whose
// candidate block carries the extra reset-gate factor.
template <typename S>
void GruBackwardStep(const GruParams<S> &p, const GruStepCache<S> &c,
                     const VecX<S> &dh_out, VecX<S> *dx, VecX<S> *dh_prev,
                     VecX<S> *dpre_w, VecX<S> *dpre_u) {
  const Eigen::Index h_dim = c.h_prev.size();
  const VecX<S> dn = (dh_out.array() * (S(1) - c.z.array())).matrix();
  const VecX<S> dz = (dh_out.array() * (c.h_prev.array() - c.n.array())).matrix();

  const VecX<S> dpre_n = (dn.array() * (S(1) - c.n.array().square())).matrix();
  const VecX<S> dr = (dpre_n.array() * c.uh_n.array()).matrix();
  const VecX<S> dpre_r = (dr.array() * c.r.array() * (S(1) - c.r.array())).matrix();
  const VecX<S> dpre_z = (dz.array() * c.z.array() * (S(1) - c.z.array())).matrix();

  dpre_w->resize(3 * h_dim);
  dpre_w->segment(0, h_dim) = dpre_r;
  dpre_w->segment(h_dim, h_dim) = dpre_z;
  dpre_w->segment(2 * h_dim, h_dim) = dpre_n;

  dpre_u->resize(3 * h_dim);
  dpre_u->segment(0, h_dim) = dpre_r;
  dpre_u->segment(h_dim, h_dim) = dpre_z;
  dpre_u->segment(2 * h_dim, h_dim) = (dpre_n.array() * c.r.array()).matrix();

  *dx = p.w->value.transpose() * *dpre_w;
  *dh_prev = (dh_out.array() * c.z.array()).matrix();
  *dh_prev += p.u->value.transpose() * *dpre_u;
}

// ---- deferred weight-gradient accumulation ----

// dW += dY^T X where dY and X hold one row per time step.
template <typename S>
void AccumulateWeightGrad(Param<S> *w, const MatX<S> &dy_rows, const MatX<S> &x_rows) {
  w->grad.noalias() += dy_rows.transpose() * x_rows;
}

template <typename S>
void AccumulateBiasGrad(Param<S> *b, const MatX<S> &dy_rows) {
  b->grad.col(0) += dy_rows.colwise().sum().transpose();
}

// ---- Adam ----

template <typename S>
class Adam {
 public:
  Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  // One update over every trainable parameter, with global-norm gradient
  // clipping applied first.  Moment buffers are keyed by registration order,
  // so the registry must not change between calls.
  void Step(ParamRegistry<S> &reg, double clip_norm) {
    const auto &params = reg.params();
    if (moments_.empty()) {
      for (const auto &p : params) {
        if (p->frozen) continue;
        moments_.push_back({MatX<S>::Zero(p->rows(), p->cols()),
                            MatX<S>::Zero(p->rows(), p->cols())});
      }
    }

    double sq_norm = 0.0;
    for (const auto &p : params) {
      if (!p->frozen) sq_norm += static_cast<double>(p->grad.squaredNorm());
    }
    if (!std::isfinite(sq_norm)) {
      throw NumericError("gradient norm is NaN or Inf");
    }
    const double norm = std::sqrt(sq_norm);
    const S scale = static_cast<S>(
        clip_norm > 0.0 && norm > clip_norm ? clip_norm / norm : 1.0);

    ++t_;
    const S correct1 = static_cast<S>(1.0 / (1.0 - std::pow(beta1_, t_)));
    const S correct2 = static_cast<S>(1.0 / (1.0 - std::pow(beta2_, t_)));
    std::size_t slot = 0;
    for (const auto &p : params) {
      if (p->frozen) continue;
      auto &[m, v] = moments_[slot++];
      const MatX<S> g = p->grad * scale;
      m = static_cast<S>(beta1_) * m + static_cast<S>(1.0 - beta1_) * g;
      v = (static_cast<S>(beta2_) * v.array() +
           static_cast<S>(1.0 - beta2_) * g.array().square())
              .matrix();
      p->value.array() -= static_cast<S>(lr_) * (m.array() * correct1) /
                          ((v.array() * correct2).sqrt() + static_cast<S>(eps_));
    }
  }

  int step_count() const { return t_; }

 private:
  struct Moments {
    MatX<S> m, v;
  };
  double lr_, beta1_, beta2_, eps_;
  int t_ = 0;
  std::vector<Moments> moments_;
};

}  // namespace visualtts::nn

#endif  // VISUALTTS_NN_H_
