// tests/test_nn.cc

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

#include <cmath>
#include <random>

#include <doctest.h>

#include "visualtts/nn.h"

using namespace visualtts;

namespace {

MatXd Rand(Eigen::Index r, Eigen::Index c, std::mt19937 &rng, double s = 1.0) {
  std::normal_distribution<double> d(0.0, s);
  MatXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = d(rng);
  return m;
}

VecXd RandVec(Eigen::Index n, std::mt19937 &rng, double s = 1.0) {
  return Rand(n, 1, rng, s).col(0);
}

// d loss / d slot by central differences.
template <typename F>
double NumGrad(F &&loss, double *slot, double eps = 1e-6) {
  const double orig = *slot;
  *slot = orig + eps;
  const double up = loss();
  *slot = orig - eps;
  const double down = loss();
  *slot = orig;
  return (up - down) / (2.0 * eps);
}

}  // namespace

TEST_SUITE_BEGIN("nn");

TEST_CASE("lstm step gradients match finite differences") {
  std::mt19937 rng(101);
  const Eigen::Index in = 3, h = 4;
  nn::ParamRegistry<double> reg;
  nn::LstmParams<double> p = nn::AddLstm(reg, "cell", in, h);
  p.w->value = Rand(4 * h, in, rng, 0.5);
  p.u->value = Rand(4 * h, h, rng, 0.5);
  p.b->value = Rand(4 * h, 1, rng, 0.5);

  VecXd x = RandVec(in, rng), h_prev = RandVec(h, rng), c_prev = RandVec(h, rng);
  // arbitrary keep-old weights exercise the zoneout interpolation paths
  VecXd mask_h(h), mask_c(h);
  mask_h << 0.0, 1.0, 0.3, 0.7;
  mask_c << 1.0, 0.0, 0.5, 0.1;
  const VecXd wh = RandVec(h, rng), wc = RandVec(h, rng);

  auto loss = [&]() {
    VecXd ho(h), co(h);
    nn::LstmStepCache<double> scratch;
    nn::LstmForwardStep(p, x, h_prev, c_prev, mask_h, mask_c, &ho, &co, &scratch);
    return ho.dot(wh) + co.dot(wc);
  };

  nn::LstmStepCache<double> cache;
  VecXd ho(h), co(h);
  nn::LstmForwardStep(p, x, h_prev, c_prev, mask_h, mask_c, &ho, &co, &cache);
  VecXd dx, dh, dc, dpre;
  nn::LstmBackwardStep(p, cache, wh, wc, &dx, &dh, &dc, &dpre);
  p.w->grad += dpre * x.transpose();
  p.u->grad += dpre * h_prev.transpose();
  p.b->grad.col(0) += dpre;

  for (auto *prm : {p.w, p.u, p.b}) {
    for (Eigen::Index i = 0; i < prm->value.size(); ++i) {
      CHECK(prm->grad.data()[i] ==
            doctest::Approx(NumGrad(loss, &prm->value.data()[i])).epsilon(1e-5));
    }
  }
  for (Eigen::Index i = 0; i < in; ++i) {
    CHECK(dx[i] == doctest::Approx(NumGrad(loss, &x[i])).epsilon(1e-5));
  }
  for (Eigen::Index i = 0; i < h; ++i) {
    CHECK(dh[i] == doctest::Approx(NumGrad(loss, &h_prev[i])).epsilon(1e-5));
    CHECK(dc[i] == doctest::Approx(NumGrad(loss, &c_prev[i])).epsilon(1e-5));
  }
}

TEST_CASE("gru step gradients match finite differences") {
  std::mt19937 rng(102);
  const Eigen::Index in = 4, h = 3;
  nn::ParamRegistry<double> reg;
  nn::GruParams<double> p = nn::AddGru(reg, "cell", in, h);
  p.w->value = Rand(3 * h, in, rng, 0.5);
  p.u->value = Rand(3 * h, h, rng, 0.5);
  p.b->value = Rand(3 * h, 1, rng, 0.5);

  VecXd x = RandVec(in, rng), h_prev = RandVec(h, rng);
  const VecXd wh = RandVec(h, rng);

  auto loss = [&]() {
    VecXd ho(h);
    nn::GruStepCache<double> scratch;
    nn::GruForwardStep(p, x, h_prev, &ho, &scratch);
    return ho.dot(wh);
  };

  nn::GruStepCache<double> cache;
  VecXd ho(h);
  nn::GruForwardStep(p, x, h_prev, &ho, &cache);
  VecXd dx, dh, dpre_w, dpre_u;
  nn::GruBackwardStep(p, cache, wh, &dx, &dh, &dpre_w, &dpre_u);
  p.w->grad += dpre_w * x.transpose();
  p.u->grad += dpre_u * h_prev.transpose();
  p.b->grad.col(0) += dpre_w;

  for (auto *prm : {p.w, p.u, p.b}) {
    for (Eigen::Index i = 0; i < prm->value.size(); ++i) {
      CHECK(prm->grad.data()[i] ==
            doctest::Approx(NumGrad(loss, &prm->value.data()[i])).epsilon(1e-5));
    }
  }
  for (Eigen::Index i = 0; i < in; ++i) {
    CHECK(dx[i] == doctest::Approx(NumGrad(loss, &x[i])).epsilon(1e-5));
  }
  for (Eigen::Index i = 0; i < h; ++i) {
    CHECK(dh[i] == doctest::Approx(NumGrad(loss, &h_prev[i])).epsilon(1e-5));
  }
}

TEST_CASE("recurrent steps tolerate aliased state vectors") {
  std::mt19937 rng(103);
  nn::ParamRegistry<double> reg;
  nn::LstmParams<double> lstm = nn::AddLstm(reg, "l", 3, 4);
  lstm.w->value = Rand(16, 3, rng);
  lstm.u->value = Rand(16, 4, rng);
  nn::GruParams<double> gru = nn::AddGru(reg, "g", 3, 4);
  gru.w->value = Rand(12, 3, rng);
  gru.u->value = Rand(12, 4, rng);

  const VecXd x = RandVec(3, rng);
  const VecXd mask = VecXd::Constant(4, 0.1);

  VecXd h0 = RandVec(4, rng), c0 = RandVec(4, rng);
  VecXd h_fresh(4), c_fresh(4);
  nn::LstmStepCache<double> cache_fresh, cache_alias;
  nn::LstmForwardStep(lstm, x, h0, c0, mask, mask, &h_fresh, &c_fresh, &cache_fresh);
  VecXd h = h0, c = c0;
  nn::LstmForwardStep(lstm, x, h, c, mask, mask, &h, &c, &cache_alias);
  CHECK(h == h_fresh);
  CHECK(c == c_fresh);
  CHECK(cache_alias.h_prev == h0);
  CHECK(cache_alias.c_prev == c0);

  VecXd g_fresh(4);
  nn::GruStepCache<double> gc_fresh, gc_alias;
  nn::GruForwardStep(gru, x, h0, &g_fresh, &gc_fresh);
  VecXd g = h0;
  nn::GruForwardStep(gru, x, g, &g, &gc_alias);
  CHECK(g == g_fresh);
  CHECK(gc_alias.h_prev == h0);
}

TEST_CASE("batch norm batch mode normalizes and its backward checks out") {
  std::mt19937 rng(104);
  nn::ParamRegistry<double> reg;
  nn::BatchNormParams<double> bn = nn::AddBatchNorm(reg, "bn", 3);
  bn.gamma->value.col(0) << 1.5, 0.5, 2.0;
  bn.beta->value.col(0) << 0.1, -0.2, 0.0;

  MatXd x = Rand(6, 3, rng, 2.0);
  nn::BatchNormCache<double> cache;
  const MatXd y = nn::BatchNormForwardBatch(bn, x, &cache);

  // columns are standardized before gamma/beta
  for (int j = 0; j < 3; ++j) {
    const auto col = (y.col(j).array() - bn.beta->value(j, 0)) / bn.gamma->value(j, 0);
    CHECK(col.mean() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::sqrt(col.square().mean()) == doctest::Approx(1.0).epsilon(1e-4));
  }

  const MatXd w = Rand(6, 3, rng);
  auto loss = [&]() {
    nn::BatchNormCache<double> c2;
    return (nn::BatchNormForwardBatch(bn, x, &c2).array() * w.array()).sum();
  };
  reg.ZeroGrads();
  const MatXd dx = nn::BatchNormBackward(bn, cache, w);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    CHECK(dx.data()[i] == doctest::Approx(NumGrad(loss, &x.data()[i])).epsilon(1e-4));
  }
  for (auto *prm : {bn.gamma, bn.beta}) {
    for (Eigen::Index i = 0; i < prm->value.size(); ++i) {
      CHECK(prm->grad.data()[i] ==
            doctest::Approx(NumGrad(loss, &prm->value.data()[i])).epsilon(1e-5));
    }
  }
}

TEST_CASE("folding batch statistics reproduces the batch output in running mode") {
  std::mt19937 rng(105);
  nn::ParamRegistry<double> reg;
  nn::BatchNormParams<double> bn = nn::AddBatchNorm(reg, "bn", 4);
  MatXd x = Rand(8, 4, rng, 3.0);

  nn::BatchNormCache<double> cache;
  const MatXd y_batch = nn::BatchNormForwardBatch(bn, x, &cache);
  nn::BatchNormFoldStats(bn, cache, 1.0);  // full replacement
  const MatXd y_running = nn::BatchNormForwardRunning(bn, x);
  CHECK((y_batch - y_running).cwiseAbs().maxCoeff() < 1e-10);

  // partial momentum moves the buffers toward the batch statistics
  nn::BatchNormParams<double> bn2 = nn::AddBatchNorm(reg, "bn2", 4);
  nn::BatchNormCache<double> c2;
  nn::BatchNormForwardBatch(bn2, x, &c2);
  nn::BatchNormFoldStats(bn2, c2, 0.1);
  CHECK(bn2.running_mean->value.col(0).isApprox(0.1 * c2.mean, 1e-12));
}

TEST_CASE("conv1d same padding matches a direct loop and finite differences") {
  std::mt19937 rng(106);
  nn::ParamRegistry<double> reg;
  const int k = 3;
  const Eigen::Index cin = 2, cout = 3, t_len = 5;
  nn::Param<double> *w = reg.Add("w", cout, k * cin);
  nn::Param<double> *b = reg.Add("b", cout, 1);
  w->value = Rand(cout, k * cin, rng);
  b->value = Rand(cout, 1, rng);
  MatXd x = Rand(t_len, cin, rng);

  nn::Conv1dCache<double> cache;
  const MatXd y = nn::Conv1dForward(x, *w, *b, k, &cache);

  // weight layout: output row dot [x(t-1) x(t) x(t+1)] with zero padding
  for (Eigen::Index t = 0; t < t_len; ++t) {
    for (Eigen::Index o = 0; o < cout; ++o) {
      double want = b->value(o, 0);
      for (int dt = 0; dt < k; ++dt) {
        const Eigen::Index src = t + dt - 1;
        if (src < 0 || src >= t_len) continue;
        for (Eigen::Index ci = 0; ci < cin; ++ci) {
          want += w->value(o, dt * cin + ci) * x(src, ci);
        }
      }
      CHECK(y(t, o) == doctest::Approx(want).epsilon(1e-12));
    }
  }

  const MatXd g = Rand(t_len, cout, rng);
  auto loss = [&]() {
    nn::Conv1dCache<double> c2;
    return (nn::Conv1dForward(x, *w, *b, k, &c2).array() * g.array()).sum();
  };
  reg.ZeroGrads();
  const MatXd dx = nn::Conv1dBackward(*w, *b, cache, g);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    CHECK(dx.data()[i] == doctest::Approx(NumGrad(loss, &x.data()[i])).epsilon(1e-5));
  }
  for (Eigen::Index i = 0; i < w->value.size(); ++i) {
    CHECK(w->grad.data()[i] ==
          doctest::Approx(NumGrad(loss, &w->value.data()[i])).epsilon(1e-5));
  }
}

TEST_CASE("even-width conv keeps the output length") {
  std::mt19937 rng(107);
  nn::ParamRegistry<double> reg;
  nn::Param<double> *w = reg.Add("w", 2, 2 * 3);
  nn::Param<double> *b = reg.Add("b", 2, 1);
  w->value = Rand(2, 6, rng);
  const MatXd x = Rand(7, 3, rng);
  nn::Conv1dCache<double> cache;
  const MatXd y = nn::Conv1dForward(x, *w, *b, 2, &cache);
  CHECK(y.rows() == 7);
  CHECK(y.cols() == 2);
}

TEST_CASE("max pooling takes the later frame on ties only when strictly larger") {
  MatXd x(3, 2);
  x << 1.0, 5.0,
       1.0, 2.0,
       4.0, 2.0;
  nn::MaxPoolCache<double> cache;
  const MatXd y = nn::MaxPool1dForward(x, &cache);
  MatXd want(3, 2);
  want << 1.0, 5.0,
          4.0, 2.0,
          4.0, 2.0;
  CHECK(y == want);

  MatXd dy(3, 2);
  dy << 1.0, 2.0,
        4.0, 8.0,
        16.0, 32.0;
  const MatXd dx = nn::MaxPool1dBackward(cache, dy);
  MatXd want_dx(3, 2);
  want_dx << 1.0, 2.0,
             0.0, 8.0,
             4.0 + 16.0, 32.0;
  CHECK(dx == want_dx);
}

TEST_CASE("softmax backward agrees with finite differences") {
  std::mt19937 rng(108);
  MatXd x = Rand(3, 4, rng);
  const MatXd g = Rand(3, 4, rng);
  auto loss = [&]() { return (nn::SoftmaxRows(x).array() * g.array()).sum(); };
  const MatXd y = nn::SoftmaxRows(x);
  const MatXd dx = nn::SoftmaxRowsBackward(y, g);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    CHECK(dx.data()[i] == doctest::Approx(NumGrad(loss, &x.data()[i])).epsilon(1e-5));
  }

  VecXd v = RandVec(5, rng);
  const VecXd gv = RandVec(5, rng);
  auto loss_v = [&]() { return nn::SoftmaxVec(v).dot(gv); };
  const VecXd dv = nn::SoftmaxVecBackward(nn::SoftmaxVec(v), gv);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    CHECK(dv[i] == doctest::Approx(NumGrad(loss_v, &v[i])).epsilon(1e-5));
  }
}

TEST_CASE("softmax handles large inputs without overflow") {
  VecXd v(3);
  v << 1000.0, 1001.0, 999.0;
  const VecXd y = nn::SoftmaxVec(v);
  CHECK(y.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(y.minCoeff() > 0.0);
}

TEST_CASE("inverted dropout keeps the expectation") {
  std::mt19937 rng(109);
  const MatXd mask = nn::DropoutMask<double>(200, 50, 0.5, rng);
  double zeros = 0;
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    if (mask.data()[i] == 0.0) {
      ++zeros;
    } else {
      CHECK(mask.data()[i] == doctest::Approx(2.0));
    }
  }
  CHECK(zeros / static_cast<double>(mask.size()) == doctest::Approx(0.5).epsilon(0.05));
  CHECK(mask.mean() == doctest::Approx(1.0).epsilon(0.05));

  const MatXd off = nn::DropoutMask<double>(4, 4, 0.0, rng);
  CHECK(off == MatXd::Constant(4, 4, 1.0));
}

TEST_CASE("adam leaves frozen parameters alone and clips the gradient norm") {
  nn::ParamRegistry<double> reg;
  nn::Param<double> *train = reg.Add("train", 2, 2);
  nn::Param<double> *frozen = reg.Add("frozen", 2, 2, /*frozen=*/true);
  frozen->value.setConstant(3.0);
  CHECK(frozen->grad.size() == 0);  // frozen params carry no gradient storage
  train->grad.setConstant(100.0);  // norm 200, clipped to 1

  nn::Adam<double> opt(0.1);
  opt.Step(reg, 1.0);

  CHECK(frozen->value == MatXd::Constant(2, 2, 3.0));
  // after clipping every entry moves by the same first-step Adam magnitude
  for (Eigen::Index i = 0; i < 4; ++i) {
    CHECK(train->value.data()[i] == doctest::Approx(-0.1).epsilon(1e-4));
  }
}

TEST_CASE("adam rejects a non-finite gradient with a numeric error") {
  nn::ParamRegistry<double> reg;
  nn::Param<double> *p = reg.Add("p", 1, 1);
  p->grad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  nn::Adam<double> opt(0.1);
  CHECK_THROWS_AS(opt.Step(reg, 1.0), NumericError);
}

TEST_CASE("registry rejects duplicate names and reports totals") {
  nn::ParamRegistry<double> reg;
  reg.Add("a", 2, 3);
  CHECK_THROWS_AS(reg.Add("a", 1, 1), ValidationError);
  reg.Add("b", 4, 1);
  reg.Add("c", 5, 1, /*frozen=*/true);
  CHECK(reg.NumScalars(false) == 2 * 3 + 4 + 5);
  CHECK(reg.NumScalars(true) == 2 * 3 + 4);
  CHECK(reg.Find("b") != nullptr);
  CHECK(reg.Find("missing") == nullptr);
}

TEST_SUITE_END();
