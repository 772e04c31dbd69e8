// Copyright 2026 The FlashMHF Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "flashmhf/bench/toy.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "flashmhf/errors.h"
#include "flashmhf/ffn_reference.h"
#include "flashmhf/grad.h"
#include "flashmhf/heads.h"
#include "flashmhf/ops.h"
#include "flashmhf/rng.h"

namespace flashmhf::bench {

namespace {

double inv_sqrt(std::size_t n) { return 1.0 / std::sqrt(static_cast<double>(n)); }

TensorD rows(const TensorD& t, std::size_t begin, std::size_t count) {
  const std::size_t w = t.extent(1);
  std::vector<double> data(t.raw() + begin * w, t.raw() + (begin + count) * w);
  return TensorD({count, w}, std::move(data));
}

class SwiGLUStudent : public Student {
 public:
  SwiGLUStudent(std::size_t d_model, std::size_t d_ff, std::uint64_t seed) {
    p_.w_up = normal_tensor({d_model, d_ff}, 0, inv_sqrt(d_model), seed,
                            "toy.swiglu.up");
    p_.w_gate = normal_tensor({d_model, d_ff}, 0, inv_sqrt(d_model), seed,
                              "toy.swiglu.gate");
    p_.w_down =
        normal_tensor({d_ff, d_model}, 0, inv_sqrt(d_ff), seed, "toy.swiglu.down");
    g_ = {TensorD(p_.w_up.shape()), TensorD(p_.w_gate.shape()),
          TensorD(p_.w_down.shape())};
  }

  std::string name() const override { return "swiglu"; }

  TensorD forward(const TensorD& x) override {
    gate_pre_ = matmul(x, p_.w_gate);
    up_ = matmul(x, p_.w_up);
    act_ = mul(up_, silu(gate_pre_));
    return matmul(act_, p_.w_down);
  }

  void backward(const TensorD& x, const TensorD& d_out) override {
    g_.w_down = matmul_tn(act_, d_out);
    const TensorD d_act = matmul_nt(d_out, p_.w_down);
    g_.w_up = matmul_tn(x, mul(d_act, silu(gate_pre_)));
    g_.w_gate = matmul_tn(x, mul(mul(d_act, up_), dsilu(gate_pre_)));
  }

  std::vector<TensorD*> params() override {
    return {&p_.w_up, &p_.w_gate, &p_.w_down};
  }
  std::vector<TensorD*> grads() override {
    return {&g_.w_up, &g_.w_gate, &g_.w_down};
  }

 private:
  SwiGLUParams<double> p_, g_;
  TensorD gate_pre_, up_, act_;
};

// Shared by the FlashMHF student and the naive MH-FFN student; the latter is
// the E = 1 module with the gate pinned to one.
class MixtureStudent : public Student {
 public:
  MixtureStudent(std::string name, const FlashDims& dims, bool gated,
                 std::uint64_t seed)
      : name_(std::move(name)), dims_(dims), gated_(gated) {
    const std::string tag = "toy." + name_;
    p_ = zero_params<double>(dims);
    const std::size_t dm = dims.d_model();
    p_.w_in = normal_tensor(p_.w_in.shape(), 0, inv_sqrt(dm), seed, tag + ".w_in");
    p_.k = normal_tensor(p_.k.shape(), 0, inv_sqrt(dims.d_h()), seed, tag + ".k");
    p_.u = normal_tensor(p_.u.shape(), 0, inv_sqrt(dims.d_h()), seed, tag + ".u");
    p_.v = normal_tensor(p_.v.shape(), 0, inv_sqrt(dims.d_e), seed, tag + ".v");
    if (gated_) {
      p_.w_gate = normal_tensor(p_.w_gate.shape(), 0, inv_sqrt(dims.d_h()), seed,
                                tag + ".w_gate");
    }
    p_.w_out =
        normal_tensor(p_.w_out.shape(), 0, inv_sqrt(dm), seed, tag + ".w_out");
  }

  std::string name() const override { return name_; }

  TensorD forward(const TensorD& x) override {
    const TensorD* gate = nullptr;
    if (!gated_) {
      ones_ = TensorD::full({x.extent(0), dims_.H(), 1}, 1.0);
      gate = &ones_;
    }
    state_ = flashmhf_forward_state(x, p_, dims_, {}, gate);
    return state_.out;
  }

  void backward(const TensorD& x, const TensorD& d_out) override {
    g_ = flashmhf_backward(x, p_, dims_, state_, d_out);
  }

  std::vector<TensorD*> params() override {
    if (gated_) return {&p_.w_in, &p_.k, &p_.u, &p_.v, &p_.w_gate, &p_.w_out};
    return {&p_.w_in, &p_.k, &p_.u, &p_.v, &p_.w_out};
  }
  std::vector<TensorD*> grads() override {
    if (gated_) return {&g_.dw_in, &g_.dk, &g_.du, &g_.dv, &g_.dw_gate, &g_.dw_out};
    return {&g_.dw_in, &g_.dk, &g_.du, &g_.dv, &g_.dw_out};
  }

  const FlashMHFParams<double>& weights() const { return p_; }

 private:
  std::string name_;
  FlashDims dims_;
  bool gated_;
  FlashMHFParams<double> p_;
  GradBundle g_;
  FlashForwardState state_;
  TensorD ones_;
};

// Multi-head key/value memory: each head attends over its own learned
// slots, softmax(Q_h K_hᵀ / sqrt(d_h)) V_h, between the same input and
// output projections as the other multi-head students.
class PKVStudent : public Student {
 public:
  PKVStudent(HeadLayout layout, std::size_t slots, std::uint64_t seed)
      : layout_(layout) {
    const std::size_t dm = layout.d_model();
    w_in_ = normal_tensor({dm, dm}, 0, inv_sqrt(dm), seed, "toy.pkv.w_in");
    k_ = normal_tensor({layout.H, slots, layout.d_h}, 0, inv_sqrt(layout.d_h),
                       seed, "toy.pkv.k");
    v_ = normal_tensor({layout.H, slots, layout.d_h}, 0, 1.0, seed, "toy.pkv.v");
    w_out_ = normal_tensor({dm, dm}, 0, inv_sqrt(dm), seed, "toy.pkv.w_out");
  }

  std::string name() const override { return "pkv"; }

  TensorD forward(const TensorD& x) override {
    q_ = split_heads(matmul(x, w_in_), layout_);
    probs_.clear();
    TensorD s(q_.shape());
    for (std::size_t h = 0; h < layout_.H; ++h) {
      PKVParams<double> p{subtensor(k_, {h}), subtensor(v_, {h})};
      const TensorD qh = head_slice(q_, h);
      probs_.push_back(softmax_rows(
          scale(matmul_nt(qh, p.k), inv_sqrt(layout_.d_h))));
      set_head_slice(s, h, matmul(probs_.back(), p.v));
    }
    concat_ = concat_heads(s);
    return matmul(concat_, w_out_);
  }

  void backward(const TensorD& x, const TensorD& d_out) override {
    dw_out_ = matmul_tn(concat_, d_out);
    const TensorD ds = split_heads(matmul_nt(d_out, w_out_), layout_);
    TensorD dq(q_.shape());
    dk_ = TensorD(k_.shape());
    dv_ = TensorD(v_.shape());
    const double c = inv_sqrt(layout_.d_h);
    for (std::size_t h = 0; h < layout_.H; ++h) {
      const TensorD& p = probs_[h];
      const TensorD dsh = head_slice(ds, h);
      const TensorD kh = subtensor(k_, {h});
      set_subtensor(dv_, {h}, matmul_tn(p, dsh));
      const TensorD dp = matmul_nt(dsh, subtensor(v_, {h}));
      TensorD dz(p.shape());
      for (std::size_t l = 0; l < p.extent(0); ++l) {
        double dot = 0.0;
        for (std::size_t n = 0; n < p.extent(1); ++n) dot += dp(l, n) * p(l, n);
        for (std::size_t n = 0; n < p.extent(1); ++n)
          dz(l, n) = c * p(l, n) * (dp(l, n) - dot);
      }
      set_head_slice(dq, h, matmul(dz, kh));
      set_subtensor(dk_, {h}, matmul_tn(dz, head_slice(q_, h)));
    }
    dw_in_ = matmul_tn(x, concat_heads(dq));
  }

  std::vector<TensorD*> params() override { return {&w_in_, &k_, &v_, &w_out_}; }
  std::vector<TensorD*> grads() override {
    return {&dw_in_, &dk_, &dv_, &dw_out_};
  }

 private:
  HeadLayout layout_;
  TensorD w_in_, k_, v_, w_out_;
  TensorD dw_in_, dk_, dv_, dw_out_;
  TensorD q_, concat_;
  std::vector<TensorD> probs_;
};

class Adam {
 public:
  Adam(std::vector<TensorD*> params, const ToyConfig& c)
      : params_(std::move(params)), c_(c) {
    for (TensorD* p : params_) {
      m_.emplace_back(p->shape());
      v_.emplace_back(p->shape());
    }
  }

  void step(const std::vector<TensorD*>& grads) {
    ++t_;
    const double bc1 = 1.0 - std::pow(c_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(c_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      TensorD& p = *params_[i];
      const TensorD& g = *grads[i];
      for (std::size_t j = 0; j < p.size(); ++j) {
        m_[i][j] = c_.beta1 * m_[i][j] + (1.0 - c_.beta1) * g[j];
        v_[i][j] = c_.beta2 * v_[i][j] + (1.0 - c_.beta2) * g[j] * g[j];
        p[j] -= c_.lr * (m_[i][j] / bc1) / (std::sqrt(v_[i][j] / bc2) + c_.adam_eps);
      }
    }
  }

 private:
  std::vector<TensorD*> params_;
  std::vector<TensorD> m_, v_;
  ToyConfig c_;
  std::size_t t_ = 0;
};

std::size_t flash_count(const ToyConfig& c) {
  return zero_params<double>(toy_flash_dims(c)).parameter_count();
}

// Width w with base + per_unit·w closest to target.
std::size_t matched_width(std::size_t target, std::size_t base,
                          std::size_t per_unit) {
  if (target <= base) return 1;
  const double w = static_cast<double>(target - base) / per_unit;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(w)));
}

}  // namespace

std::size_t Student::parameter_count() {
  std::size_t n = 0;
  for (TensorD* p : params()) n += p->size();
  return n;
}

FlashDims toy_flash_dims(const ToyConfig& c) {
  const HeadLayout layout = HeadLayout::for_model(c.d_model, c.heads);
  FlashDims dims = FlashDims::with_sizing_rule(layout, c.flash_E);
  dims.validate();
  return dims;
}

double mse(const TensorD& a, const TensorD& b) {
  require_same_shape(a.shape(), b.shape(), "mse");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

std::unique_ptr<Student> make_student(const std::string& method,
                                      const ToyConfig& c) {
  const std::size_t dm = c.d_model;
  const std::size_t target = flash_count(c);
  const std::uint64_t seed = c.seed;
  std::unique_ptr<Student> s;
  if (method == "flashmhf") {
    s = std::make_unique<MixtureStudent>("flashmhf", toy_flash_dims(c), true,
                                         seed);
  } else if (method == "swiglu") {
    s = std::make_unique<SwiGLUStudent>(dm, matched_width(target, 0, 3 * dm),
                                        seed);
  } else if (method == "naive_mhffn") {
    const HeadLayout layout = HeadLayout::for_model(dm, c.heads);
    FlashDims dims{layout, 1, matched_width(target, 2 * dm * dm, 3 * dm)};
    s = std::make_unique<MixtureStudent>("naive_mhffn", dims, false, seed);
  } else if (method == "pkv") {
    const HeadLayout layout = HeadLayout::for_model(dm, c.heads);
    s = std::make_unique<PKVStudent>(
        layout, matched_width(target, 2 * dm * dm, 2 * dm), seed);
  } else {
    throw ConfigError("unknown toy method '" + method +
                      "' (expected flashmhf, swiglu, naive_mhffn or pkv)");
  }
  const double n = static_cast<double>(s->parameter_count());
  if (std::abs(n - static_cast<double>(target)) > 0.05 * target) {
    throw ConfigError("toy " + method + " student has " +
                      std::to_string(s->parameter_count()) +
                      " parameters, more than 5% away from " +
                      std::to_string(target));
  }
  return s;
}

ToyRun train_toy(const ToyConfig& c, std::ostream* log) {
  if (c.seq_len == 0 || c.tokens < 2 * c.seq_len) {
    throw ConfigError("toy task needs tokens >= 2 * seq_len");
  }
  const std::size_t n_seq = c.tokens / c.seq_len;
  const std::size_t n_train =
      std::clamp<std::size_t>(n_seq * 9 / 10, 1, n_seq - 1);
  const std::size_t dm = c.d_model;

  SwiGLUParams<double> teacher{
      normal_tensor({dm, c.teacher_d_ff}, 0, inv_sqrt(dm), c.seed, "toy.teacher.up"),
      normal_tensor({dm, c.teacher_d_ff}, 0, inv_sqrt(dm), c.seed,
                    "toy.teacher.gate"),
      normal_tensor({c.teacher_d_ff, dm}, 0, inv_sqrt(c.teacher_d_ff), c.seed,
                    "toy.teacher.down")};
  const TensorD x_all =
      normal_tensor({n_seq * c.seq_len, dm}, 0, 1, c.seed, "toy.tokens");
  const TensorD y_all = swiglu_forward(x_all, teacher);
  const TensorD x_eval = rows(x_all, n_train * c.seq_len, (n_seq - n_train) * c.seq_len);
  const TensorD y_eval = rows(y_all, n_train * c.seq_len, (n_seq - n_train) * c.seq_len);

  ToyRun run;
  for (const std::string& method : c.methods) {
    std::unique_ptr<Student> student = make_student(method, c);
    ToyMethodResult res;
    res.method = method;
    res.parameter_count = student->parameter_count();
    res.initial_eval_mse = mse(student->forward(x_eval), y_eval);

    Adam adam(student->params(), c);
    std::mt19937_64 order_rng = make_stream(c.seed, "toy.order");
    std::vector<std::size_t> order(n_train);
    std::size_t cursor = n_train;
    for (std::size_t step = 0; step < c.steps; ++step) {
      if (cursor == n_train) {
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), order_rng);
        cursor = 0;
      }
      const std::size_t seq = order[cursor++];
      const TensorD x = rows(x_all, seq * c.seq_len, c.seq_len);
      const TensorD y = rows(y_all, seq * c.seq_len, c.seq_len);
      const TensorD out = student->forward(x);
      const double loss = mse(out, y);
      res.train_mse.push_back(loss);
      if (!std::isfinite(loss) ||
          loss > c.divergence_factor * res.train_mse.front()) {
        res.diverged = true;
        break;
      }
      student->backward(x, scale(sub(out, y), 2.0 / static_cast<double>(out.size())));
      adam.step(student->grads());
      if (log && (step + 1) % 100 == 0) {
        *log << method << " step " << (step + 1) << " train_mse " << loss << '\n';
      }
    }
    res.final_eval_mse = mse(student->forward(x_eval), y_eval);
    if (log) {
      *log << method << " params " << res.parameter_count << " eval_mse "
           << res.initial_eval_mse << " -> " << res.final_eval_mse
           << (res.diverged ? " DIVERGED" : "") << '\n';
    }
    if (method == "flashmhf") {
      run.flash_dims = toy_flash_dims(c);
      run.flash_params = std::make_unique<FlashMHFParams<double>>(
          static_cast<MixtureStudent&>(*student).weights());
    }
    run.results.push_back(std::move(res));
  }
  return run;
}

}  // namespace flashmhf::bench
