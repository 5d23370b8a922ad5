#include "forge/nn/recurrent_net.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "forge/randomization/rng.hpp"
#include "forge/simd/kernels.hpp"

namespace forge::nn {

std::size_t NetworkSpec::param_count() const {
  std::size_t n = 0;
  int in = input_dim;
  for (int h : hidden) {
    n += static_cast<std::size_t>(in) * h + h;
    in = h;
  }
  const std::size_t g3 = 3 * static_cast<std::size_t>(gru_size);
  n += static_cast<std::size_t>(in) * g3 + g3;
  n += static_cast<std::size_t>(gru_size) * g3 + g3;
  n += static_cast<std::size_t>(gru_size) * output_dim + output_dim;
  return n;
}

void NetworkSpec::validate() const {
  if (input_dim <= 0 || output_dim <= 0 || gru_size <= 0) throw std::invalid_argument("network dims must be positive");
  for (int h : hidden) {
    if (h <= 0) throw std::invalid_argument("network hidden sizes must be positive");
  }
}

namespace {

template <class T>
T sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

template <class T>
void fill_bias(int rows, int cols, const T* bias, T* out) {
  for (int i = 0; i < rows; ++i) std::copy(bias, bias + cols, out + static_cast<std::ptrdiff_t>(i) * cols);
}

template <class T>
void add_column_sums(int rows, int cols, const T* a, T* out) {
  for (int i = 0; i < rows; ++i) {
    const T* ai = a + static_cast<std::ptrdiff_t>(i) * cols;
    for (int j = 0; j < cols; ++j) out[j] += ai[j];
  }
}

}  // namespace

template <class T>
RecurrentNet<T>::RecurrentNet(NetworkSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  std::size_t offset = 0;
  auto layout = [&offset](int in, int out) {
    Dense d{in, out, offset, offset + static_cast<std::size_t>(in) * out};
    offset = d.b + out;
    return d;
  };
  int in = spec_.input_dim;
  for (int h : spec_.hidden) {
    dense_.push_back(layout(in, h));
    in = h;
  }
  gru_in_ = layout(in, 3 * spec_.gru_size);
  gru_hid_ = layout(spec_.gru_size, 3 * spec_.gru_size);
  head_ = layout(spec_.gru_size, spec_.output_dim);
  params_.assign(offset, T(0));
  grads_.assign(offset, T(0));
}

template <class T>
void RecurrentNet<T>::zero_grad() {
  std::fill(grads_.begin(), grads_.end(), T(0));
}

template <class T>
void RecurrentNet<T>::init(std::uint64_t seed, T head_gain) {
  RandomStream rng(seed);
  auto fill = [&](const Dense& d, T gain) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(d.in));
    for (std::size_t i = d.w; i < d.b + d.out; ++i) {
      params_[i] = static_cast<T>(gain * rng.uniform(-bound, bound));
    }
  };
  for (const Dense& d : dense_) fill(d, T(1));
  fill(gru_in_, T(1));
  // GRU hidden uses fan-in of the state size
  fill(gru_hid_, T(1));
  fill(head_, head_gain);
}

template <class T>
void RecurrentNet<T>::forward(int steps, int batch, const T* x, const T* h0, const std::uint8_t* reset, T* y,
                              SequenceCache<T>& c) const {
  const int rows = steps * batch;
  const int g = spec_.gru_size;
  const int g3 = 3 * g;
  c.steps = steps;
  c.batch = batch;
  c.input.assign(x, x + static_cast<std::ptrdiff_t>(rows) * spec_.input_dim);
  c.reset.assign(static_cast<std::size_t>(rows), 0);
  if (reset != nullptr) std::copy(reset, reset + rows, c.reset.begin());
  c.pre.resize(dense_.size());
  c.post.resize(dense_.size());

  const T* act = c.input.data();
  for (std::size_t l = 0; l < dense_.size(); ++l) {
    const Dense& d = dense_[l];
    auto& pre = c.pre[l];
    auto& post = c.post[l];
    pre.resize(static_cast<std::size_t>(rows) * d.out);
    post.resize(pre.size());
    fill_bias(rows, d.out, &params_[d.b], pre.data());
    simd::gemm_nn<T>(rows, d.out, d.in, act, d.in, &params_[d.w], d.out, pre.data(), d.out);
    for (std::size_t i = 0; i < pre.size(); ++i) {
      const T v = pre[i];
      post[i] = v > T(0) ? v : std::expm1(v);
    }
    act = post.data();
  }

  const std::size_t state_size = static_cast<std::size_t>(rows) * g;
  c.scratch_gx.resize(static_cast<std::size_t>(rows) * g3);
  fill_bias(rows, g3, &params_[gru_in_.b], c.scratch_gx.data());
  simd::gemm_nn<T>(rows, g3, gru_in_.in, act, gru_in_.in, &params_[gru_in_.w], g3, c.scratch_gx.data(), g3);

  c.h_prev.resize(state_size);
  c.gate_r.resize(state_size);
  c.gate_z.resize(state_size);
  c.cand_n.resize(state_size);
  c.hh_n.resize(state_size);
  c.h_out.resize(state_size);
  c.scratch_gh.resize(static_cast<std::size_t>(batch) * g3);

  for (int t = 0; t < steps; ++t) {
    const std::ptrdiff_t row0 = static_cast<std::ptrdiff_t>(t) * batch;
    T* hp = c.h_prev.data() + row0 * g;
    const T* src = t == 0 ? h0 : c.h_out.data() + (row0 - batch) * g;
    for (int b = 0; b < batch; ++b) {
      if (c.reset[row0 + b]) {
        std::fill(hp + b * g, hp + (b + 1) * g, T(0));
      } else {
        std::copy(src + b * g, src + (b + 1) * g, hp + b * g);
      }
    }
    T* gh = c.scratch_gh.data();
    fill_bias(batch, g3, &params_[gru_hid_.b], gh);
    simd::gemm_nn<T>(batch, g3, g, hp, g, &params_[gru_hid_.w], g3, gh, g3);
    for (int b = 0; b < batch; ++b) {
      const T* gx = c.scratch_gx.data() + (row0 + b) * g3;
      const T* ghb = gh + static_cast<std::ptrdiff_t>(b) * g3;
      const std::ptrdiff_t o = (row0 + b) * g;
      for (int j = 0; j < g; ++j) {
        const T r = sigmoid(gx[j] + ghb[j]);
        const T z = sigmoid(gx[g + j] + ghb[g + j]);
        const T hn = ghb[2 * g + j];
        const T n = std::tanh(gx[2 * g + j] + r * hn);
        c.gate_r[o + j] = r;
        c.gate_z[o + j] = z;
        c.cand_n[o + j] = n;
        c.hh_n[o + j] = hn;
        c.h_out[o + j] = (T(1) - z) * n + z * hp[b * g + j];
      }
    }
  }

  const int out = spec_.output_dim;
  fill_bias(rows, out, &params_[head_.b], y);
  simd::gemm_nn<T>(rows, out, g, c.h_out.data(), g, &params_[head_.w], out, y, out);
}

template <class T>
void RecurrentNet<T>::backward(const SequenceCache<T>& c, const T* dy) {
  const int steps = c.steps;
  const int batch = c.batch;
  const int rows = steps * batch;
  const int g = spec_.gru_size;
  const int g3 = 3 * g;
  const int out = spec_.output_dim;

  // head
  simd::gemm_tn<T>(g, out, rows, c.h_out.data(), g, dy, out, &grads_[head_.w], out);
  add_column_sums(rows, out, dy, &grads_[head_.b]);
  d_hidden_all_.assign(static_cast<std::size_t>(rows) * g, T(0));
  simd::gemm_nt<T>(rows, g, out, dy, out, &params_[head_.w], out, d_hidden_all_.data(), g);

  // GRU, backward through time
  d_gx_.assign(static_cast<std::size_t>(rows) * g3, T(0));
  d_gh_.resize(static_cast<std::size_t>(batch) * g3);
  d_h_.assign(static_cast<std::size_t>(batch) * g, T(0));  // carried dL/dh_t from step t+1
  d_prev_.resize(static_cast<std::size_t>(batch) * g);
  for (int t = steps - 1; t >= 0; --t) {
    const std::ptrdiff_t row0 = static_cast<std::ptrdiff_t>(t) * batch;
    for (int b = 0; b < batch; ++b) {
      const std::ptrdiff_t o = (row0 + b) * g;
      T* dgx = d_gx_.data() + (row0 + b) * g3;
      T* dgh = d_gh_.data() + static_cast<std::ptrdiff_t>(b) * g3;
      T* dprev = d_prev_.data() + static_cast<std::ptrdiff_t>(b) * g;
      for (int j = 0; j < g; ++j) {
        const T dh = d_h_[b * g + j] + d_hidden_all_[o + j];
        const T r = c.gate_r[o + j];
        const T z = c.gate_z[o + j];
        const T n = c.cand_n[o + j];
        const T hp = c.h_prev[o + j];
        const T dn = dh * (T(1) - z) * (T(1) - n * n);
        const T dz = dh * (hp - n) * z * (T(1) - z);
        const T dr = dn * c.hh_n[o + j] * r * (T(1) - r);
        dgx[j] = dr;
        dgx[g + j] = dz;
        dgx[2 * g + j] = dn;
        dgh[j] = dr;
        dgh[g + j] = dz;
        dgh[2 * g + j] = dn * r;
        dprev[j] = dh * z;
      }
    }
    const T* hp = c.h_prev.data() + row0 * g;
    simd::gemm_tn<T>(g, g3, batch, hp, g, d_gh_.data(), g3, &grads_[gru_hid_.w], g3);
    add_column_sums(batch, g3, d_gh_.data(), &grads_[gru_hid_.b]);
    simd::gemm_nt<T>(batch, g, g3, d_gh_.data(), g3, &params_[gru_hid_.w], g3, d_prev_.data(), g);
    for (int b = 0; b < batch; ++b) {
      const bool was_reset = c.reset[row0 + b] != 0;
      for (int j = 0; j < g; ++j) d_h_[b * g + j] = was_reset ? T(0) : d_prev_[b * g + j];
    }
  }

  const T* act = dense_.empty() ? c.input.data() : c.post.back().data();
  simd::gemm_tn<T>(gru_in_.in, g3, rows, act, gru_in_.in, d_gx_.data(), g3, &grads_[gru_in_.w], g3);
  add_column_sums(rows, g3, d_gx_.data(), &grads_[gru_in_.b]);
  if (dense_.empty()) return;

  d_act_.assign(static_cast<std::size_t>(rows) * gru_in_.in, T(0));
  simd::gemm_nt<T>(rows, gru_in_.in, g3, d_gx_.data(), g3, &params_[gru_in_.w], g3, d_act_.data(), gru_in_.in);

  for (std::size_t li = dense_.size(); li-- > 0;) {
    const Dense& d = dense_[li];
    const auto& pre = c.pre[li];
    const auto& post = c.post[li];
    for (std::size_t i = 0; i < pre.size(); ++i) {
      if (pre[i] <= T(0)) d_act_[i] *= post[i] + T(1);
    }
    const T* in_act = li == 0 ? c.input.data() : c.post[li - 1].data();
    simd::gemm_tn<T>(d.in, d.out, rows, in_act, d.in, d_act_.data(), d.out, &grads_[d.w], d.out);
    add_column_sums(rows, d.out, d_act_.data(), &grads_[d.b]);
    if (li == 0) break;
    std::vector<T> d_in(static_cast<std::size_t>(rows) * d.in, T(0));
    simd::gemm_nt<T>(rows, d.in, d.out, d_act_.data(), d.out, &params_[d.w], d.out, d_in.data(), d.in);
    d_act_.swap(d_in);
  }
}

template <class T>
void RecurrentNet<T>::step(int batch, const T* x, T* h, const std::uint8_t* reset, T* y) {
  forward(1, batch, x, h, reset, y, step_cache_);
  std::copy(step_cache_.h_out.begin(), step_cache_.h_out.end(), h);
}

template class RecurrentNet<float>;
template class RecurrentNet<double>;

}  // namespace forge::nn
