#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace forge::nn {

/// input -> dense ELU layers -> GRU -> linear head.
struct NetworkSpec {
  int input_dim = 0;
  std::vector<int> hidden{256, 256};
  int gru_size = 256;
  int output_dim = 0;

  std::size_t param_count() const;
  void validate() const;
  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

/// Activations of one sequence-batch forward pass, kept for backward.
/// Rows are time-major: row = t * batch + b.
template <class T>
struct SequenceCache {
  int steps = 0;
  int batch = 0;
  std::vector<T> input;
  std::vector<std::vector<T>> pre;   // per dense layer, before ELU
  std::vector<std::vector<T>> post;  // per dense layer, after ELU
  std::vector<T> h_prev;             // GRU state entering each step, after resets
  std::vector<T> gate_r;
  std::vector<T> gate_z;
  std::vector<T> cand_n;
  std::vector<T> hh_n;  // W_hn h + b_hn
  std::vector<T> h_out;
  std::vector<std::uint8_t> reset;
  std::vector<T> scratch_gx;  // input projection of the GRU, all steps
  std::vector<T> scratch_gh;  // hidden projection, one step
};

/// Recurrent MLP with a single GRU cell (PyTorch gate convention). Parameters
/// live in one flat array; weights are stored input-major ([in x out]).
template <class T>
class RecurrentNet {
 public:
  RecurrentNet() = default;
  explicit RecurrentNet(NetworkSpec spec);

  const NetworkSpec& spec() const { return spec_; }
  std::span<T> params() { return params_; }
  std::span<const T> params() const { return params_; }
  std::span<T> grads() { return grads_; }
  std::span<const T> grads() const { return grads_; }
  void zero_grad();

  /// Uniform(+-1/sqrt(fan_in)) weights and biases; the head is further scaled by `head_gain`.
  void init(std::uint64_t seed, T head_gain);

  /// Runs `steps` steps for `batch` independent sequences. `reset` (steps x
  /// batch, may be null) zeroes a row's state before that step. `h0` is
  /// batch x gru_size; `y` receives (steps * batch) x output_dim.
  void forward(int steps, int batch, const T* x, const T* h0, const std::uint8_t* reset, T* y,
               SequenceCache<T>& cache) const;

  /// Accumulates parameter gradients for dL/dy given the cache of the matching forward.
  void backward(const SequenceCache<T>& cache, const T* dy);

  /// One step for `batch` rows; `h` is updated in place.
  void step(int batch, const T* x, T* h, const std::uint8_t* reset, T* y);

 private:
  struct Dense {
    int in = 0;
    int out = 0;
    std::size_t w = 0;  // offsets into params_
    std::size_t b = 0;
  };

  NetworkSpec spec_;
  std::vector<Dense> dense_;
  Dense gru_in_;    // [in x 3G]
  Dense gru_hid_;   // [G x 3G]
  Dense head_;
  std::vector<T> params_;
  std::vector<T> grads_;
  SequenceCache<T> step_cache_;
  std::vector<T> d_hidden_all_, d_gx_, d_gh_, d_h_, d_act_, d_prev_;
};

extern template class RecurrentNet<float>;
extern template class RecurrentNet<double>;

}  // namespace forge::nn
