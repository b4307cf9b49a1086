#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "smtw/prng.hpp"

namespace smtw {

// Small double-precision reverse-mode core: dense layers, a gated recurrent
// cell, softmax cross-entropy, squared error and an adaptive-moment optimizer.
// Everything is explicit and sized for episodes of a few thousand steps with
// batch size one; there is no graph compiler and no batching.

struct Array {
  std::vector<size_t> shape;
  std::vector<double> data;
  std::vector<double> grad;
  std::vector<double> m;  // optimizer first moment
  std::vector<double> v;  // optimizer second moment

  size_t size() const { return data.size(); }
};

class ParamStore {
 public:
  Array& add(const std::string& name, std::vector<size_t> shape);
  Array& at(const std::string& name);
  const Array& at(const std::string& name) const;
  bool has(const std::string& name) const { return arrays_.count(name) > 0; }

  // Iteration order is name order, so updates and checkpoints are stable.
  std::map<std::string, Array>& arrays() { return arrays_; }
  const std::map<std::string, Array>& arrays() const { return arrays_; }

  void zero_grad();
  bool grads_finite() const;
  bool data_finite() const;
  size_t parameter_count() const;

 private:
  std::map<std::string, Array> arrays_;
};

// Uniform in +-1/sqrt(fan_in), drawn in index order from `rng`.
void init_uniform_fan_in(Array& a, size_t fan_in, Rng& rng);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected adaptive update over every array in a store. Throws if any
// gradient is non-finite, and verifies parameters stay finite after the step.
class Adam {
 public:
  explicit Adam(AdamConfig cfg) : cfg_(cfg) {}
  void step(ParamStore& params);
  long step_count() const { return t_; }

 private:
  AdamConfig cfg_;
  long t_ = 0;
};

// y = W x + b with W stored row-major (out x in).
class DenseLayer {
 public:
  DenseLayer(ParamStore& store, const std::string& prefix, size_t in, size_t out);
  void init(Rng& rng);  // weights uniform +-1/sqrt(in), biases zero

  size_t in_size() const { return in_; }
  size_t out_size() const { return out_; }

  void forward(const double* x, double* y) const;
  // Accumulates parameter gradients; dx may be null when the input is a leaf.
  void backward(const double* x, const double* dy, double* dx) const;

 private:
  ParamStore* store_;
  std::string w_name_, b_name_;
  size_t in_, out_;
};

inline double relu(double x) { return x > 0.0 ? x : 0.0; }

// Gated recurrent cell with input/forget/output gates and a cell state.
// Gate blocks are packed [input, forget, candidate, output] along the 4H axis.
// The forget-gate bias is initialized to 1.
class LstmCore {
 public:
  LstmCore(ParamStore& store, const std::string& prefix, size_t input, size_t hidden);
  void init(Rng& rng);

  size_t input_size() const { return in_; }
  size_t hidden_size() const { return hidden_; }

  struct State {
    std::vector<double> h, c;
  };
  State initial_state() const { return {std::vector<double>(hidden_, 0.0),
                                        std::vector<double>(hidden_, 0.0)}; }

  // Single step for inference; identical arithmetic to the training path.
  void step(const double* x, State& state) const;

  // Training pass over a whole sequence (xs is T x input, row-major),
  // starting from the zero state. Caches activations for backward().
  void forward(const double* xs, size_t steps);
  const double* hidden(size_t t) const { return h_.data() + t * hidden_; }

  // dh is T x hidden: the loss gradient w.r.t. every step's hidden output.
  // Accumulates parameter gradients for the cached sequence.
  void backward(const double* xs, const double* dh);

 private:
  void step_math(const double* x, const double* h_prev, const double* c_prev,
                 double* h_out, double* c_out, double* gates_out, double* tanh_c_out) const;

  ParamStore* store_;
  std::string wx_name_, wh_name_, b_name_;
  size_t in_, hidden_;

  // caches (sized T x ...)
  size_t steps_ = 0;
  std::vector<double> h_, c_, gates_, tanh_c_;
};

// Softmax cross-entropy of one step. Returns the loss and writes
// d(loss)/d(logits) (softmax minus one-hot).
double softmax_cross_entropy(std::span<const double> logits, int target_index,
                             std::span<double> dlogits);

int argmax_index(std::span<const double> values);  // ties break to the lowest index

struct CheckpointMeta {
  std::string kind;      // "policy", "bonus", ...
  int n = 0;             // grid side the model was built for
  std::map<std::string, int64_t> extra;
};

// JSON checkpoint, bit-exact across a save/load round trip. Loading requires
// a store whose arrays already have the expected names and shapes.
void save_checkpoint(const std::string& path, const ParamStore& params,
                     const CheckpointMeta& meta);
CheckpointMeta load_checkpoint(const std::string& path, ParamStore& params);
CheckpointMeta read_checkpoint_meta(const std::string& path);

}  // namespace smtw
