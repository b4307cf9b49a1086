#include "smtw/nn.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace smtw {

namespace {

bool all_finite(const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

// y += W x  (W is rows x cols, row-major). Four independent accumulators in a
// fixed combination order: deterministic and wide enough to vectorize.
void matvec_acc(const double* w, const double* x, double* y, size_t rows, size_t cols) {
  for (size_t r = 0; r < rows; ++r) {
    const double* wr = w + r * cols;
    double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
    size_t c = 0;
    for (; c + 4 <= cols; c += 4) {
      a0 += wr[c] * x[c];
      a1 += wr[c + 1] * x[c + 1];
      a2 += wr[c + 2] * x[c + 2];
      a3 += wr[c + 3] * x[c + 3];
    }
    double acc = (a0 + a1) + (a2 + a3);
    for (; c < cols; ++c) acc += wr[c] * x[c];
    y[r] += acc;
  }
}

// y += W^T d  (accumulate input gradient)
void matvec_transpose_acc(const double* w, const double* d, double* y, size_t rows,
                          size_t cols) {
  for (size_t r = 0; r < rows; ++r) {
    const double dr = d[r];
    if (dr == 0.0) continue;
    const double* wr = w + r * cols;
    for (size_t c = 0; c < cols; ++c) y[c] += wr[c] * dr;
  }
}

// G += d x^T  (outer-product accumulation into a rows x cols gradient)
void outer_acc(const double* d, const double* x, double* g, size_t rows, size_t cols) {
  for (size_t r = 0; r < rows; ++r) {
    const double dr = d[r];
    if (dr == 0.0) continue;
    double* gr = g + r * cols;
    for (size_t c = 0; c < cols; ++c) gr[c] += dr * x[c];
  }
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Array& ParamStore::add(const std::string& name, std::vector<size_t> shape) {
  if (arrays_.count(name)) throw std::logic_error("duplicate parameter array: " + name);
  size_t total = 1;
  for (size_t d : shape) total *= d;
  Array a;
  a.shape = std::move(shape);
  a.data.assign(total, 0.0);
  a.grad.assign(total, 0.0);
  a.m.assign(total, 0.0);
  a.v.assign(total, 0.0);
  return arrays_.emplace(name, std::move(a)).first->second;
}

Array& ParamStore::at(const std::string& name) {
  auto it = arrays_.find(name);
  if (it == arrays_.end()) throw std::out_of_range("no parameter array named " + name);
  return it->second;
}

const Array& ParamStore::at(const std::string& name) const {
  auto it = arrays_.find(name);
  if (it == arrays_.end()) throw std::out_of_range("no parameter array named " + name);
  return it->second;
}

void ParamStore::zero_grad() {
  for (auto& [name, a] : arrays_) std::memset(a.grad.data(), 0, a.grad.size() * sizeof(double));
}

bool ParamStore::grads_finite() const {
  for (const auto& [name, a] : arrays_) {
    if (!all_finite(a.grad)) return false;
  }
  return true;
}

bool ParamStore::data_finite() const {
  for (const auto& [name, a] : arrays_) {
    if (!all_finite(a.data)) return false;
  }
  return true;
}

size_t ParamStore::parameter_count() const {
  size_t total = 0;
  for (const auto& [name, a] : arrays_) total += a.size();
  return total;
}

void init_uniform_fan_in(Array& a, size_t fan_in, Rng& rng) {
  double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& x : a.data) x = rng.uniform_symmetric(scale);
}

void Adam::step(ParamStore& params) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (auto& [name, a] : params.arrays()) {
    for (size_t i = 0; i < a.size(); ++i) {
      const double g = a.grad[i];
      if (!std::isfinite(g)) {
        throw std::runtime_error("optimizer: non-finite gradient in " + name);
      }
      a.m[i] = cfg_.beta1 * a.m[i] + (1.0 - cfg_.beta1) * g;
      a.v[i] = cfg_.beta2 * a.v[i] + (1.0 - cfg_.beta2) * g * g;
      const double m_hat = a.m[i] / bc1;
      const double v_hat = a.v[i] / bc2;
      a.data[i] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
      if (!std::isfinite(a.data[i])) {
        throw std::runtime_error("optimizer: parameter became non-finite in " + name);
      }
    }
  }
}

DenseLayer::DenseLayer(ParamStore& store, const std::string& prefix, size_t in, size_t out)
    : store_(&store), w_name_(prefix + ".w"), b_name_(prefix + ".b"), in_(in), out_(out) {
  if (!store.has(w_name_)) {
    store.add(w_name_, {out, in});
    store.add(b_name_, {out});
  }
}

void DenseLayer::init(Rng& rng) { init_uniform_fan_in(store_->at(w_name_), in_, rng); }

void DenseLayer::forward(const double* x, double* y) const {
  const Array& w = store_->at(w_name_);
  const Array& b = store_->at(b_name_);
  std::memcpy(y, b.data.data(), out_ * sizeof(double));
  matvec_acc(w.data.data(), x, y, out_, in_);
}

void DenseLayer::backward(const double* x, const double* dy, double* dx) const {
  Array& w = store_->at(w_name_);
  Array& b = store_->at(b_name_);
  outer_acc(dy, x, w.grad.data(), out_, in_);
  for (size_t r = 0; r < out_; ++r) b.grad[r] += dy[r];
  if (dx != nullptr) matvec_transpose_acc(w.data.data(), dy, dx, out_, in_);
}

LstmCore::LstmCore(ParamStore& store, const std::string& prefix, size_t input, size_t hidden)
    : store_(&store),
      wx_name_(prefix + ".wx"),
      wh_name_(prefix + ".wh"),
      b_name_(prefix + ".b"),
      in_(input),
      hidden_(hidden) {
  if (!store.has(wx_name_)) {
    store.add(wx_name_, {4 * hidden, input});
    store.add(wh_name_, {4 * hidden, hidden});
    store.add(b_name_, {4 * hidden});
  }
}

void LstmCore::init(Rng& rng) {
  init_uniform_fan_in(store_->at(wx_name_), in_, rng);
  init_uniform_fan_in(store_->at(wh_name_), hidden_, rng);
  Array& b = store_->at(b_name_);
  for (size_t i = hidden_; i < 2 * hidden_; ++i) b.data[i] = 1.0;  // forget gate
}

void LstmCore::step_math(const double* x, const double* h_prev, const double* c_prev,
                         double* h_out, double* c_out, double* gates_out,
                         double* tanh_c_out) const {
  const size_t H = hidden_;
  const Array& wx = store_->at(wx_name_);
  const Array& wh = store_->at(wh_name_);
  const Array& b = store_->at(b_name_);

  std::vector<double> z(b.data);
  matvec_acc(wx.data.data(), x, z.data(), 4 * H, in_);
  matvec_acc(wh.data.data(), h_prev, z.data(), 4 * H, H);

  for (size_t j = 0; j < H; ++j) {
    const double in_gate = sigmoid(z[j]);
    const double forget = sigmoid(z[H + j]);
    const double cand = std::tanh(z[2 * H + j]);
    const double out_gate = sigmoid(z[3 * H + j]);
    const double c_new = forget * c_prev[j] + in_gate * cand;
    const double tc = std::tanh(c_new);
    c_out[j] = c_new;
    h_out[j] = out_gate * tc;
    if (gates_out != nullptr) {
      gates_out[j] = in_gate;
      gates_out[H + j] = forget;
      gates_out[2 * H + j] = cand;
      gates_out[3 * H + j] = out_gate;
      tanh_c_out[j] = tc;
    }
  }
}

void LstmCore::step(const double* x, State& state) const {
  // In-place is safe: h is fully consumed before outputs are written, and c
  // is read and replaced element by element.
  step_math(x, state.h.data(), state.c.data(), state.h.data(), state.c.data(), nullptr,
            nullptr);
}

void LstmCore::forward(const double* xs, size_t steps) {
  const size_t H = hidden_;
  steps_ = steps;
  h_.assign(steps * H, 0.0);
  c_.assign(steps * H, 0.0);
  gates_.assign(steps * 4 * H, 0.0);
  tanh_c_.assign(steps * H, 0.0);

  std::vector<double> zeros(H, 0.0);
  for (size_t t = 0; t < steps; ++t) {
    const double* h_prev = t == 0 ? zeros.data() : h_.data() + (t - 1) * H;
    const double* c_prev = t == 0 ? zeros.data() : c_.data() + (t - 1) * H;
    step_math(xs + t * in_, h_prev, c_prev, h_.data() + t * H, c_.data() + t * H,
              gates_.data() + t * 4 * H, tanh_c_.data() + t * H);
  }
}

void LstmCore::backward(const double* xs, const double* dh_all) {
  const size_t H = hidden_;
  if (steps_ == 0) throw std::logic_error("LstmCore::backward without a cached forward pass");
  Array& wx = store_->at(wx_name_);
  Array& wh = store_->at(wh_name_);
  Array& b = store_->at(b_name_);

  std::vector<double> dh_next(H, 0.0), dc_next(H, 0.0), dz(4 * H), zeros(H, 0.0);
  for (size_t ti = steps_; ti-- > 0;) {
    const double* gates = gates_.data() + ti * 4 * H;
    const double* tc = tanh_c_.data() + ti * H;
    const double* c_prev = ti == 0 ? zeros.data() : c_.data() + (ti - 1) * H;
    const double* h_prev = ti == 0 ? zeros.data() : h_.data() + (ti - 1) * H;

    for (size_t j = 0; j < H; ++j) {
      const double in_gate = gates[j];
      const double forget = gates[H + j];
      const double cand = gates[2 * H + j];
      const double out_gate = gates[3 * H + j];

      const double dh = dh_all[ti * H + j] + dh_next[j];
      const double dout = dh * tc[j];
      double dc = dh * out_gate * (1.0 - tc[j] * tc[j]) + dc_next[j];

      dz[j] = dc * cand * in_gate * (1.0 - in_gate);
      dz[H + j] = dc * c_prev[j] * forget * (1.0 - forget);
      dz[2 * H + j] = dc * in_gate * (1.0 - cand * cand);
      dz[3 * H + j] = dout * out_gate * (1.0 - out_gate);
      dc_next[j] = dc * forget;
    }

    outer_acc(dz.data(), xs + ti * in_, wx.grad.data(), 4 * H, in_);
    outer_acc(dz.data(), h_prev, wh.grad.data(), 4 * H, H);
    for (size_t j = 0; j < 4 * H; ++j) b.grad[j] += dz[j];

    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    matvec_transpose_acc(wh.data.data(), dz.data(), dh_next.data(), 4 * H, H);
  }
  steps_ = 0;  // backward consumes the cache
}

double softmax_cross_entropy(std::span<const double> logits, int target_index,
                             std::span<double> dlogits) {
  double max_logit = logits[0];
  for (double v : logits) max_logit = std::max(max_logit, v);
  double sum = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    dlogits[i] = std::exp(logits[i] - max_logit);
    sum += dlogits[i];
  }
  const double log_sum = std::log(sum) + max_logit;
  const double loss = log_sum - logits[static_cast<size_t>(target_index)];
  for (size_t i = 0; i < logits.size(); ++i) {
    dlogits[i] /= sum;
    if (static_cast<int>(i) == target_index) dlogits[i] -= 1.0;
  }
  return loss;
}

int argmax_index(std::span<const double> values) {
  int best = 0;
  for (size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[static_cast<size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

}  // namespace smtw
