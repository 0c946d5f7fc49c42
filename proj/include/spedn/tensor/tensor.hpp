#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace spedn::tensor {

using Shape = std::vector<std::size_t>;

/// Dense row-major 64-bit tensor. Ops treat 1-d tensors as a single row.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0) : Tensor(Shape{rows, cols}, fill) {}
  static Tensor from(std::size_t rows, std::size_t cols, std::vector<double> values);
  static Tensor row(std::vector<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  std::size_t rows() const;
  std::size_t cols() const;
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  std::string shape_string() const;
  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// Reverse-mode autodiff

struct Node {
  Tensor value;
  Tensor grad;  // allocated on first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  bool has_grad() const { return !grad.empty(); }
  Tensor& ensure_grad();
};

using Var = std::shared_ptr<Node>;

Var constant(Tensor value);
/// A leaf that accumulates gradient.
Var leaf(Tensor value);

/// Seeds d(loss)/d(loss) = 1 and replays the tape of this thread in reverse.
/// The tape is cleared afterwards.
void backward(const Var& loss);
void clear_tape();
std::size_t tape_size();

bool grad_enabled();

/// Builds an op result. When recording and some parent requires a gradient,
/// the node is put on the tape and `backward` later reads `self.grad` and
/// accumulates into the parents.
Var make_op(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward);

/// Disables recording on this thread while alive.
class NoGrad {
 public:
  NoGrad();
  ~NoGrad();
  NoGrad(const NoGrad&) = delete;
  NoGrad& operator=(const NoGrad&) = delete;

 private:
  bool prev_;
};

// ---------------------------------------------------------------------------
// Ops. Shape mismatches throw Error(Shape) naming both shapes.

Var matmul(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
/// a (n x m) plus row r (1 x m) added to every row.
Var add_row(const Var& a, const Var& r);
Var scale(const Var& a, double s);
/// 1 - a
Var one_minus(const Var& a);
Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
Var slice_cols(const Var& a, std::size_t begin, std::size_t end);
Var slice_rows(const Var& a, std::size_t begin, std::size_t end);
std::vector<Var> split_cols(const Var& a, const std::vector<std::size_t>& widths);
Var transpose(const Var& a);

Var sigmoid(const Var& a);
Var tanh(const Var& a);
Var relu(const Var& a);
Var softmax_rows(const Var& a);

/// Sum over rows of -log softmax(logits)[target]; returns 1 x 1.
Var cross_entropy(const Var& logits, const std::vector<std::size_t>& targets);

Var sum_all(const Var& a);
/// Column means over rows: n x m -> 1 x m.
Var mean_rows(const Var& a);
/// Column maxima over rows: n x m -> 1 x m.
Var max_rows(const Var& a);

/// Inverted dropout: scales kept units by 1/(1-rate) at train time, identity otherwise.
Var dropout(const Var& a, double rate, bool train, std::mt19937_64& rng);

/// Rows of `table` selected by `ids`.
Var embedding(const Var& table, const std::vector<std::size_t>& ids);

/// Per-row normalisation with gain and bias rows.
Var layer_norm_rows(const Var& a, const Var& gain, const Var& bias, double eps = 1e-6);

}  // namespace spedn::tensor
