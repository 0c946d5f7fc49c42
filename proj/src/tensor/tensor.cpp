#include "spedn/tensor/tensor.hpp"

#include <sstream>

#include "spedn/common/error.hpp"

namespace spedn::tensor {

namespace {

std::size_t product(const Shape& s) {
  std::size_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

thread_local std::vector<Var> g_tape;
thread_local bool g_recording = true;

}  // namespace

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(product(shape_), fill) {}

Tensor Tensor::from(std::size_t rows, std::size_t cols, std::vector<double> values) {
  if (values.size() != rows * cols)
    throw Error(ErrorKind::Shape, "expected " + std::to_string(rows * cols) + " values, got " +
                                      std::to_string(values.size()));
  Tensor t;
  t.shape_ = {rows, cols};
  t.data_ = std::move(values);
  return t;
}

Tensor Tensor::row(std::vector<double> values) {
  const auto n = values.size();
  return from(1, n, std::move(values));
}

std::size_t Tensor::rows() const {
  if (shape_.size() < 2) return shape_.empty() ? 0 : 1;
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (shape_.empty()) return 0;
  if (shape_.size() == 1) return shape_[0];
  std::size_t n = 1;
  for (std::size_t i = 1; i < shape_.size(); ++i) n *= shape_[i];
  return n;
}

std::string Tensor::shape_string() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape_.size(); ++i) os << (i ? "x" : "") << shape_[i];
  os << ']';
  return os.str();
}

Tensor& Node::ensure_grad() {
  if (grad.empty()) grad = Tensor(value.shape(), 0.0);
  return grad;
}

Var constant(Tensor value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  return n;
}

Var leaf(Tensor value) {
  auto n = constant(std::move(value));
  n->requires_grad = true;
  return n;
}

bool grad_enabled() { return g_recording; }

NoGrad::NoGrad() : prev_(g_recording) { g_recording = false; }
NoGrad::~NoGrad() { g_recording = prev_; }

Var make_op(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  if (!g_recording) return n;
  bool needs = false;
  for (const auto& p : parents) needs = needs || p->requires_grad;
  if (!needs) return n;
  n->requires_grad = true;
  n->parents = std::move(parents);
  n->backward = std::move(backward);
  g_tape.push_back(n);
  return n;
}

void backward(const Var& loss) {
  if (loss->value.size() != 1)
    throw Error(ErrorKind::Shape, "backward needs a scalar loss, got " + loss->value.shape_string());
  if (!loss->requires_grad) {
    g_tape.clear();
    return;
  }
  loss->ensure_grad()[0] += 1.0;
  for (auto it = g_tape.rbegin(); it != g_tape.rend(); ++it) {
    Node& n = **it;
    if (n.has_grad() && n.backward) n.backward(n);
    // interior nodes are done; free the graph as we go
    n.backward = nullptr;
    n.parents.clear();
  }
  g_tape.clear();
}

void clear_tape() { g_tape.clear(); }
std::size_t tape_size() { return g_tape.size(); }

}  // namespace spedn::tensor
