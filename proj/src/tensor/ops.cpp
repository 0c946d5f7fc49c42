#include <algorithm>
#include <cmath>
#include <limits>

#include "spedn/common/error.hpp"
#include "spedn/tensor/kernels.hpp"
#include "spedn/tensor/tensor.hpp"

namespace spedn::tensor {

namespace {

[[noreturn]] void mismatch(const char* op, const Tensor& a, const Tensor& b) {
  throw Error(ErrorKind::Shape, std::string(op) + ": shapes " + a.shape_string() + " and " + b.shape_string());
}

void same_shape(const char* op, const Var& a, const Var& b) {
  if (a->value.rows() != b->value.rows() || a->value.cols() != b->value.cols()) mismatch(op, a->value, b->value);
}

Tensor like(const Tensor& t, double fill = 0.0) { return Tensor(t.rows(), t.cols(), fill); }

void acc(const Var& p, const Tensor& g) {
  if (!p->requires_grad) return;
  auto& dst = p->ensure_grad();
  kernels::axpy(g.size(), 1.0, g.data(), dst.data());
}

template <class F>
Var unary(const Var& a, F f, std::function<double(double x, double y)> dfdx) {
  Tensor y = like(a->value);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = f(a->value[i]);
  return make_op(std::move(y), {a}, [a, dfdx](Node& self) {
    if (!a->requires_grad) return;
    auto& g = a->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * dfdx(a->value[i], self.value[i]);
  });
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  const auto& A = a->value;
  const auto& B = b->value;
  if (A.cols() != B.rows()) mismatch("matmul", A, B);
  const std::size_t n = A.rows(), k = A.cols(), m = B.cols();
  Tensor C(n, m);
  kernels::gemm_nn(n, m, k, A.data(), B.data(), C.data());
  return make_op(std::move(C), {a, b}, [a, b, n, k, m](Node& self) {
    if (a->requires_grad) kernels::gemm_nt(n, k, m, self.grad.data(), b->value.data(), a->ensure_grad().data());
    if (b->requires_grad) kernels::gemm_tn(k, m, n, a->value.data(), self.grad.data(), b->ensure_grad().data());
  });
}

Var add(const Var& a, const Var& b) {
  same_shape("add", a, b);
  Tensor y = like(a->value);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a->value[i] + b->value[i];
  return make_op(std::move(y), {a, b}, [a, b](Node& self) {
    acc(a, self.grad);
    acc(b, self.grad);
  });
}

Var sub(const Var& a, const Var& b) {
  same_shape("sub", a, b);
  Tensor y = like(a->value);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a->value[i] - b->value[i];
  return make_op(std::move(y), {a, b}, [a, b](Node& self) {
    acc(a, self.grad);
    if (b->requires_grad) kernels::axpy(self.grad.size(), -1.0, self.grad.data(), b->ensure_grad().data());
  });
}

Var mul(const Var& a, const Var& b) {
  same_shape("mul", a, b);
  Tensor y = like(a->value);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a->value[i] * b->value[i];
  return make_op(std::move(y), {a, b}, [a, b](Node& self) {
    if (a->requires_grad) {
      auto& g = a->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * b->value[i];
    }
    if (b->requires_grad) {
      auto& g = b->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * a->value[i];
    }
  });
}

Var add_row(const Var& a, const Var& r) {
  const auto& A = a->value;
  if (r->value.rows() != 1 || r->value.cols() != A.cols()) mismatch("add_row", A, r->value);
  const std::size_t n = A.rows(), m = A.cols();
  Tensor y = like(A);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) y[i * m + j] = A[i * m + j] + r->value[j];
  return make_op(std::move(y), {a, r}, [a, r, n, m](Node& self) {
    acc(a, self.grad);
    if (r->requires_grad) {
      auto& g = r->ensure_grad();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) g[j] += self.grad[i * m + j];
    }
  });
}

Var scale(const Var& a, double s) {
  Tensor y = like(a->value);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a->value[i] * s;
  return make_op(std::move(y), {a}, [a, s](Node& self) {
    if (a->requires_grad) kernels::axpy(self.grad.size(), s, self.grad.data(), a->ensure_grad().data());
  });
}

Var one_minus(const Var& a) {
  Tensor y = like(a->value);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = 1.0 - a->value[i];
  return make_op(std::move(y), {a}, [a](Node& self) {
    if (a->requires_grad) kernels::axpy(self.grad.size(), -1.0, self.grad.data(), a->ensure_grad().data());
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw Error(ErrorKind::Shape, "concat_cols: no inputs");
  const std::size_t n = parts[0]->value.rows();
  std::size_t m = 0;
  for (const auto& p : parts) {
    if (p->value.rows() != n) mismatch("concat_cols", parts[0]->value, p->value);
    m += p->value.cols();
  }
  Tensor y(n, m);
  std::size_t off = 0;
  for (const auto& p : parts) {
    const std::size_t w = p->value.cols();
    for (std::size_t i = 0; i < n; ++i)
      std::copy_n(p->value.data() + i * w, w, y.data() + i * m + off);
    off += w;
  }
  return make_op(std::move(y), parts, [parts, n, m](Node& self) {
    std::size_t off = 0;
    for (const auto& p : parts) {
      const std::size_t w = p->value.cols();
      if (p->requires_grad) {
        auto& g = p->ensure_grad();
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < w; ++j) g[i * w + j] += self.grad[i * m + off + j];
      }
      off += w;
    }
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw Error(ErrorKind::Shape, "concat_rows: no inputs");
  const std::size_t m = parts[0]->value.cols();
  std::size_t n = 0;
  for (const auto& p : parts) {
    if (p->value.cols() != m) mismatch("concat_rows", parts[0]->value, p->value);
    n += p->value.rows();
  }
  Tensor y(n, m);
  std::size_t off = 0;
  for (const auto& p : parts) {
    std::copy(p->value.values().begin(), p->value.values().end(), y.data() + off);
    off += p->value.size();
  }
  return make_op(std::move(y), parts, [parts](Node& self) {
    std::size_t off = 0;
    for (const auto& p : parts) {
      if (p->requires_grad) kernels::axpy(p->value.size(), 1.0, self.grad.data() + off, p->ensure_grad().data());
      off += p->value.size();
    }
  });
}

Var slice_cols(const Var& a, std::size_t begin, std::size_t end) {
  const auto& A = a->value;
  if (begin > end || end > A.cols())
    throw Error(ErrorKind::Shape, "slice_cols: [" + std::to_string(begin) + ", " + std::to_string(end) +
                                      ") out of " + A.shape_string());
  const std::size_t n = A.rows(), m = A.cols(), w = end - begin;
  Tensor y(n, w);
  for (std::size_t i = 0; i < n; ++i) std::copy_n(A.data() + i * m + begin, w, y.data() + i * w);
  return make_op(std::move(y), {a}, [a, n, m, w, begin](Node& self) {
    if (!a->requires_grad) return;
    auto& g = a->ensure_grad();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < w; ++j) g[i * m + begin + j] += self.grad[i * w + j];
  });
}

Var slice_rows(const Var& a, std::size_t begin, std::size_t end) {
  const auto& A = a->value;
  if (begin > end || end > A.rows())
    throw Error(ErrorKind::Shape, "slice_rows: [" + std::to_string(begin) + ", " + std::to_string(end) +
                                      ") out of " + A.shape_string());
  const std::size_t m = A.cols();
  Tensor y(end - begin, m);
  std::copy_n(A.data() + begin * m, (end - begin) * m, y.data());
  return make_op(std::move(y), {a}, [a, begin, m](Node& self) {
    if (a->requires_grad)
      kernels::axpy(self.grad.size(), 1.0, self.grad.data(), a->ensure_grad().data() + begin * m);
  });
}

std::vector<Var> split_cols(const Var& a, const std::vector<std::size_t>& widths) {
  std::size_t total = 0;
  for (auto w : widths) total += w;
  if (total != a->value.cols())
    throw Error(ErrorKind::Shape, "split_cols: widths sum to " + std::to_string(total) + " for " +
                                      a->value.shape_string());
  std::vector<Var> out;
  std::size_t off = 0;
  for (auto w : widths) {
    out.push_back(slice_cols(a, off, off + w));
    off += w;
  }
  return out;
}

Var transpose(const Var& a) {
  const auto& A = a->value;
  const std::size_t n = A.rows(), m = A.cols();
  Tensor y(m, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) y[j * n + i] = A[i * m + j];
  return make_op(std::move(y), {a}, [a, n, m](Node& self) {
    if (!a->requires_grad) return;
    auto& g = a->ensure_grad();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) g[i * m + j] += self.grad[j * n + i];
  });
}

Var sigmoid(const Var& a) {
  return unary(
      a, [](double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh(const Var& a) {
  return unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var relu(const Var& a) {
  return unary(a, [](double x) { return x > 0 ? x : 0.0; }, [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Var softmax_rows(const Var& a) {
  const auto& A = a->value;
  const std::size_t n = A.rows(), m = A.cols();
  Tensor y = like(A);
  for (std::size_t i = 0; i < n; ++i) {
    const double* x = A.data() + i * m;
    double* yi = y.data() + i * m;
    const double mx = *std::max_element(x, x + m);
    double z = 0;
    for (std::size_t j = 0; j < m; ++j) z += (yi[j] = std::exp(x[j] - mx));
    for (std::size_t j = 0; j < m; ++j) yi[j] /= z;
  }
  return make_op(std::move(y), {a}, [a, n, m](Node& self) {
    if (!a->requires_grad) return;
    auto& g = a->ensure_grad();
    for (std::size_t i = 0; i < n; ++i) {
      const double* yi = self.value.data() + i * m;
      const double* dy = self.grad.data() + i * m;
      double dot = 0;
      for (std::size_t j = 0; j < m; ++j) dot += dy[j] * yi[j];
      for (std::size_t j = 0; j < m; ++j) g[i * m + j] += yi[j] * (dy[j] - dot);
    }
  });
}

Var cross_entropy(const Var& logits, const std::vector<std::size_t>& targets) {
  const auto& L = logits->value;
  const std::size_t n = L.rows(), m = L.cols();
  if (targets.size() != n)
    throw Error(ErrorKind::Shape, "cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                                      L.shape_string());
  Tensor probs = like(L);
  double loss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (targets[i] >= m)
      throw Error(ErrorKind::Shape, "cross_entropy: target " + std::to_string(targets[i]) + " outside " +
                                        L.shape_string());
    const double* x = L.data() + i * m;
    const double mx = *std::max_element(x, x + m);
    double z = 0;
    for (std::size_t j = 0; j < m; ++j) z += (probs[i * m + j] = std::exp(x[j] - mx));
    for (std::size_t j = 0; j < m; ++j) probs[i * m + j] /= z;
    loss += std::log(z) + mx - x[targets[i]];
  }
  return make_op(Tensor(1, 1, loss), {logits}, [logits, targets, probs = std::move(probs), m](Node& self) {
    if (!logits->requires_grad) return;
    auto& g = logits->ensure_grad();
    const double d = self.grad[0];
    for (std::size_t i = 0; i < targets.size(); ++i)
      for (std::size_t j = 0; j < m; ++j)
        g[i * m + j] += d * (probs[i * m + j] - (j == targets[i] ? 1.0 : 0.0));
  });
}

Var sum_all(const Var& a) {
  double s = 0;
  for (auto v : a->value.values()) s += v;
  return make_op(Tensor(1, 1, s), {a}, [a](Node& self) {
    if (!a->requires_grad) return;
    const double d = self.grad[0];
    for (auto& g : a->ensure_grad().values()) g += d;
  });
}

Var mean_rows(const Var& a) {
  const auto& A = a->value;
  const std::size_t n = A.rows(), m = A.cols();
  if (n == 0) throw Error(ErrorKind::Shape, "mean_rows: no rows in " + A.shape_string());
  Tensor y(1, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) y[j] += A[i * m + j];
  for (std::size_t j = 0; j < m; ++j) y[j] /= static_cast<double>(n);
  return make_op(std::move(y), {a}, [a, n, m](Node& self) {
    if (!a->requires_grad) return;
    auto& g = a->ensure_grad();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) g[i * m + j] += self.grad[j] / static_cast<double>(n);
  });
}

Var max_rows(const Var& a) {
  const auto& A = a->value;
  const std::size_t n = A.rows(), m = A.cols();
  if (n == 0) throw Error(ErrorKind::Shape, "max_rows: no rows in " + A.shape_string());
  Tensor y(1, m);
  std::vector<std::size_t> arg(m, 0);
  for (std::size_t j = 0; j < m; ++j) {
    y[j] = A[j];
    for (std::size_t i = 1; i < n; ++i)
      if (A[i * m + j] > y[j]) y[j] = A[i * m + j], arg[j] = i;
  }
  return make_op(std::move(y), {a}, [a, arg = std::move(arg), m](Node& self) {
    if (!a->requires_grad) return;
    auto& g = a->ensure_grad();
    for (std::size_t j = 0; j < m; ++j) g[arg[j] * m + j] += self.grad[j];
  });
}

Var dropout(const Var& a, double rate, bool train, std::mt19937_64& rng) {
  if (!train || rate <= 0) return a;
  if (rate >= 1) throw Error(ErrorKind::Shape, "dropout rate must be below 1");
  std::bernoulli_distribution keep(1.0 - rate);
  const double s = 1.0 / (1.0 - rate);
  Tensor mask = like(a->value);
  for (auto& v : mask.values()) v = keep(rng) ? s : 0.0;
  Tensor y = like(a->value);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a->value[i] * mask[i];
  return make_op(std::move(y), {a}, [a, mask = std::move(mask)](Node& self) {
    if (!a->requires_grad) return;
    auto& g = a->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * mask[i];
  });
}

Var embedding(const Var& table, const std::vector<std::size_t>& ids) {
  const auto& T = table->value;
  const std::size_t m = T.cols();
  Tensor y(ids.size(), m);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= T.rows())
      throw Error(ErrorKind::Shape, "embedding: id " + std::to_string(ids[i]) + " outside " + T.shape_string());
    std::copy_n(T.data() + ids[i] * m, m, y.data() + i * m);
  }
  return make_op(std::move(y), {table}, [table, ids, m](Node& self) {
    if (!table->requires_grad) return;
    auto& g = table->ensure_grad();
    for (std::size_t i = 0; i < ids.size(); ++i)
      kernels::serial::axpy(m, 1.0, self.grad.data() + i * m, g.data() + ids[i] * m);
  });
}

Var layer_norm_rows(const Var& a, const Var& gain, const Var& bias, double eps) {
  const auto& A = a->value;
  const std::size_t n = A.rows(), m = A.cols();
  if (gain->value.size() != m) mismatch("layer_norm_rows", A, gain->value);
  if (bias->value.size() != m) mismatch("layer_norm_rows", A, bias->value);
  Tensor xhat = like(A), y = like(A);
  std::vector<double> inv(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* x = A.data() + i * m;
    double mu = 0, var = 0;
    for (std::size_t j = 0; j < m; ++j) mu += x[j];
    mu /= static_cast<double>(m);
    for (std::size_t j = 0; j < m; ++j) var += (x[j] - mu) * (x[j] - mu);
    var /= static_cast<double>(m);
    inv[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < m; ++j) {
      xhat[i * m + j] = (x[j] - mu) * inv[i];
      y[i * m + j] = xhat[i * m + j] * gain->value[j] + bias->value[j];
    }
  }
  return make_op(std::move(y), {a, gain, bias},
                 [a, gain, bias, xhat = std::move(xhat), inv = std::move(inv), n, m](Node& self) {
                   const auto& dy = self.grad;
                   if (gain->requires_grad) {
                     auto& g = gain->ensure_grad();
                     for (std::size_t i = 0; i < n; ++i)
                       for (std::size_t j = 0; j < m; ++j) g[j] += dy[i * m + j] * xhat[i * m + j];
                   }
                   if (bias->requires_grad) {
                     auto& g = bias->ensure_grad();
                     for (std::size_t i = 0; i < n; ++i)
                       for (std::size_t j = 0; j < m; ++j) g[j] += dy[i * m + j];
                   }
                   if (!a->requires_grad) return;
                   auto& g = a->ensure_grad();
                   const double dm = static_cast<double>(m);
                   std::vector<double> dx(m);
                   for (std::size_t i = 0; i < n; ++i) {
                     double s1 = 0, s2 = 0;
                     for (std::size_t j = 0; j < m; ++j) {
                       dx[j] = dy[i * m + j] * gain->value[j];
                       s1 += dx[j];
                       s2 += dx[j] * xhat[i * m + j];
                     }
                     for (std::size_t j = 0; j < m; ++j)
                       g[i * m + j] += inv[i] / dm * (dm * dx[j] - s1 - xhat[i * m + j] * s2);
                   }
                 });
}

}  // namespace spedn::tensor
