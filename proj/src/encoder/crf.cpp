#include "spedn/encoder/crf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spedn/common/error.hpp"

namespace spedn::encoder::crf {

using tensor::Node;
using tensor::Tensor;
using tensor::Var;

namespace {

double lse(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (std::isinf(m)) return m;
  double s = 0;
  for (auto x : v) s += std::exp(x - m);
  return m + std::log(s);
}

void check(const Tensor& e, const Tensor& trans) {
  const std::size_t L = e.cols();
  if (L == 0 || trans.rows() != L + 2 || trans.cols() != L + 2)
    throw Error(ErrorKind::Shape, "crf: emissions " + e.shape_string() + " with transitions " + trans.shape_string());
}

// alpha[t][k]: log-sum of prefixes ending in k at t, emission included.
std::vector<std::vector<double>> forward(const Tensor& e, const Tensor& tr) {
  const std::size_t T = e.rows(), L = e.cols(), S = start(L);
  std::vector<std::vector<double>> alpha(T, std::vector<double>(L));
  for (std::size_t k = 0; k < L; ++k) alpha[0][k] = tr.at(S, k) + e.at(0, k);
  std::vector<double> tmp(L);
  for (std::size_t t = 1; t < T; ++t)
    for (std::size_t k = 0; k < L; ++k) {
      for (std::size_t a = 0; a < L; ++a) tmp[a] = alpha[t - 1][a] + tr.at(a, k);
      alpha[t][k] = lse(tmp) + e.at(t, k);
    }
  return alpha;
}

// beta[t][k]: log-sum of suffixes after position t given label k at t.
std::vector<std::vector<double>> backward(const Tensor& e, const Tensor& tr) {
  const std::size_t T = e.rows(), L = e.cols(), E = stop(L);
  std::vector<std::vector<double>> beta(T, std::vector<double>(L));
  for (std::size_t k = 0; k < L; ++k) beta[T - 1][k] = tr.at(k, E);
  std::vector<double> tmp(L);
  for (std::size_t t = T - 1; t-- > 0;)
    for (std::size_t a = 0; a < L; ++a) {
      for (std::size_t b = 0; b < L; ++b) tmp[b] = tr.at(a, b) + e.at(t + 1, b) + beta[t + 1][b];
      beta[t][a] = lse(tmp);
    }
  return beta;
}

double finish(const std::vector<double>& last, const Tensor& tr) {
  const std::size_t L = last.size();
  std::vector<double> tmp(L);
  for (std::size_t k = 0; k < L; ++k) tmp[k] = last[k] + tr.at(k, stop(L));
  return lse(tmp);
}

}  // namespace

double score(const Tensor& e, const Tensor& tr, const std::vector<std::size_t>& y) {
  check(e, tr);
  const std::size_t L = e.cols();
  if (y.size() != e.rows()) throw Error(ErrorKind::Shape, "crf: " + std::to_string(y.size()) + " labels for " +
                                                              e.shape_string());
  if (y.empty()) return tr.at(start(L), stop(L));
  double s = tr.at(start(L), y[0]);
  for (std::size_t t = 0; t < y.size(); ++t) {
    if (y[t] >= L) throw Error(ErrorKind::Shape, "crf: label " + std::to_string(y[t]) + " out of range");
    s += e.at(t, y[t]);
    if (t) s += tr.at(y[t - 1], y[t]);
  }
  return s + tr.at(y.back(), stop(L));
}

double log_partition(const Tensor& e, const Tensor& tr) {
  check(e, tr);
  if (e.rows() == 0) return tr.at(start(e.cols()), stop(e.cols()));
  return finish(forward(e, tr).back(), tr);
}

std::vector<std::size_t> viterbi(const Tensor& e, const Tensor& tr) {
  check(e, tr);
  const std::size_t T = e.rows(), L = e.cols();
  if (T == 0) return {};
  std::vector<std::vector<double>> best(T, std::vector<double>(L));
  std::vector<std::vector<std::size_t>> back(T, std::vector<std::size_t>(L, 0));
  for (std::size_t k = 0; k < L; ++k) best[0][k] = tr.at(start(L), k) + e.at(0, k);
  for (std::size_t t = 1; t < T; ++t)
    for (std::size_t k = 0; k < L; ++k) {
      double m = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < L; ++a) {
        const double s = best[t - 1][a] + tr.at(a, k);
        if (s > m) m = s, back[t][k] = a;
      }
      best[t][k] = m + e.at(t, k);
    }
  std::size_t arg = 0;
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < L; ++k) {
    const double s = best[T - 1][k] + tr.at(k, stop(L));
    if (s > m) m = s, arg = k;
  }
  std::vector<std::size_t> path(T);
  path[T - 1] = arg;
  for (std::size_t t = T - 1; t > 0; --t) path[t - 1] = back[t][path[t]];
  return path;
}

Var neg_log_likelihood(const Var& emissions, const Var& trans, const std::vector<std::size_t>& gold) {
  const Tensor& e = emissions->value;
  const Tensor& tr = trans->value;
  check(e, tr);
  if (e.rows() == 0) throw Error(ErrorKind::Shape, "crf: empty sequence");
  const double gold_score = score(e, tr, gold);
  auto alpha = forward(e, tr);
  const double logz = finish(alpha.back(), tr);

  return tensor::make_op(
      Tensor(1, 1, logz - gold_score), {emissions, trans},
      [emissions, trans, gold, alpha = std::move(alpha), logz](Node& self) {
        const Tensor& e = emissions->value;
        const Tensor& tr = trans->value;
        const std::size_t T = e.rows(), L = e.cols(), S = start(L), E = stop(L);
        const double d = self.grad[0];
        auto beta = backward(e, tr);
        // expected counts minus gold counts
        if (emissions->requires_grad) {
          auto& g = emissions->ensure_grad();
          for (std::size_t t = 0; t < T; ++t) {
            for (std::size_t k = 0; k < L; ++k) g.at(t, k) += d * std::exp(alpha[t][k] + beta[t][k] - logz);
            g.at(t, gold[t]) -= d;
          }
        }
        if (trans->requires_grad) {
          auto& g = trans->ensure_grad();
          for (std::size_t k = 0; k < L; ++k) {
            g.at(S, k) += d * std::exp(alpha[0][k] + beta[0][k] - logz);
            g.at(k, E) += d * std::exp(alpha[T - 1][k] + tr.at(k, E) - logz);
          }
          for (std::size_t t = 1; t < T; ++t)
            for (std::size_t a = 0; a < L; ++a)
              for (std::size_t b = 0; b < L; ++b)
                g.at(a, b) += d * std::exp(alpha[t - 1][a] + tr.at(a, b) + e.at(t, b) + beta[t][b] - logz);
          g.at(S, gold[0]) -= d;
          g.at(gold[T - 1], E) -= d;
          for (std::size_t t = 1; t < T; ++t) g.at(gold[t - 1], gold[t]) -= d;
        }
      });
}

}  // namespace spedn::encoder::crf
