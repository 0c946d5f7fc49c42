#pragma once

#include <vector>

#include "spedn/tensor/tensor.hpp"

namespace spedn::encoder {

/// Linear-chain CRF scores. Emissions are T x L; transitions are
/// (L+2) x (L+2) with row/column L the start state and L+1 the stop state.
namespace crf {

inline std::size_t start(std::size_t labels) { return labels; }
inline std::size_t stop(std::size_t labels) { return labels + 1; }

/// start->y1 + sum of emissions + sum of y(t-1)->y(t) + yT->stop.
double score(const tensor::Tensor& emissions, const tensor::Tensor& trans, const std::vector<std::size_t>& labels);
/// log of the sum of exp(score) over all label sequences, by the forward algorithm.
double log_partition(const tensor::Tensor& emissions, const tensor::Tensor& trans);
/// Highest-scoring label sequence. Ties go to the smaller label index.
std::vector<std::size_t> viterbi(const tensor::Tensor& emissions, const tensor::Tensor& trans);

/// -log P(gold | emissions), differentiable in both emissions and transitions.
tensor::Var neg_log_likelihood(const tensor::Var& emissions, const tensor::Var& trans,
                               const std::vector<std::size_t>& gold);

}  // namespace crf

}  // namespace spedn::encoder
