#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "spedn/tensor/tensor.hpp"

namespace spedn::tensor {

/// Named trainable tensors in insertion order, plus the RNG that initialises them.
class ParameterStore {
 public:
  explicit ParameterStore(std::uint64_t seed = 1) : rng_(seed), seed_(seed) {}

  /// Xavier-uniform over (rows + cols).
  Var weight(const std::string& name, std::size_t rows, std::size_t cols);
  /// Zero row vector.
  Var bias(const std::string& name, std::size_t cols, double fill = 0.0);
  /// N(0, 0.1) entries.
  Var embedding(const std::string& name, std::size_t rows, std::size_t cols);
  /// Adds an existing tensor as-is.
  Var add(const std::string& name, Tensor value);

  const Var& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) > 0; }
  std::size_t size() const { return order_.size(); }
  std::size_t scalar_count() const;
  const std::vector<std::string>& names() const { return order_; }
  std::vector<Var> all() const;

  void zero_grad();
  std::mt19937_64& rng() { return rng_; }
  std::uint64_t seed() const { return seed_; }

  /// Writes the binary checkpoint. Doubles are stored little-endian.
  void save(const std::filesystem::path& file) const;
  /// Replaces the values of parameters already declared, in any order.
  /// Unknown names and shape changes are errors.
  void load(const std::filesystem::path& file);
  std::string serialize() const;
  void deserialize(const std::string& bytes);

 private:
  Var insert(const std::string& name, Tensor value);

  std::vector<std::string> order_;
  std::map<std::string, Var> index_;
  std::mt19937_64 rng_;
  std::uint64_t seed_;
};

struct AdamConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. Parameters without a gradient are left alone,
/// including their moments.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}
  void step(ParameterStore& store);
  std::size_t steps() const { return t_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  std::size_t t_ = 0;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> moments_;
};

/// Rescales every gradient so the global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
double clip_grad_norm(ParameterStore& store, double max_norm);

struct GradCheckReport {
  double max_rel_error = 0;
  double max_abs_error = 0;
  std::size_t checked = 0;
  std::string worst;  // "input[i]"
};

/// Compares reverse-mode gradients of a scalar function with central
/// differences, element by element. rel = |a - n| / max(|a|, |n|, floor).
GradCheckReport grad_check(const std::function<Var(const std::vector<Var>&)>& fn, const std::vector<Tensor>& inputs,
                           double step = 1e-5, double floor = 1e-4);

/// Same check over existing leaves (typically model parameters), perturbed in place.
GradCheckReport grad_check_leaves(const std::function<Var()>& fn, const std::vector<Var>& leaves,
                                  double step = 1e-5, double floor = 1e-4);

}  // namespace spedn::tensor
