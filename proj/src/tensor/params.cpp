#include "spedn/tensor/params.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "spedn/common/error.hpp"

namespace spedn::tensor {

namespace {

void put_le(std::string& out, double v) {
  auto u = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
}

double get_le(const char* p) {
  std::uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return std::bit_cast<double>(u);
}

}  // namespace

Var ParameterStore::insert(const std::string& name, Tensor value) {
  if (index_.count(name)) throw Error(ErrorKind::Model, "duplicate parameter " + name);
  if (name.empty() || name.find_first_of(" \n\t") != std::string::npos)
    throw Error(ErrorKind::Model, "bad parameter name '" + name + "'");
  auto v = leaf(std::move(value));
  order_.push_back(name);
  index_[name] = v;
  return v;
}

Var ParameterStore::weight(const std::string& name, std::size_t rows, std::size_t cols) {
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> u(-a, a);
  Tensor t(rows, cols);
  for (auto& v : t.values()) v = u(rng_);
  return insert(name, std::move(t));
}

Var ParameterStore::bias(const std::string& name, std::size_t cols, double fill) {
  return insert(name, Tensor(1, cols, fill));
}

Var ParameterStore::embedding(const std::string& name, std::size_t rows, std::size_t cols) {
  std::normal_distribution<double> n(0.0, 0.1);
  Tensor t(rows, cols);
  for (auto& v : t.values()) v = n(rng_);
  return insert(name, std::move(t));
}

Var ParameterStore::add(const std::string& name, Tensor value) { return insert(name, std::move(value)); }

const Var& ParameterStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error(ErrorKind::Model, "no parameter " + name);
  return it->second;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, v] : index_) n += v->value.size();
  return n;
}

std::vector<Var> ParameterStore::all() const {
  std::vector<Var> out;
  for (const auto& n : order_) out.push_back(index_.at(n));
  return out;
}

void ParameterStore::zero_grad() {
  for (auto& [_, v] : index_) v->grad = Tensor();
}

std::string ParameterStore::serialize() const {
  std::string out = "ckpt v1 " + std::to_string(order_.size()) + "\n";
  for (const auto& name : order_) {
    const auto& t = index_.at(name)->value;
    out += name + " " + std::to_string(t.shape().size());
    for (auto d : t.shape()) out += " " + std::to_string(d);
    out += "\n";
    for (auto v : t.values()) put_le(out, v);
  }
  return out;
}

void ParameterStore::deserialize(const std::string& bytes) {
  std::size_t pos = 0;
  auto line = [&]() {
    auto nl = bytes.find('\n', pos);
    if (nl == std::string::npos) throw Error(ErrorKind::Parse, "checkpoint truncated at byte " + std::to_string(pos));
    std::string s = bytes.substr(pos, nl - pos);
    pos = nl + 1;
    return s;
  };
  std::istringstream head(line());
  std::string magic, version;
  std::size_t count = 0;
  if (!(head >> magic >> version >> count) || magic != "ckpt" || version != "v1")
    throw Error(ErrorKind::Parse, "not a v1 checkpoint");
  std::map<std::string, Tensor> loaded;
  for (std::size_t k = 0; k < count; ++k) {
    std::istringstream rec(line());
    std::string name;
    std::size_t nd = 0;
    if (!(rec >> name >> nd)) throw Error(ErrorKind::Parse, "bad parameter record " + std::to_string(k));
    Shape shape(nd);
    for (auto& d : shape)
      if (!(rec >> d)) throw Error(ErrorKind::Parse, "bad dims for " + name);
    Tensor t(shape);
    if (pos + 8 * t.size() > bytes.size()) throw Error(ErrorKind::Parse, "checkpoint truncated in " + name);
    for (auto& v : t.values()) {
      v = get_le(bytes.data() + pos);
      pos += 8;
    }
    loaded[name] = std::move(t);
  }
  if (pos != bytes.size()) throw Error(ErrorKind::Parse, "trailing bytes after checkpoint");
  for (auto& [name, t] : loaded) {
    auto it = index_.find(name);
    if (it == index_.end()) throw Error(ErrorKind::Model, "checkpoint has unknown parameter " + name);
    if (it->second->value.shape() != t.shape())
      throw Error(ErrorKind::Shape, name + ": checkpoint " + t.shape_string() + " vs model " +
                                        it->second->value.shape_string());
  }
  if (loaded.size() != index_.size()) throw Error(ErrorKind::Model, "checkpoint is missing parameters");
  for (auto& [name, t] : loaded) index_[name]->value = std::move(t);
}

void ParameterStore::save(const std::filesystem::path& file) const {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + file.string());
  auto bytes = serialize();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, "write failed for " + file.string());
}

void ParameterStore::load(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  deserialize(ss.str());
}

void Adam::step(ParameterStore& store) {
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (const auto& name : store.names()) {
    auto& p = store.get(name);
    if (!p->has_grad()) continue;
    auto& [m, v] = moments_[name];
    if (m.empty()) m.assign(p->value.size(), 0.0), v.assign(p->value.size(), 0.0);
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double g = p->grad[i];
      m[i] = config_.beta1 * m[i] + (1 - config_.beta1) * g;
      v[i] = config_.beta2 * v[i] + (1 - config_.beta2) * g * g;
      p->value[i] -= config_.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.eps);
    }
  }
}

double clip_grad_norm(ParameterStore& store, double max_norm) {
  double sq = 0;
  for (const auto& p : store.all())
    if (p->has_grad())
      for (auto g : p->grad.values()) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0) {
    const double s = max_norm / norm;
    for (const auto& p : store.all())
      if (p->has_grad())
        for (auto& g : p->grad.values()) g *= s;
  }
  return norm;
}

GradCheckReport grad_check_leaves(const std::function<Var()>& fn, const std::vector<Var>& leaves, double step,
                                  double floor) {
  clear_tape();
  for (const auto& v : leaves) v->grad = Tensor();
  auto out = fn();
  if (out->value.size() != 1) throw Error(ErrorKind::Shape, "grad_check needs a scalar function");
  backward(out);
  std::vector<Tensor> ana;
  for (const auto& v : leaves) ana.push_back(v->has_grad() ? v->grad : Tensor(v->value.shape(), 0.0));

  auto eval = [&] {
    NoGrad ng;
    return fn()->value[0];
  };

  GradCheckReport r;
  for (std::size_t k = 0; k < leaves.size(); ++k) {
    auto& val = leaves[k]->value;
    for (std::size_t i = 0; i < val.size(); ++i) {
      const double x = val[i];
      val[i] = x + step;
      const double hi = eval();
      val[i] = x - step;
      const double lo = eval();
      val[i] = x;
      const double num = (hi - lo) / (2 * step);
      const double a = ana[k][i];
      const double abs = std::fabs(a - num);
      const double rel = abs / std::max({std::fabs(a), std::fabs(num), floor});
      r.max_abs_error = std::max(r.max_abs_error, abs);
      if (rel > r.max_rel_error) {
        r.max_rel_error = rel;
        r.worst = "input" + std::to_string(k) + "[" + std::to_string(i) + "]";
      }
      ++r.checked;
    }
  }
  return r;
}

GradCheckReport grad_check(const std::function<Var(const std::vector<Var>&)>& fn, const std::vector<Tensor>& inputs,
                           double step, double floor) {
  std::vector<Var> vars;
  for (const auto& t : inputs) vars.push_back(leaf(t));
  return grad_check_leaves([&] { return fn(vars); }, vars, step, floor);
}

}  // namespace spedn::tensor
