#include "cast/params.hpp"

#include <cmath>
#include <cstring>

namespace cast::nn {

Parameter& ParameterStore::create(const std::string& name, int rows, int cols,
                                  Rng& rng) {
  if (by_name_.count(name))
    throw std::logic_error("duplicate parameter name: " + name);
  const double limit = std::sqrt(6.0 / double(rows + cols));
  Mat value(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      value(r, c) = (rng.uniform01() * 2.0 - 1.0) * limit;
  ordered_.push_back(std::make_unique<Parameter>(name, std::move(value)));
  by_name_[name] = ordered_.back().get();
  return *ordered_.back();
}

Parameter& ParameterStore::create_zero(const std::string& name, int rows,
                                       int cols) {
  if (by_name_.count(name))
    throw std::logic_error("duplicate parameter name: " + name);
  ordered_.push_back(
      std::make_unique<Parameter>(name, Mat::Zero(rows, cols)));
  by_name_[name] = ordered_.back().get();
  return *ordered_.back();
}

Parameter& ParameterStore::get(const std::string& name) {
  auto it = by_name_.find(name);
  if (it == by_name_.end())
    throw std::out_of_range("no parameter named " + name);
  return *it->second;
}

const Parameter& ParameterStore::get(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end())
    throw std::out_of_range("no parameter named " + name);
  return *it->second;
}

void ParameterStore::zero_grads() {
  for (auto& p : ordered_) p->grad.setZero();
}

std::uint64_t ParameterStore::checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* data, std::size_t n) {
    const unsigned char* b = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& p : ordered_) {
    mix(p->name.data(), p->name.size());
    mix(p->value.data(), sizeof(double) * std::size_t(p->value.size()));
  }
  return h;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : ordered_) n += std::size_t(p->value.size());
  return n;
}

std::vector<double> ParameterStore::flatten_values() const {
  std::vector<double> out;
  out.reserve(scalar_count());
  for (const auto& p : ordered_)
    out.insert(out.end(), p->value.data(), p->value.data() + p->value.size());
  return out;
}

std::vector<double> ParameterStore::flatten_grads() const {
  std::vector<double> out;
  out.reserve(scalar_count());
  for (const auto& p : ordered_)
    out.insert(out.end(), p->grad.data(), p->grad.data() + p->grad.size());
  return out;
}

void ParameterStore::set_values(const std::vector<double>& flat) {
  if (flat.size() != scalar_count())
    throw std::invalid_argument("set_values: size mismatch");
  std::size_t at = 0;
  for (auto& p : ordered_) {
    std::memcpy(p->value.data(), flat.data() + at,
                sizeof(double) * std::size_t(p->value.size()));
    at += std::size_t(p->value.size());
  }
}

double ParameterStore::grad_norm() const {
  double sq = 0.0;
  for (const auto& p : ordered_) sq += p->grad.squaredNorm();
  return std::sqrt(sq);
}

void AdamOptimizer::step(ParameterStore& store) {
  if (m_.empty()) {
    m_.resize(store.count());
    v_.resize(store.count());
    for (std::size_t i = 0; i < store.count(); ++i) {
      const Mat& val = store.at(i).value;
      m_[i] = Mat::Zero(val.rows(), val.cols());
      v_[i] = Mat::Zero(val.rows(), val.cols());
    }
  }
  if (m_.size() != store.count())
    throw std::logic_error("optimizer bound to a different store");

  ++t_;
  const double bc1 = 1.0 - std::pow(opt_.beta1, double(t_));
  const double bc2 = 1.0 - std::pow(opt_.beta2, double(t_));
  for (std::size_t i = 0; i < store.count(); ++i) {
    Parameter& p = store.at(i);
    m_[i] = opt_.beta1 * m_[i] + (1.0 - opt_.beta1) * p.grad;
    v_[i] = (opt_.beta2 * v_[i].array() +
             (1.0 - opt_.beta2) * p.grad.array().square())
                .matrix();
    const Mat mhat = m_[i] / bc1;
    const Mat vhat = v_[i] / bc2;
    p.value -=
        (opt_.learning_rate * mhat.array() / (vhat.array().sqrt() + opt_.epsilon))
            .matrix();
  }
}

}  // namespace cast::nn
