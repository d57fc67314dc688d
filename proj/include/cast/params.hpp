// Parameter ownership, initialization, Adam updates, checksums, and the
// flat-vector view used by finite-difference checks.

#ifndef CAST_PARAMS_HPP
#define CAST_PARAMS_HPP

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "cast/graph.hpp"

namespace cast::nn {

class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore&) = delete;
  ParameterStore& operator=(const ParameterStore&) = delete;
  // moving keeps Parameter addresses stable (they live behind unique_ptr)
  ParameterStore(ParameterStore&&) = default;
  ParameterStore& operator=(ParameterStore&&) = default;

  // Glorot-uniform init
  Parameter& create(const std::string& name, int rows, int cols, Rng& rng);
  Parameter& create_zero(const std::string& name, int rows, int cols);

  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool has(const std::string& name) const { return by_name_.count(name) != 0; }

  std::size_t count() const { return ordered_.size(); }
  Parameter& at(std::size_t i) { return *ordered_[i]; }
  const Parameter& at(std::size_t i) const { return *ordered_[i]; }

  void zero_grads();

  // FNV-1a over names and value bytes, in creation order.
  std::uint64_t checksum() const;

  std::size_t scalar_count() const;
  std::vector<double> flatten_values() const;
  std::vector<double> flatten_grads() const;
  void set_values(const std::vector<double>& flat);

  double grad_norm() const;

 private:
  std::vector<std::unique_ptr<Parameter>> ordered_;
  std::map<std::string, Parameter*> by_name_;
};

// Adam with bias correction; moments keyed by parameter order, so one
// optimizer instance must stay with one store.
class AdamOptimizer {
 public:
  struct Options {
    double learning_rate = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
  };

  explicit AdamOptimizer(Options opt) : opt_(opt) {}

  void step(ParameterStore& store);
  std::int64_t steps_taken() const { return t_; }
  const Options& options() const { return opt_; }

 private:
  Options opt_;
  std::int64_t t_ = 0;
  std::vector<Mat> m_;
  std::vector<Mat> v_;
};

}  // namespace cast::nn

#endif  // CAST_PARAMS_HPP
