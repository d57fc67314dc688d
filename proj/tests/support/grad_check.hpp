// Finite-difference gradient oracle, independent of the tape's backward
// pass: it only reads and perturbs parameter values and re-runs forward
// evaluations.

#ifndef CAST_TESTS_GRAD_CHECK_HPP
#define CAST_TESTS_GRAD_CHECK_HPP

#include <functional>
#include <string>

#include "cast/params.hpp"

namespace cast::testsupport {

struct GradCheckResult {
  int coords_checked = 0;
  double max_rel_err = 0.0;
  std::string worst_param;
  int worst_coord = -1;
  double worst_analytic = 0.0;
  double worst_fd = 0.0;

  bool ok(double tol) const { return max_rel_err <= tol; }
};

// value_fn: forward evaluation of the scalar under the store's current
// values. grad_fn: zeroes grads, runs one analytic backward pass. Every
// parameter group is covered; within a group up to coords_per_param
// deterministic random coordinates are probed with central differences.
inline GradCheckResult check_gradients(nn::ParameterStore& store,
                                       const std::function<double()>& value_fn,
                                       const std::function<void()>& grad_fn,
                                       int coords_per_param = 6,
                                       double epsilon = 1e-4,
                                       std::uint64_t seed = 12345) {
  grad_fn();
  GradCheckResult result;
  Rng rng(seed);
  for (std::size_t p = 0; p < store.count(); ++p) {
    nn::Parameter& param = store.at(p);
    const int n = int(param.value.size());
    const int probes = std::min(coords_per_param, n);
    for (int k = 0; k < probes; ++k) {
      const int i =
          probes == n ? k : int(rng.uniform_int(0, std::int64_t(n) - 1));
      const double analytic = param.grad.data()[i];
      const double saved = param.value.data()[i];
      param.value.data()[i] = saved + epsilon;
      const double up = value_fn();
      param.value.data()[i] = saved - epsilon;
      const double down = value_fn();
      param.value.data()[i] = saved;
      const double fd = (up - down) / (2.0 * epsilon);
      const double denom = std::max({std::abs(analytic), std::abs(fd), 1e-6});
      const double rel = std::abs(analytic - fd) / denom;
      ++result.coords_checked;
      if (rel > result.max_rel_err) {
        result.max_rel_err = rel;
        result.worst_param = param.name;
        result.worst_coord = i;
        result.worst_analytic = analytic;
        result.worst_fd = fd;
      }
    }
  }
  return result;
}

}  // namespace cast::testsupport

#endif  // CAST_TESTS_GRAD_CHECK_HPP
