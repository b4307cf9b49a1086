#pragma once

// Central-difference gradient checking with a kink guard: when the epsilon
// interval straddles a rectifier corner the numeric estimate is meaningless,
// which shows up as the estimate changing with epsilon. Such coordinates are
// skipped; a genuinely wrong analytic gradient is stable across epsilons and
// still fails.

#include <cmath>
#include <functional>

#include "smtw/nn.hpp"

namespace fdcheck {

enum class Verdict { kOk, kMismatch, kKink };

inline Verdict probe(smtw::Array& arr, size_t i, double analytic,
                     const std::function<double()>& loss_fn, double tol = 1e-3) {
  auto central = [&](double eps) {
    const double saved = arr.data[i];
    arr.data[i] = saved + eps;
    const double up = loss_fn();
    arr.data[i] = saved - eps;
    const double down = loss_fn();
    arr.data[i] = saved;
    return (up - down) / (2.0 * eps);
  };
  const double numeric = central(1e-4);
  double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  if (std::abs(analytic - numeric) / denom <= tol) return Verdict::kOk;

  const double finer = central(1e-5);
  denom = std::max({std::abs(numeric), std::abs(finer), 1e-6});
  if (std::abs(numeric - finer) / denom > tol) return Verdict::kKink;
  return Verdict::kMismatch;
}

// Checks every array with the given stride; returns the number of mismatches.
inline int check_store(smtw::ParamStore& store, const std::function<double()>& loss_fn,
                       size_t per_array = 0, double tol = 1e-3) {
  int mismatches = 0;
  for (auto& [name, arr] : store.arrays()) {
    const size_t stride =
        per_array == 0 ? 1 : std::max<size_t>(1, arr.size() / per_array);
    for (size_t i = 0; i < arr.size(); i += stride) {
      if (probe(arr, i, arr.grad[i], loss_fn, tol) == Verdict::kMismatch) ++mismatches;
    }
  }
  return mismatches;
}

}  // namespace fdcheck
