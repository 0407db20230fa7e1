#pragma once

#include <algorithm>
#include <cmath>
#include <tuple>

namespace rlab {

namespace detail {
inline bool worse_than(const AuditInstance& a, const AuditInstance& b) {
  return std::tie(a.slack, a.seed, a.trial) < std::tie(b.slack, b.seed, b.trial);
}
void insert_counterexample(std::vector<AuditInstance>& list, AuditInstance instance,
                           std::size_t cap);
}  // namespace detail

template <typename Fill>
void BoundReport::record(AuditInstance instance, Fill&& fill_matrices) {
  const bool violation = instance.slack < -tolerance;
  if (violation) fill_matrices(instance);
  if (trials == 0 || detail::worse_than(instance, worst_instance)) {
    min_slack = instance.slack;
    worst_instance = instance;
  }
  ++trials;
  if (violation) {
    ++violations;
    detail::insert_counterexample(counterexamples, std::move(instance), kMaxCounterexamples);
  } else if (std::abs(instance.slack) <= tolerance) {
    ++equality_cases;
  }
}

}  // namespace rlab
