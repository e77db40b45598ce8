#pragma once

#include <cstddef>
#include <vector>

namespace nesy {

struct MetricSet {
  double accuracy = 0.0;
  double f1 = 0.0;        // positive-class F1 at the decision threshold
  double macro_f1 = 0.0;  // mean of per-class F1, for comparison runs
  double precision = 0.0;
  double recall = 0.0;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::size_t support_positive = 0;
  std::size_t support_negative = 0;
};

// Hard predictions at `threshold` (>= maps to positive). Degenerate cases
// follow the zero-denominator-means-zero convention: F1 = 0 when there are
// no positive predictions or no positive labels.
MetricSet compute_metrics(const std::vector<double>& predictions,
                          const std::vector<int>& labels, double threshold = 0.5);

}  // namespace nesy
