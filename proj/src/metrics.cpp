#include "nesy/metrics.hpp"

#include "nesy/error.hpp"

namespace nesy {

MetricSet compute_metrics(const std::vector<double>& predictions,
                          const std::vector<int>& labels, double threshold) {
  if (predictions.empty()) throw ValidationError("compute_metrics on empty input");
  if (predictions.size() != labels.size())
    throw ValidationError("predictions and labels differ in length");

  MetricSet m;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const bool pred = predictions[i] >= threshold;
    const bool truth = labels[i] != 0;
    if (pred && truth) ++m.tp;
    else if (pred && !truth) ++m.fp;
    else if (!pred && truth) ++m.fn;
    else ++m.tn;
  }
  m.support_positive = m.tp + m.fn;
  m.support_negative = m.fp + m.tn;
  const double n = static_cast<double>(predictions.size());
  m.accuracy = static_cast<double>(m.tp + m.tn) / n;

  m.precision = (m.tp + m.fp) > 0 ? static_cast<double>(m.tp) / (m.tp + m.fp) : 0.0;
  m.recall = (m.tp + m.fn) > 0 ? static_cast<double>(m.tp) / (m.tp + m.fn) : 0.0;
  m.f1 = (m.precision + m.recall) > 0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;

  // negative-class F1 for the macro average
  const double prec_n = (m.tn + m.fn) > 0 ? static_cast<double>(m.tn) / (m.tn + m.fn) : 0.0;
  const double rec_n = (m.tn + m.fp) > 0 ? static_cast<double>(m.tn) / (m.tn + m.fp) : 0.0;
  const double f1_n = (prec_n + rec_n) > 0 ? 2.0 * prec_n * rec_n / (prec_n + rec_n) : 0.0;
  m.macro_f1 = 0.5 * (m.f1 + f1_n);
  return m;
}

}  // namespace nesy
