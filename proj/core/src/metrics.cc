#include "gsfm/metrics.h"

#include <algorithm>
#include <cmath>

#include "gsfm/errors.h"

namespace gsfm {

double Auc(const std::vector<double>& errors, double threshold) {
  if (errors.empty()) throw InputError("AUC of an empty error list");
  if (!(threshold > 0.0)) throw InputError("AUC threshold must be positive");
  // Integral of the step recall curve: each error e < t contributes (t - e).
  double area = 0.0;
  for (const double e : errors) {
    if (std::isnan(e)) throw InputError("AUC of a NaN error");
    if (e < threshold) area += threshold - std::max(e, 0.0);
  }
  return area / (threshold * static_cast<double>(errors.size()));
}

double Median(std::vector<double> values) {
  if (values.empty()) throw InputError("median of an empty list");
  const std::size_t mid = (values.size() - 1) / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double lower = values[mid];
  if (values.size() % 2 == 1) return lower;
  const double upper = *std::min_element(values.begin() + mid + 1, values.end());
  return 0.5 * (lower + upper);
}

double Max(const std::vector<double>& values) {
  if (values.empty()) throw InputError("max of an empty list");
  return *std::max_element(values.begin(), values.end());
}

}  // namespace gsfm
