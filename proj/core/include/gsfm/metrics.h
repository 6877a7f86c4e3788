#pragma once

#include <vector>

namespace gsfm {

// Normalized area under the recall curve up to threshold: the mean over all
// errors of max(0, 1 - e / threshold). Infinite errors count as misses.
// Throws InputError on an empty list or a non-positive threshold.
double Auc(const std::vector<double>& errors, double threshold);

double Median(std::vector<double> values);
double Max(const std::vector<double>& values);

}  // namespace gsfm
