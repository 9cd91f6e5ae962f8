#pragma once

#include <cmath>
#include <span>

namespace pkboin::detail {

struct PkSummary {
  int count = 0;
  double mean = 0.0;
  double sd = 0.0;  // n - 1 denominator; 0 when count < 2
};

inline PkSummary summarize_pk(std::span<const double> values) {
  PkSummary s;
  s.count = static_cast<int>(values.size());
  if (s.count == 0) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / s.count;
  if (s.count > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / (s.count - 1));
  }
  return s;
}

}  // namespace pkboin::detail
