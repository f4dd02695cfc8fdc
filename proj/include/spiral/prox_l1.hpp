#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "spiral/types.hpp"

namespace spiral {

/// argmin_{f >= 0} 1/2 ||f - s||^2 + w ||f||_1, i.e. [s - w]_+ componentwise.
inline std::vector<double> prox_canonical(std::span<const double> s, double w) {
  if (!(w >= 0.0) || !std::isfinite(w)) fail("prox_canonical: weight must be finite and >= 0, got ", w);
  std::vector<double> out(s.size());
  std::transform(s.begin(), s.end(), out.begin(), [w](double v) { return std::max(v - w, 0.0); });
  return out;
}

inline Signal prox_canonical(const Signal &s, double w) {
  return Signal::intensity(prox_canonical(s.values(), w));
}

}  // namespace spiral
