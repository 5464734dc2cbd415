#pragma once

#include <vector>

namespace magspec {

// Gauss-Legendre rule mapped to [0, 1].
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Cached; safe to call from several threads.
const GaussLegendre& gauss_legendre(int order);

}  // namespace magspec
