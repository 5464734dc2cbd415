#include "magspec/quadrature.hpp"

#include <gsl/gsl_integration.h>

#include <map>
#include <memory>
#include <mutex>

#include "magspec/error.hpp"

namespace magspec {

const GaussLegendre& gauss_legendre(int order) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<GaussLegendre>> cache;
  if (order < 1) throw ConfigError("quadrature order must be positive");
  std::lock_guard lock(mutex);
  auto& slot = cache[order];
  if (!slot) {
    auto rule = std::make_unique<GaussLegendre>();
    gsl_integration_glfixed_table* table = gsl_integration_glfixed_table_alloc(order);
    if (!table) throw NumericalError("failed to build Gauss-Legendre table");
    rule->nodes.resize(order);
    rule->weights.resize(order);
    for (int i = 0; i < order; ++i)
      gsl_integration_glfixed_point(0.0, 1.0, i, &rule->nodes[i], &rule->weights[i], table);
    gsl_integration_glfixed_table_free(table);
    slot = std::move(rule);
  }
  return *slot;
}

}  // namespace magspec
