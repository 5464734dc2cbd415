#pragma once

#include <string>
#include <vector>

#include "magspec/kernel.hpp"

namespace magspec {

// A series y(x) with its log-log power-law fit.
struct SweepResult {
  std::string x_label = "x";
  std::string y_label = "value";
  std::vector<double> x;
  std::vector<double> y;
  LinearFit fit;  // log y = slope log x + intercept

  void add(double xv, double yv) {
    x.push_back(xv);
    y.push_back(yv);
  }
  void refit() { fit = fit_power_law(x, y); }
  double slope() const { return fit.slope; }
};

}  // namespace magspec
