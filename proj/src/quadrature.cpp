#include "quenchlab/quadrature.hpp"

#include <cmath>

#include "quenchlab/errors.hpp"

namespace quenchlab {

Quadrature::Quadrature(int order) {
  if (order < 1 || order > 4001) throw ParameterError("quadrature order must lie in [1, 4001]");
  const int n = order;
  nodes_.assign(static_cast<std::size_t>(n), 0.0);
  weights_.assign(static_cast<std::size_t>(n), 0.0);
  if (n == 1) {
    weights_[0] = 1.0;
    return;
  }
  const double step = 2.0 * kQuadratureHalfWidth / (n - 1);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = 0.5 * step * (2 * i - (n - 1));
    nodes_[static_cast<std::size_t>(i)] = x;
    const double w = std::exp(-0.5 * x * x);
    weights_[static_cast<std::size_t>(i)] = w;
  }
  for (int i = 0; i < n; ++i) total += weights_[static_cast<std::size_t>(i)];
  for (double& w : weights_) w /= total;
}

}  // namespace quenchlab
