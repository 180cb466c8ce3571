#pragma once

#include <functional>

#include "gucnet/matrix.hpp"

namespace gucnet {

// Compares an analytic gradient against central finite differences.
//
// For every coordinate of `params` the loss f is evaluated at +h and -h and
// the relative error
//     |central_difference - analytic| / max(1e-8, |cd| + |analytic|)
// is computed; the maximum over all coordinates is returned. A correct
// gradient scores well below 1e-4 with h = 1e-5; a gradient that is wrong by
// a factor of two scores about 1/3, so the two outcomes are far apart.
//
// Throws ContractError if h <= 0 or if f returns a non-finite value at any
// perturbed point.
double grad_check(const std::function<double(const Matrix2D&)>& f,
                  const Matrix2D& params, const Matrix2D& analytic_grad,
                  double h);

} // namespace gucnet
