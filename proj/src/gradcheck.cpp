#include "gucnet/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "gucnet/errors.hpp"

namespace gucnet {

double grad_check(const std::function<double(const Matrix2D&)>& f,
                  const Matrix2D& params, const Matrix2D& analytic_grad,
                  double h) {
    if (h <= 0.0) {
        throw ContractError("grad_check: h must be positive");
    }
    if (!params.same_shape(analytic_grad)) {
        throw ContractError("grad_check: params " + shape_str(params) +
                            " vs gradient " + shape_str(analytic_grad));
    }
    Matrix2D probe = params;
    double max_err = 0.0;
    for (std::size_t i = 0; i < probe.data.size(); ++i) {
        const double saved = probe.data[i];
        probe.data[i] = saved + h;
        const double fp = f(probe);
        probe.data[i] = saved - h;
        const double fm = f(probe);
        probe.data[i] = saved;
        if (!std::isfinite(fp) || !std::isfinite(fm)) {
            throw ContractError(
                "grad_check: non-finite loss at perturbed coordinate " +
                std::to_string(i));
        }
        const double cd = (fp - fm) / (2.0 * h);
        const double an = analytic_grad.data[i];
        const double err =
            std::abs(cd - an) / std::max(1e-8, std::abs(cd) + std::abs(an));
        max_err = std::max(max_err, err);
    }
    return max_err;
}

} // namespace gucnet
