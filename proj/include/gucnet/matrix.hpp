#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace gucnet {

// Dense row-major matrix of 64-bit floats: the one numeric carrier shared by
// features, weights, activations and gradients. 64-bit throughout — the
// gradient checker certifies analytic gradients to 1e-4 relative error, and
// that bar is not reliably reachable in single precision.
struct Matrix2D {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data; // rows * cols entries, row-major

    Matrix2D() = default;
    Matrix2D(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) {
        return data[r * cols + c];
    }
    double operator()(std::size_t r, std::size_t c) const {
        return data[r * cols + c];
    }

    bool same_shape(const Matrix2D& o) const {
        return rows == o.rows && cols == o.cols;
    }
};

// "RxC" shape string for error messages.
std::string shape_str(const Matrix2D& m);

// Standard product a*b. Requires a.cols == b.rows.
Matrix2D matmul(const Matrix2D& a, const Matrix2D& b);

// transpose(a)*b without materializing the transpose. Requires
// a.rows == b.rows. This is the dW = X^T * dY shape of backprop.
Matrix2D matmul_tn(const Matrix2D& a, const Matrix2D& b);

// a*transpose(b) without materializing the transpose. Requires
// a.cols == b.cols. This is the dX = dY * W^T shape of backprop.
Matrix2D matmul_nt(const Matrix2D& a, const Matrix2D& b);

// Elementwise max(0, x).
Matrix2D relu(const Matrix2D& x);

// Upstream gradient masked where x > 0. The subgradient at exactly 0 is
// taken as 0 so the operation is fully specified and testable.
Matrix2D relu_backward(const Matrix2D& x, const Matrix2D& upstream);

// Sums terms[0..n) after sorting them ascending, in place. The result depends
// only on the multiset of values, not their input order, so reductions over
// the class axis stay bit-identical when classes are relabeled (a plain
// left-to-right sum would round differently after a column permutation).
double sorted_sum(double* terms, std::size_t n);

// Row-wise softmax with row-max subtraction for overflow safety. The
// denominator uses sorted_sum so the result is exactly equivariant under
// column permutation.
Matrix2D softmax_rows(const Matrix2D& z);

// Adds a length-cols row vector to every row (bias application).
void add_row_vector(Matrix2D& m, const std::vector<double>& v);

} // namespace gucnet
