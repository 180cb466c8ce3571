#include "gucnet/matrix.hpp"

#include <algorithm>
#include <cmath>

#include "gucnet/errors.hpp"

#if defined(__AVX512F__) && defined(__FMA__)
#define GUCNET_AVX512 1
#include <immintrin.h>
#endif

namespace gucnet {

std::string shape_str(const Matrix2D& m) {
    return std::to_string(m.rows) + "x" + std::to_string(m.cols);
}

#ifdef GUCNET_AVX512
namespace {

// Shared kernel for matmul and matmul_tn:
//   C[i*p + j] = sum_k A[i*ais + k*aks] * B[k*p + j]
// An 8-row by 16-column register tile is accumulated while streaming B row
// chunks, so each B load feeds 16 FMAs. The 50-epoch benchmark runs only fit
// their time budgets on one core because of this kernel; the j and i tails
// below are exercised rarely (head logits with 7 classes) and by the unit
// tests' awkward shapes. Column tails are computed one output column at a
// time, so each output column's summation order is independent of how many
// columns exist — which keeps head-gradient columns bit-identical under class
// relabeling.
void mm_broadcast(const double* A, std::size_t ais, std::size_t aks,
                  const double* B, double* C, std::size_t n, std::size_t m,
                  std::size_t p) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        std::size_t j = 0;
        for (; j + 16 <= p; j += 16) {
            __m512d acc0[8], acc1[8];
            for (int r = 0; r < 8; ++r) {
                acc0[r] = _mm512_setzero_pd();
                acc1[r] = _mm512_setzero_pd();
            }
            for (std::size_t k = 0; k < m; ++k) {
                const __m512d b0 = _mm512_loadu_pd(B + k * p + j);
                const __m512d b1 = _mm512_loadu_pd(B + k * p + j + 8);
                for (int r = 0; r < 8; ++r) {
                    const __m512d av = _mm512_set1_pd(
                        A[(i + static_cast<std::size_t>(r)) * ais + k * aks]);
                    acc0[r] = _mm512_fmadd_pd(av, b0, acc0[r]);
                    acc1[r] = _mm512_fmadd_pd(av, b1, acc1[r]);
                }
            }
            for (int r = 0; r < 8; ++r) {
                _mm512_storeu_pd(C + (i + static_cast<std::size_t>(r)) * p + j,
                                 acc0[r]);
                _mm512_storeu_pd(
                    C + (i + static_cast<std::size_t>(r)) * p + j + 8,
                    acc1[r]);
            }
        }
        for (; j + 8 <= p; j += 8) {
            __m512d acc[8];
            for (int r = 0; r < 8; ++r) {
                acc[r] = _mm512_setzero_pd();
            }
            for (std::size_t k = 0; k < m; ++k) {
                const __m512d b0 = _mm512_loadu_pd(B + k * p + j);
                for (int r = 0; r < 8; ++r) {
                    const __m512d av = _mm512_set1_pd(
                        A[(i + static_cast<std::size_t>(r)) * ais + k * aks]);
                    acc[r] = _mm512_fmadd_pd(av, b0, acc[r]);
                }
            }
            for (int r = 0; r < 8; ++r) {
                _mm512_storeu_pd(C + (i + static_cast<std::size_t>(r)) * p + j,
                                 acc[r]);
            }
        }
        for (; j < p; ++j) {
            double s[8] = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
            for (std::size_t k = 0; k < m; ++k) {
                const double bv = B[k * p + j];
                for (int r = 0; r < 8; ++r) {
                    s[r] += A[(i + static_cast<std::size_t>(r)) * ais +
                              k * aks] *
                            bv;
                }
            }
            for (int r = 0; r < 8; ++r) {
                C[(i + static_cast<std::size_t>(r)) * p + j] = s[r];
            }
        }
    }
    for (; i < n; ++i) {
        std::size_t j = 0;
        for (; j + 8 <= p; j += 8) {
            __m512d acc = _mm512_setzero_pd();
            for (std::size_t k = 0; k < m; ++k) {
                const __m512d av = _mm512_set1_pd(A[i * ais + k * aks]);
                acc = _mm512_fmadd_pd(av, _mm512_loadu_pd(B + k * p + j), acc);
            }
            _mm512_storeu_pd(C + i * p + j, acc);
        }
        for (; j < p; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < m; ++k) {
                s += A[i * ais + k * aks] * B[k * p + j];
            }
            C[i * p + j] = s;
        }
    }
}

double hsum(__m512d v) { return _mm512_reduce_add_pd(v); }

// Kernel for matmul_nt: C[i*p + j] = dot(A + i*m, B + j*m) over m. Both
// operands are walked unit-stride; a 4x4 tile of dot products shares each
// 8-wide operand load across 4 FMAs.
void mm_dot(const double* A, const double* B, double* C, std::size_t n,
            std::size_t m, std::size_t p) {
    const std::size_t m8 = m - m % 8;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        std::size_t j = 0;
        for (; j + 4 <= p; j += 4) {
            __m512d acc[4][4];
            for (int r = 0; r < 4; ++r) {
                for (int c = 0; c < 4; ++c) {
                    acc[r][c] = _mm512_setzero_pd();
                }
            }
            for (std::size_t k = 0; k < m8; k += 8) {
                __m512d va[4], vb[4];
                for (int r = 0; r < 4; ++r) {
                    va[r] = _mm512_loadu_pd(
                        A + (i + static_cast<std::size_t>(r)) * m + k);
                    vb[r] = _mm512_loadu_pd(
                        B + (j + static_cast<std::size_t>(r)) * m + k);
                }
                for (int r = 0; r < 4; ++r) {
                    for (int c = 0; c < 4; ++c) {
                        acc[r][c] = _mm512_fmadd_pd(va[r], vb[c], acc[r][c]);
                    }
                }
            }
            for (int r = 0; r < 4; ++r) {
                for (int c = 0; c < 4; ++c) {
                    double s = hsum(acc[r][c]);
                    const double* arow =
                        A + (i + static_cast<std::size_t>(r)) * m;
                    const double* brow =
                        B + (j + static_cast<std::size_t>(c)) * m;
                    for (std::size_t k = m8; k < m; ++k) {
                        s += arow[k] * brow[k];
                    }
                    C[(i + static_cast<std::size_t>(r)) * p + j +
                      static_cast<std::size_t>(c)] = s;
                }
            }
        }
        for (; j < p; ++j) {
            const double* brow = B + j * m;
            for (int r = 0; r < 4; ++r) {
                const double* arow = A + (i + static_cast<std::size_t>(r)) * m;
                __m512d acc = _mm512_setzero_pd();
                for (std::size_t k = 0; k < m8; k += 8) {
                    acc = _mm512_fmadd_pd(_mm512_loadu_pd(arow + k),
                                          _mm512_loadu_pd(brow + k), acc);
                }
                double s = hsum(acc);
                for (std::size_t k = m8; k < m; ++k) {
                    s += arow[k] * brow[k];
                }
                C[(i + static_cast<std::size_t>(r)) * p + j] = s;
            }
        }
    }
    for (; i < n; ++i) {
        const double* arow = A + i * m;
        for (std::size_t j = 0; j < p; ++j) {
            const double* brow = B + j * m;
            __m512d acc = _mm512_setzero_pd();
            for (std::size_t k = 0; k < m8; k += 8) {
                acc = _mm512_fmadd_pd(_mm512_loadu_pd(arow + k),
                                      _mm512_loadu_pd(brow + k), acc);
            }
            double s = hsum(acc);
            for (std::size_t k = m8; k < m; ++k) {
                s += arow[k] * brow[k];
            }
            C[i * p + j] = s;
        }
    }
}

} // namespace
#endif // GUCNET_AVX512

Matrix2D matmul(const Matrix2D& a, const Matrix2D& b) {
    if (a.cols != b.rows) {
        throw ContractError("matmul: inner dimensions differ: " +
                            shape_str(a) + " * " + shape_str(b));
    }
    const std::size_t n = a.rows, m = a.cols, p = b.cols;
    Matrix2D c(n, p);
    const double* A = a.data.data();
    const double* B = b.data.data();
    double* C = c.data.data();
#ifdef GUCNET_AVX512
    mm_broadcast(A, m, 1, B, C, n, m, p);
#else
    // Four output rows per pass so each row of B loaded from memory is reused
    // four times; the j loop is unit-stride for both B and C.
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        double* c0 = C + (i + 0) * p;
        double* c1 = C + (i + 1) * p;
        double* c2 = C + (i + 2) * p;
        double* c3 = C + (i + 3) * p;
        for (std::size_t k = 0; k < m; ++k) {
            const double a0 = A[(i + 0) * m + k];
            const double a1 = A[(i + 1) * m + k];
            const double a2 = A[(i + 2) * m + k];
            const double a3 = A[(i + 3) * m + k];
            const double* brow = B + k * p;
            for (std::size_t j = 0; j < p; ++j) {
                const double bv = brow[j];
                c0[j] += a0 * bv;
                c1[j] += a1 * bv;
                c2[j] += a2 * bv;
                c3[j] += a3 * bv;
            }
        }
    }
    for (; i < n; ++i) {
        double* crow = C + i * p;
        for (std::size_t k = 0; k < m; ++k) {
            const double av = A[i * m + k];
            const double* brow = B + k * p;
            for (std::size_t j = 0; j < p; ++j) {
                crow[j] += av * brow[j];
            }
        }
    }
#endif
    return c;
}

Matrix2D matmul_tn(const Matrix2D& a, const Matrix2D& b) {
    if (a.rows != b.rows) {
        throw ContractError("matmul_tn: row counts differ: " + shape_str(a) +
                            "^T * " + shape_str(b));
    }
    const std::size_t n = a.cols, m = a.rows, p = b.cols;
    Matrix2D c(n, p);
    const double* A = a.data.data();
    const double* B = b.data.data();
    double* C = c.data.data();
#ifdef GUCNET_AVX512
    // c[i][j] = sum_k a[k][i] * b[k][j]: same contraction as matmul with A
    // walked column-wise, expressed via the strides.
    mm_broadcast(A, 1, a.cols, B, C, n, m, p);
#else
    // c[i][j] = sum_k a[k][i] * b[k][j]; k outermost keeps both inner
    // accesses unit-stride.
    for (std::size_t k = 0; k < m; ++k) {
        const double* arow = A + k * n;
        const double* brow = B + k * p;
        for (std::size_t i = 0; i < n; ++i) {
            const double av = arow[i];
            double* crow = C + i * p;
            for (std::size_t j = 0; j < p; ++j) {
                crow[j] += av * brow[j];
            }
        }
    }
#endif
    return c;
}

Matrix2D matmul_nt(const Matrix2D& a, const Matrix2D& b) {
    if (a.cols != b.cols) {
        throw ContractError("matmul_nt: column counts differ: " +
                            shape_str(a) + " * " + shape_str(b) + "^T");
    }
    const std::size_t n = a.rows, m = a.cols, p = b.rows;
    Matrix2D c(n, p);
    const double* A = a.data.data();
    const double* B = b.data.data();
    double* C = c.data.data();
#ifdef GUCNET_AVX512
    mm_dot(A, B, C, n, m, p);
#else
    // c[i][j] = dot(row i of a, row j of b): both operands unit-stride.
    for (std::size_t i = 0; i < n; ++i) {
        const double* arow = A + i * m;
        double* crow = C + i * p;
        for (std::size_t j = 0; j < p; ++j) {
            const double* brow = B + j * m;
            double s = 0.0;
            for (std::size_t k = 0; k < m; ++k) {
                s += arow[k] * brow[k];
            }
            crow[j] = s;
        }
    }
#endif
    return c;
}

Matrix2D relu(const Matrix2D& x) {
    Matrix2D out(x.rows, x.cols);
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        out.data[i] = x.data[i] > 0.0 ? x.data[i] : 0.0;
    }
    return out;
}

Matrix2D relu_backward(const Matrix2D& x, const Matrix2D& upstream) {
    if (!x.same_shape(upstream)) {
        throw ContractError("relu_backward: shapes differ: " + shape_str(x) +
                            " vs " + shape_str(upstream));
    }
    Matrix2D out(x.rows, x.cols);
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        out.data[i] = x.data[i] > 0.0 ? upstream.data[i] : 0.0;
    }
    return out;
}

double sorted_sum(double* terms, std::size_t n) {
    std::sort(terms, terms + n);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sum += terms[i];
    }
    return sum;
}

Matrix2D softmax_rows(const Matrix2D& z) {
    if (z.cols < 1) {
        throw ContractError("softmax_rows: need at least one column, got " +
                            shape_str(z));
    }
    Matrix2D out(z.rows, z.cols);
    std::vector<double> scratch(z.cols);
    for (std::size_t r = 0; r < z.rows; ++r) {
        const double* in = z.data.data() + r * z.cols;
        double* o = out.data.data() + r * z.cols;
        double mx = in[0];
        for (std::size_t j = 1; j < z.cols; ++j) {
            mx = std::max(mx, in[j]);
        }
        for (std::size_t j = 0; j < z.cols; ++j) {
            o[j] = std::exp(in[j] - mx);
            scratch[j] = o[j];
        }
        const double sum = sorted_sum(scratch.data(), z.cols);
        for (std::size_t j = 0; j < z.cols; ++j) {
            o[j] /= sum;
        }
    }
    return out;
}

void add_row_vector(Matrix2D& m, const std::vector<double>& v) {
    if (v.size() != m.cols) {
        throw ContractError("add_row_vector: vector length " +
                            std::to_string(v.size()) + " vs matrix " +
                            shape_str(m));
    }
    for (std::size_t r = 0; r < m.rows; ++r) {
        double* row = m.data.data() + r * m.cols;
        for (std::size_t j = 0; j < m.cols; ++j) {
            row[j] += v[j];
        }
    }
}

} // namespace gucnet
