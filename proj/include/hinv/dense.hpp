#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "hinv/common.hpp"

namespace hinv {

using DenseMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// P * A = L * U with L unit lower triangular. Row i of P * A is row
// permutation[i] of A.
struct LuFactors {
    DenseMatrix lower;
    DenseMatrix upper;
    std::vector<int> permutation;
};

LuFactors lu_factor(const DenseMatrix& a);

// Doolittle elimination in the given order. Throws NumericalError when a pivot
// falls below 1e-14 * max|A|.
LuFactors lu_factor_unpivoted(const DenseMatrix& a);

DenseMatrix inverse(const DenseMatrix& a);

// Lower triangular L with positive diagonal and A = L L^T.
DenseMatrix cholesky(const DenseMatrix& a);

// X * Y^T with X of size m x r and Y of size n x r.
struct LowRankFactor {
    DenseMatrix x;
    DenseMatrix y;

    int rank() const { return static_cast<int>(x.cols()); }
    int rows() const { return static_cast<int>(x.rows()); }
    int cols() const { return static_cast<int>(y.rows()); }
    DenseMatrix to_dense() const { return x * y.transpose(); }
};

struct TruncatedSvd {
    LowRankFactor factor; // x has orthonormal columns, y = V * diag(sigma)
    Vector sigma;         // all singular values, non-increasing

    // Spectral-norm truncation error, sigma_{r+1} (0 past the numerical rank).
    double error() const;
};

// Best rank-r approximation; r is clamped to [0, min(m, n)].
TruncatedSvd truncated_svd(const DenseMatrix& a, int r);

Vector singular_values(const DenseMatrix& a);

// Linear map given by its action and the action of its transpose.
struct LinearOperator {
    int rows = 0;
    int cols = 0;
    std::function<Vector(const Vector&)> apply;
    std::function<Vector(const Vector&)> apply_transpose;
};

// Non-owning: `a` must outlive the operator.
LinearOperator dense_operator(const DenseMatrix& a);

struct SpectralNormOptions {
    double tolerance = 1e-8;
    int max_iterations = 2000;
    std::uint64_t seed = 42;
};

struct SpectralNormEstimate {
    double value = 0.0; // Rayleigh estimate, a lower bound on ||M||_2
    bool converged = false;
    int iterations = 0;
};

// Power iteration on M^T M from a seeded Gaussian start vector.
SpectralNormEstimate spectral_norm(const LinearOperator& op, const SpectralNormOptions& options = {});

double max_abs(const DenseMatrix& a);

} // namespace hinv
