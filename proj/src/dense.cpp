#include "hinv/dense.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace hinv {

namespace {

constexpr double kPivotTolerance = 1e-14;

void require_square(const DenseMatrix& a, const char* what)
{
    if (a.rows() != a.cols()) throw InvalidArgument(std::string(what) + ": matrix must be square");
}

void require_finite(const DenseMatrix& a, const char* what)
{
    if (!a.allFinite()) throw InvalidArgument(std::string(what) + ": non-finite entries");
}

} // namespace

double max_abs(const DenseMatrix& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

LuFactors lu_factor(const DenseMatrix& a)
{
    require_square(a, "lu_factor");
    require_finite(a, "lu_factor");
    const Eigen::Index n = a.rows();
    const double threshold = kPivotTolerance * max_abs(a);

    Eigen::PartialPivLU<DenseMatrix> lu(a);
    const DenseMatrix& packed = lu.matrixLU();
    for (Eigen::Index k = 0; k < n; ++k) {
        if (!(std::abs(packed(k, k)) > threshold)) {
            throw NumericalError("lu_factor: matrix is singular to working precision");
        }
    }
    LuFactors f;
    f.lower = packed.triangularView<Eigen::UnitLower>();
    f.upper = packed.triangularView<Eigen::Upper>();
    // Eigen reports A = P^{-1} L U; translate into row sources of P A.
    const auto& indices = lu.permutationP().indices();
    f.permutation.assign(static_cast<std::size_t>(n), 0);
    for (Eigen::Index i = 0; i < n; ++i) f.permutation[indices[i]] = static_cast<int>(i);
    return f;
}

LuFactors lu_factor_unpivoted(const DenseMatrix& a)
{
    require_square(a, "lu_factor_unpivoted");
    require_finite(a, "lu_factor_unpivoted");
    const Eigen::Index n = a.rows();
    const double threshold = kPivotTolerance * max_abs(a);
    DenseMatrix work = a;
    for (Eigen::Index k = 0; k < n; ++k) {
        const double pivot = work(k, k);
        if (!(std::abs(pivot) > threshold)) {
            throw NumericalError("unpivoted LU: zero pivot at position " + std::to_string(k));
        }
        const Eigen::Index rest = n - k - 1;
        if (rest == 0) break;
        work.col(k).tail(rest) /= pivot;
        work.bottomRightCorner(rest, rest).noalias() -= work.col(k).tail(rest) * work.row(k).tail(rest);
    }
    LuFactors f;
    f.lower = work.triangularView<Eigen::UnitLower>();
    f.upper = work.triangularView<Eigen::Upper>();
    f.permutation.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) f.permutation[i] = static_cast<int>(i);
    return f;
}

DenseMatrix inverse(const DenseMatrix& a)
{
    require_square(a, "inverse");
    require_finite(a, "inverse");
    const double threshold = kPivotTolerance * max_abs(a);
    Eigen::PartialPivLU<DenseMatrix> lu(a);
    const DenseMatrix& packed = lu.matrixLU();
    for (Eigen::Index k = 0; k < a.rows(); ++k) {
        if (!(std::abs(packed(k, k)) > threshold)) {
            throw NumericalError("inverse: matrix is singular to working precision");
        }
    }
    return lu.inverse();
}

DenseMatrix cholesky(const DenseMatrix& a)
{
    require_square(a, "cholesky");
    require_finite(a, "cholesky");
    Eigen::LLT<DenseMatrix> llt(a);
    if (llt.info() != Eigen::Success) throw NumericalError("cholesky: matrix is not positive definite");
    DenseMatrix l = llt.matrixL();
    for (Eigen::Index k = 0; k < l.rows(); ++k) {
        if (!(l(k, k) > 0.0)) throw NumericalError("cholesky: non-positive pivot");
    }
    return l;
}

double TruncatedSvd::error() const
{
    const int r = factor.rank();
    return r < sigma.size() ? sigma[r] : 0.0;
}

TruncatedSvd truncated_svd(const DenseMatrix& a, int r)
{
    require_finite(a, "truncated_svd");
    const Eigen::Index m = a.rows();
    const Eigen::Index n = a.cols();
    const Eigen::Index k = std::min(m, n);
    const Eigen::Index rank = std::clamp<Eigen::Index>(r, 0, k);

    TruncatedSvd out;
    if (k == 0) {
        out.factor.x.resize(m, 0);
        out.factor.y.resize(n, 0);
        out.sigma.resize(0);
        return out;
    }
    // Jacobi rather than BDCSVD: the divide-and-conquer path in Eigen 3.4.0 loses
    // ~1e-9 absolute accuracy on some inverse blocks, which shows up as a false
    // error floor in the rank sweeps.
    Eigen::JacobiSVD<DenseMatrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    out.sigma = svd.singularValues();
    out.factor.x = svd.matrixU().leftCols(rank);
    out.factor.y = svd.matrixV().leftCols(rank) * out.sigma.head(rank).asDiagonal();
    return out;
}

Vector singular_values(const DenseMatrix& a)
{
    require_finite(a, "singular_values");
    if (a.size() == 0) return Vector();
    Eigen::JacobiSVD<DenseMatrix> svd(a);
    return svd.singularValues();
}

LinearOperator dense_operator(const DenseMatrix& a)
{
    LinearOperator op;
    op.rows = static_cast<int>(a.rows());
    op.cols = static_cast<int>(a.cols());
    op.apply = [&a](const Vector& x) -> Vector { return a * x; };
    op.apply_transpose = [&a](const Vector& x) -> Vector { return a.transpose() * x; };
    return op;
}

SpectralNormEstimate spectral_norm(const LinearOperator& op, const SpectralNormOptions& options)
{
    SpectralNormEstimate est;
    if (op.rows == 0 || op.cols == 0) {
        est.converged = true;
        return est;
    }
    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector x(op.cols);
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = normal(rng);
    x.normalize();

    double lambda = 0.0;
    for (int it = 1; it <= options.max_iterations; ++it) {
        const Vector y = op.apply(x);
        if (y.size() != op.rows) throw InvalidArgument("spectral_norm: operator returned wrong size");
        const double next = y.squaredNorm(); // x^T M^T M x with |x| = 1
        est.iterations = it;
        if (next == 0.0) {
            est.value = 0.0;
            est.converged = true;
            return est;
        }
        const bool settled = std::abs(next - lambda) < options.tolerance * next;
        lambda = next;
        if (settled) {
            est.converged = true;
            break;
        }
        Vector z = op.apply_transpose(y);
        const double nz = z.norm();
        if (nz == 0.0) break;
        x = z / nz;
    }
    est.value = std::sqrt(lambda);
    return est;
}

} // namespace hinv
