#pragma once

#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include "hinv/cluster.hpp"
#include "hinv/dense.hpp"
#include "hinv/hmatrix.hpp"

namespace hinv {

// Rank that never truncates.
inline constexpr int kFullRank = std::numeric_limits<int>::max();

// S(tau, sigma) = A|tau x sigma - A|tau x rho (A|rho x rho)^{-1} A|rho x sigma with
// rho = [0, min(tau.begin, sigma.begin)). Ranges are positions in cluster order.
DenseMatrix schur_complement(const DenseMatrix& a, IndexRange tau, IndexRange sigma);

// Max-norm difference between S(tau, tau) and the matrix assembled from the
// Schur complements of tau's sons:
//   [ S11            S12                      ]
//   [ S21   S22 + S21 S11^{-1} S12            ]
double schur_recursion_check(const DenseMatrix& a, const ClusterTree& tree, int cluster);

enum class Triangle { Lower, Upper };

struct FactorBlock {
    Block info;
    DenseMatrix dense;
    LowRankFactor low_rank;
    double truncation_error = 0.0;

    bool is_low_rank() const { return info.far; }
    DenseMatrix to_dense() const { return info.far ? low_rank.to_dense() : dense; }
};

// Block triangular H-matrix aligned with a cluster tree: dense triangular
// blocks on the diagonal leaves, and for every internal cluster tau with sons
// (tau1, tau2) the coupling block tau2 x tau1 (lower) or tau1 x tau2 (upper),
// tiled by the partition's blocks.
class HTriangularFactor {
public:
    HTriangularFactor() = default;

    Triangle orientation() const { return orientation_; }
    bool unit_diagonal() const { return unit_diagonal_; }
    int size() const { return tree_.size(); }
    const ClusterTree& tree() const { return tree_; }

    const DenseMatrix& diagonal_block(int leaf) const { return diagonal_.at(static_cast<std::size_t>(leaf)); }
    std::span<const FactorBlock> coupling(int cluster) const { return coupling_.at(static_cast<std::size_t>(cluster)); }

    Vector multiply(const Vector& x) const;
    Vector multiply_transpose(const Vector& x) const;
    DenseMatrix to_dense() const;

    // F x = rhs and F^T x = rhs.
    Vector solve(const Vector& rhs) const;
    Vector solve_transpose(const Vector& rhs) const;

    // Same, restricted to the diagonal block F|cluster x cluster. `rhs` has
    // the cluster's size.
    Vector solve_cluster(int cluster, const Vector& rhs, bool transpose = false) const;

    std::size_t stored_floats() const;

private:
    friend class SchurFactorization;

    void solve_in_place(int cluster, Vector& x, bool transpose) const;

    Triangle orientation_ = Triangle::Lower;
    bool unit_diagonal_ = true;
    ClusterTree tree_;
    std::vector<DenseMatrix> diagonal_;             // per tree node, leaves only
    std::vector<std::vector<FactorBlock>> coupling_; // per tree node, internal only
};

enum class FactorKind { Lu, Cholesky };

// Exact factors built by recursing the Schur complement over the cluster
// tree; truncation to blockwise rank r happens afterwards, per admissible
// coupling block, without feeding back into the recursion.
class SchurFactorization {
public:
    SchurFactorization(const DenseMatrix& a, const ClusterTree& tree, const BlockPartition& partition,
                       FactorKind kind);

    FactorKind kind() const { return kind_; }
    const DenseMatrix& lower() const { return lower_; }
    // For Cholesky this is lower()^T.
    DenseMatrix upper() const;

    HTriangularFactor lower_factor(int rank) const;
    HTriangularFactor upper_factor(int rank) const; // LU only

private:
    void factor(int cluster, DenseMatrix schur);
    HTriangularFactor truncate(Triangle orientation, int rank) const;

    FactorKind kind_;
    ClusterTree tree_;
    BlockPartition partition_;
    DenseMatrix lower_;
    DenseMatrix upper_; // LU only
};

struct HLuFactors {
    HTriangularFactor lower;
    HTriangularFactor upper;
};

HLuFactors hlu_factorize(const DenseMatrix& a, const ClusterTree& tree, const BlockPartition& partition, int rank);
HTriangularFactor hcholesky_factorize(const DenseMatrix& a, const ClusterTree& tree,
                                      const BlockPartition& partition, int rank);

Vector triangular_solve(const HTriangularFactor& factor, const Vector& rhs);

// x -> F|cluster^{-1} x with its transpose; non-owning.
LinearOperator cluster_inverse_operator(const HTriangularFactor& factor, int cluster);
LinearOperator factor_operator(const HTriangularFactor& factor);

// Same layout as write_hmatrix behind a "HTRI" header carrying
// u8 orientation (0 lower, 1 upper) and u8 unit_diagonal; diagonal leaf
// blocks first, then coupling blocks.
void write_factor(const HTriangularFactor& factor, std::ostream& out);

} // namespace hinv
