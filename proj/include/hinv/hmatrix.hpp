#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "hinv/cluster.hpp"
#include "hinv/dense.hpp"

namespace hinv {

// Leaf of an H-matrix: low-rank on far blocks, dense on near blocks.
struct HBlock {
    Block info;
    DenseMatrix dense;        // near blocks
    LowRankFactor low_rank;   // far blocks
    double truncation_error = 0.0; // sigma_{r+1} of the original far block

    bool is_low_rank() const { return info.far; }
    DenseMatrix to_dense() const { return info.far ? low_rank.to_dense() : dense; }
};

class HMatrix {
public:
    HMatrix() = default;
    HMatrix(int size, int max_rank, std::vector<HBlock> blocks);

    int size() const { return size_; }
    int max_rank() const { return max_rank_; }
    std::span<const HBlock> blocks() const { return blocks_; }

    Vector multiply(const Vector& x) const;
    Vector multiply_transpose(const Vector& x) const;
    DenseMatrix to_dense() const;

private:
    int size_ = 0;
    int max_rank_ = 0;
    std::vector<HBlock> blocks_;
};

// Far blocks replaced by their rank-r truncated SVD, near blocks copied.
HMatrix compress(const DenseMatrix& dense, const BlockPartition& partition, int rank);

// Holds the full SVD of every far block so that a rank sweep only truncates.
class BlockCompressor {
public:
    BlockCompressor(const DenseMatrix& dense, const BlockPartition& partition);

    HMatrix at_rank(int rank) const;
    int size() const { return size_; }

private:
    struct FarBasis {
        Block info;
        DenseMatrix u;
        DenseMatrix v_scaled; // V * diag(sigma)
        Vector sigma;
    };

    int size_ = 0;
    std::vector<FarBasis> far_;
    std::vector<HBlock> near_;
};

struct StorageStats {
    std::size_t floats = 0;
    double ratio = 0.0; // floats / N^2
};

StorageStats storage_stats(const HMatrix& h);

struct NormBoundReport {
    std::vector<double> level_max; // indexed by level 0..depth
    int sparsity_constant = 0;
    double bound = 0.0;
};

// Right-hand side of  ||M||_2 <= C_sp * sum_l max{ ||M|_b||_2 : level(b) = l }.
// `block_norms` is ordered like partition.blocks() (far, then near).
NormBoundReport norm_bound(std::span<const double> block_norms, const BlockPartition& partition);

// Non-owning: `h` must outlive the operator.
LinearOperator hmatrix_operator(const HMatrix& h);

// Binary snapshot, little-endian. Layout:
//   "HMAT" u32 version u64 N u64 max_rank u64 block_count
//   per block: u64 row_begin row_end col_begin col_end level, u8 kind (0 dense, 1 low-rank),
//              u64 rank, f64 truncation_error, then row-major f64 payloads
//              (dense |rows| x |cols|, or X |rows| x r followed by Y |cols| x r).
void write_hmatrix(const HMatrix& h, std::ostream& out);
HMatrix read_hmatrix(std::istream& in);

namespace detail {
void write_block_payload(const Block& info, bool low_rank, const DenseMatrix& dense, const LowRankFactor& lr,
                         double truncation_error, std::ostream& out);
void read_block_payload(std::istream& in, Block& info, bool& low_rank, DenseMatrix& dense, LowRankFactor& lr,
                        double& truncation_error);
void write_u64(std::ostream& out, std::uint64_t v);
std::uint64_t read_u64(std::istream& in);
} // namespace detail

} // namespace hinv
