#include "hinv/hmatrix.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <istream>
#include <ostream>

namespace hinv {

static_assert(std::endian::native == std::endian::little, "binary dumps assume a little-endian host");

namespace {

DenseMatrix sub_block(const DenseMatrix& dense, const Block& b)
{
    return dense.block(b.rows.begin, b.cols.begin, b.rows.size(), b.cols.size());
}

void require_square_partition(const DenseMatrix& dense, const BlockPartition& partition)
{
    if (dense.rows() != partition.size || dense.cols() != partition.size) {
        throw InvalidArgument("compress: matrix is " + std::to_string(dense.rows()) + "x" +
                              std::to_string(dense.cols()) + ", partition expects " +
                              std::to_string(partition.size));
    }
}

} // namespace

HMatrix::HMatrix(int size, int max_rank, std::vector<HBlock> blocks)
    : size_(size), max_rank_(max_rank), blocks_(std::move(blocks))
{
}

Vector HMatrix::multiply(const Vector& x) const
{
    if (x.size() != size_) throw InvalidArgument("H-matvec: dimension mismatch");
    Vector y = Vector::Zero(size_);
    for (const auto& b : blocks_) {
        const auto xs = x.segment(b.info.cols.begin, b.info.cols.size());
        auto ys = y.segment(b.info.rows.begin, b.info.rows.size());
        if (b.is_low_rank()) {
            if (b.low_rank.rank() == 0) continue;
            const Vector t = b.low_rank.y.transpose() * xs;
            ys.noalias() += b.low_rank.x * t;
        } else {
            ys.noalias() += b.dense * xs;
        }
    }
    return y;
}

Vector HMatrix::multiply_transpose(const Vector& x) const
{
    if (x.size() != size_) throw InvalidArgument("H-matvec: dimension mismatch");
    Vector y = Vector::Zero(size_);
    for (const auto& b : blocks_) {
        const auto xs = x.segment(b.info.rows.begin, b.info.rows.size());
        auto ys = y.segment(b.info.cols.begin, b.info.cols.size());
        if (b.is_low_rank()) {
            if (b.low_rank.rank() == 0) continue;
            const Vector t = b.low_rank.x.transpose() * xs;
            ys.noalias() += b.low_rank.y * t;
        } else {
            ys.noalias() += b.dense.transpose() * xs;
        }
    }
    return y;
}

DenseMatrix HMatrix::to_dense() const
{
    DenseMatrix d = DenseMatrix::Zero(size_, size_);
    for (const auto& b : blocks_) {
        d.block(b.info.rows.begin, b.info.cols.begin, b.info.rows.size(), b.info.cols.size()) = b.to_dense();
    }
    return d;
}

HMatrix compress(const DenseMatrix& dense, const BlockPartition& partition, int rank)
{
    require_square_partition(dense, partition);
    if (rank < 0) throw InvalidArgument("compress: negative rank");
    std::vector<HBlock> blocks;
    blocks.reserve(partition.block_count());
    for (const auto& b : partition.far) {
        TruncatedSvd svd = truncated_svd(sub_block(dense, b), rank);
        HBlock hb;
        hb.info = b;
        hb.truncation_error = svd.error();
        hb.low_rank = std::move(svd.factor);
        blocks.push_back(std::move(hb));
    }
    for (const auto& b : partition.near) {
        HBlock hb;
        hb.info = b;
        hb.dense = sub_block(dense, b);
        blocks.push_back(std::move(hb));
    }
    return HMatrix(partition.size, rank, std::move(blocks));
}

BlockCompressor::BlockCompressor(const DenseMatrix& dense, const BlockPartition& partition)
    : size_(partition.size)
{
    require_square_partition(dense, partition);
    far_.reserve(partition.far.size());
    for (const auto& b : partition.far) {
        TruncatedSvd full = truncated_svd(sub_block(dense, b), std::min(b.rows.size(), b.cols.size()));
        far_.push_back({b, std::move(full.factor.x), std::move(full.factor.y), std::move(full.sigma)});
    }
    for (const auto& b : partition.near) {
        HBlock hb;
        hb.info = b;
        hb.dense = sub_block(dense, b);
        near_.push_back(std::move(hb));
    }
}

HMatrix BlockCompressor::at_rank(int rank) const
{
    if (rank < 0) throw InvalidArgument("compress: negative rank");
    std::vector<HBlock> blocks;
    blocks.reserve(far_.size() + near_.size());
    for (const auto& f : far_) {
        const int r = std::min<int>(rank, static_cast<int>(f.u.cols()));
        HBlock hb;
        hb.info = f.info;
        hb.low_rank.x = f.u.leftCols(r);
        hb.low_rank.y = f.v_scaled.leftCols(r);
        hb.truncation_error = r < f.sigma.size() ? f.sigma[r] : 0.0;
        blocks.push_back(std::move(hb));
    }
    blocks.insert(blocks.end(), near_.begin(), near_.end());
    return HMatrix(size_, rank, std::move(blocks));
}

StorageStats storage_stats(const HMatrix& h)
{
    StorageStats s;
    for (const auto& b : h.blocks()) {
        if (b.is_low_rank()) {
            s.floats += static_cast<std::size_t>(b.low_rank.rank()) *
                        static_cast<std::size_t>(b.info.rows.size() + b.info.cols.size());
        } else {
            s.floats += static_cast<std::size_t>(b.info.rows.size()) * static_cast<std::size_t>(b.info.cols.size());
        }
    }
    const double n = h.size();
    s.ratio = n > 0 ? static_cast<double>(s.floats) / (n * n) : 0.0;
    return s;
}

NormBoundReport norm_bound(std::span<const double> block_norms, const BlockPartition& partition)
{
    const auto blocks = partition.blocks();
    if (block_norms.size() != blocks.size()) throw InvalidArgument("norm_bound: one norm per block expected");
    NormBoundReport report;
    int depth = 0;
    for (const auto& b : blocks) depth = std::max(depth, b.level);
    report.level_max.assign(static_cast<std::size_t>(depth) + 1, 0.0);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        double& slot = report.level_max[blocks[i].level];
        slot = std::max(slot, block_norms[i]);
    }
    report.sparsity_constant = sparsity_constant(partition);
    double sum = 0.0;
    for (double v : report.level_max) sum += v;
    report.bound = report.sparsity_constant * sum;
    return report;
}

LinearOperator hmatrix_operator(const HMatrix& h)
{
    LinearOperator op;
    op.rows = op.cols = h.size();
    op.apply = [&h](const Vector& x) { return h.multiply(x); };
    op.apply_transpose = [&h](const Vector& x) { return h.multiply_transpose(x); };
    return op;
}

namespace detail {

void write_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

std::uint64_t read_u64(std::istream& in)
{
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw InvalidArgument("truncated block dump");
    return v;
}

namespace {

void write_f64(std::ostream& out, double v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

double read_f64(std::istream& in)
{
    double v = 0.0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw InvalidArgument("truncated block dump");
    return v;
}

void write_row_major(std::ostream& out, const DenseMatrix& m)
{
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) write_f64(out, m(i, j));
    }
}

DenseMatrix read_row_major(std::istream& in, Eigen::Index rows, Eigen::Index cols)
{
    DenseMatrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = read_f64(in);
    }
    return m;
}

} // namespace

void write_block_payload(const Block& info, bool low_rank, const DenseMatrix& dense, const LowRankFactor& lr,
                         double truncation_error, std::ostream& out)
{
    write_u64(out, static_cast<std::uint64_t>(info.rows.begin));
    write_u64(out, static_cast<std::uint64_t>(info.rows.end));
    write_u64(out, static_cast<std::uint64_t>(info.cols.begin));
    write_u64(out, static_cast<std::uint64_t>(info.cols.end));
    write_u64(out, static_cast<std::uint64_t>(info.level));
    const char kind = low_rank ? 1 : 0;
    out.write(&kind, 1);
    write_u64(out, static_cast<std::uint64_t>(low_rank ? lr.rank() : 0));
    write_f64(out, truncation_error);
    if (low_rank) {
        write_row_major(out, lr.x);
        write_row_major(out, lr.y);
    } else {
        write_row_major(out, dense);
    }
}

void read_block_payload(std::istream& in, Block& info, bool& low_rank, DenseMatrix& dense, LowRankFactor& lr,
                        double& truncation_error)
{
    info.rows.begin = static_cast<int>(read_u64(in));
    info.rows.end = static_cast<int>(read_u64(in));
    info.cols.begin = static_cast<int>(read_u64(in));
    info.cols.end = static_cast<int>(read_u64(in));
    info.level = static_cast<int>(read_u64(in));
    char kind = 0;
    in.read(&kind, 1);
    if (!in || (kind != 0 && kind != 1)) throw InvalidArgument("bad block kind in dump");
    low_rank = kind == 1;
    info.far = low_rank;
    const auto rank = static_cast<Eigen::Index>(read_u64(in));
    truncation_error = read_f64(in);
    if (info.rows.size() < 0 || info.cols.size() < 0) throw InvalidArgument("bad block range in dump");
    if (low_rank) {
        lr.x = read_row_major(in, info.rows.size(), rank);
        lr.y = read_row_major(in, info.cols.size(), rank);
    } else {
        dense = read_row_major(in, info.rows.size(), info.cols.size());
    }
}

} // namespace detail

void write_hmatrix(const HMatrix& h, std::ostream& out)
{
    out.write("HMAT", 4);
    const std::uint32_t version = 1;
    out.write(reinterpret_cast<const char*>(&version), sizeof version);
    detail::write_u64(out, static_cast<std::uint64_t>(h.size()));
    detail::write_u64(out, static_cast<std::uint64_t>(h.max_rank()));
    detail::write_u64(out, h.blocks().size());
    for (const auto& b : h.blocks()) {
        detail::write_block_payload(b.info, b.is_low_rank(), b.dense, b.low_rank, b.truncation_error, out);
    }
}

HMatrix read_hmatrix(std::istream& in)
{
    char magic[4] = {};
    in.read(magic, 4);
    std::uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof version);
    if (!in || std::memcmp(magic, "HMAT", 4) != 0 || version != 1) throw InvalidArgument("not an HMAT v1 dump");
    const auto n = static_cast<int>(detail::read_u64(in));
    const auto max_rank = static_cast<int>(detail::read_u64(in));
    const auto count = detail::read_u64(in);
    std::vector<HBlock> blocks(count);
    for (auto& b : blocks) {
        bool low_rank = false;
        detail::read_block_payload(in, b.info, low_rank, b.dense, b.low_rank, b.truncation_error);
    }
    return HMatrix(n, max_rank, std::move(blocks));
}

} // namespace hinv
