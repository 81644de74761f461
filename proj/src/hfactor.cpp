#include "hinv/hfactor.hpp"

#include <algorithm>
#include <ostream>
#include <string>

namespace hinv {

namespace {

DenseMatrix slice(const DenseMatrix& a, IndexRange rows, IndexRange cols)
{
    return a.block(rows.begin, cols.begin, rows.size(), cols.size());
}

void require_range(const DenseMatrix& a, IndexRange r, const char* what)
{
    if (r.begin < 0 || r.end > a.rows() || r.size() <= 0) {
        throw InvalidArgument(std::string(what) + ": index range outside the matrix");
    }
}

std::vector<int> ancestors(const ClusterTree& tree, int id)
{
    std::vector<int> chain;
    for (int c = id; c >= 0; c = tree.node(c).parent) chain.push_back(c);
    std::reverse(chain.begin(), chain.end());
    return chain;
}

// Lowest common ancestor of the block's row and column clusters, and whether
// the block sits below (rows in the second son) or above the diagonal.
struct Placement {
    int cluster = -1;
    bool diagonal = false;
    bool lower = false;
};

Placement place(const ClusterTree& tree, const Block& b)
{
    if (b.rows == b.cols) return {b.row_cluster, true, false};
    const auto ra = ancestors(tree, b.row_cluster);
    const auto ca = ancestors(tree, b.col_cluster);
    std::size_t k = 0;
    while (k + 1 < ra.size() && k + 1 < ca.size() && ra[k + 1] == ca[k + 1]) ++k;
    const int lca = ra[k];
    const int second = tree.node(lca).children[1];
    return {lca, false, ra[k + 1] == second};
}

void apply_block(const FactorBlock& b, const Vector& x, Vector& y, double sign, bool transpose)
{
    const IndexRange in = transpose ? b.info.rows : b.info.cols;
    const IndexRange out = transpose ? b.info.cols : b.info.rows;
    const auto xs = x.segment(in.begin, in.size());
    auto ys = y.segment(out.begin, out.size());
    if (b.is_low_rank()) {
        if (b.low_rank.rank() == 0) return;
        if (transpose) {
            const Vector t = b.low_rank.x.transpose() * xs;
            ys.noalias() += sign * (b.low_rank.y * t);
        } else {
            const Vector t = b.low_rank.y.transpose() * xs;
            ys.noalias() += sign * (b.low_rank.x * t);
        }
    } else if (transpose) {
        ys.noalias() += sign * (b.dense.transpose() * xs);
    } else {
        ys.noalias() += sign * (b.dense * xs);
    }
}

void require_factor_inputs(const DenseMatrix& a, const ClusterTree& tree, const BlockPartition& partition)
{
    if (a.rows() != a.cols() || a.rows() != tree.size() || partition.size != tree.size()) {
        throw InvalidArgument("factorization: matrix, tree and partition sizes disagree");
    }
}

} // namespace

DenseMatrix schur_complement(const DenseMatrix& a, IndexRange tau, IndexRange sigma)
{
    if (a.rows() != a.cols()) throw InvalidArgument("schur_complement: matrix must be square");
    require_range(a, tau, "schur_complement");
    require_range(a, sigma, "schur_complement");
    const IndexRange rho{0, std::min(tau.begin, sigma.begin)};
    DenseMatrix s = slice(a, tau, sigma);
    if (rho.empty()) return s;
    const LuFactors lu = lu_factor(slice(a, rho, rho));
    // (A_rr)^{-1} A_rs = U^{-1} L^{-1} P A_rs
    const DenseMatrix a_rs = slice(a, rho, sigma);
    DenseMatrix rhs(a_rs.rows(), a_rs.cols());
    for (int i = 0; i < rho.size(); ++i) rhs.row(i) = a_rs.row(lu.permutation[i]);
    lu.lower.triangularView<Eigen::UnitLower>().solveInPlace(rhs);
    lu.upper.triangularView<Eigen::Upper>().solveInPlace(rhs);
    s.noalias() -= slice(a, tau, rho) * rhs;
    return s;
}

double schur_recursion_check(const DenseMatrix& a, const ClusterTree& tree, int cluster)
{
    const ClusterNode& node = tree.node(cluster);
    if (node.is_leaf()) throw InvalidArgument("schur_recursion_check: cluster is a leaf");
    const IndexRange t1 = tree.node(node.children[0]).range;
    const IndexRange t2 = tree.node(node.children[1]).range;
    const DenseMatrix s11 = schur_complement(a, t1, t1);
    const DenseMatrix s12 = schur_complement(a, t1, t2);
    const DenseMatrix s21 = schur_complement(a, t2, t1);
    const DenseMatrix s22 = schur_complement(a, t2, t2);

    const Eigen::PartialPivLU<DenseMatrix> s11_lu(s11);
    DenseMatrix assembled(node.range.size(), node.range.size());
    const int n1 = t1.size();
    const int n2 = t2.size();
    assembled.topLeftCorner(n1, n1) = s11;
    assembled.topRightCorner(n1, n2) = s12;
    assembled.bottomLeftCorner(n2, n1) = s21;
    assembled.bottomRightCorner(n2, n2) = s22 + s21 * s11_lu.solve(s12);

    const DenseMatrix direct = schur_complement(a, node.range, node.range);
    return max_abs(assembled - direct);
}

// --- HTriangularFactor ---------------------------------------------------

void HTriangularFactor::solve_in_place(int cluster, Vector& x, bool transpose) const
{
    const ClusterNode& node = tree_.node(cluster);
    if (node.is_leaf()) {
        auto seg = x.segment(node.range.begin, node.range.size());
        const DenseMatrix& d = diagonal_[cluster];
        // Effective triangle of the system actually solved.
        const bool solve_lower = (orientation_ == Triangle::Lower) != transpose;
        if (solve_lower) {
            if (transpose) {
                if (unit_diagonal_) d.transpose().triangularView<Eigen::UnitLower>().solveInPlace(seg);
                else d.transpose().triangularView<Eigen::Lower>().solveInPlace(seg);
            } else {
                if (unit_diagonal_) d.triangularView<Eigen::UnitLower>().solveInPlace(seg);
                else d.triangularView<Eigen::Lower>().solveInPlace(seg);
            }
        } else {
            if (transpose) {
                if (unit_diagonal_) d.transpose().triangularView<Eigen::UnitUpper>().solveInPlace(seg);
                else d.transpose().triangularView<Eigen::Upper>().solveInPlace(seg);
            } else {
                if (unit_diagonal_) d.triangularView<Eigen::UnitUpper>().solveInPlace(seg);
                else d.triangularView<Eigen::Upper>().solveInPlace(seg);
            }
        }
        return;
    }
    const int first = node.children[0];
    const int second = node.children[1];
    // Forward sweep for L and U^T, backward sweep for U and L^T.
    const bool forward = (orientation_ == Triangle::Lower) != transpose;
    const int lead = forward ? first : second;
    const int trail = forward ? second : first;
    solve_in_place(lead, x, transpose);
    for (const auto& b : coupling_[cluster]) apply_block(b, x, x, -1.0, transpose);
    solve_in_place(trail, x, transpose);
}

Vector HTriangularFactor::solve(const Vector& rhs) const
{
    if (rhs.size() != size()) throw InvalidArgument("triangular_solve: dimension mismatch");
    Vector x = rhs;
    solve_in_place(0, x, false);
    return x;
}

Vector HTriangularFactor::solve_transpose(const Vector& rhs) const
{
    if (rhs.size() != size()) throw InvalidArgument("triangular_solve: dimension mismatch");
    Vector x = rhs;
    solve_in_place(0, x, true);
    return x;
}

Vector HTriangularFactor::solve_cluster(int cluster, const Vector& rhs, bool transpose) const
{
    const IndexRange r = tree_.node(cluster).range;
    if (rhs.size() != r.size()) throw InvalidArgument("solve_cluster: dimension mismatch");
    Vector x = Vector::Zero(size());
    x.segment(r.begin, r.size()) = rhs;
    solve_in_place(cluster, x, transpose);
    return x.segment(r.begin, r.size());
}

Vector HTriangularFactor::multiply(const Vector& x) const
{
    if (x.size() != size()) throw InvalidArgument("factor multiply: dimension mismatch");
    Vector y = Vector::Zero(size());
    for (int id = 0; id < static_cast<int>(tree_.nodes().size()); ++id) {
        const ClusterNode& node = tree_.node(id);
        if (node.is_leaf()) {
            const IndexRange r = node.range;
            y.segment(r.begin, r.size()).noalias() += diagonal_[id] * x.segment(r.begin, r.size());
        } else {
            for (const auto& b : coupling_[id]) apply_block(b, x, y, 1.0, false);
        }
    }
    return y;
}

Vector HTriangularFactor::multiply_transpose(const Vector& x) const
{
    if (x.size() != size()) throw InvalidArgument("factor multiply: dimension mismatch");
    Vector y = Vector::Zero(size());
    for (int id = 0; id < static_cast<int>(tree_.nodes().size()); ++id) {
        const ClusterNode& node = tree_.node(id);
        if (node.is_leaf()) {
            const IndexRange r = node.range;
            y.segment(r.begin, r.size()).noalias() += diagonal_[id].transpose() * x.segment(r.begin, r.size());
        } else {
            for (const auto& b : coupling_[id]) apply_block(b, x, y, 1.0, true);
        }
    }
    return y;
}

DenseMatrix HTriangularFactor::to_dense() const
{
    DenseMatrix d = DenseMatrix::Zero(size(), size());
    for (int id = 0; id < static_cast<int>(tree_.nodes().size()); ++id) {
        const ClusterNode& node = tree_.node(id);
        if (node.is_leaf()) {
            d.block(node.range.begin, node.range.begin, node.range.size(), node.range.size()) = diagonal_[id];
        } else {
            for (const auto& b : coupling_[id]) {
                d.block(b.info.rows.begin, b.info.cols.begin, b.info.rows.size(), b.info.cols.size()) = b.to_dense();
            }
        }
    }
    return d;
}

std::size_t HTriangularFactor::stored_floats() const
{
    std::size_t floats = 0;
    for (int id = 0; id < static_cast<int>(tree_.nodes().size()); ++id) {
        if (tree_.node(id).is_leaf()) floats += static_cast<std::size_t>(diagonal_[id].size());
        for (const auto& b : coupling_[id]) {
            floats += b.is_low_rank() ? static_cast<std::size_t>(b.low_rank.rank()) *
                                            static_cast<std::size_t>(b.info.rows.size() + b.info.cols.size())
                                      : static_cast<std::size_t>(b.dense.size());
        }
    }
    return floats;
}

// --- SchurFactorization --------------------------------------------------

SchurFactorization::SchurFactorization(const DenseMatrix& a, const ClusterTree& tree,
                                       const BlockPartition& partition, FactorKind kind)
    : kind_(kind), tree_(tree), partition_(partition)
{
    require_factor_inputs(a, tree, partition);
    if (!a.allFinite()) throw InvalidArgument("factorization: non-finite entries");
    const int n = tree.size();
    lower_ = DenseMatrix::Zero(n, n);
    if (kind_ == FactorKind::Lu) upper_ = DenseMatrix::Zero(n, n);
    factor(0, a); // S(I, I) = A
}

void SchurFactorization::factor(int cluster, DenseMatrix schur)
{
    const ClusterNode& node = tree_.node(cluster);
    const IndexRange r = node.range;
    if (node.is_leaf()) {
        if (kind_ == FactorKind::Lu) {
            const LuFactors lu = lu_factor_unpivoted(schur);
            lower_.block(r.begin, r.begin, r.size(), r.size()) = lu.lower;
            upper_.block(r.begin, r.begin, r.size(), r.size()) = lu.upper;
        } else {
            lower_.block(r.begin, r.begin, r.size(), r.size()) = cholesky(schur);
        }
        return;
    }
    const IndexRange t1 = tree_.node(node.children[0]).range;
    const IndexRange t2 = tree_.node(node.children[1]).range;
    const int n1 = t1.size();
    const int n2 = t2.size();

    factor(node.children[0], schur.topLeftCorner(n1, n1));

    const DenseMatrix l11 = lower_.block(t1.begin, t1.begin, n1, n1);
    DenseMatrix s21 = schur.bottomLeftCorner(n2, n1);
    DenseMatrix s12 = schur.topRightCorner(n1, n2);
    DenseMatrix s22 = schur.bottomRightCorner(n2, n2);

    if (kind_ == FactorKind::Lu) {
        const DenseMatrix u11 = upper_.block(t1.begin, t1.begin, n1, n1);
        // L21 = S21 U11^{-1},  U12 = L11^{-1} S12
        u11.triangularView<Eigen::Upper>().solveInPlace<Eigen::OnTheRight>(s21);
        l11.triangularView<Eigen::UnitLower>().solveInPlace(s12);
        lower_.block(t2.begin, t1.begin, n2, n1) = s21;
        upper_.block(t1.begin, t2.begin, n1, n2) = s12;
        s22.noalias() -= s21 * s12;
    } else {
        // L21 = S21 C11^{-T}
        l11.transpose().triangularView<Eigen::Upper>().solveInPlace<Eigen::OnTheRight>(s21);
        lower_.block(t2.begin, t1.begin, n2, n1) = s21;
        s22.noalias() -= s21 * s21.transpose();
    }
    factor(node.children[1], std::move(s22));
}

DenseMatrix SchurFactorization::upper() const
{
    return kind_ == FactorKind::Lu ? upper_ : DenseMatrix(lower_.transpose());
}

HTriangularFactor SchurFactorization::truncate(Triangle orientation, int rank) const
{
    if (rank < 0) throw InvalidArgument("factorization: negative rank");
    const DenseMatrix& source = orientation == Triangle::Lower ? lower_ : upper_;
    HTriangularFactor f;
    f.orientation_ = orientation;
    f.unit_diagonal_ = kind_ == FactorKind::Lu && orientation == Triangle::Lower;
    f.tree_ = tree_;
    const std::size_t count = tree_.nodes().size();
    f.diagonal_.assign(count, DenseMatrix());
    f.coupling_.assign(count, {});

    for (const int leaf : tree_.leaves()) {
        const IndexRange r = tree_.node(leaf).range;
        DenseMatrix d = slice(source, r, r);
        if (orientation == Triangle::Lower) d = d.triangularView<Eigen::Lower>();
        else d = d.triangularView<Eigen::Upper>();
        f.diagonal_[leaf] = std::move(d);
    }
    for (const auto& b : partition_.blocks()) {
        const Placement p = place(tree_, b);
        if (p.diagonal) continue;
        if (p.lower != (orientation == Triangle::Lower)) continue;
        FactorBlock fb;
        fb.info = b;
        const DenseMatrix values = slice(source, b.rows, b.cols);
        if (b.far) {
            TruncatedSvd svd = truncated_svd(values, rank);
            fb.truncation_error = svd.error();
            fb.low_rank = std::move(svd.factor);
        } else {
            fb.dense = values;
        }
        f.coupling_[p.cluster].push_back(std::move(fb));
    }
    return f;
}

HTriangularFactor SchurFactorization::lower_factor(int rank) const { return truncate(Triangle::Lower, rank); }

HTriangularFactor SchurFactorization::upper_factor(int rank) const
{
    if (kind_ != FactorKind::Lu) throw InvalidArgument("Cholesky factorization stores only the lower factor");
    return truncate(Triangle::Upper, rank);
}

HLuFactors hlu_factorize(const DenseMatrix& a, const ClusterTree& tree, const BlockPartition& partition, int rank)
{
    const SchurFactorization exact(a, tree, partition, FactorKind::Lu);
    return {exact.lower_factor(rank), exact.upper_factor(rank)};
}

HTriangularFactor hcholesky_factorize(const DenseMatrix& a, const ClusterTree& tree,
                                      const BlockPartition& partition, int rank)
{
    const DenseMatrix sym_gap = a - a.transpose();
    if (max_abs(sym_gap) > 1e-12 * max_abs(a)) throw InvalidArgument("hcholesky_factorize: matrix is not symmetric");
    const SchurFactorization exact(a, tree, partition, FactorKind::Cholesky);
    return exact.lower_factor(rank);
}

Vector triangular_solve(const HTriangularFactor& factor, const Vector& rhs) { return factor.solve(rhs); }

LinearOperator cluster_inverse_operator(const HTriangularFactor& factor, int cluster)
{
    LinearOperator op;
    op.rows = op.cols = factor.tree().node(cluster).range.size();
    op.apply = [&factor, cluster](const Vector& x) { return factor.solve_cluster(cluster, x, false); };
    op.apply_transpose = [&factor, cluster](const Vector& x) { return factor.solve_cluster(cluster, x, true); };
    return op;
}

LinearOperator factor_operator(const HTriangularFactor& factor)
{
    LinearOperator op;
    op.rows = op.cols = factor.size();
    op.apply = [&factor](const Vector& x) { return factor.multiply(x); };
    op.apply_transpose = [&factor](const Vector& x) { return factor.multiply_transpose(x); };
    return op;
}

void write_factor(const HTriangularFactor& factor, std::ostream& out)
{
    out.write("HTRI", 4);
    const std::uint32_t version = 1;
    out.write(reinterpret_cast<const char*>(&version), sizeof version);
    const char orientation = factor.orientation() == Triangle::Lower ? 0 : 1;
    const char unit = factor.unit_diagonal() ? 1 : 0;
    out.write(&orientation, 1);
    out.write(&unit, 1);
    const ClusterTree& tree = factor.tree();
    std::uint64_t count = 0;
    for (int id = 0; id < static_cast<int>(tree.nodes().size()); ++id) {
        count += tree.node(id).is_leaf() ? 1 : factor.coupling(id).size();
    }
    detail::write_u64(out, static_cast<std::uint64_t>(factor.size()));
    detail::write_u64(out, count);
    for (const int leaf : tree.leaves()) {
        const ClusterNode& node = tree.node(leaf);
        Block info{leaf, leaf, node.range, node.range, node.level, false};
        detail::write_block_payload(info, false, factor.diagonal_block(leaf), {}, 0.0, out);
    }
    for (int id = 0; id < static_cast<int>(tree.nodes().size()); ++id) {
        for (const auto& b : factor.coupling(id)) {
            detail::write_block_payload(b.info, b.is_low_rank(), b.dense, b.low_rank, b.truncation_error, out);
        }
    }
}

} // namespace hinv
