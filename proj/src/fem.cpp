#include "hinv/fem.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

namespace hinv {

namespace {

using Gradients = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic>; // (dim+1) x dim

Point element_barycenter(const Mesh& mesh, int e)
{
    Point c{0.0, 0.0, 0.0};
    const int nv = mesh.vertices_per_element();
    for (int a = 0; a < nv; ++a) {
        const Point& p = mesh.nodes[mesh.elements[e][a]];
        for (int k = 0; k < 3; ++k) c[k] += p[k] / nv;
    }
    return c;
}

// Rows are the constant gradients of the barycentric coordinates.
Gradients barycentric_gradients(const Mesh& mesh, int e)
{
    const int d = mesh.dim;
    const auto& el = mesh.elements[e];
    Eigen::MatrixXd jac(d, d);
    const Point& p0 = mesh.nodes[el[0]];
    for (int k = 0; k < d; ++k) {
        const Point& pk = mesh.nodes[el[k + 1]];
        for (int r = 0; r < d; ++r) jac(r, k) = pk[r] - p0[r];
    }
    const Eigen::MatrixXd inv = jac.inverse();
    Gradients g(d + 1, d);
    g.bottomRows(d) = inv;
    g.row(0) = -inv.colwise().sum();
    return g;
}

void validate_diffusion(const Eigen::Matrix3d& c, int dim)
{
    const Eigen::MatrixXd block = c.topLeftCorner(dim, dim);
    if (!block.allFinite()) throw InvalidArgument("diffusion matrix has non-finite entries");
    const double scale = std::max(1.0, block.cwiseAbs().maxCoeff());
    if ((block - block.transpose()).cwiseAbs().maxCoeff() > 1e-14 * scale) {
        throw InvalidArgument("diffusion matrix must be symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(block);
    if (!(eig.eigenvalues().minCoeff() > 0.0)) {
        throw InvalidArgument("diffusion matrix must be positive definite");
    }
}

// Adds the symmetric element matrix `local` (upper triangle used) for the
// element's vertices into free-dof triplets.
void scatter_symmetric(const DenseMatrix& local, std::span<const int> vertices, const DofMap& dofs,
                       std::vector<Triplet>& out)
{
    const int nv = static_cast<int>(vertices.size());
    for (int a = 0; a < nv; ++a) {
        const int row = dofs.node_to_dof[vertices[a]];
        if (row < 0) continue;
        for (int b = 0; b < nv; ++b) {
            const int col = dofs.node_to_dof[vertices[b]];
            if (col < 0) continue;
            const double v = a <= b ? local(a, b) : local(b, a);
            out.push_back({row, col, v});
        }
    }
}

} // namespace

DofMap build_dofmap(const Mesh& mesh)
{
    const auto dirichlet = dirichlet_nodes(mesh);
    DofMap dofs;
    dofs.node_to_dof.assign(mesh.nodes.size(), -1);
    for (int i = 0; i < mesh.node_count(); ++i) {
        if (dirichlet[i]) continue;
        dofs.node_to_dof[i] = dofs.size();
        dofs.free_nodes.push_back(i);
    }
    return dofs;
}

SparseMatrix SparseMatrix::from_triplets(int n, std::vector<Triplet> triplets)
{
    if (n < 0) throw InvalidArgument("negative matrix size");
    for (const auto& t : triplets) {
        if (t.row < 0 || t.row >= n || t.col < 0 || t.col >= n) {
            throw InvalidArgument("triplet index out of range");
        }
    }
    std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    SparseMatrix m;
    m.n_ = n;
    m.row_offsets_.assign(static_cast<std::size_t>(n) + 1, 0);
    std::size_t i = 0;
    while (i < triplets.size()) {
        const int row = triplets[i].row;
        const int col = triplets[i].col;
        double sum = 0.0;
        for (; i < triplets.size() && triplets[i].row == row && triplets[i].col == col; ++i) {
            sum += triplets[i].value;
        }
        if (sum == 0.0) continue;
        m.columns_.push_back(col);
        m.values_.push_back(sum);
        ++m.row_offsets_[row + 1];
    }
    for (int r = 0; r < n; ++r) m.row_offsets_[r + 1] += m.row_offsets_[r];
    return m;
}

SparseMatrix SparseMatrix::identity(int n)
{
    std::vector<Triplet> t;
    for (int i = 0; i < n; ++i) t.push_back({i, i, 1.0});
    return from_triplets(n, std::move(t));
}

void SparseMatrix::set_rank_one(Vector u, Vector v)
{
    if (u.size() != n_ || v.size() != n_) throw InvalidArgument("rank-one term has wrong length");
    rank_one_.emplace(std::move(u), std::move(v));
}

double SparseMatrix::coeff(int i, int j) const
{
    double v = 0.0;
    const auto begin = columns_.begin() + row_offsets_[i];
    const auto end = columns_.begin() + row_offsets_[i + 1];
    const auto it = std::lower_bound(begin, end, j);
    if (it != end && *it == j) v = values_[static_cast<std::size_t>(it - columns_.begin())];
    if (rank_one_) v += rank_one_->first[i] * rank_one_->second[j];
    return v;
}

Vector SparseMatrix::multiply(const Vector& x) const
{
    if (x.size() != n_) throw InvalidArgument("sparse multiply: dimension mismatch");
    Vector y(n_);
    for (int r = 0; r < n_; ++r) {
        double s = 0.0;
        for (int k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) s += values_[k] * x[columns_[k]];
        y[r] = s;
    }
    if (rank_one_) y += rank_one_->first * rank_one_->second.dot(x);
    return y;
}

Vector SparseMatrix::multiply_transpose(const Vector& x) const
{
    if (x.size() != n_) throw InvalidArgument("sparse multiply: dimension mismatch");
    Vector y = Vector::Zero(n_);
    for (int r = 0; r < n_; ++r) {
        for (int k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) y[columns_[k]] += values_[k] * x[r];
    }
    if (rank_one_) y += rank_one_->second * rank_one_->first.dot(x);
    return y;
}

DenseMatrix SparseMatrix::to_dense() const
{
    DenseMatrix d = DenseMatrix::Zero(n_, n_);
    for (int r = 0; r < n_; ++r) {
        for (int k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) d(r, columns_[k]) = values_[k];
    }
    if (rank_one_) d.noalias() += rank_one_->first * rank_one_->second.transpose();
    return d;
}

SparseMatrix SparseMatrix::permuted(std::span<const int> new_position) const
{
    if (static_cast<int>(new_position.size()) != n_) throw InvalidArgument("permutation has wrong length");
    std::vector<Triplet> t;
    t.reserve(values_.size());
    for (int r = 0; r < n_; ++r) {
        for (int k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
            t.push_back({new_position[r], new_position[columns_[k]], values_[k]});
        }
    }
    SparseMatrix p = from_triplets(n_, std::move(t));
    if (rank_one_) {
        Vector u(n_), v(n_);
        for (int i = 0; i < n_; ++i) {
            u[new_position[i]] = rank_one_->first[i];
            v[new_position[i]] = rank_one_->second[i];
        }
        p.set_rank_one(std::move(u), std::move(v));
    }
    return p;
}

SparseMatrix SparseMatrix::scaled(double s) const
{
    SparseMatrix m = *this;
    for (double& v : m.values_) v *= s;
    if (m.rank_one_) m.rank_one_->first *= s;
    return m;
}

bool SparseMatrix::is_structurally_symmetric() const
{
    for (int r = 0; r < n_; ++r) {
        for (int k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
            const int c = columns_[k];
            const auto begin = columns_.begin() + row_offsets_[c];
            const auto end = columns_.begin() + row_offsets_[c + 1];
            if (!std::binary_search(begin, end, r)) return false;
        }
    }
    return true;
}

double SparseMatrix::max_asymmetry() const
{
    double worst = 0.0;
    for (int r = 0; r < n_; ++r) {
        for (int k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
            worst = std::max(worst, std::abs(coeff(r, columns_[k]) - coeff(columns_[k], r)));
        }
    }
    return worst;
}

LinearOperator sparse_operator(const SparseMatrix& a)
{
    LinearOperator op;
    op.rows = op.cols = a.size();
    op.apply = [&a](const Vector& x) { return a.multiply(x); };
    op.apply_transpose = [&a](const Vector& x) { return a.multiply_transpose(x); };
    return op;
}

DenseMatrix element_stiffness(const Mesh& mesh, int e, const Eigen::Matrix3d& diffusion)
{
    const int d = mesh.dim;
    const Gradients g = barycentric_gradients(mesh, e);
    const Eigen::MatrixXd c = diffusion.topLeftCorner(d, d);
    const double vol = mesh.element_volume(e);
    const int nv = d + 1;
    DenseMatrix k(nv, nv);
    for (int a = 0; a < nv; ++a) {
        for (int b = a; b < nv; ++b) {
            const double v = vol * g.row(a).dot(c * g.row(b).transpose());
            k(a, b) = v;
            k(b, a) = v;
        }
    }
    return k;
}

DenseMatrix element_mass(const Mesh& mesh, int e)
{
    const int nv = mesh.vertices_per_element();
    const double vol = mesh.element_volume(e);
    const double off = vol / ((nv) * (nv + 1));
    DenseMatrix m = DenseMatrix::Constant(nv, nv, off);
    m.diagonal().array() = 2.0 * off;
    return m;
}

Vector basis_integrals(const Mesh& mesh, const DofMap& dofs)
{
    Vector m = Vector::Zero(dofs.size());
    const int nv = mesh.vertices_per_element();
    for (int e = 0; e < mesh.element_count(); ++e) {
        const double share = mesh.element_volume(e) / nv;
        for (int a = 0; a < nv; ++a) {
            const int j = dofs.node_to_dof[mesh.elements[e][a]];
            if (j >= 0) m[j] += share;
        }
    }
    return m;
}

SparseMatrix assemble(const Mesh& mesh, const PdeCoefficients& coefficients, const DofMap& dofs)
{
    if (dofs.size() == 0) throw InvalidArgument("assemble: no free degrees of freedom");
    if (static_cast<int>(dofs.node_to_dof.size()) != mesh.node_count()) {
        throw InvalidArgument("assemble: dof map does not match mesh");
    }
    validate_diffusion(coefficients.diffusion, mesh.dim);

    const int d = mesh.dim;
    const int nv = d + 1;
    std::vector<Triplet> triplets;
    triplets.reserve(static_cast<std::size_t>(mesh.element_count()) * nv * nv);

    for (int e = 0; e < mesh.element_count(); ++e) {
        const std::span<const int> vertices(mesh.elements[e].data(), static_cast<std::size_t>(nv));
        DenseMatrix local = element_stiffness(mesh, e, coefficients.diffusion);
        const Point center = element_barycenter(mesh, e);
        if (coefficients.reaction) local += coefficients.reaction(center) * element_mass(mesh, e);
        scatter_symmetric(local, vertices, dofs, triplets);

        if (coefficients.convection) {
            const Point b = coefficients.convection(center);
            const Gradients g = barycentric_gradients(mesh, e);
            const double weight = mesh.element_volume(e) / nv; // psi_j(center) = 1/(d+1)
            for (int a = 0; a < nv; ++a) {
                const int row = dofs.node_to_dof[vertices[a]];
                if (row < 0) continue;
                for (int k = 0; k < nv; ++k) {
                    const int col = dofs.node_to_dof[vertices[k]];
                    if (col < 0) continue;
                    double bg = 0.0;
                    for (int r = 0; r < d; ++r) bg += b[r] * g(k, r);
                    triplets.push_back({row, col, weight * bg});
                }
            }
        }
    }

    for (const auto& facet : mesh.boundary_facets) {
        if (facet.tag.kind != BoundaryKind::Robin) continue;
        const int nf = mesh.vertices_per_facet();
        const double off = facet.tag.alpha * mesh.facet_measure(facet) / (nf * (nf + 1));
        DenseMatrix local = DenseMatrix::Constant(nf, nf, off);
        local.diagonal().array() = 2.0 * off;
        scatter_symmetric(local, std::span<const int>(facet.nodes.data(), static_cast<std::size_t>(nf)), dofs,
                          triplets);
    }

    SparseMatrix a = SparseMatrix::from_triplets(dofs.size(), std::move(triplets));
    if (coefficients.stabilization) {
        Vector m = basis_integrals(mesh, dofs);
        a.set_rank_one(m, m);
    }
    return a;
}

SparseMatrix assemble_neumann(const Mesh& mesh, const Eigen::Matrix3d& diffusion)
{
    for (const auto& facet : mesh.boundary_facets) {
        if (facet.tag.kind == BoundaryKind::Dirichlet) {
            throw InvalidArgument("assemble_neumann: mesh carries Dirichlet facets");
        }
    }
    PdeCoefficients coefficients;
    coefficients.diffusion = diffusion;
    coefficients.stabilization = true;
    return assemble(mesh, coefficients, build_dofmap(mesh));
}

SparseMatrix assemble_convdiff(const Mesh& mesh, double c, const DofMap& dofs)
{
    if (!(c > 0.0)) throw InvalidArgument("assemble_convdiff: diffusion constant must be positive");
    if (mesh.dim != 2) throw InvalidArgument("assemble_convdiff: two-dimensional meshes only");
    PdeCoefficients coefficients;
    coefficients.diffusion = c * Eigen::Matrix3d::Identity();
    coefficients.convection = [](const Point& x) { return Point{-x[1], x[0], 0.0}; };
    return assemble(mesh, coefficients, dofs);
}

Vector assemble_load(const Mesh& mesh, const DofMap& dofs, const std::function<double(const Point&)>& f)
{
    Vector rhs = Vector::Zero(dofs.size());
    const int nv = mesh.vertices_per_element();
    for (int e = 0; e < mesh.element_count(); ++e) {
        const auto& el = mesh.elements[e];
        const double vol = mesh.element_volume(e);
        for (int a = 0; a < nv; ++a) {
            const int j = dofs.node_to_dof[el[a]];
            if (j < 0) continue;
            double contribution = 0.0;
            if (mesh.dim == 2) {
                // Edge-midpoint rule: psi_a is 1/2 on the two edges through a.
                for (int b = 0; b < nv; ++b) {
                    if (b == a) continue;
                    const Point& p = mesh.nodes[el[a]];
                    const Point& q = mesh.nodes[el[b]];
                    contribution += 0.5 * f({0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1]), 0.0});
                }
                contribution *= vol / 3.0;
            } else {
                contribution = vol / nv * f(mesh.nodes[el[a]]);
            }
            rhs[j] += contribution;
        }
    }
    return rhs;
}

void write_matrix_market(const SparseMatrix& a, std::ostream& out)
{
    const int n = a.size();
    out << "%%MatrixMarket matrix coordinate real general\n";
    out.precision(17);
    if (!a.has_rank_one()) {
        out << n << ' ' << n << ' ' << a.nnz() << '\n';
        const auto offsets = a.row_offsets();
        const auto cols = a.column_indices();
        const auto vals = a.values();
        for (int r = 0; r < n; ++r) {
            for (int k = offsets[r]; k < offsets[r + 1]; ++k) {
                out << r + 1 << ' ' << cols[k] + 1 << ' ' << vals[k] << '\n';
            }
        }
        return;
    }
    // The rank-one term fills the matrix; write every nonzero of the operator.
    const DenseMatrix d = a.to_dense();
    const auto nonzeros = (d.array() != 0.0).count();
    out << n << ' ' << n << ' ' << nonzeros << '\n';
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            if (d(r, c) != 0.0) out << r + 1 << ' ' << c + 1 << ' ' << d(r, c) << '\n';
        }
    }
}

} // namespace hinv
