#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hinv/dense.hpp"
#include "hinv/mesh.hpp"

namespace hinv {

// Coefficients of  a(u,v) = <C grad u, grad v> + <b . grad u + beta u, v> + <alpha u, v>_{Robin}
// (+ <u,1><v,1> when stabilized). Robin alpha lives on the facet tags.
struct PdeCoefficients {
    Eigen::Matrix3d diffusion = Eigen::Matrix3d::Identity(); // leading dim x dim block used
    std::function<Point(const Point&)> convection;           // empty: b = 0
    std::function<double(const Point&)> reaction;            // empty: beta = 0
    bool stabilization = false;
};

// Free (non-Dirichlet) nodes in ascending node order.
struct DofMap {
    std::vector<int> free_nodes;
    std::vector<int> node_to_dof; // -1 for Dirichlet nodes

    int size() const { return static_cast<int>(free_nodes.size()); }
};

DofMap build_dofmap(const Mesh& mesh);

struct Triplet {
    int row;
    int col;
    double value;
};

// Square CSR matrix, optionally carrying a dense rank-one term u v^T that is
// part of the represented operator but not of the stored pattern.
class SparseMatrix {
public:
    SparseMatrix() = default;

    // Duplicates are summed; exact zeros are dropped.
    static SparseMatrix from_triplets(int n, std::vector<Triplet> triplets);
    static SparseMatrix identity(int n);

    int size() const { return n_; }
    int nnz() const { return static_cast<int>(values_.size()); }
    std::span<const int> row_offsets() const { return row_offsets_; }
    std::span<const int> column_indices() const { return columns_; }
    std::span<const double> values() const { return values_; }

    void set_rank_one(Vector u, Vector v);
    bool has_rank_one() const { return rank_one_.has_value(); }
    const Vector& rank_one_left() const { return rank_one_->first; }
    const Vector& rank_one_right() const { return rank_one_->second; }

    // Entry of the represented operator (pattern + rank-one term).
    double coeff(int i, int j) const;

    Vector multiply(const Vector& x) const;
    Vector multiply_transpose(const Vector& x) const;
    DenseMatrix to_dense() const;

    // B with B(p[i], p[j]) = A(i, j); p maps old index to new position.
    SparseMatrix permuted(std::span<const int> new_position) const;

    // Sparse part plus rank-one term scaled: (*this) * s.
    SparseMatrix scaled(double s) const;

    bool is_structurally_symmetric() const;
    double max_asymmetry() const;

private:
    int n_ = 0;
    std::vector<int> row_offsets_{0};
    std::vector<int> columns_;
    std::vector<double> values_;
    std::optional<std::pair<Vector, Vector>> rank_one_;
};

// Non-owning: `a` must outlive the operator.
LinearOperator sparse_operator(const SparseMatrix& a);

// Exact P1 element matrices on element e, ordered like the element's vertices.
DenseMatrix element_stiffness(const Mesh& mesh, int e, const Eigen::Matrix3d& diffusion);
DenseMatrix element_mass(const Mesh& mesh, int e);

SparseMatrix assemble(const Mesh& mesh, const PdeCoefficients& coefficients, const DofMap& dofs);

// K + m m^T over every node with m_j = integral of the j-th hat function.
SparseMatrix assemble_neumann(const Mesh& mesh, const Eigen::Matrix3d& diffusion);

// c * K + convection with b(x) = (-x2, x1), barycentric one-point rule.
SparseMatrix assemble_convdiff(const Mesh& mesh, double c, const DofMap& dofs);

// m_j = integral of psi_j over the domain, for free dofs.
Vector basis_integrals(const Mesh& mesh, const DofMap& dofs);

// Load vector <f, psi_j> with the edge-midpoint rule (2D) or vertex rule (3D).
Vector assemble_load(const Mesh& mesh, const DofMap& dofs, const std::function<double(const Point&)>& f);

// "%%MatrixMarket matrix coordinate real general", 1-based indices.
void write_matrix_market(const SparseMatrix& a, std::ostream& out);

} // namespace hinv
