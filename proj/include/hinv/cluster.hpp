#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <vector>

#include "hinv/common.hpp"
#include "hinv/fem.hpp"
#include "hinv/mesh.hpp"

namespace hinv {

// Axis-aligned hyper-cube.
struct BoundingBox {
    Point center{0.0, 0.0, 0.0};
    double side = 0.0;
    int dim = 2;

    double diameter() const;
    Point lower() const;
    Point upper() const;
};

// Euclidean distance between two boxes, 0 if they overlap.
double distance(const BoundingBox& a, const BoundingBox& b);

enum class AdmissibilityMode { Strong, Weak };

AdmissibilityMode parse_admissibility_mode(std::string_view name);

// Strong: max(diam) <= eta * dist.  Weak: min(diam) <= eta * dist.
bool is_admissible(const BoundingBox& tau, const BoundingBox& sigma, double eta, AdmissibilityMode mode);

// Where a DOF sits (node coordinate) and the extent of its hat-function support.
struct DofGeometry {
    Point point{0.0, 0.0, 0.0};
    Point support_lower{0.0, 0.0, 0.0};
    Point support_upper{0.0, 0.0, 0.0};
};

std::vector<DofGeometry> dof_geometry(const Mesh& mesh, const DofMap& dofs);

struct ClusterNode {
    IndexRange range;
    BoundingBox box;
    std::array<int, 2> children{-1, -1};
    int parent = -1;
    int level = 0;

    bool is_leaf() const { return children[0] < 0; }
};

// Binary geometric cluster tree. Node 0 is the root; nodes are stored in
// depth-first pre-order, so every cluster's index set is a contiguous range of
// the permuted ordering.
class ClusterTree {
public:
    ClusterTree() = default;

    int size() const { return static_cast<int>(permutation_.size()); }
    int dim() const { return dim_; }
    int leaf_size() const { return leaf_size_; }
    int depth() const;

    const std::vector<ClusterNode>& nodes() const { return nodes_; }
    const ClusterNode& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
    const ClusterNode& root() const { return nodes_.front(); }
    std::vector<int> leaves() const;

    // old dof index -> position in cluster order
    std::span<const int> permutation() const { return permutation_; }
    // position in cluster order -> old dof index
    std::span<const int> ordering() const { return ordering_; }

    friend ClusterTree build_cluster_tree(std::span<const DofGeometry> dofs, int dim, int n_leaf);

private:
    int dim_ = 2;
    int leaf_size_ = 1;
    std::vector<ClusterNode> nodes_;
    std::vector<int> permutation_;
    std::vector<int> ordering_;
};

// Recursive bisection at the midpoint of the longest axis of the clusters'
// node coordinates; median split if a side would be empty.
ClusterTree build_cluster_tree(std::span<const DofGeometry> dofs, int dim, int n_leaf);
ClusterTree build_cluster_tree(const Mesh& mesh, const DofMap& dofs, int n_leaf);

struct Block {
    int row_cluster = 0;
    int col_cluster = 0;
    IndexRange rows;
    IndexRange cols;
    int level = 0; // level of the row cluster
    bool far = false;
};

struct BlockPartition {
    std::vector<Block> far;
    std::vector<Block> near;
    double eta = 2.0;
    AdmissibilityMode mode = AdmissibilityMode::Strong;
    int size = 0;

    // far blocks first, then near blocks
    std::vector<Block> blocks() const;
    std::size_t block_count() const { return far.size() + near.size(); }
};

BlockPartition build_partition(const ClusterTree& tree, double eta, AdmissibilityMode mode);

// Max number of far-field partners of any single row or column cluster.
int sparsity_constant(const BlockPartition& partition);

// One line per block: "level tau_start tau_end sigma_start sigma_end far|near".
void write_partition(const BlockPartition& partition, std::ostream& out);

} // namespace hinv
