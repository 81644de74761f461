#include "hinv/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <string>

namespace hinv {

double BoundingBox::diameter() const { return side * std::sqrt(static_cast<double>(dim)); }

Point BoundingBox::lower() const
{
    Point p{0.0, 0.0, 0.0};
    for (int k = 0; k < dim; ++k) p[k] = center[k] - 0.5 * side;
    return p;
}

Point BoundingBox::upper() const
{
    Point p{0.0, 0.0, 0.0};
    for (int k = 0; k < dim; ++k) p[k] = center[k] + 0.5 * side;
    return p;
}

double distance(const BoundingBox& a, const BoundingBox& b)
{
    double d2 = 0.0;
    const int dim = std::max(a.dim, b.dim);
    for (int k = 0; k < dim; ++k) {
        const double gap = std::abs(a.center[k] - b.center[k]) - 0.5 * (a.side + b.side);
        if (gap > 0.0) d2 += gap * gap;
    }
    return std::sqrt(d2);
}

AdmissibilityMode parse_admissibility_mode(std::string_view name)
{
    if (name == "strong") return AdmissibilityMode::Strong;
    if (name == "weak") return AdmissibilityMode::Weak;
    throw InvalidArgument("unknown admissibility mode '" + std::string(name) + "'");
}

bool is_admissible(const BoundingBox& tau, const BoundingBox& sigma, double eta, AdmissibilityMode mode)
{
    const double dt = tau.diameter();
    const double ds = sigma.diameter();
    const double diam = mode == AdmissibilityMode::Strong ? std::max(dt, ds) : std::min(dt, ds);
    return diam <= eta * distance(tau, sigma);
}

std::vector<DofGeometry> dof_geometry(const Mesh& mesh, const DofMap& dofs)
{
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<DofGeometry> geometry(static_cast<std::size_t>(dofs.size()));
    for (int j = 0; j < dofs.size(); ++j) {
        auto& g = geometry[j];
        g.point = mesh.nodes[dofs.free_nodes[j]];
        g.support_lower = {inf, inf, inf};
        g.support_upper = {-inf, -inf, -inf};
        for (int k = mesh.dim; k < 3; ++k) g.support_lower[k] = g.support_upper[k] = 0.0;
    }
    const int nv = mesh.vertices_per_element();
    for (const auto& el : mesh.elements) {
        for (int a = 0; a < nv; ++a) {
            const int j = dofs.node_to_dof[el[a]];
            if (j < 0) continue;
            auto& g = geometry[j];
            for (int b = 0; b < nv; ++b) {
                const Point& p = mesh.nodes[el[b]];
                for (int k = 0; k < mesh.dim; ++k) {
                    g.support_lower[k] = std::min(g.support_lower[k], p[k]);
                    g.support_upper[k] = std::max(g.support_upper[k], p[k]);
                }
            }
        }
    }
    return geometry;
}

namespace {

struct TreeBuilder {
    std::span<const DofGeometry> dofs;
    int dim;
    int n_leaf;
    std::vector<int> order; // working permutation: position -> dof
    std::vector<ClusterNode> nodes;

    BoundingBox support_cube(IndexRange range) const
    {
        Point lo{0.0, 0.0, 0.0};
        Point hi{0.0, 0.0, 0.0};
        for (int k = 0; k < dim; ++k) {
            lo[k] = std::numeric_limits<double>::infinity();
            hi[k] = -std::numeric_limits<double>::infinity();
        }
        for (int i = range.begin; i < range.end; ++i) {
            const auto& g = dofs[order[i]];
            for (int k = 0; k < dim; ++k) {
                lo[k] = std::min(lo[k], g.support_lower[k]);
                hi[k] = std::max(hi[k], g.support_upper[k]);
            }
        }
        BoundingBox box;
        box.dim = dim;
        for (int k = 0; k < dim; ++k) {
            box.center[k] = 0.5 * (lo[k] + hi[k]);
            box.side = std::max(box.side, hi[k] - lo[k]);
        }
        return box;
    }

    int build(IndexRange range, int level, int parent)
    {
        const int id = static_cast<int>(nodes.size());
        ClusterNode node;
        node.range = range;
        node.level = level;
        node.parent = parent;
        node.box = support_cube(range);
        nodes.push_back(node);
        if (range.size() <= n_leaf) return id;

        // Tight extent of the node coordinates decides the split.
        Point lo{0.0, 0.0, 0.0};
        Point hi{0.0, 0.0, 0.0};
        for (int k = 0; k < dim; ++k) {
            lo[k] = std::numeric_limits<double>::infinity();
            hi[k] = -std::numeric_limits<double>::infinity();
        }
        for (int i = range.begin; i < range.end; ++i) {
            const Point& p = dofs[order[i]].point;
            for (int k = 0; k < dim; ++k) {
                lo[k] = std::min(lo[k], p[k]);
                hi[k] = std::max(hi[k], p[k]);
            }
        }
        int axis = 0;
        for (int k = 1; k < dim; ++k) {
            if (hi[k] - lo[k] > hi[axis] - lo[axis]) axis = k;
        }
        if (!(hi[axis] - lo[axis] > 0.0)) {
            throw InvalidArgument("cluster tree: " + std::to_string(range.size()) +
                                  " dofs share one coordinate and exceed the leaf size");
        }
        const double mid = 0.5 * (lo[axis] + hi[axis]);
        auto first = order.begin() + range.begin;
        auto last = order.begin() + range.end;
        auto split = std::stable_partition(first, last, [&](int j) { return dofs[j].point[axis] < mid; });
        if (split == first || split == last) {
            std::stable_sort(first, last, [&](int a, int b) { return dofs[a].point[axis] < dofs[b].point[axis]; });
            split = first + range.size() / 2;
        }
        const int cut = static_cast<int>(split - order.begin());
        const int left = build({range.begin, cut}, level + 1, id);
        const int right = build({cut, range.end}, level + 1, id);
        nodes[id].children = {left, right};
        return id;
    }
};

void subdivide(const ClusterTree& tree, int tau, int sigma, BlockPartition& out)
{
    const ClusterNode& t = tree.node(tau);
    const ClusterNode& s = tree.node(sigma);
    if (is_admissible(t.box, s.box, out.eta, out.mode)) {
        out.far.push_back({tau, sigma, t.range, s.range, t.level, true});
        return;
    }
    if (t.is_leaf() && s.is_leaf()) {
        out.near.push_back({tau, sigma, t.range, s.range, t.level, false});
        return;
    }
    const bool split_tau = !t.is_leaf() && (s.is_leaf() || t.level <= s.level);
    const bool split_sigma = !s.is_leaf() && (t.is_leaf() || s.level <= t.level);
    if (split_tau && split_sigma) {
        for (int a : t.children) {
            for (int b : s.children) subdivide(tree, a, b, out);
        }
    } else if (split_tau) {
        for (int a : t.children) subdivide(tree, a, sigma, out);
    } else {
        for (int b : s.children) subdivide(tree, tau, b, out);
    }
}

} // namespace

int ClusterTree::depth() const
{
    int d = 0;
    for (const auto& n : nodes_) d = std::max(d, n.level);
    return d;
}

std::vector<int> ClusterTree::leaves() const
{
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(nodes_.size()); ++i) {
        if (nodes_[i].is_leaf()) out.push_back(i);
    }
    return out;
}

ClusterTree build_cluster_tree(std::span<const DofGeometry> dofs, int dim, int n_leaf)
{
    if (n_leaf < 1) throw InvalidArgument("leaf size must be >= 1");
    if (dim < 1 || dim > 3) throw InvalidArgument("dimension must be 1, 2 or 3");
    if (dofs.empty()) throw InvalidArgument("cluster tree over an empty index set");
    TreeBuilder builder{dofs, dim, n_leaf, {}, {}};
    builder.order.resize(dofs.size());
    std::iota(builder.order.begin(), builder.order.end(), 0);
    builder.build({0, static_cast<int>(dofs.size())}, 0, -1);

    ClusterTree tree;
    tree.dim_ = dim;
    tree.leaf_size_ = n_leaf;
    tree.nodes_ = std::move(builder.nodes);
    tree.ordering_ = std::move(builder.order);
    tree.permutation_.assign(dofs.size(), 0);
    for (int pos = 0; pos < static_cast<int>(tree.ordering_.size()); ++pos) {
        tree.permutation_[tree.ordering_[pos]] = pos;
    }
    return tree;
}

ClusterTree build_cluster_tree(const Mesh& mesh, const DofMap& dofs, int n_leaf)
{
    const auto geometry = dof_geometry(mesh, dofs);
    return build_cluster_tree(geometry, mesh.dim, n_leaf);
}

std::vector<Block> BlockPartition::blocks() const
{
    std::vector<Block> all = far;
    all.insert(all.end(), near.begin(), near.end());
    return all;
}

BlockPartition build_partition(const ClusterTree& tree, double eta, AdmissibilityMode mode)
{
    if (!(eta > 0.0)) throw InvalidArgument("admissibility parameter must be positive");
    BlockPartition p;
    p.eta = eta;
    p.mode = mode;
    p.size = tree.size();
    subdivide(tree, 0, 0, p);
    return p;
}

int sparsity_constant(const BlockPartition& partition)
{
    std::map<int, int> rows;
    std::map<int, int> cols;
    int best = 0;
    for (const auto& b : partition.far) {
        best = std::max(best, ++rows[b.row_cluster]);
        best = std::max(best, ++cols[b.col_cluster]);
    }
    return best;
}

void write_partition(const BlockPartition& partition, std::ostream& out)
{
    for (const auto& b : partition.blocks()) {
        out << b.level << ' ' << b.rows.begin << ' ' << b.rows.end << ' ' << b.cols.begin << ' ' << b.cols.end
            << ' ' << (b.far ? "far" : "near") << '\n';
    }
}

} // namespace hinv
