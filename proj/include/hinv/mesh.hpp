#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string_view>
#include <vector>

#include "hinv/common.hpp"

namespace hinv {

enum class BoundaryKind : std::uint8_t { Dirichlet, Neumann, Robin };

struct BoundaryTag {
    BoundaryKind kind = BoundaryKind::Neumann;
    double alpha = 0.0; // Robin coefficient, > 0 iff kind == Robin

    static BoundaryTag dirichlet() { return {BoundaryKind::Dirichlet, 0.0}; }
    static BoundaryTag neumann() { return {BoundaryKind::Neumann, 0.0}; }
    static BoundaryTag robin(double alpha);

    bool operator==(const BoundaryTag&) const = default;
};

struct BoundaryFacet {
    std::array<int, 3> nodes{-1, -1, -1}; // first `dim` entries used
    BoundaryTag tag;
};

// Simplicial triangulation of a subset of [0,1]^dim. Unused trailing entries of
// element / facet arrays (and the z coordinate in 2D) are -1 / 0.
struct Mesh {
    int dim = 2;
    std::vector<Point> nodes;
    std::vector<std::array<int, 4>> elements;
    std::vector<BoundaryFacet> boundary_facets;
    double h = 0.0;

    int vertices_per_element() const { return dim + 1; }
    int vertices_per_facet() const { return dim; }
    int node_count() const { return static_cast<int>(nodes.size()); }
    int element_count() const { return static_cast<int>(elements.size()); }

    double element_volume(int e) const;
    double facet_measure(const BoundaryFacet& facet) const;
};

// The experiment geometries and boundary splits.
enum class Problem { Mixed2d, Neumann2d, Mixed3d, Neumann3d, ConvDiffLShape };

Problem parse_problem(std::string_view name);
std::string_view to_string(Problem problem);
int problem_dimension(Problem problem);

Mesh build_unit_square(int n);
Mesh build_unit_cube(int n);
Mesh build_lshape(int n);

// Returns a copy of `mesh` with every boundary facet tagged for `problem`.
Mesh classify_boundary(Mesh mesh, Problem problem);
Mesh tag_all_boundary(Mesh mesh, BoundaryTag tag);

// Geometry matching the problem, tagged.
Mesh build_problem_mesh(Problem problem, int n);

// Nodes on the closure of the Dirichlet boundary.
std::vector<bool> dirichlet_nodes(const Mesh& mesh);

double signed_element_volume(const Mesh& mesh, int e);

// Sorted facet node tuple -> number of elements containing it.
std::map<std::array<int, 3>, int> facet_incidence(const Mesh& mesh);

// Plain-text dump: "nodes <n>" followed by "x y [z]" lines, "elements <m>"
// followed by index lines, "facets <k>" followed by "indices... tag" lines.
void write_mesh(const Mesh& mesh, std::ostream& out);

} // namespace hinv
