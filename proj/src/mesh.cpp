#include "hinv/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>

namespace hinv {

namespace {

constexpr double kCoordinateTolerance = 1e-12;

struct Plane {
    int axis;
    double value;
};

bool facet_on_plane(const Mesh& mesh, const BoundaryFacet& facet, const Plane& plane)
{
    for (int k = 0; k < mesh.vertices_per_facet(); ++k) {
        const Point& p = mesh.nodes[facet.nodes[k]];
        if (std::abs(p[plane.axis] - plane.value) > kCoordinateTolerance) return false;
    }
    return true;
}

bool facet_on_any(const Mesh& mesh, const BoundaryFacet& facet, const std::vector<Plane>& planes)
{
    return std::any_of(planes.begin(), planes.end(),
                       [&](const Plane& p) { return facet_on_plane(mesh, facet, p); });
}

void orient_positively(Mesh& mesh)
{
    for (int e = 0; e < mesh.element_count(); ++e) {
        if (signed_element_volume(mesh, e) < 0.0) {
            auto& el = mesh.elements[e];
            std::swap(el[mesh.dim - 1], el[mesh.dim]);
        }
    }
}

double max_edge_length(const Mesh& mesh)
{
    double h = 0.0;
    const int nv = mesh.vertices_per_element();
    for (const auto& el : mesh.elements) {
        for (int a = 0; a < nv; ++a) {
            for (int b = a + 1; b < nv; ++b) {
                const Point& p = mesh.nodes[el[a]];
                const Point& q = mesh.nodes[el[b]];
                double d2 = 0.0;
                for (int k = 0; k < mesh.dim; ++k) d2 += (p[k] - q[k]) * (p[k] - q[k]);
                h = std::max(h, std::sqrt(d2));
            }
        }
    }
    return h;
}

void extract_boundary(Mesh& mesh)
{
    mesh.boundary_facets.clear();
    for (const auto& [key, count] : facet_incidence(mesh)) {
        if (count != 1) continue;
        BoundaryFacet facet;
        facet.nodes = key;
        facet.tag = BoundaryTag::neumann();
        mesh.boundary_facets.push_back(facet);
    }
}

void finalize(Mesh& mesh)
{
    orient_positively(mesh);
    mesh.h = max_edge_length(mesh);
    extract_boundary(mesh);
}

void require_subdivisions(int n)
{
    if (n < 1) throw InvalidArgument("mesh subdivisions must be >= 1, got " + std::to_string(n));
}

} // namespace

BoundaryTag BoundaryTag::robin(double alpha)
{
    if (!(alpha > 0.0)) throw InvalidArgument("Robin coefficient must be positive");
    return {BoundaryKind::Robin, alpha};
}

double signed_element_volume(const Mesh& mesh, int e)
{
    const auto& el = mesh.elements[e];
    const Point& p0 = mesh.nodes[el[0]];
    if (mesh.dim == 2) {
        const Point& p1 = mesh.nodes[el[1]];
        const Point& p2 = mesh.nodes[el[2]];
        return 0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]));
    }
    std::array<std::array<double, 3>, 3> m{};
    for (int r = 0; r < 3; ++r) {
        const Point& p = mesh.nodes[el[r + 1]];
        for (int c = 0; c < 3; ++c) m[r][c] = p[c] - p0[c];
    }
    const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                       - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                       + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    return det / 6.0;
}

double Mesh::element_volume(int e) const { return std::abs(signed_element_volume(*this, e)); }

double Mesh::facet_measure(const BoundaryFacet& facet) const
{
    const Point& a = nodes[facet.nodes[0]];
    const Point& b = nodes[facet.nodes[1]];
    if (dim == 2) return std::hypot(b[0] - a[0], b[1] - a[1]);
    const Point& c = nodes[facet.nodes[2]];
    const std::array<double, 3> u{b[0] - a[0], b[1] - a[1], b[2] - a[2]};
    const std::array<double, 3> v{c[0] - a[0], c[1] - a[1], c[2] - a[2]};
    const std::array<double, 3> w{u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2],
                                  u[0] * v[1] - u[1] * v[0]};
    return 0.5 * std::sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2]);
}

std::map<std::array<int, 3>, int> facet_incidence(const Mesh& mesh)
{
    std::map<std::array<int, 3>, int> counts;
    const int nv = mesh.vertices_per_element();
    for (const auto& el : mesh.elements) {
        for (int skip = 0; skip < nv; ++skip) {
            std::array<int, 3> key{-1, -1, -1};
            int k = 0;
            for (int a = 0; a < nv; ++a) {
                if (a != skip) key[k++] = el[a];
            }
            std::sort(key.begin(), key.begin() + mesh.dim);
            ++counts[key];
        }
    }
    return counts;
}

Mesh build_unit_square(int n)
{
    require_subdivisions(n);
    Mesh mesh;
    mesh.dim = 2;
    const int stride = n + 1;
    mesh.nodes.reserve(static_cast<std::size_t>(stride) * stride);
    for (int j = 0; j <= n; ++j) {
        for (int i = 0; i <= n; ++i) {
            mesh.nodes.push_back({double(i) / n, double(j) / n, 0.0});
        }
    }
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const int v00 = i + stride * j;
            const int v10 = v00 + 1;
            const int v01 = v00 + stride;
            const int v11 = v01 + 1;
            mesh.elements.push_back({v00, v10, v11, -1});
            mesh.elements.push_back({v00, v11, v01, -1});
        }
    }
    finalize(mesh);
    return mesh;
}

Mesh build_unit_cube(int n)
{
    require_subdivisions(n);
    Mesh mesh;
    mesh.dim = 3;
    const int stride = n + 1;
    auto index = [stride](int i, int j, int k) { return i + stride * (j + stride * k); };
    for (int k = 0; k <= n; ++k) {
        for (int j = 0; j <= n; ++j) {
            for (int i = 0; i <= n; ++i) {
                mesh.nodes.push_back({double(i) / n, double(j) / n, double(k) / n});
            }
        }
    }
    // Kuhn subdivision: one tetrahedron per monotone lattice path from the
    // cell's lower corner to its upper corner.
    std::array<int, 3> axes{0, 1, 2};
    std::vector<std::array<int, 3>> paths;
    do {
        paths.push_back(axes);
    } while (std::next_permutation(axes.begin(), axes.end()));

    for (int k = 0; k < n; ++k) {
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < n; ++i) {
                for (const auto& path : paths) {
                    std::array<int, 3> c{i, j, k};
                    std::array<int, 4> tet{};
                    tet[0] = index(c[0], c[1], c[2]);
                    for (int s = 0; s < 3; ++s) {
                        ++c[path[s]];
                        tet[s + 1] = index(c[0], c[1], c[2]);
                    }
                    mesh.elements.push_back(tet);
                }
            }
        }
    }
    finalize(mesh);
    return mesh;
}

Mesh build_lshape(int n)
{
    if (n < 2 || n % 2 != 0) {
        throw InvalidArgument("L-shape needs an even subdivision count >= 2, got " + std::to_string(n));
    }
    const int stride = n + 1;
    const int half = n / 2;
    auto inside = [half](int i, int j) { return j < half || i < half; };

    std::vector<int> renumber(static_cast<std::size_t>(stride) * stride, -1);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            if (!inside(i, j)) continue;
            for (int dj = 0; dj <= 1; ++dj) {
                for (int di = 0; di <= 1; ++di) renumber[(i + di) + stride * (j + dj)] = 0;
            }
        }
    }
    Mesh mesh;
    mesh.dim = 2;
    for (int j = 0; j <= n; ++j) {
        for (int i = 0; i <= n; ++i) {
            int& id = renumber[i + stride * j];
            if (id < 0) continue;
            id = mesh.node_count();
            mesh.nodes.push_back({double(i) / n, double(j) / n, 0.0});
        }
    }
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            if (!inside(i, j)) continue;
            const int v00 = renumber[i + stride * j];
            const int v10 = renumber[i + 1 + stride * j];
            const int v01 = renumber[i + stride * (j + 1)];
            const int v11 = renumber[i + 1 + stride * (j + 1)];
            mesh.elements.push_back({v00, v10, v11, -1});
            mesh.elements.push_back({v00, v11, v01, -1});
        }
    }
    finalize(mesh);
    return mesh;
}

Problem parse_problem(std::string_view name)
{
    if (name == "mixed-2d") return Problem::Mixed2d;
    if (name == "neumann-2d") return Problem::Neumann2d;
    if (name == "mixed-3d") return Problem::Mixed3d;
    if (name == "neumann-3d") return Problem::Neumann3d;
    if (name == "convdiff-lshape") return Problem::ConvDiffLShape;
    throw InvalidArgument("unknown problem '" + std::string(name) + "'");
}

std::string_view to_string(Problem problem)
{
    switch (problem) {
    case Problem::Mixed2d: return "mixed-2d";
    case Problem::Neumann2d: return "neumann-2d";
    case Problem::Mixed3d: return "mixed-3d";
    case Problem::Neumann3d: return "neumann-3d";
    case Problem::ConvDiffLShape: return "convdiff-lshape";
    }
    throw InvalidArgument("unknown problem");
}

int problem_dimension(Problem problem)
{
    return (problem == Problem::Mixed3d || problem == Problem::Neumann3d) ? 3 : 2;
}

Mesh tag_all_boundary(Mesh mesh, BoundaryTag tag)
{
    for (auto& facet : mesh.boundary_facets) facet.tag = tag;
    return mesh;
}

Mesh classify_boundary(Mesh mesh, Problem problem)
{
    if (problem_dimension(problem) != mesh.dim) {
        throw InvalidArgument("mesh dimension does not match problem " + std::string(to_string(problem)));
    }
    switch (problem) {
    case Problem::Neumann2d:
    case Problem::Neumann3d: return tag_all_boundary(std::move(mesh), BoundaryTag::neumann());
    case Problem::Mixed2d:
    case Problem::Mixed3d: {
        std::vector<Plane> dirichlet;
        for (int axis = 0; axis < mesh.dim; ++axis) dirichlet.push_back({axis, 0.0});
        for (auto& facet : mesh.boundary_facets) {
            facet.tag = facet_on_any(mesh, facet, dirichlet) ? BoundaryTag::dirichlet()
                                                             : BoundaryTag::neumann();
        }
        return mesh;
    }
    case Problem::ConvDiffLShape: {
        // Neumann on {x2 = 0} and {x1 = 1}; Dirichlet elsewhere.
        const std::vector<Plane> neumann{{1, 0.0}, {0, 1.0}};
        for (auto& facet : mesh.boundary_facets) {
            facet.tag = facet_on_any(mesh, facet, neumann) ? BoundaryTag::neumann()
                                                           : BoundaryTag::dirichlet();
        }
        return mesh;
    }
    }
    throw InvalidArgument("unknown problem");
}

Mesh build_problem_mesh(Problem problem, int n)
{
    switch (problem) {
    case Problem::Mixed2d:
    case Problem::Neumann2d: return classify_boundary(build_unit_square(n), problem);
    case Problem::Mixed3d:
    case Problem::Neumann3d: return classify_boundary(build_unit_cube(n), problem);
    case Problem::ConvDiffLShape: return classify_boundary(build_lshape(n), problem);
    }
    throw InvalidArgument("unknown problem");
}

std::vector<bool> dirichlet_nodes(const Mesh& mesh)
{
    std::vector<bool> flags(mesh.nodes.size(), false);
    for (const auto& facet : mesh.boundary_facets) {
        if (facet.tag.kind != BoundaryKind::Dirichlet) continue;
        for (int k = 0; k < mesh.vertices_per_facet(); ++k) flags[facet.nodes[k]] = true;
    }
    return flags;
}

void write_mesh(const Mesh& mesh, std::ostream& out)
{
    out << "nodes " << mesh.nodes.size() << '\n';
    for (const auto& p : mesh.nodes) {
        out << p[0] << ' ' << p[1];
        if (mesh.dim == 3) out << ' ' << p[2];
        out << '\n';
    }
    out << "elements " << mesh.elements.size() << '\n';
    for (const auto& el : mesh.elements) {
        for (int a = 0; a < mesh.vertices_per_element(); ++a) out << (a ? " " : "") << el[a];
        out << '\n';
    }
    out << "facets " << mesh.boundary_facets.size() << '\n';
    for (const auto& facet : mesh.boundary_facets) {
        for (int a = 0; a < mesh.vertices_per_facet(); ++a) out << facet.nodes[a] << ' ';
        switch (facet.tag.kind) {
        case BoundaryKind::Dirichlet: out << "dirichlet"; break;
        case BoundaryKind::Neumann: out << "neumann"; break;
        case BoundaryKind::Robin: out << "robin:" << facet.tag.alpha; break;
        }
        out << '\n';
    }
}

} // namespace hinv
