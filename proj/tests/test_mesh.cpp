#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "hinv/mesh.hpp"

using namespace hinv;

namespace {

double total_volume(const Mesh& m)
{
    double v = 0.0;
    for (int e = 0; e < m.element_count(); ++e) v += m.element_volume(e);
    return v;
}

int count_kind(const Mesh& m, BoundaryKind k)
{
    int c = 0;
    for (const auto& f : m.boundary_facets) c += f.tag.kind == k;
    return c;
}

// Brute-force facet sharing: counts are recomputed here from scratch.
void check_facet_sharing(const Mesh& m)
{
    std::map<std::vector<int>, int> count;
    const int nv = m.dim + 1;
    for (const auto& el : m.elements) {
        for (int skip = 0; skip < nv; ++skip) {
            std::vector<int> f;
            for (int k = 0; k < nv; ++k) {
                if (k != skip) f.push_back(el[k]);
            }
            std::sort(f.begin(), f.end());
            ++count[f];
        }
    }
    std::set<std::vector<int>> boundary;
    for (const auto& bf : m.boundary_facets) {
        std::vector<int> f(bf.nodes.begin(), bf.nodes.begin() + m.dim);
        std::sort(f.begin(), f.end());
        boundary.insert(f);
    }
    int boundary_count = 0;
    for (const auto& [f, c] : count) {
        CHECK((c == 1 || c == 2));
        if (c == 1) {
            ++boundary_count;
            CHECK(boundary.count(f) == 1);
        }
    }
    CHECK(boundary_count == static_cast<int>(m.boundary_facets.size()));
}

double max_element_diameter(const Mesh& m)
{
    double h = 0.0;
    for (const auto& el : m.elements) {
        for (int a = 0; a <= m.dim; ++a) {
            for (int b = a + 1; b <= m.dim; ++b) {
                double s = 0.0;
                for (int k = 0; k < 3; ++k) {
                    const double d = m.nodes[el[a]][k] - m.nodes[el[b]][k];
                    s += d * d;
                }
                h = std::max(h, std::sqrt(s));
            }
        }
    }
    return h;
}

} // namespace

TEST_CASE("unit square counts")
{
    const Mesh m1 = build_unit_square(1);
    CHECK(m1.node_count() == 4);
    CHECK(m1.element_count() == 2);

    const Mesh m2 = build_unit_square(2);
    CHECK(m2.node_count() == 9);
    CHECK(m2.element_count() == 8);
    CHECK(m2.h == doctest::Approx(std::sqrt(2.0) / 2).epsilon(1e-14));

    CHECK(build_unit_square(4).boundary_facets.size() == 16);
}

TEST_CASE("unit cube counts and volume")
{
    const Mesh c1 = build_unit_cube(1);
    CHECK(c1.node_count() == 8);
    CHECK(c1.element_count() == 6);
    const Mesh c2 = build_unit_cube(2);
    CHECK(c2.node_count() == 27);
    CHECK(c2.element_count() == 48);
    for (int n : {1, 2, 3, 5}) CHECK(std::abs(total_volume(build_unit_cube(n)) - 1.0) < 1e-12);
}

TEST_CASE("L-shape")
{
    const Mesh l = build_lshape(2);
    CHECK(l.node_count() == 8);
    CHECK(l.element_count() == 6);
    for (int n : {2, 4, 8, 16}) CHECK(std::abs(total_volume(build_lshape(n)) - 0.75) < 1e-12);

    const Mesh l8 = build_lshape(8);
    bool corner = false;
    for (const auto& p : l8.nodes) corner |= std::abs(p[0] - 0.5) < 1e-14 && std::abs(p[1] - 0.5) < 1e-14;
    CHECK(corner);
    // nothing inside the removed quadrant
    for (const auto& p : l8.nodes) CHECK_FALSE((p[0] > 0.5 + 1e-12 && p[1] > 0.5 + 1e-12));
}

TEST_CASE("invalid sizes are rejected")
{
    CHECK_THROWS_AS(build_unit_square(0), InvalidArgument);
    CHECK_THROWS_AS(build_unit_cube(0), InvalidArgument);
    CHECK_THROWS_AS(build_lshape(3), InvalidArgument);
    CHECK_THROWS_AS(build_lshape(0), InvalidArgument);
    CHECK_THROWS_AS(parse_problem("mixed-4d"), InvalidArgument);
    CHECK_THROWS_AS(BoundaryTag::robin(0.0), InvalidArgument);
    CHECK_THROWS_AS(BoundaryTag::robin(-1.0), InvalidArgument);
    CHECK(BoundaryTag::robin(2.5).alpha == 2.5);
}

TEST_CASE("boundary classification")
{
    const Mesh sq = classify_boundary(build_unit_square(2), Problem::Mixed2d);
    CHECK(count_kind(sq, BoundaryKind::Dirichlet) == 4);
    CHECK(count_kind(sq, BoundaryKind::Neumann) == 4);

    const Mesh nm = classify_boundary(build_unit_square(2), Problem::Neumann2d);
    CHECK(count_kind(nm, BoundaryKind::Dirichlet) == 0);

    // cube n=1: each face is two triangles
    const Mesh cube = classify_boundary(build_unit_cube(1), Problem::Mixed3d);
    CHECK(count_kind(cube, BoundaryKind::Dirichlet) == 6);
    CHECK(count_kind(cube, BoundaryKind::Neumann) == 6);
    for (const auto& f : cube.boundary_facets) {
        bool on_zero_face = false;
        for (int axis = 0; axis < 3; ++axis) {
            bool all = true;
            for (int k = 0; k < 3; ++k) all &= cube.nodes[f.nodes[k]][axis] == 0.0;
            on_zero_face |= all;
        }
        CHECK(on_zero_face == (f.tag.kind == BoundaryKind::Dirichlet));
    }

    // L-shape: Neumann exactly on x2 = 0 and x1 = 1
    const Mesh l = classify_boundary(build_lshape(4), Problem::ConvDiffLShape);
    for (const auto& f : l.boundary_facets) {
        const auto& a = l.nodes[f.nodes[0]];
        const auto& b = l.nodes[f.nodes[1]];
        const bool neumann = (a[1] == 0.0 && b[1] == 0.0) || (a[0] == 1.0 && b[0] == 1.0);
        CHECK(neumann == (f.tag.kind == BoundaryKind::Neumann));
    }
}

TEST_CASE("mesh invariants over the family")
{
    std::vector<Mesh> meshes;
    for (int n : {1, 2, 5, 16, 64}) meshes.push_back(build_unit_square(n));
    for (int n : {1, 2, 5, 12}) meshes.push_back(build_unit_cube(n));
    for (int n : {2, 6, 32}) meshes.push_back(build_lshape(n));
    for (const Mesh& m : meshes) {
        for (int e = 0; e < m.element_count(); ++e) REQUIRE(signed_element_volume(m, e) > 0.0);
        check_facet_sharing(m);
        CHECK(m.h == doctest::Approx(max_element_diameter(m)).epsilon(1e-14));
        for (const auto& p : m.nodes) {
            for (int k = 0; k < m.dim; ++k) CHECK((p[k] >= 0.0 && p[k] <= 1.0));
        }
    }
}

TEST_CASE("tags partition the boundary and Dirichlet nodes follow facets")
{
    for (Problem p : {Problem::Mixed2d, Problem::Neumann2d, Problem::Mixed3d, Problem::ConvDiffLShape}) {
        const Mesh m = build_problem_mesh(p, problem_dimension(p) == 3 ? 3 : 4);
        const int d = count_kind(m, BoundaryKind::Dirichlet);
        const int nm = count_kind(m, BoundaryKind::Neumann);
        CHECK(d + nm == static_cast<int>(m.boundary_facets.size()));
        const auto dn = dirichlet_nodes(m);
        std::vector<bool> expect(m.nodes.size(), false);
        for (const auto& f : m.boundary_facets) {
            if (f.tag.kind != BoundaryKind::Dirichlet) continue;
            for (int k = 0; k < m.dim; ++k) expect[f.nodes[k]] = true;
        }
        CHECK(dn == expect);
    }
}

TEST_CASE("mesh dump format")
{
    std::ostringstream os;
    write_mesh(classify_boundary(build_unit_square(1), Problem::Mixed2d), os);
    std::istringstream in(os.str());
    std::string word;
    int count = 0;
    in >> word >> count;
    CHECK(word == "nodes");
    CHECK(count == 4);
    CHECK(os.str().find("elements 2") != std::string::npos);
    CHECK(os.str().find("facets 4") != std::string::npos);
    CHECK(os.str().find("dirichlet") != std::string::npos);
    CHECK(os.str().find("neumann") != std::string::npos);
}
