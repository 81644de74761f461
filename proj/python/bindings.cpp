#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hinv/experiment.hpp"
#include "hinv/hfactor.hpp"

namespace py = pybind11;
using namespace hinv;

namespace {

// Problem, tree and partition bundled; the matrix is kept in cluster order.
struct Discretization {
    ProblemSetup setup;
    ClusterTree tree;
    BlockPartition partition;
    DenseMatrix a;

    Discretization(const std::string& problem, int n, double eta, int n_leaf, const std::string& mode)
        : setup(setup_problem(parse_problem(problem), n))
    {
        tree = build_cluster_tree(setup.mesh, setup.dofs, n_leaf);
        partition = build_partition(tree, eta, parse_admissibility_mode(mode));
        if (setup.dofs.size() > kDenseBudget) throw BudgetExceeded("system too large for the dense path");
        a = setup.matrix.permuted(tree.permutation()).to_dense();
    }

    std::vector<int> permutation() const { return {tree.permutation().begin(), tree.permutation().end()}; }

    std::vector<py::tuple> blocks() const
    {
        std::vector<py::tuple> out;
        for (const auto& b : partition.blocks()) {
            out.push_back(py::make_tuple(b.level, b.rows.begin, b.rows.end, b.cols.begin, b.cols.end, b.far));
        }
        return out;
    }

    py::dict compress_inverse(int rank) const
    {
        const HMatrix h = compress(inverse(a), partition, rank);
        py::dict d;
        d["matrix"] = h.to_dense();
        d["storage_floats"] = storage_stats(h).floats;
        std::vector<double> errs;
        for (const auto& b : h.blocks()) {
            if (b.is_low_rank()) errs.push_back(b.truncation_error);
        }
        d["block_errors"] = errs;
        return d;
    }
};

} // namespace

PYBIND11_MODULE(_hinv, m)
{
    py::register_exception<Error>(m, "Error");
    py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
    py::register_exception<BudgetExceeded>(m, "BudgetExceeded", PyExc_MemoryError);

    m.def("parse_ranks", [](const std::string& s) { return parse_ranks(s); });

    m.def(
        "mesh",
        [](const std::string& problem, int n) {
            const Mesh mesh = build_problem_mesh(parse_problem(problem), n);
            const int k = mesh.vertices_per_element();
            Eigen::MatrixXd nodes(mesh.node_count(), mesh.dim);
            for (int i = 0; i < mesh.node_count(); ++i) {
                for (int ax = 0; ax < mesh.dim; ++ax) nodes(i, ax) = mesh.nodes[i][ax];
            }
            Eigen::MatrixXi elems(mesh.element_count(), k);
            for (int e = 0; e < mesh.element_count(); ++e) {
                for (int j = 0; j < k; ++j) elems(e, j) = mesh.elements[e][j];
            }
            return py::make_tuple(nodes, elems);
        },
        py::arg("problem"), py::arg("n"));

    m.def(
        "assemble",
        [](const std::string& problem, int n) {
            const ProblemSetup ps = setup_problem(parse_problem(problem), n);
            if (ps.dofs.size() > kDenseBudget) throw BudgetExceeded("system too large for the dense path");
            return ps.matrix.to_dense();
        },
        py::arg("problem"), py::arg("n"), "Galerkin matrix in natural dof order, dense.");

    m.def(
        "spectral_norm", [](const DenseMatrix& a) { return spectral_norm(dense_operator(a)).value; },
        py::arg("matrix"), "Power-iteration estimate of the 2-norm.");

    py::class_<Discretization>(m, "Discretization")
        .def(py::init<const std::string&, int, double, int, const std::string&>(), py::arg("problem"), py::arg("n"),
             py::arg("eta") = 2.0, py::arg("n_leaf") = 25, py::arg("mode") = "strong")
        .def_property_readonly("dofs", [](const Discretization& d) { return d.setup.dofs.size(); })
        .def_property_readonly("depth", [](const Discretization& d) { return d.tree.depth(); })
        .def_property_readonly("sparsity_constant",
                               [](const Discretization& d) { return sparsity_constant(d.partition); })
        .def_property_readonly("matrix", [](const Discretization& d) { return d.a; }, "cluster-ordered")
        .def_property_readonly("permutation", &Discretization::permutation)
        .def("blocks", &Discretization::blocks, "(level, row0, row1, col0, col1, far) per block")
        .def("compress_inverse", &Discretization::compress_inverse, py::arg("rank"))
        .def(
            "hlu",
            [](const Discretization& d, int rank) {
                const HLuFactors f = hlu_factorize(d.a, d.tree, d.partition, rank);
                return py::make_tuple(f.lower.to_dense(), f.upper.to_dense());
            },
            py::arg("rank") = kFullRank)
        .def(
            "hcholesky",
            [](const Discretization& d, int rank) {
                return hcholesky_factorize(d.a, d.tree, d.partition, rank).to_dense();
            },
            py::arg("rank") = kFullRank);

    m.def(
        "run_experiment",
        [](const std::string& problem, int n, const std::string& ranks, double eta, int n_leaf,
           const std::string& mode, const std::string& target) {
            ExperimentConfig cfg;
            cfg.problem = parse_problem(problem);
            cfg.n = n;
            cfg.ranks = parse_ranks(ranks);
            cfg.eta = eta;
            cfg.n_leaf = n_leaf;
            cfg.mode = parse_admissibility_mode(mode);
            cfg.target = parse_target(target);
            const ExperimentResult res = run_experiment(cfg);
            py::list rows;
            for (const auto& r : res.records) {
                py::dict row;
                row["rank"] = r.rank;
                row["error"] = r.error;
                row["seconds"] = r.seconds;
                row["storage_floats"] = r.storage_floats;
                row["converged"] = r.converged;
                rows.append(row);
            }
            py::list fits;
            for (const auto& f : res.fits) {
                py::dict fit;
                fit["exponent"] = f.exponent;
                fit["rate"] = f.rate;
                fit["prefactor"] = f.prefactor;
                fit["correlation"] = f.correlation;
                fit["rows_used"] = f.rows_used;
                fits.append(fit);
            }
            py::dict out;
            out["dofs"] = res.dofs;
            out["depth"] = res.depth;
            out["sparsity_constant"] = res.sparsity_constant;
            out["cond_lower"] = res.cond_lower;
            out["cond_upper"] = res.cond_upper;
            out["records"] = rows;
            out["fits"] = fits;
            return out;
        },
        py::arg("problem"), py::arg("n"), py::arg("ranks"), py::arg("eta") = 2.0, py::arg("n_leaf") = 25,
        py::arg("mode") = "strong", py::arg("target") = "inverse");
}
