// hinv: rank-sweep driver and debugging dumps.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "hinv/cluster.hpp"
#include "hinv/experiment.hpp"
#include "hinv/fem.hpp"
#include "hinv/mesh.hpp"

namespace {

struct RunArgs {
    std::string problem = "mixed-2d";
    int n = 64;
    double eta = 2.0;
    int nleaf = 25;
    std::string mode = "strong";
    std::string ranks = "1..16";
    std::string target = "inverse";
    std::string out;
    std::uint64_t seed = 42;
    bool no_timing = false;
    bool quiet = false;
};

struct DumpArgs {
    std::string problem = "mixed-2d";
    int n = 8;
    double eta = 2.0;
    int nleaf = 25;
    std::string mode = "strong";
    std::string out;
    bool matrix = false;
};

// Writes to `path`, or stdout when empty.
template <class F>
void with_output(const std::string& path, F&& f)
{
    if (path.empty()) {
        f(std::cout);
        return;
    }
    std::ofstream out(path);
    if (!out) throw hinv::Error("cannot open '" + path + "' for writing");
    f(out);
    if (!out) throw hinv::Error("failed writing '" + path + "'");
}

void run(const RunArgs& a)
{
    hinv::ExperimentConfig config;
    config.problem = hinv::parse_problem(a.problem);
    config.n = a.n;
    config.eta = a.eta;
    config.n_leaf = a.nleaf;
    config.mode = hinv::parse_admissibility_mode(a.mode);
    config.ranks = hinv::parse_ranks(a.ranks);
    config.target = hinv::parse_target(a.target);
    config.seed = a.seed;

    const hinv::ExperimentResult result = hinv::run_experiment(config);
    if (!a.quiet) {
        std::fprintf(stderr, "%s n=%d N=%d depth=%d far=%d near=%d C_sp=%d target=%s\n", a.problem.c_str(), a.n,
                     result.dofs, result.depth, result.far_blocks, result.near_blocks, result.sparsity_constant,
                     std::string(hinv::to_string(config.target)).c_str());
        if (config.target != hinv::Target::Inverse) {
            std::fprintf(stderr, "  cond2(L)~%.4g  cond2(U)~%.4g\n", result.cond_lower, result.cond_upper);
        }
        for (const auto& f : result.fits) {
            std::fprintf(stderr, "  s=%.4g  b=%.4g  corr=%.5f  rows=%d\n", f.exponent, f.rate, f.correlation,
                         f.rows_used);
        }
    }
    with_output(a.out, [&](std::ostream& os) { hinv::emit_csv(result.records, result.fits, os, !a.no_timing); });
}

void mesh_dump(const DumpArgs& a)
{
    const hinv::Mesh mesh = hinv::build_problem_mesh(hinv::parse_problem(a.problem), a.n);
    with_output(a.out, [&](std::ostream& os) { hinv::write_mesh(mesh, os); });
}

void partition_dump(const DumpArgs& a)
{
    const hinv::ProblemSetup setup = hinv::setup_problem(hinv::parse_problem(a.problem), a.n);
    const hinv::ClusterTree tree = hinv::build_cluster_tree(setup.mesh, setup.dofs, a.nleaf);
    const hinv::BlockPartition p = hinv::build_partition(tree, a.eta, hinv::parse_admissibility_mode(a.mode));
    with_output(a.out, [&](std::ostream& os) { hinv::write_partition(p, os); });
}

void matrix_dump(const DumpArgs& a)
{
    const hinv::ProblemSetup setup = hinv::setup_problem(hinv::parse_problem(a.problem), a.n);
    with_output(a.out, [&](std::ostream& os) { hinv::write_matrix_market(setup.matrix, os); });
}

void add_dump_options(CLI::App* cmd, DumpArgs& a, bool partition)
{
    cmd->add_option("--problem", a.problem, "mixed-2d | neumann-2d | mixed-3d | neumann-3d | convdiff-lshape");
    cmd->add_option("--n", a.n, "subdivisions per axis");
    cmd->add_option("--out", a.out, "output file (default stdout)");
    if (partition) {
        cmd->add_option("--eta", a.eta, "admissibility parameter");
        cmd->add_option("--nleaf", a.nleaf, "leaf size");
        cmd->add_option("--mode", a.mode, "strong | weak");
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"hierarchical-matrix rank sweeps on FEM matrices"};
    app.require_subcommand(1);

    RunArgs run_args;
    auto* run_cmd = app.add_subcommand("run", "rank sweep with error measurement and CSV output");
    run_cmd->add_option("--problem", run_args.problem, "mixed-2d | neumann-2d | mixed-3d | neumann-3d | convdiff-lshape");
    run_cmd->add_option("--n", run_args.n, "subdivisions per axis");
    run_cmd->add_option("--eta", run_args.eta, "admissibility parameter");
    run_cmd->add_option("--nleaf", run_args.nleaf, "leaf size");
    run_cmd->add_option("--mode", run_args.mode, "strong | weak");
    run_cmd->add_option("--ranks", run_args.ranks, "e.g. 1..16 or 1,2,4,8");
    run_cmd->add_option("--target", run_args.target, "inverse | lu | cholesky");
    run_cmd->add_option("--out", run_args.out, "CSV path (default stdout)");
    run_cmd->add_option("--seed", run_args.seed, "power iteration seed");
    run_cmd->add_flag("--no-timing", run_args.no_timing, "write 0 in the seconds column");
    run_cmd->add_flag("--quiet", run_args.quiet, "no summary on stderr");

    DumpArgs mesh_args;
    auto* mesh_cmd = app.add_subcommand("mesh-dump", "plain-text mesh dump");
    add_dump_options(mesh_cmd, mesh_args, false);

    DumpArgs part_args;
    auto* part_cmd = app.add_subcommand("partition-dump", "one line per block of the partition");
    add_dump_options(part_cmd, part_args, true);

    DumpArgs mat_args;
    auto* mat_cmd = app.add_subcommand("matrix-dump", "Matrix Market export of the Galerkin matrix");
    add_dump_options(mat_cmd, mat_args, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) run(run_args);
        if (*mesh_cmd) mesh_dump(mesh_args);
        if (*part_cmd) partition_dump(part_args);
        if (*mat_cmd) matrix_dump(mat_args);
    } catch (const hinv::BudgetExceeded& e) {
        std::cerr << "hinv: " << e.what() << '\n';
        return 2;
    } catch (const hinv::NumericalError& e) {
        std::cerr << "hinv: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "hinv: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
