// Runs the thirteen acceptance checks and prints one PASS/FAIL line each.
// Exit status is the number of failures not listed via --known-failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hinv/dense.hpp"
#include "hinv/experiment.hpp"
#include "hinv/hfactor.hpp"
#include "hinv/hmatrix.hpp"
#include "manufactured.hpp"
#include "oracles.hpp"

using namespace hinv;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

bool non_increasing(const std::vector<ExperimentRecord>& rows)
{
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].error > rows[i - 1].error) return false;
    }
    return true;
}

ExperimentResult sweep(Problem p, int n, const std::string& ranks, AdmissibilityMode mode = AdmissibilityMode::Strong,
                       Target target = Target::Inverse)
{
    ExperimentConfig cfg;
    cfg.problem = p;
    cfg.n = n;
    cfg.ranks = parse_ranks(ranks);
    cfg.mode = mode;
    cfg.target = target;
    return run_experiment(cfg);
}

Outcome exponential(const ExperimentResult& res, double exponent, double corr_bar, double min_rate, bool monotone)
{
    const RateFit* f = res.fit_for(exponent);
    if (f == nullptr) return {false, "no fit"};
    const bool mono = !monotone || non_increasing(res.records);
    const bool ok = mono && f->correlation <= corr_bar && f->rate >= min_rate;
    std::ostringstream d;
    d << "N=" << res.dofs << " b=" << fmt("%.3f", f->rate) << " corr=" << fmt("%.4f", f->correlation)
      << " monotone=" << (mono ? "yes" : "no") << " err(r=" << res.records.back().rank
      << ")=" << fmt("%.2e", res.records.back().error);
    return {ok, d.str()};
}

struct Fixture {
    ProblemSetup ps;
    ClusterTree tree;
    BlockPartition partition;
    DenseMatrix a;
};

Fixture fixture(Problem p, int n, AdmissibilityMode mode = AdmissibilityMode::Strong)
{
    Fixture f{setup_problem(p, n), {}, {}, {}};
    f.tree = build_cluster_tree(f.ps.mesh, f.ps.dofs, 25);
    f.partition = build_partition(f.tree, 2.0, mode);
    f.a = f.ps.matrix.permuted(f.tree.permutation()).to_dense();
    return f;
}

DenseMatrix sub(const DenseMatrix& m, const Block& b)
{
    return m.block(b.rows.begin, b.cols.begin, b.rows.size(), b.cols.size());
}

ExperimentResult c1_result; // reused by the storage check

Outcome c1()
{
    c1_result = sweep(Problem::Mixed2d, 64, "1..16");
    return exponential(c1_result, 1.0, -0.97, 0.4, true);
}

Outcome c2() { return exponential(sweep(Problem::Neumann2d, 64, "1..16"), 1.0, -0.97, 0.4, true); }

Outcome c3()
{
    const Outcome m = exponential(sweep(Problem::Mixed3d, 9, "1..12"), 0.5, -0.95, 0.0, false);
    const Outcome n = exponential(sweep(Problem::Neumann3d, 9, "1..12"), 0.5, -0.95, 0.0, false);
    return {m.pass && n.pass, "mixed-3d: " + m.detail + "; neumann-3d: " + n.detail};
}

Outcome c4() { return exponential(sweep(Problem::ConvDiffLShape, 32, "1..16"), 1.0, -0.97, 0.0, false); }

Outcome c5() { return exponential(sweep(Problem::Mixed2d, 64, "1..16", AdmissibilityMode::Weak), 1.0, -0.95, 0.0, false); }

Outcome c6()
{
    const Fixture f = fixture(Problem::Mixed2d, 16);
    const DenseMatrix inv = oracle::inverse(f.a);
    const BlockCompressor bc(inv, f.partition);
    std::mt19937_64 rng(42);
    std::vector<std::size_t> far_ids;
    const auto blocks = f.partition.blocks();
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (blocks[i].far) far_ids.push_back(i);
    }
    std::shuffle(far_ids.begin(), far_ids.end(), rng);
    if (far_ids.size() > 10) far_ids.resize(10);
    double worst = 0.0;
    bool ok = far_ids.size() == 10;
    for (int r = 1; r <= 5; ++r) {
        const HMatrix h = bc.at_rank(r);
        for (std::size_t id : far_ids) {
            const HBlock& hb = h.blocks()[id];
            const oracle::Vec sv = oracle::singular_values(sub(inv, hb.info));
            const double expect = r < sv.size() ? sv[r] : 0.0;
            ok &= oracle::same_singular_value(hb.truncation_error, expect, sv[0], hb.info.rows.size());
            worst = std::max(worst, std::abs(hb.truncation_error - expect) / sv[0]);
        }
    }
    return {ok, "blocks=" + std::to_string(far_ids.size()) + fmt(" max|err-sigma|/sigma1=%.1e", worst)};
}

Outcome c7()
{
    const Fixture f = fixture(Problem::Mixed2d, 22); // N = 484
    const int n = f.partition.size;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> scale(-3.0, 3.0);
    double worst = 0.0;
    bool ok = !f.partition.far.empty();
    for (int trial = 0; trial < 20; ++trial) {
        DenseMatrix m = DenseMatrix::Zero(n, n);
        std::vector<double> norms;
        for (const auto& b : f.partition.blocks()) {
            if (!b.far) {
                norms.push_back(0.0);
                continue;
            }
            const DenseMatrix blk = std::exp(scale(rng)) * oracle::random_matrix(b.rows.size(), b.cols.size(), rng);
            m.block(b.rows.begin, b.cols.begin, b.rows.size(), b.cols.size()) = blk;
            norms.push_back(oracle::spectral_norm(blk));
        }
        const double bound = norm_bound(norms, f.partition).bound;
        const double est = spectral_norm(dense_operator(m)).value;
        ok &= est <= bound * (1 + 1e-6);
        worst = std::max(worst, est / bound);
    }
    return {ok, "N=" + std::to_string(n) + " C_sp=" + std::to_string(sparsity_constant(f.partition)) +
                    fmt(" max estimate/bound=%.3f", worst)};
}

Outcome c8()
{
    const Fixture f = fixture(Problem::Mixed2d, 8);
    const double amax = oracle::max_abs(f.a);
    double worst = 0.0;
    int checked = 0;
    for (int id = 0; id < static_cast<int>(f.tree.nodes().size()); ++id) {
        if (f.tree.node(id).is_leaf()) continue;
        worst = std::max(worst, schur_recursion_check(f.a, f.tree, id));
        ++checked;
    }
    return {checked > 0 && worst <= 1e-10 * amax,
            std::to_string(checked) + " clusters" + fmt(", max residual/max|A|=%.1e", worst / amax)};
}

Outcome c9()
{
    const Fixture f = fixture(Problem::Mixed2d, 16);
    const HLuFactors h = hlu_factorize(f.a, f.tree, f.partition, kFullRank);
    const DenseMatrix l = h.lower.to_dense();
    const DenseMatrix u = h.upper.to_dense();
    const double res = oracle::max_abs(f.a - l * u) / oracle::max_abs(f.a);
    const oracle::Lu ref = oracle::doolittle(f.a);
    const double dl = oracle::max_abs(l - ref.l) / oracle::max_abs(ref.l);
    const double du = oracle::max_abs(u - ref.u) / oracle::max_abs(ref.u);
    return {res <= 1e-11 && dl <= 1e-10 && du <= 1e-10, fmt("residual=%.1e dL=%.1e dU=%.1e", res, dl, du)};
}

Outcome c10()
{
    const ExperimentResult res = sweep(Problem::Neumann2d, 32, "1..16", AdmissibilityMode::Weak, Target::Cholesky);
    // monotone while above the rounding floor; once there, it must stay there
    bool mono = true;
    for (std::size_t i = 1; i < res.records.size(); ++i) {
        const double prev = res.records[i - 1].error;
        const double cur = res.records[i].error;
        mono &= prev > kErrorFloor ? cur <= prev : cur <= 1e-12;
    }
    const RateFit* f = res.fit_for(1.0);
    if (f == nullptr) return {false, "no fit"};
    return {mono && f->correlation <= -0.9, "N=" + std::to_string(res.dofs) + fmt(" b=%.3f corr=%.4f rows=%g", f->rate,
                                                                                  f->correlation, f->rows_used) +
                                                 " monotone=" + (mono ? "yes" : "no")};
}

Outcome c11()
{
    const Fixture f = fixture(Problem::Mixed2d, 16);
    const HLuFactors h = hlu_factorize(f.a, f.tree, f.partition, kFullRank);
    const double root = spectral_norm(cluster_inverse_operator(h.lower, 0)).value;
    double worst = 0.0;
    for (int id = 0; id < static_cast<int>(f.tree.nodes().size()); ++id) {
        worst = std::max(worst, spectral_norm(cluster_inverse_operator(h.lower, id)).value / root);
    }
    return {worst <= 1 + 1e-6, std::to_string(f.tree.nodes().size()) + " clusters" +
                                   fmt(", |L(I)^-1|=%.4g, max ratio=%.9f", root, worst)};
}

Outcome c12()
{
    std::vector<double> q;
    std::ostringstream d;
    for (int n : {16, 32, 64}) {
        std::size_t floats = 0;
        int dofs = 0;
        if (n == 64 && !c1_result.records.empty()) {
            for (const auto& r : c1_result.records) {
                if (r.rank == 8) floats = r.storage_floats;
            }
            dofs = c1_result.dofs;
        } else {
            const ExperimentResult res = sweep(Problem::Mixed2d, n, "8");
            floats = res.records.front().storage_floats;
            dofs = res.dofs;
        }
        q.push_back(static_cast<double>(floats) / (dofs * std::log2(static_cast<double>(dofs))));
        d << "n=" << n << ":" << fmt("%.3f", q.back()) << " ";
    }
    const double spread = *std::max_element(q.begin(), q.end()) / *std::min_element(q.begin(), q.end());
    d << fmt("spread=%.3f", spread);
    return {spread < 3.0, d.str()};
}

Outcome c13()
{
    const double e4 = manufactured::l2_error(4);
    const double e8 = manufactured::l2_error(8);
    const double e16 = manufactured::l2_error(16);
    const double o1 = std::log2(e4 / e8);
    const double o2 = std::log2(e8 / e16);
    bool spd = true;
    for (const auto& [p, n] : {std::pair{Problem::Neumann2d, 16}, std::pair{Problem::Neumann3d, 6}}) {
        const DenseMatrix a = setup_problem(p, n).matrix.to_dense();
        try {
            const DenseMatrix c = cholesky(a);
            spd &= oracle::max_abs(c * c.transpose() - a) <= 1e-12 * oracle::max_abs(a);
        } catch (const NumericalError&) {
            spd = false;
        }
    }
    return {o1 >= 1.8 && o2 >= 1.8 && spd,
            fmt("L2 orders %.3f %.3f", o1, o2) + std::string(", Neumann Cholesky ") + (spd ? "ok" : "failed")};
}

} // namespace

int main(int argc, char** argv)
{
    std::set<int> known;
    std::set<int> only;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--known-failure" && i + 1 < argc) {
            known.insert(std::stoi(argv[++i]));
        } else if (arg == "--only" && i + 1 < argc) {
            only.insert(std::stoi(argv[++i]));
        } else {
            std::fprintf(stderr, "usage: acceptance [--only K]... [--known-failure K]...\n");
            return 64;
        }
    }

    const std::vector<std::pair<const char*, std::function<Outcome()>>> checks{
        {"exponential decay, mixed-2d", c1},
        {"exponential decay, neumann-2d", c2},
        {"r^(1/2) decay, mixed-3d and neumann-3d", c3},
        {"exponential decay, convection-diffusion", c4},
        {"decay under weak admissibility", c5},
        {"block SVD optimality", c6},
        {"blockwise norm bound", c7},
        {"Schur recursion identity", c8},
        {"exact H-LU anchor", c9},
        {"H-Cholesky decay", c10},
        {"nested inverse norms", c11},
        {"storage growth N log N", c12},
        {"FEM sanity", c13},
    };

    int unexpected = 0;
    for (std::size_t k = 0; k < checks.size(); ++k) {
        const int id = static_cast<int>(k) + 1;
        if (!only.empty() && !only.count(id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = checks[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool expected = known.count(id) > 0;
        if (!o.pass && !expected) ++unexpected;
        std::printf("%s %2d %s: %s (%.1fs)%s\n", o.pass ? "PASS" : "FAIL", id, checks[k].first, o.detail.c_str(), secs,
                    !o.pass && expected ? " [known failure]" : "");
        std::fflush(stdout);
    }
    return unexpected;
}
