#include "hinv/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>

#include "hinv/hfactor.hpp"

namespace hinv {

namespace {

using Clock = std::chrono::steady_clock;

int parse_int(std::string_view text)
{
    int value = 0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) throw InvalidArgument("bad rank '" + std::string(text) + "'");
    return value;
}

void validate(const ExperimentConfig& config)
{
    if (config.ranks.empty()) throw InvalidArgument("no ranks requested");
    if (config.ranks.front() < 0) throw InvalidArgument("ranks must be non-negative");
    for (std::size_t i = 1; i < config.ranks.size(); ++i) {
        if (config.ranks[i] <= config.ranks[i - 1]) throw InvalidArgument("ranks must be strictly increasing");
    }
    if (!(config.eta > 0.0)) throw InvalidArgument("eta must be positive");
    if (config.n_leaf < 1) throw InvalidArgument("n_leaf must be >= 1");
}

// ||A X - I||_max with sparse A, column by column.
double inverse_residual(const SparseMatrix& a, const DenseMatrix& inv)
{
    double worst = 0.0;
    for (Eigen::Index j = 0; j < inv.cols(); ++j) {
        Vector col = a.multiply(inv.col(j));
        col[j] -= 1.0;
        worst = std::max(worst, col.cwiseAbs().maxCoeff());
    }
    return worst;
}

std::string format_double(double v, const char* spec)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

} // namespace

Target parse_target(std::string_view name)
{
    if (name == "inverse") return Target::Inverse;
    if (name == "lu") return Target::Lu;
    if (name == "cholesky") return Target::Cholesky;
    throw InvalidArgument("unknown target '" + std::string(name) + "'");
}

std::string_view to_string(Target target)
{
    switch (target) {
    case Target::Inverse: return "inverse";
    case Target::Lu: return "lu";
    case Target::Cholesky: return "cholesky";
    }
    return "?";
}

std::vector<int> parse_ranks(std::string_view text)
{
    std::vector<int> ranks;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t comma = std::min(text.find(',', start), text.size());
        const std::string_view item = text.substr(start, comma - start);
        if (item.empty()) throw InvalidArgument("empty entry in rank list");
        const std::size_t dots = item.find("..");
        if (dots == std::string_view::npos) {
            ranks.push_back(parse_int(item));
        } else {
            const int lo = parse_int(item.substr(0, dots));
            const int hi = parse_int(item.substr(dots + 2));
            if (hi < lo) throw InvalidArgument("empty rank range '" + std::string(item) + "'");
            for (int r = lo; r <= hi; ++r) ranks.push_back(r);
        }
        start = comma + 1;
    }
    for (std::size_t i = 1; i < ranks.size(); ++i) {
        if (ranks[i] <= ranks[i - 1]) throw InvalidArgument("ranks must be strictly increasing");
    }
    if (!ranks.empty() && ranks.front() < 0) throw InvalidArgument("ranks must be non-negative");
    return ranks;
}

ProblemSetup setup_problem(Problem problem, int n)
{
    ProblemSetup s{problem, build_problem_mesh(problem, n), {}, {}};
    s.dofs = build_dofmap(s.mesh);
    switch (problem) {
    case Problem::Mixed2d:
    case Problem::Mixed3d: s.matrix = assemble(s.mesh, PdeCoefficients{}, s.dofs); break;
    case Problem::Neumann2d:
    case Problem::Neumann3d: s.matrix = assemble_neumann(s.mesh, Eigen::Matrix3d::Identity()); break;
    case Problem::ConvDiffLShape: s.matrix = assemble_convdiff(s.mesh, 1e-2, s.dofs); break;
    }
    return s;
}

RateFit fit_rate(std::span<const ExperimentRecord> records, double exponent)
{
    std::vector<double> xs;
    std::vector<double> ys;
    for (const auto& r : records) {
        if (!(r.error > kErrorFloor) || !std::isfinite(r.error)) continue;
        xs.push_back(std::pow(static_cast<double>(r.rank), exponent));
        ys.push_back(std::log(r.error));
    }
    if (xs.size() < 3) {
        throw InvalidArgument("fit_rate: need at least 3 rows above the error floor, got " +
                              std::to_string(xs.size()));
    }
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx == 0.0) throw InvalidArgument("fit_rate: all usable rows share one rank");
    const double slope = sxy / sxx;
    RateFit fit;
    fit.exponent = exponent;
    fit.rate = -slope;
    fit.prefactor = std::exp(my - slope * mx);
    fit.correlation = syy > 0.0 ? sxy / std::sqrt(sxx * syy) : 0.0;
    fit.rows_used = static_cast<int>(xs.size());
    return fit;
}

const RateFit* ExperimentResult::fit_for(double exponent) const
{
    for (const auto& f : fits) {
        if (std::abs(f.exponent - exponent) < 1e-12) return &f;
    }
    return nullptr;
}

ExperimentResult run_sweep(const SparseMatrix& a, const ClusterTree& tree, const BlockPartition& partition,
                           const ExperimentConfig& config, int dim)
{
    validate(config);
    const int n = a.size();
    if (n != tree.size() || n != partition.size) throw InvalidArgument("matrix, tree and partition sizes disagree");
    if (n > kDenseBudget) {
        throw BudgetExceeded(std::to_string(n) + " dofs exceed the dense budget of " + std::to_string(kDenseBudget));
    }

    ExperimentResult result;
    result.config = config;
    result.dofs = n;
    result.depth = tree.depth();
    result.sparsity_constant = sparsity_constant(partition);
    result.far_blocks = static_cast<int>(partition.far.size());
    result.near_blocks = static_cast<int>(partition.near.size());

    SpectralNormOptions options;
    options.seed = config.seed;

    const SparseMatrix ap = a.permuted(tree.permutation());
    const DenseMatrix dense = ap.to_dense();

    if (config.target == Target::Inverse) {
        const DenseMatrix inv = inverse(dense);
        const double residual = inverse_residual(ap, inv);
        if (!(residual <= 1e-8)) {
            throw NumericalError("dense inverse residual " + format_double(residual, "%.3e") + " exceeds 1e-8");
        }
        const BlockCompressor compressor(inv, partition);
        for (const int r : config.ranks) {
            const auto start = Clock::now();
            const HMatrix h = compressor.at_rank(r);
            LinearOperator residual_op;
            residual_op.rows = residual_op.cols = n;
            residual_op.apply = [&](const Vector& x) -> Vector { return x - ap.multiply(h.multiply(x)); };
            residual_op.apply_transpose = [&](const Vector& x) -> Vector {
                return x - h.multiply_transpose(ap.multiply_transpose(x));
            };
            const SpectralNormEstimate est = spectral_norm(residual_op, options);
            ExperimentRecord rec;
            rec.rank = r;
            rec.error = est.value;
            rec.converged = est.converged;
            rec.storage_floats = storage_stats(h).floats;
            rec.seconds = std::chrono::duration<double>(Clock::now() - start).count();
            result.records.push_back(rec);
        }
    } else {
        const FactorKind kind = config.target == Target::Lu ? FactorKind::Lu : FactorKind::Cholesky;
        if (kind == FactorKind::Cholesky && max_abs(dense - dense.transpose()) > 1e-12 * max_abs(dense)) {
            throw InvalidArgument("cholesky target needs a symmetric matrix");
        }
        const SchurFactorization exact(dense, tree, partition, kind);
        const double norm_a = spectral_norm(sparse_operator(ap), options).value;
        auto condition = [&](const HTriangularFactor& f) {
            return spectral_norm(factor_operator(f), options).value *
                   spectral_norm(cluster_inverse_operator(f, 0), options).value;
        };
        result.cond_lower = condition(exact.lower_factor(kFullRank));
        result.cond_upper = kind == FactorKind::Lu ? condition(exact.upper_factor(kFullRank)) : result.cond_lower;
        for (const int r : config.ranks) {
            const auto start = Clock::now();
            const HTriangularFactor lower = exact.lower_factor(r);
            const HTriangularFactor upper = kind == FactorKind::Lu ? exact.upper_factor(r) : HTriangularFactor();
            LinearOperator gap;
            gap.rows = gap.cols = n;
            if (kind == FactorKind::Lu) {
                gap.apply = [&](const Vector& x) -> Vector {
                    return ap.multiply(x) - lower.multiply(upper.multiply(x));
                };
                gap.apply_transpose = [&](const Vector& x) -> Vector {
                    return ap.multiply_transpose(x) - upper.multiply_transpose(lower.multiply_transpose(x));
                };
            } else {
                gap.apply = [&](const Vector& x) -> Vector {
                    return ap.multiply(x) - lower.multiply(lower.multiply_transpose(x));
                };
                gap.apply_transpose = [&](const Vector& x) -> Vector {
                    return ap.multiply_transpose(x) - lower.multiply(lower.multiply_transpose(x));
                };
            }
            const SpectralNormEstimate est = spectral_norm(gap, options);
            ExperimentRecord rec;
            rec.rank = r;
            rec.error = est.value / norm_a;
            rec.converged = est.converged;
            rec.storage_floats = lower.stored_floats() + (kind == FactorKind::Lu ? upper.stored_floats() : 0);
            rec.seconds = std::chrono::duration<double>(Clock::now() - start).count();
            result.records.push_back(rec);
        }
    }

    std::vector<double> exponents{1.0, 0.5, 1.0 / (dim + 1)};
    for (const double s : exponents) {
        try {
            result.fits.push_back(fit_rate(result.records, s));
        } catch (const InvalidArgument&) {
            // too few rows above the floor
        }
    }
    return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config)
{
    validate(config);
    const ProblemSetup setup = setup_problem(config.problem, config.n);
    if (setup.dofs.size() > kDenseBudget) {
        throw BudgetExceeded(std::to_string(setup.dofs.size()) + " dofs exceed the dense budget of " +
                             std::to_string(kDenseBudget));
    }
    const ClusterTree tree = build_cluster_tree(setup.mesh, setup.dofs, config.n_leaf);
    const BlockPartition partition = build_partition(tree, config.eta, config.mode);
    return run_sweep(setup.matrix, tree, partition, config, setup.mesh.dim);
}

void emit_csv(std::span<const ExperimentRecord> records, std::span<const RateFit> fits, std::ostream& out,
              bool include_timing)
{
    out << "r,error,seconds,storage_floats\n";
    for (const auto& r : records) {
        out << r.rank << ',' << format_double(r.error, "%.17g") << ','
            << (include_timing ? format_double(r.seconds, "%.6f") : std::string("0")) << ',' << r.storage_floats
            << '\n';
    }
    for (const auto& f : fits) {
        out << "# b=" << format_double(f.rate, "%.6g") << " s=" << format_double(f.exponent, "%.6g")
            << " corr=" << format_double(f.correlation, "%.6f") << '\n';
    }
    for (const auto& r : records) {
        if (!r.converged) out << "# unconverged r=" << r.rank << '\n';
    }
}

void emit_csv(std::span<const ExperimentRecord> records, std::span<const RateFit> fits,
              const std::filesystem::path& path, bool include_timing)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    emit_csv(records, fits, out, include_timing);
    out.flush();
    if (!out) throw Error("failed writing '" + path.string() + "'");
}

} // namespace hinv
