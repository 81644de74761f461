#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hinv/cluster.hpp"
#include "hinv/fem.hpp"
#include "hinv/hmatrix.hpp"
#include "hinv/mesh.hpp"

namespace hinv {

enum class Target { Inverse, Lu, Cholesky };

Target parse_target(std::string_view name);
std::string_view to_string(Target target);

// Largest system the dense inverse / factorization path accepts.
inline constexpr int kDenseBudget = 5000;
// Errors below this are treated as saturated and left out of rate fits.
inline constexpr double kErrorFloor = 1e-14;

struct ExperimentConfig {
    Problem problem = Problem::Mixed2d;
    int n = 64;
    double eta = 2.0;
    int n_leaf = 25;
    AdmissibilityMode mode = AdmissibilityMode::Strong;
    std::vector<int> ranks;
    Target target = Target::Inverse;
    std::uint64_t seed = 42;
};

// Parses "1..16", "1,2,4,8" or a mix ("1..4,8,16"); result strictly increasing.
std::vector<int> parse_ranks(std::string_view text);

struct ProblemSetup {
    Problem problem;
    Mesh mesh;
    DofMap dofs;
    SparseMatrix matrix; // natural (lexicographic) dof order
};

// Mesh, tags and Galerkin matrix for the named experiment problem.
ProblemSetup setup_problem(Problem problem, int n);

struct ExperimentRecord {
    int rank = 0;
    double error = 0.0;
    double seconds = 0.0;
    std::size_t storage_floats = 0;
    bool converged = true;
};

// ln(error) = ln(prefactor) - rate * r^exponent, least squares.
struct RateFit {
    double exponent = 1.0;
    double rate = 0.0;
    double prefactor = 0.0;
    double correlation = 0.0; // Pearson correlation of ln(error) vs r^exponent
    int rows_used = 0;
};

RateFit fit_rate(std::span<const ExperimentRecord> records, double exponent);

struct ExperimentResult {
    ExperimentConfig config;
    int dofs = 0;
    int depth = 0;
    int sparsity_constant = 0;
    int far_blocks = 0;
    int near_blocks = 0;
    // Power-iteration estimates of kappa_2 of the exact factors (factor targets only).
    double cond_lower = 0.0;
    double cond_upper = 0.0;
    std::vector<ExperimentRecord> records;
    std::vector<RateFit> fits; // exponents 1, 1/2, 1/(d+1), when enough rows clear the floor

    const RateFit* fit_for(double exponent) const;
};

// Sweep on a given matrix (any dof order; it is permuted into cluster order).
ExperimentResult run_sweep(const SparseMatrix& a, const ClusterTree& tree, const BlockPartition& partition,
                           const ExperimentConfig& config, int dim);

ExperimentResult run_experiment(const ExperimentConfig& config);

// Header "r,error,seconds,storage_floats", one row per rank, then
// "# b=<rate> s=<exponent> corr=<correlation>" per fit. With
// include_timing = false the seconds column is written as 0 so that output
// is byte-identical across runs.
void emit_csv(std::span<const ExperimentRecord> records, std::span<const RateFit> fits, std::ostream& out,
              bool include_timing = true);
void emit_csv(std::span<const ExperimentRecord> records, std::span<const RateFit> fits,
              const std::filesystem::path& path, bool include_timing = true);

} // namespace hinv
