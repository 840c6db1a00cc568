#pragma once

// Experiment drivers behind `tkz synth-bench` and `tkz deblur`.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include <json.hpp>

#include "tkz/problems.hpp"
#include "tkz/solvers.hpp"

namespace tkz {

/// Linear-interpolation percentile (q in [0, 1]) of an unsorted sample.
double percentile(std::vector<double> values, double q);

/// median / p25 / p75 / min / max of a sample.
nlohmann::json summarize(const std::vector<double>& values);

struct SynthBenchPlan {
    SyntheticSpec spec;
    std::vector<SolverKind> solvers{SolverKind::GramSchmidtGk};
    Strategy strategy = Strategy::ShuffleOnce;
    std::vector<Truncation> taus{Truncation(5)};
    std::size_t trials = 1;
    std::uint64_t seed = 0;
    std::optional<double> tol_rse;
    double tol_delta = kDefaultTolDelta;
    std::size_t max_epochs = 1000;
    std::size_t block_size = kDefaultBlockSize;
    std::filesystem::path out;   // empty: no files
    std::size_t threads = 0;     // 0: hardware concurrency
};

struct TrialOutcome {
    SolverKind solver;
    Truncation tau{1};
    std::size_t trial = 0;
    std::uint64_t seed = 0;
    std::size_t epochs = 0;
    double rse_final = 0.0;
    double wall_s = 0.0;
    std::size_t restarts = 0;
    StopReason reason = StopReason::EpochCap;
    std::vector<EpochRecord> trace;
};

struct BenchReport {
    std::vector<TrialOutcome> runs;  // ordered by (trial, solver, tau)
    nlohmann::json aggregate;
};

/// Trial t draws its instance from derive_seed(seed, t); every solver configuration
/// of that trial shares the instance and the row-order seed, so configurations are
/// paired. Throws BreakdownError if any run breaks down.
BenchReport synth_bench(const SynthBenchPlan& plan, std::ostream* log = nullptr);

struct DeblurPlan {
    std::optional<std::filesystem::path> truth;
    // Used when no truth file is given: a generated l x p x n video.
    std::size_t video_l = 32, video_p = 32, video_n = 8;
    std::size_t band = 6;
    double sigma = 1.8;
    std::vector<SolverKind> solvers{SolverKind::GramSchmidtGk};
    Strategy strategy = Strategy::ShuffleOnce;
    Truncation tau{5};
    std::optional<double> tol_rse;
    double tol_delta = kDefaultTolDelta;
    std::size_t max_epochs = 200;  // in full iterations
    std::size_t block_size = kDefaultBlockSize;
    std::uint64_t seed = 0;
    std::filesystem::path out;
};

struct DeblurOutcome {
    SolverKind solver;
    std::size_t steps = 0;          // epochs, or block steps for the momentum baseline
    double full_iterations = 0.0;   // block steps * q / m for the momentum baseline
    double rse_final = 0.0;
    double mean_psnr = 0.0;
    double wall_s = 0.0;
    std::vector<double> psnr;
    RunResult run;
};

struct DeblurReport {
    double observed_mean_psnr = 0.0;  // blurred data B against the truth
    std::vector<DeblurOutcome> runs;
    nlohmann::json summary;
};

/// Blurs the truth with the Gaussian Toeplitz operator and reconstructs it.
DeblurReport deblur(const DeblurPlan& plan, std::ostream* log = nullptr);

}  // namespace tkz
