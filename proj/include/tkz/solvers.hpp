#pragma once

// Tensor Kaczmarz sweeps and the Gearhart-Koshy accelerated variants.
//
// Every accelerated solver computes the same iterate: the point of the affine hull
// aff{X^{j}, ..., X^k, P(X^k)} closest to the least-norm solution, where j is the
// oldest iterate kept by the truncation depth tau. They differ only in how the
// small normal system behind that projection is solved:
//
//   direct  Cholesky on the Gram matrix of iterate differences
//   gs      Gram-Schmidt on the sweep displacements, O(tau) inner products
//   tri     closed-form tridiagonal inverse of the iterate-difference Gram matrix

#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <stdexcept>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tkz/instance.hpp"
#include "tkz/projectors.hpp"
#include "tkz/sampling.hpp"
#include "tkz/tensor.hpp"

namespace tkz {

/// Number of previous iterates spanning the acceleration subspace (tau >= 1), or
/// unbounded, which keeps the whole history (Arnoldi regime).
class Truncation {
public:
    constexpr explicit Truncation(std::size_t tau) : tau_(tau) {
        if (tau == 0) throw std::invalid_argument("Truncation: tau must be >= 1");
    }
    static constexpr Truncation unbounded() noexcept { return Truncation(); }

    constexpr bool is_unbounded() const noexcept { return tau_ == kUnbounded; }
    constexpr std::size_t value() const noexcept { return tau_; }

    std::string to_string() const;
    static std::optional<Truncation> parse(std::string_view text);

    friend constexpr bool operator==(Truncation, Truncation) = default;

private:
    static constexpr std::size_t kUnbounded = std::numeric_limits<std::size_t>::max();
    constexpr Truncation() noexcept : tau_(kUnbounded) {}
    std::size_t tau_;
};

enum class SolverKind { Kaczmarz, DirectGk, GramSchmidtGk, TridiagonalGk, MomentumBlock };

std::string_view to_string(SolverKind kind) noexcept;
std::optional<SolverKind> parse_solver(std::string_view name) noexcept;

inline constexpr double kDefaultTolDelta = 1e-28;
inline constexpr std::size_t kDefaultBlockSize = 15;

struct SolverConfig {
    Strategy strategy = Strategy::ShuffleOnce;
    Truncation tau{5};
    double tol_delta = kDefaultTolDelta;
    std::optional<double> tol_rse;
    std::size_t max_epochs = 1000;
    std::uint64_t seed = 0;
    std::size_t block_size = kDefaultBlockSize;  // momentum baseline only
};

/// One trace row. delta/gamma are empty when no sweep was evaluated at this
/// iterate; rse is empty when the least-norm solution is unknown.
struct EpochRecord {
    std::size_t epoch = 0;
    std::optional<double> rse;
    std::optional<double> delta;
    std::optional<double> gamma;
    double elapsed_s = 0.0;
};

enum class StopReason { Solved, ToleranceReached, EpochCap };

struct RunResult {
    Tensor3 x;
    std::vector<EpochRecord> trace;
    std::size_t epochs = 0;
    std::size_t restarts = 0;
    StopReason reason = StopReason::EpochCap;
};

/// Per-epoch internals handed to an observer: X^k, pi_k, the sweep at X^k and X^{k+1}.
struct EpochView {
    std::size_t epoch;
    const Tensor3& x;
    const Permutation& pi;
    const SweepResult& sweep;
    const Tensor3& next;
};

using EpochObserver = std::function<void(const EpochView&)>;

// ---------------------------------------------------------------------------
// Step-level state machines

/// Relative floor on ||U_k||^2 / ||D_k||^2 below which the basis window restarts.
inline constexpr double kBreakdownRatio = 1e2 * std::numeric_limits<double>::epsilon();

/// Iterate window X^{j}, ..., X^k for the direct route.
class DirectState {
public:
    DirectState(Tensor3 x0, Truncation tau) : tau_(tau) { window_.push_back(std::move(x0)); }

    const Tensor3& x() const noexcept { return window_.back(); }
    const std::deque<Tensor3>& window() const noexcept { return window_; }
    Truncation tau() const noexcept { return tau_; }
    std::size_t restarts() const noexcept { return restarts_; }

    /// Coefficients s^k of the last step, ordered as the columns of M_k.
    const Eigen::VectorXd& last_coefficients() const noexcept { return last_s_; }

private:
    friend const Tensor3& tkgk_step_direct(DirectState&, const SweepResult&);
    Truncation tau_;
    std::deque<Tensor3> window_;
    Eigen::VectorXd last_s_;
    std::size_t restarts_ = 0;
};

/// Solves M_k^T M_k s = gamma_k e_last and moves to X^{k+1}. Requires delta_k > 0.
const Tensor3& tkgk_step_direct(DirectState& state, const SweepResult& sw);

/// Orthogonal direction window U_{j}, ..., U_k kept as a ring buffer.
class GsState {
public:
    GsState(Tensor3 x0, Truncation tau);

    const Tensor3& x() const noexcept { return x_; }
    std::size_t epoch() const noexcept { return epoch_; }
    Truncation tau() const noexcept { return tau_; }
    std::size_t restarts() const noexcept { return restarts_; }

    std::size_t basis_size() const noexcept { return size_; }
    /// i-th stored direction in chronological order (0 = oldest).
    const Tensor3& basis(std::size_t i) const;
    double basis_norm2(std::size_t i) const;

    /// Every step size lambda_0, lambda_1, ... taken so far.
    const std::vector<double>& lambdas() const noexcept { return lambdas_; }

private:
    friend const Tensor3& gs_tkgk_step(GsState&, const SweepResult&);
    std::size_t slot(std::size_t i) const noexcept;

    Tensor3 x_;
    Truncation tau_;
    std::vector<Tensor3> ring_;
    std::vector<double> ring_norm2_;
    std::size_t head_ = 0;  // slot of the oldest direction
    std::size_t size_ = 0;
    std::vector<double> lambdas_;
    std::size_t epoch_ = 0;
    std::size_t restarts_ = 0;
};

/// U_k = D_k minus its projections on the window (modified Gram-Schmidt),
/// X^{k+1} = X^k + (gamma_k / ||U_k||^2) U_k. Requires delta_k > 0.
const Tensor3& gs_tkgk_step(GsState& state, const SweepResult& sw);

/// Iterate window plus the products gamma_i * s_i of the steps between them.
class TriState {
public:
    TriState(Tensor3 x0, Truncation tau) : tau_(tau) { window_.push_back(std::move(x0)); }

    const Tensor3& x() const noexcept { return window_.back(); }
    const std::deque<Tensor3>& window() const noexcept { return window_; }
    const std::deque<double>& step_products() const noexcept { return gamma_s_; }
    Truncation tau() const noexcept { return tau_; }
    std::size_t restarts() const noexcept { return restarts_; }

    /// (V_k^T V_k)^{-1} for the current window from the stored step products.
    Eigen::MatrixXd tridiagonal_inverse() const;

private:
    friend const Tensor3& tri_tkgk_step(TriState&, const SweepResult&);
    Truncation tau_;
    std::deque<Tensor3> window_;
    std::deque<double> gamma_s_;
    std::size_t restarts_ = 0;
};

const Tensor3& tri_tkgk_step(TriState& state, const SweepResult& sw);

/// Averaged block Kaczmarz with heavy-ball momentum and an exact two-direction line
/// search against the known least-norm solution. Rows are split into contiguous
/// blocks of block_size; a block is drawn with probability ||A_block||^2 / ||A||^2.
class MomentumState {
public:
    MomentumState(const ProblemInstance& problem, std::size_t block_size, std::uint64_t seed);

    const Tensor3& x() const noexcept { return x_; }
    const Tensor3& previous() const noexcept { return prev_; }
    std::size_t iteration() const noexcept { return iter_; }
    std::size_t block_count() const noexcept { return blocks_a_.size(); }
    std::size_t block_size() const noexcept { return block_size_; }
    double last_alpha() const noexcept { return alpha_; }
    double last_momentum_beta() const noexcept { return momentum_beta_; }

    /// Draws a block and applies one step; returns the new iterate.
    const Tensor3& step();

    /// One step with an explicitly chosen block (0-based).
    const Tensor3& step_with_block(std::size_t block);

private:
    const ProblemInstance* problem_;
    std::size_t block_size_;
    std::vector<Tensor3> blocks_a_, blocks_at_, blocks_b_;
    std::vector<double> cumulative_;
    SplitMix64 rng_;
    Tensor3 x_, prev_;
    std::size_t iter_ = 0;
    double alpha_ = 0.0;
    double momentum_beta_ = 0.0;
};

// ---------------------------------------------------------------------------
// Drivers

/// Runs a solver from X^0 = 0 (or `x0`). Stops when delta_k <= tol_delta, when the
/// relative squared error reaches tol_rse (requires problem.x_star0), or at
/// max_epochs. For the momentum baseline an "epoch" is one block step.
RunResult run_solver(const ProblemInstance& problem, const ProjectorBank& bank,
                     const SolverConfig& config, SolverKind kind,
                     const EpochObserver& observer = {},
                     const std::optional<Tensor3>& x0 = std::nullopt);

RunResult run_solver(const ProblemInstance& problem, const SolverConfig& config, SolverKind kind,
                     const EpochObserver& observer = {});

inline RunResult tk_run(const ProblemInstance& problem, const SolverConfig& config) {
    return run_solver(problem, config, SolverKind::Kaczmarz);
}

}  // namespace tkz
