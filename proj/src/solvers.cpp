#include "tkz/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tkz {

namespace {

Eigen::Index idx(std::size_t v) { return static_cast<Eigen::Index>(v); }

// Keeps at most tau iterates; the window is cleared down to X^k on a restart.
template <typename Window>
void trim(Window& w, Truncation tau) {
    if (tau.is_unbounded()) return;
    while (w.size() > tau.value()) w.pop_front();
}

void require_progress(const SweepResult& sw, const char* who) {
    if (!(sw.delta > 0.0)) throw std::invalid_argument(std::string(who) + ": requires delta_k > 0");
    if (!std::isfinite(sw.gamma) || !std::isfinite(sw.delta)) {
        throw BreakdownError(std::string(who) + ": non-finite sweep scalars");
    }
}

}  // namespace

std::string Truncation::to_string() const {
    return is_unbounded() ? std::string("inf") : std::to_string(tau_);
}

std::optional<Truncation> Truncation::parse(std::string_view text) {
    if (text == "inf" || text == "unbounded") return unbounded();
    std::size_t v = 0;
    if (text.empty()) return std::nullopt;
    for (char c : text) {
        if (c < '0' || c > '9') return std::nullopt;
        v = v * 10 + static_cast<std::size_t>(c - '0');
    }
    if (v == 0) return std::nullopt;
    return Truncation(v);
}

std::string_view to_string(SolverKind kind) noexcept {
    switch (kind) {
        case SolverKind::Kaczmarz: return "tk";
        case SolverKind::DirectGk: return "tkgk";
        case SolverKind::GramSchmidtGk: return "gs";
        case SolverKind::TridiagonalGk: return "tri";
        case SolverKind::MomentumBlock: return "takshbm";
    }
    return "?";
}

std::optional<SolverKind> parse_solver(std::string_view name) noexcept {
    for (auto k : {SolverKind::Kaczmarz, SolverKind::DirectGk, SolverKind::GramSchmidtGk,
                   SolverKind::TridiagonalGk, SolverKind::MomentumBlock}) {
        if (name == to_string(k)) return k;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Direct normal-equation route

const Tensor3& tkgk_step_direct(DirectState& state, const SweepResult& sw) {
    require_progress(sw, "tkgk_step_direct");
    const Tensor3& xk = state.window_.back();

    // Columns of M_k: X^{j+i} - X^k for the older iterates, then D_k.
    std::vector<Tensor3> cols;
    cols.reserve(state.window_.size());
    for (std::size_t i = 0; i + 1 < state.window_.size(); ++i) cols.push_back(state.window_[i] - xk);
    cols.push_back(sw.projected - xk);

    auto solve = [&](const std::vector<Tensor3>& c) -> std::optional<Eigen::VectorXd> {
        const std::size_t q = c.size();
        Eigen::MatrixXd gram(idx(q), idx(q));
        for (std::size_t a = 0; a < q; ++a) {
            for (std::size_t b = a; b < q; ++b) gram(idx(a), idx(b)) = gram(idx(b), idx(a)) = inner(c[a], c[b]);
        }
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(idx(q));
        rhs(idx(q - 1)) = sw.gamma;

        Eigen::LLT<Eigen::MatrixXd> llt(gram);
        if (llt.info() != Eigen::Success) {
            gram.diagonal().array() += 1e-12 * gram.trace();
            llt.compute(gram);
            if (llt.info() != Eigen::Success) return std::nullopt;
        }
        Eigen::VectorXd s = llt.solve(rhs);
        if (!s.allFinite()) return std::nullopt;
        return s;
    };

    auto s = solve(cols);
    if (!s) {
        // Numerically rank-deficient window: fall back to the single-direction step.
        ++state.restarts_;
        cols.erase(cols.begin(), cols.end() - 1);
        while (state.window_.size() > 1) state.window_.pop_front();
        s = Eigen::VectorXd::Constant(1, sw.gamma / sw.delta);
    }

    Tensor3 next = xk;
    for (std::size_t i = 0; i < cols.size(); ++i) next.axpy((*s)(idx(i)), cols[i]);
    state.last_s_ = std::move(*s);
    state.window_.push_back(std::move(next));
    trim(state.window_, state.tau_);
    return state.window_.back();
}

// ---------------------------------------------------------------------------
// Gram-Schmidt route

GsState::GsState(Tensor3 x0, Truncation tau) : x_(std::move(x0)), tau_(tau) {
    if (!tau.is_unbounded()) {
        ring_.resize(tau.value());
        ring_norm2_.resize(tau.value(), 0.0);
    }
}

std::size_t GsState::slot(std::size_t i) const noexcept {
    return tau_.is_unbounded() ? i : (head_ + i) % tau_.value();
}

const Tensor3& GsState::basis(std::size_t i) const {
    if (i >= size_) throw std::out_of_range("GsState::basis");
    return ring_[slot(i)];
}

double GsState::basis_norm2(std::size_t i) const {
    if (i >= size_) throw std::out_of_range("GsState::basis_norm2");
    return ring_norm2_[slot(i)];
}

const Tensor3& gs_tkgk_step(GsState& st, const SweepResult& sw) {
    require_progress(sw, "gs_tkgk_step");
    Tensor3 u = sw.projected - st.x_;

    // When the ring is full the oldest direction falls out of the window and is
    // overwritten by U_k, so it is skipped here.
    const bool full = !st.tau_.is_unbounded() && st.size_ == st.tau_.value();
    for (std::size_t i = full ? 1 : 0; i < st.size_; ++i) {
        const std::size_t s = st.slot(i);
        u.axpy(-inner(st.ring_[s], u) / st.ring_norm2_[s], st.ring_[s]);
    }
    double u2 = fro_norm2(u);

    if (u2 < kBreakdownRatio * sw.delta) {
        ++st.restarts_;
        st.head_ = 0;
        st.size_ = 0;
        if (st.tau_.is_unbounded()) {
            st.ring_.clear();
            st.ring_norm2_.clear();
        }
        u = sw.projected - st.x_;
        u2 = sw.delta;
    }

    const double lambda = sw.gamma / u2;
    st.x_.axpy(lambda, u);
    st.lambdas_.push_back(lambda);
    ++st.epoch_;

    if (st.tau_.is_unbounded()) {
        st.ring_.push_back(std::move(u));
        st.ring_norm2_.push_back(u2);
        ++st.size_;
    } else if (full) {
        st.ring_[st.head_] = std::move(u);
        st.ring_norm2_[st.head_] = u2;
        st.head_ = (st.head_ + 1) % st.tau_.value();
    } else {
        const std::size_t s = st.slot(st.size_);
        st.ring_[s] = std::move(u);
        st.ring_norm2_[s] = u2;
        ++st.size_;
    }
    return st.x_;
}

// ---------------------------------------------------------------------------
// Tridiagonal route

Eigen::MatrixXd TriState::tridiagonal_inverse() const {
    const std::size_t q = window_.size() - 1;
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(idx(q), idx(q));
    // gamma_s_[c] = ||X^{j+c+1} - X^{j+c}||^2 for the steps inside the window.
    for (std::size_t i = 0; i < q; ++i) {
        const double inv = 1.0 / gamma_s_[i];
        t(idx(i), idx(i)) += inv;
        if (i + 1 < q) {
            t(idx(i + 1), idx(i + 1)) += inv;
            t(idx(i), idx(i + 1)) = t(idx(i + 1), idx(i)) = -inv;
        }
    }
    return t;
}

const Tensor3& tri_tkgk_step(TriState& st, const SweepResult& sw) {
    require_progress(sw, "tri_tkgk_step");
    const Tensor3 xk = st.window_.back();
    const Tensor3 d = sw.projected - xk;
    const std::size_t q = st.window_.size() - 1;

    std::vector<Tensor3> v;
    v.reserve(q);
    for (std::size_t i = 0; i < q; ++i) v.push_back(st.window_[i] - xk);

    double s_last = sw.gamma / sw.delta;
    Eigen::VectorXd s_head;
    if (q > 0) {
        Eigen::VectorXd vtd(idx(q));
        for (std::size_t i = 0; i < q; ++i) vtd(idx(i)) = inner(v[i], d);
        const Eigen::VectorXd c = st.tridiagonal_inverse() * vtd;
        const double denom = sw.delta - vtd.dot(c);
        if (!(denom >= kBreakdownRatio * sw.delta) || !c.allFinite()) {
            ++st.restarts_;
            v.clear();
            while (st.window_.size() > 1) st.window_.pop_front();
            st.gamma_s_.clear();
        } else {
            s_last = sw.gamma / denom;
            s_head = -c * s_last;
        }
    }

    Tensor3 next = xk;
    for (std::size_t i = 0; i < v.size(); ++i) next.axpy(s_head(idx(i)), v[i]);
    next.axpy(s_last, d);

    st.window_.push_back(std::move(next));
    st.gamma_s_.push_back(sw.gamma * s_last);
    trim(st.window_, st.tau_);
    while (st.gamma_s_.size() + 1 > st.window_.size()) st.gamma_s_.pop_front();
    return st.window_.back();
}

// ---------------------------------------------------------------------------
// Momentum baseline

MomentumState::MomentumState(const ProblemInstance& problem, std::size_t block_size, std::uint64_t seed)
    : problem_(&problem), block_size_(block_size), rng_(seed) {
    if (block_size == 0) throw std::invalid_argument("MomentumState: block size must be >= 1");
    if (!problem.x_star0) throw std::invalid_argument("MomentumState: exact line search needs the least-norm solution");

    const Tensor3& a = problem.a;
    const Tensor3& b = problem.b;
    const double total = fro_norm2(a);
    double acc = 0.0;
    for (std::size_t first = 0; first < a.rows(); first += block_size) {
        const std::size_t count = std::min(block_size, a.rows() - first);
        Tensor3 ab(count, a.cols(), a.depth()), bb(count, b.cols(), b.depth());
        for (std::size_t k = 0; k < a.depth(); ++k) {
            ab.slice(k) = a.slice(k).middleRows(idx(first), idx(count));
            bb.slice(k) = b.slice(k).middleRows(idx(first), idx(count));
        }
        acc += fro_norm2(ab);
        cumulative_.push_back(total > 0.0 ? acc / total : static_cast<double>(cumulative_.size() + 1));
        blocks_at_.push_back(t_transpose(ab));
        blocks_a_.push_back(std::move(ab));
        blocks_b_.push_back(std::move(bb));
    }
    cumulative_.back() = std::max(cumulative_.back(), 1.0);
    x_ = Tensor3(a.cols(), b.cols(), a.depth());
    prev_ = x_;
}

const Tensor3& MomentumState::step() {
    const double u = rng_.uniform();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    const std::size_t block = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()),
                                                    cumulative_.size() - 1);
    return step_with_block(block);
}

const Tensor3& MomentumState::step_with_block(std::size_t block) {
    const Tensor3 grad =
        t_product(blocks_at_.at(block), t_product(blocks_a_[block], x_) - blocks_b_[block]);
    const Tensor3 mom = x_ - prev_;
    const Tensor3 err = x_ - *problem_->x_star0;

    // argmin over (alpha, beta) of ||err - alpha grad + beta mom||_F^2.
    const double gg = fro_norm2(grad), mm = fro_norm2(mom), gm = inner(grad, mom);
    const double ge = inner(grad, err), me = inner(mom, err);
    const double det = gg * mm - gm * gm;
    double alpha = 0.0, beta = 0.0;
    if (mm > 0.0 && det > 1e-14 * gg * mm) {
        alpha = (ge * mm - gm * me) / det;
        beta = (gm * ge - gg * me) / det;
    } else if (gg > 0.0) {
        alpha = ge / gg;
    }

    Tensor3 next = x_;
    next.axpy(-alpha, grad);
    next.axpy(beta, mom);
    prev_ = std::move(x_);
    x_ = std::move(next);
    alpha_ = alpha;
    momentum_beta_ = beta;
    ++iter_;
    return x_;
}

// ---------------------------------------------------------------------------
// Drivers

RunResult run_solver(const ProblemInstance& problem, const ProjectorBank& bank, const SolverConfig& config,
                     SolverKind kind, const EpochObserver& observer, const std::optional<Tensor3>& x0) {
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - start).count(); };

    Tensor3 x = x0 ? *x0 : Tensor3(problem.l(), problem.p(), problem.n());
    if (x.rows() != problem.l() || x.cols() != problem.p() || x.depth() != problem.n()) {
        throw DimensionError("run_solver: initial iterate has the wrong shape");
    }
    if (config.tol_rse && !problem.x_star0) {
        throw std::invalid_argument("run_solver: tol_rse requires the least-norm solution");
    }

    const Tensor3* xs = problem.x_star0 ? &*problem.x_star0 : nullptr;
    const double rse_den = xs ? fro_norm2(x - *xs) : 0.0;
    auto rse_of = [&](const Tensor3& t) -> std::optional<double> {
        if (!xs) return std::nullopt;
        const double num = fro_norm2(t - *xs);
        if (rse_den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
        return num / rse_den;
    };

    RunResult result;
    auto finish = [&](std::size_t k, std::optional<double> rse, StopReason why) {
        result.trace.push_back({k, rse, std::nullopt, std::nullopt, elapsed()});
        result.epochs = k;
        result.reason = why;
    };

    if (kind == SolverKind::MomentumBlock) {
        MomentumState st(problem, config.block_size, config.seed);
        for (std::size_t k = 0;; ++k) {
            const auto rse = rse_of(st.x());
            if (config.tol_rse && rse && *rse <= *config.tol_rse) {
                finish(k, rse, StopReason::ToleranceReached);
                break;
            }
            if (k >= config.max_epochs) {
                finish(k, rse, StopReason::EpochCap);
                break;
            }
            result.trace.push_back({k, rse, std::nullopt, std::nullopt, elapsed()});
            st.step();
            if (!st.x().all_finite()) throw BreakdownError("takshbm: non-finite iterate");
        }
        result.x = st.x();
        return result;
    }

    PermutationStream perms(config.strategy, problem.m(), config.seed);
    DirectState direct(x, config.tau);
    GsState gs(x, config.tau);
    TriState tri(x, config.tau);

    for (std::size_t k = 0;; ++k) {
        const auto rse = rse_of(x);
        if (config.tol_rse && rse && *rse <= *config.tol_rse) {
            finish(k, rse, StopReason::ToleranceReached);
            break;
        }
        if (k >= config.max_epochs) {
            finish(k, rse, StopReason::EpochCap);
            break;
        }

        const Permutation pi = perms.next();
        const SweepResult sw = sweep(x, pi, bank);
        result.trace.push_back({k, rse, sw.delta, sw.gamma, elapsed()});
        if (sw.delta <= config.tol_delta) {
            result.epochs = k;
            result.reason = StopReason::Solved;
            break;
        }

        Tensor3 next;
        switch (kind) {
            case SolverKind::Kaczmarz: next = sw.projected; break;
            case SolverKind::DirectGk: next = tkgk_step_direct(direct, sw); break;
            case SolverKind::GramSchmidtGk: next = gs_tkgk_step(gs, sw); break;
            case SolverKind::TridiagonalGk: next = tri_tkgk_step(tri, sw); break;
            case SolverKind::MomentumBlock: break;
        }
        if (!next.all_finite()) throw BreakdownError(std::string(to_string(kind)) + ": non-finite iterate");
        if (observer) observer(EpochView{k, x, pi, sw, next});
        x = std::move(next);
    }

    result.x = std::move(x);
    result.restarts = direct.restarts() + gs.restarts() + tri.restarts();
    return result;
}

RunResult run_solver(const ProblemInstance& problem, const SolverConfig& config, SolverKind kind,
                     const EpochObserver& observer) {
    const ProjectorBank bank(problem.a, problem.b);
    return run_solver(problem, bank, config, kind, observer);
}

}  // namespace tkz
