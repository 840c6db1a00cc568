#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>

#include "helpers.hpp"
#include "tkz/problems.hpp"
#include "tkz/projectors.hpp"
#include "tkz/solvers.hpp"

using namespace tkz;
using tkz::test::random_tensor;
using tkz::test::rel_diff;

namespace {

ProblemInstance consistent(std::size_t m, std::size_t l, std::size_t n, std::size_t p, std::uint64_t seed) {
    SplitMix64 rng(seed);
    ProblemInstance pr;
    pr.a = random_tensor(m, l, n, rng);
    pr.b = t_product(pr.a, random_tensor(l, p, n, rng));
    pr.x_star0 = least_norm_solution(pr.a, pr.b);
    return pr;
}

// Spatial, dense-route sweep with the literal stacked residual of every row step.
struct LiteralSweep {
    Tensor3 projected;
    double rnorm2 = 0.0;
};

LiteralSweep literal_sweep(const ProblemInstance& pr, const Tensor3& x, const Permutation& pi) {
    LiteralSweep out{x, 0.0};
    std::vector<Tensor3> blocks;
    for (std::size_t i : pi) {
        const Tensor3 ai = horizontal_slice(pr.a, i), bi = horizontal_slice(pr.b, i);
        const Tensor3 corr = t_product_dense(t_pinv_dense(ai), t_product_dense(ai, out.projected) - bi);
        blocks.push_back(corr);
        out.projected -= corr;
    }
    Eigen::MatrixXd stacked(0, x.cols());
    for (const auto& b : blocks) {
        const Eigen::MatrixXd u = unfold(b);
        Eigen::MatrixXd grown(stacked.rows() + u.rows(), stacked.cols());
        grown << stacked, u;
        stacked = grown;
    }
    out.rnorm2 = stacked.squaredNorm();
    return out;
}

Permutation iota_perm(std::size_t m) {
    Permutation p(m);
    std::iota(p.begin(), p.end(), std::size_t{0});
    return p;
}

}  // namespace

TEST_CASE("identity-tube row has identity pseudoinverse") {
    Tensor3 a(1, 1, 3), b(1, 2, 3);
    a(0, 0, 0) = 1.0;
    const ProjectorBank bank(a, b);
    const Tensor3& p = bank.pinv_row(0);
    CHECK(p(0, 0, 0) == doctest::Approx(1.0));
    CHECK(std::abs(p(0, 0, 1)) < 1e-15);
    CHECK(std::abs(p(0, 0, 2)) < 1e-15);
}

TEST_CASE("zero row projects to the identity map") {
    SplitMix64 rng(1);
    Tensor3 a = random_tensor(3, 4, 2, rng);
    for (std::size_t j = 0; j < 4; ++j)
        for (std::size_t k = 0; k < 2; ++k) a(1, j, k) = 0.0;
    const ProjectorBank bank(a, Tensor3(3, 2, 2));
    CHECK(fro_norm(bank.pinv_row(1)) == 0.0);
    const Tensor3 x = random_tensor(4, 2, 2, rng);
    CHECK(bank.project_row(x, 1) == x);
}

TEST_CASE("row pseudoinverses match the dense Moore-Penrose oracle") {
    SplitMix64 rng(2);
    const Tensor3 a = random_tensor(5, 4, 3, rng);
    const ProjectorBank bank(a, Tensor3(5, 1, 3));
    for (std::size_t i = 0; i < 5; ++i) {
        const Eigen::MatrixXd ba = bcirc(horizontal_slice(a, i));
        const Eigen::MatrixXd ref = ba.completeOrthogonalDecomposition().pseudoInverse();
        CHECK((bcirc(bank.pinv_row(i)) - ref).norm() < 1e-10 * ref.norm());
    }
}

TEST_CASE("build_projectors checks shapes") {
    CHECK_THROWS_AS(ProjectorBank(Tensor3(3, 2, 2), Tensor3(4, 1, 2)), DimensionError);
    CHECK_THROWS_AS(ProjectorBank(Tensor3(3, 2, 2), Tensor3(3, 1, 3)), DimensionError);
}

TEST_CASE("row projection lands on the row set and is idempotent") {
    const ProblemInstance pr = consistent(6, 4, 3, 2, 3);
    const ProjectorBank bank(pr.a, pr.b);
    SplitMix64 rng(4);
    const Tensor3 x = random_tensor(4, 2, 3, rng);
    for (std::size_t i = 0; i < 6; ++i) {
        const Tensor3 y = bank.project_row(x, i);
        const Tensor3 ai = horizontal_slice(pr.a, i), bi = horizontal_slice(pr.b, i);
        CHECK(fro_norm(t_product(ai, y) - bi) < 1e-8 * std::max(1.0, fro_norm(bi)));
        CHECK(rel_diff(bank.project_row(y, i), y) < 1e-12);
    }
    CHECK(rel_diff(bank.project_row(*pr.x_star0, 2), *pr.x_star0) < 1e-12);
}

TEST_CASE("sweep matches the literal stacked-residual oracle") {
    const ProblemInstance pr = consistent(5, 4, 2, 3, 5);
    const ProjectorBank bank(pr.a, pr.b);
    SplitMix64 rng(6);
    const Tensor3 x = random_tensor(4, 3, 2, rng);
    Permutation pi{3, 0, 4, 1, 2};
    const SweepResult sw = sweep(x, pi, bank);
    const LiteralSweep ref = literal_sweep(pr, x, pi);
    CHECK(rel_diff(sw.projected, ref.projected) < 1e-10);
    CHECK(sw.rnorm2 == doctest::Approx(ref.rnorm2).epsilon(1e-10));
    CHECK(sw.delta == doctest::Approx(fro_norm2(ref.projected - x)).epsilon(1e-10));
    CHECK(sw.gamma == doctest::Approx(0.5 * (sw.rnorm2 + sw.delta)));
}

TEST_CASE("sweep from a solution does nothing") {
    const ProblemInstance pr = consistent(5, 4, 3, 2, 7);
    const ProjectorBank bank(pr.a, pr.b);
    const SweepResult sw = sweep(*pr.x_star0, iota_perm(5), bank);
    CHECK(sw.delta < 1e-24);
    CHECK(sw.rnorm2 < 1e-24);
    CHECK(sw.gamma < 1e-24);
}

TEST_CASE("single-row sweep from zero gives the row least-norm point") {
    const ProblemInstance pr = consistent(1, 4, 3, 2, 8);
    const ProjectorBank bank(pr.a, pr.b);
    const SweepResult sw = sweep(Tensor3(4, 2, 3), {0}, bank);
    CHECK(rel_diff(sw.projected, t_product(t_pinv(pr.a), pr.b)) < 1e-12);
}

TEST_CASE("sweep validates its inputs") {
    const ProblemInstance pr = consistent(3, 2, 2, 1, 9);
    const ProjectorBank bank(pr.a, pr.b);
    CHECK_THROWS_AS(sweep(Tensor3(2, 1, 2), {0, 1}, bank), DimensionError);
    CHECK_THROWS_AS(sweep(Tensor3(3, 1, 2), {0, 1, 2}, bank), DimensionError);
}

TEST_CASE("truncation parsing") {
    CHECK(Truncation::parse("inf")->is_unbounded());
    CHECK(Truncation::parse("7")->value() == 7);
    CHECK_FALSE(Truncation::parse("0"));
    CHECK_FALSE(Truncation::parse("x"));
    CHECK_FALSE(Truncation::parse(""));
    CHECK(Truncation::unbounded().to_string() == "inf");
    CHECK_THROWS_AS(Truncation(0), std::invalid_argument);
}

TEST_CASE("solver names round trip") {
    for (auto k : {SolverKind::Kaczmarz, SolverKind::DirectGk, SolverKind::GramSchmidtGk, SolverKind::TridiagonalGk,
                   SolverKind::MomentumBlock}) {
        CHECK(parse_solver(to_string(k)) == k);
    }
    CHECK_FALSE(parse_solver("cg"));
}

TEST_CASE("first step and tau = 1 are the plain Gearhart-Koshy step") {
    const ProblemInstance pr = consistent(6, 4, 2, 2, 10);
    const ProjectorBank bank(pr.a, pr.b);
    const Permutation pi = iota_perm(6);
    const Tensor3 x0(4, 2, 2);

    DirectState d(x0, Truncation(1));
    GsState g(x0, Truncation(1));
    TriState t(x0, Truncation(1));
    for (int k = 0; k < 4; ++k) {
        const SweepResult sw = sweep(d.x(), pi, bank);
        Tensor3 expected = d.x();
        expected.axpy(sw.gamma / sw.delta, sw.projected - d.x());
        CHECK(rel_diff(tkgk_step_direct(d, sw), expected) < 1e-13);
        CHECK(d.last_coefficients().size() == 1);
        CHECK(rel_diff(gs_tkgk_step(g, sw), expected) < 1e-13);
        CHECK(rel_diff(tri_tkgk_step(t, sw), expected) < 1e-13);
    }
}

TEST_CASE("steps require progress") {
    const ProblemInstance pr = consistent(3, 2, 2, 1, 11);
    const ProjectorBank bank(pr.a, pr.b);
    const SweepResult sw = sweep(*pr.x_star0, iota_perm(3), bank);
    SweepResult zero = sw;
    zero.delta = 0.0;
    DirectState d(*pr.x_star0, Truncation(2));
    CHECK_THROWS_AS(tkgk_step_direct(d, zero), std::invalid_argument);
}

TEST_CASE("direct steps match the brute-force affine hull projection") {
    const ProblemInstance pr = consistent(6, 4, 2, 2, 12);
    const ProjectorBank bank(pr.a, pr.b);
    const Permutation pi = iota_perm(6);
    DirectState st(Tensor3(4, 2, 2), Truncation(3));
    for (int k = 0; k < 5; ++k) {
        const SweepResult sw = sweep(st.x(), pi, bank);
        // Dense oracle: minimize ||X^k + M s - X*|| over s by SVD.
        const auto& w = st.window();
        const Tensor3& xk = w.back();
        Eigen::MatrixXd m(xk.size(), w.size());
        for (std::size_t i = 0; i + 1 < w.size(); ++i) m.col(i) = tv(w[i] - xk);
        m.col(w.size() - 1) = tv(sw.projected - xk);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
        Tensor3 ref = xk;
        ref.vec() += m * svd.solve(tv(*pr.x_star0 - xk));
        CHECK(rel_diff(tkgk_step_direct(st, sw), ref) < 1e-8);
        CHECK(st.window().size() <= 3);
    }
}

TEST_CASE("Gram-Schmidt basis stays orthogonal and keeps min(k+1, tau) directions") {
    const ProblemInstance pr = gen_synthetic({20, 15, 3, 2, 15, 10.0, 13});
    const ProjectorBank bank(pr.a, pr.b);
    PermutationStream perms(Strategy::ShuffleOnce, 20, 1);
    GsState st(Tensor3(15, 2, 3), Truncation(4));
    for (std::size_t k = 0; k < 10; ++k) {
        gs_tkgk_step(st, sweep(st.x(), perms.next(), bank));
        CHECK(st.basis_size() == std::min<std::size_t>(k + 1, 4));
        for (std::size_t i = 0; i < st.basis_size(); ++i)
            for (std::size_t j = 0; j < i; ++j)
                CHECK(std::abs(inner(st.basis(i), st.basis(j))) <=
                      1e-8 * std::sqrt(st.basis_norm2(i) * st.basis_norm2(j)));
    }
    CHECK(st.lambdas().size() == 10);
    CHECK_THROWS_AS(st.basis(4), std::out_of_range);
}

TEST_CASE("tridiagonal inverse equals the dense inverse of V^T V") {
    const ProblemInstance pr = gen_synthetic({20, 15, 3, 2, 15, 10.0, 14});
    const ProjectorBank bank(pr.a, pr.b);
    PermutationStream perms(Strategy::RandomReshuffle, 20, 2);
    TriState st(Tensor3(15, 2, 3), Truncation(5));
    for (int k = 0; k < 10; ++k) {
        tri_tkgk_step(st, sweep(st.x(), perms.next(), bank));
        const auto& w = st.window();
        CHECK(w.size() <= 5);
        if (w.size() < 2) continue;
        Eigen::MatrixXd v(w.back().size(), w.size() - 1);
        for (std::size_t i = 0; i + 1 < w.size(); ++i) v.col(i) = tv(w[i] - w.back());
        const Eigen::MatrixXd dense = (v.transpose() * v).inverse();
        CHECK((st.tridiagonal_inverse() - dense).norm() <= 1e-6 * dense.norm());
    }
}

TEST_CASE("direct, Gram-Schmidt and tridiagonal iterates coincide") {
    const ProblemInstance pr = gen_synthetic({40, 30, 3, 5, 30, 10.0, 15});
    const ProjectorBank bank(pr.a, pr.b);
    for (Truncation tau : {Truncation(2), Truncation(5), Truncation::unbounded()}) {
        SolverConfig cfg;
        cfg.tau = tau;
        cfg.max_epochs = 50;
        cfg.seed = 3;
        std::vector<Tensor3> seq[3];
        int s = 0;
        for (auto kind : {SolverKind::DirectGk, SolverKind::GramSchmidtGk, SolverKind::TridiagonalGk}) {
            run_solver(pr, bank, cfg, kind, [&](const EpochView& v) { seq[s].push_back(v.next); });
            ++s;
        }
        REQUIRE(seq[0].size() == seq[1].size());
        REQUIRE(seq[0].size() == seq[2].size());
        double worst = 0.0;
        for (std::size_t k = 0; k < seq[0].size(); ++k)
            worst = std::max({worst, rel_diff(seq[0][k], seq[1][k]), rel_diff(seq[0][k], seq[2][k])});
        CHECK(worst < 1e-8);
    }
}

TEST_CASE("plain Kaczmarz error is monotone") {
    const ProblemInstance pr = gen_synthetic({30, 20, 2, 3, 20, 10.0, 16});
    SolverConfig cfg;
    cfg.max_epochs = 40;
    const RunResult r = tk_run(pr, cfg);
    for (std::size_t k = 1; k < r.trace.size(); ++k) CHECK(*r.trace[k].rse <= *r.trace[k - 1].rse * (1 + 1e-12));
}

TEST_CASE("single-row system converges in one epoch") {
    const ProblemInstance pr = consistent(1, 4, 3, 2, 17);
    SolverConfig cfg;
    cfg.max_epochs = 10;
    const RunResult r = tk_run(pr, cfg);
    CHECK(r.epochs == 1);
    CHECK(r.reason == StopReason::Solved);
    CHECK(rel_diff(r.x, *pr.x_star0) < 1e-12);
}

TEST_CASE("starting at the solution stops immediately") {
    const ProblemInstance pr = consistent(5, 3, 2, 2, 18);
    const ProjectorBank bank(pr.a, pr.b);
    SolverConfig cfg;
    const RunResult r = run_solver(pr, bank, cfg, SolverKind::GramSchmidtGk, {}, *pr.x_star0);
    CHECK(r.epochs == 0);
    CHECK(r.reason == StopReason::Solved);
    CHECK(r.x == *pr.x_star0);
}

TEST_CASE("epoch cap zero returns the start with RSE one") {
    const ProblemInstance pr = consistent(5, 3, 2, 2, 19);
    SolverConfig cfg;
    cfg.max_epochs = 0;
    const RunResult r = run_solver(pr, cfg, SolverKind::GramSchmidtGk);
    CHECK(r.epochs == 0);
    REQUIRE(r.trace.size() == 1);
    CHECK(*r.trace[0].rse == 1.0);
    CHECK_FALSE(r.trace[0].delta);
    CHECK(fro_norm(r.x) == 0.0);
}

TEST_CASE("infinite delta tolerance stops after the first sweep") {
    const ProblemInstance pr = consistent(5, 3, 2, 2, 20);
    SolverConfig cfg;
    cfg.tol_delta = std::numeric_limits<double>::infinity();
    const RunResult r = run_solver(pr, cfg, SolverKind::Kaczmarz);
    CHECK(r.trace.size() == 1);
    CHECK(r.trace[0].delta.has_value());
    CHECK(r.reason == StopReason::Solved);
}

TEST_CASE("accelerated run needs fewer epochs than plain Kaczmarz") {
    const ProblemInstance pr = gen_synthetic({100, 75, 3, 75, 75, 10.0, 21});
    const ProjectorBank bank(pr.a, pr.b);
    SolverConfig cfg;
    cfg.tol_rse = 1e-12;
    cfg.max_epochs = 3000;
    cfg.seed = 4;
    const RunResult tk = run_solver(pr, bank, cfg, SolverKind::Kaczmarz);
    const RunResult gs = run_solver(pr, bank, cfg, SolverKind::GramSchmidtGk);
    CHECK(gs.reason == StopReason::ToleranceReached);
    CHECK(gs.epochs < tk.epochs);
}

TEST_CASE("tol_rse without a known solution is rejected") {
    ProblemInstance pr = consistent(3, 2, 2, 1, 22);
    pr.x_star0.reset();
    SolverConfig cfg;
    cfg.tol_rse = 1e-6;
    CHECK_THROWS_AS(run_solver(pr, cfg, SolverKind::Kaczmarz), std::invalid_argument);
    cfg.tol_rse.reset();
    cfg.max_epochs = 3;
    const RunResult r = run_solver(pr, cfg, SolverKind::Kaczmarz);
    CHECK_FALSE(r.trace.front().rse);
}

TEST_CASE("momentum baseline: fixed point, first step and monotone error") {
    const ProblemInstance pr = gen_synthetic({45, 20, 2, 3, 20, 10.0, 23});
    MomentumState st(pr, 15, 5);
    CHECK(st.block_count() == 3);

    // k = 0: no momentum, alpha is the exact 1-D step along the gradient.
    st.step_with_block(1);
    CHECK(st.last_momentum_beta() == 0.0);
    CHECK(st.last_alpha() > 0.0);

    double prev = fro_norm2(st.x() - *pr.x_star0);
    for (int k = 0; k < 60; ++k) {
        st.step();
        const double cur = fro_norm2(st.x() - *pr.x_star0);
        CHECK(cur <= prev * (1 + 1e-12));
        prev = cur;
    }

    // At the solution every block gradient vanishes, so the step cannot move it.
    const Tensor3 grad = t_product(t_transpose(pr.a), t_product(pr.a, *pr.x_star0) - pr.b);
    CHECK(fro_norm(grad) < 1e-10 * fro_norm(pr.b));
}

TEST_CASE("momentum blocks: uneven last block and required ground truth") {
    const ProblemInstance pr = gen_synthetic({40, 10, 2, 2, 10, 10.0, 24});
    MomentumState st(pr, 15, 1);
    CHECK(st.block_count() == 3);
    ProblemInstance unknown = pr;
    unknown.x_star0.reset();
    CHECK_THROWS_AS(MomentumState(unknown, 15, 1), std::invalid_argument);
    CHECK_THROWS_AS(MomentumState(pr, 0, 1), std::invalid_argument);
}

TEST_CASE("runs are deterministic for a seed") {
    const ProblemInstance pr = gen_synthetic({30, 20, 3, 4, 20, 10.0, 25});
    SolverConfig cfg;
    cfg.strategy = Strategy::RandomReshuffle;
    cfg.max_epochs = 30;
    cfg.seed = 8;
    for (auto kind : {SolverKind::GramSchmidtGk, SolverKind::MomentumBlock}) {
        const RunResult a = run_solver(pr, cfg, kind), b = run_solver(pr, cfg, kind);
        CHECK(a.x == b.x);
        REQUIRE(a.trace.size() == b.trace.size());
        for (std::size_t k = 0; k < a.trace.size(); ++k) CHECK(a.trace[k].rse == b.trace[k].rse);
    }
}
