#include "tkz/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "tkz/analysis.hpp"
#include "tkz/problems.hpp"
#include "tkz/solvers.hpp"
#include "tkz/tensor.hpp"

namespace tkz {

namespace {

double rel(double a, double b) {
    const double s = std::max(std::abs(a), std::abs(b));
    return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

double rel_diff(const Tensor3& a, const Tensor3& b) {
    const double s = std::max(fro_norm(a), fro_norm(b));
    return s == 0.0 ? 0.0 : fro_norm(a - b) / s;
}

Tensor3 random_tensor(std::size_t r, std::size_t c, std::size_t n, SplitMix64& rng) {
    Tensor3 t(r, c, n);
    for (double& v : t.values()) v = rng.normal();
    return t;
}

struct Sizes {
    std::size_t algebra_trials;
    SyntheticSpec solver_spec;
    SyntheticSpec deficient_spec;
    std::size_t epochs;
    std::size_t arnoldi_epochs;
};

Sizes sizes_for(VerifyScale scale, std::uint64_t seed) {
    if (scale == VerifyScale::Tiny) {
        return {100, {12, 8, 2, 3, 8, 10.0, seed}, {14, 10, 2, 3, 2, 10.0, seed + 1}, 25, 8};
    }
    return {1000, {40, 30, 3, 5, 30, 10.0, seed}, {40, 30, 3, 5, 5, 10.0, seed + 1}, 50, 15};
}

class Suite {
public:
    void add(std::string name, double value, double threshold) {
        const bool ok = std::isfinite(value) && value <= threshold;
        checks.push_back({std::move(name), value, threshold, ok});
    }
    void add_flag(std::string name, bool ok) { checks.push_back({std::move(name), ok ? 0.0 : 1.0, 0.0, ok}); }
    std::vector<CheckResult> checks;
};

void algebra_checks(Suite& suite, std::size_t trials, std::uint64_t seed) {
    SplitMix64 rng(derive_seed(seed, 101));
    double hom = 0.0, adj = 0.0, fold_err = 0.0, mp = 0.0, fft = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t m = 1 + rng.below(6), l = 1 + rng.below(6), p = 1 + rng.below(6), n = 1 + rng.below(4);
        const Tensor3 a = random_tensor(m, l, n, rng), b = random_tensor(l, p, n, rng);
        const Tensor3 ab = t_product(a, b);
        const Eigen::MatrixXd lhs = bcirc(ab), rhs = bcirc(a) * bcirc(b);
        hom = std::max(hom, (lhs - rhs).norm() / std::max(rhs.norm(), 1e-300));
        fft = std::max(fft, rel_diff(ab, t_product_dense(a, b)));

        const Tensor3 y = random_tensor(m, p, n, rng);
        adj = std::max(adj, std::abs(inner(ab, y) - inner(b, t_product(t_transpose(a), y))) /
                                std::max(fro_norm(ab) * fro_norm(y), 1e-300));
        fold_err = std::max(fold_err, rel_diff(fold(unfold(a), n), a));

        const Tensor3 ap = t_pinv(a);
        const Eigen::MatrixXd ba = bcirc(a), bp = bcirc(ap);
        const double na = ba.norm(), np = std::max(bp.norm(), 1e-300);
        mp = std::max({mp, (ba * bp * ba - ba).norm() / na, (bp * ba * bp - bp).norm() / np,
                       (ba * bp - (ba * bp).transpose()).norm() / std::max((ba * bp).norm(), 1e-300),
                       (bp * ba - (bp * ba).transpose()).norm() / std::max((bp * ba).norm(), 1e-300)});
    }
    suite.add("algebra.bcirc_homomorphism", hom, 1e-10);
    suite.add("algebra.fft_matches_dense", fft, 1e-10);
    suite.add("algebra.adjoint_identity", adj, 1e-10);
    suite.add("algebra.fold_unfold_inverse", fold_err, 1e-10);
    suite.add("algebra.moore_penrose", mp, 1e-10);
}

constexpr double kIdentityRseFloor = 1e-12;

// Every per-epoch identity of a direct-route run, plus its rate bounds.
void solver_checks(Suite& suite, const ProblemInstance& problem, std::size_t epochs, std::uint64_t seed,
                   bool corrupt_gamma) {
    const ProjectorBank bank(problem.a, problem.b);
    SolverConfig cfg;
    cfg.strategy = Strategy::RandomReshuffle;
    cfg.tau = Truncation(3);
    cfg.max_epochs = epochs;
    cfg.seed = seed;
    const Tensor3& xs = *problem.x_star0;

    double pyth = 0.0, dual = 0.0, square = 0.0, factor_gap = -1.0, bound_gap = -1.0, rho_max = 0.0;
    double argmin = 0.0, subspace = 0.0;
    std::vector<Tensor3> history;
    const Tensor3 pa = t_product(t_pinv(problem.a), problem.a);
    const Tensor3 null_proj = t_identity(problem.l(), problem.n()) - pa;
    auto observer = [&](const EpochView& v) {
        SweepResult sw = v.sweep;
        if (corrupt_gamma) {
            sw.rnorm2 *= 1.5;
            sw.gamma = 0.5 * (sw.rnorm2 + sw.delta);
        }
        const Tensor3 e = v.x - xs, d = sw.projected - v.x;
        const double e2 = fro_norm2(e);
        // Near X* the identity terms drown in rounding of X* itself.
        if (e2 >= kIdentityRseFloor * fro_norm2(xs)) {
            pyth = std::max(pyth, rel(e2, fro_norm2(sw.projected - xs) + sw.rnorm2));
            dual = std::max(dual, rel(inner(d, xs - v.x), sw.gamma));
            const double lhs = std::pow(inner(e, v.x - sw.projected), 2);
            const double rhs = sw.delta * sw.rnorm2 + std::pow(inner(sw.projected - xs, v.x - sw.projected), 2);
            square = std::max(square, rel(lhs, rhs));
        }

        history.push_back(v.x);
        if (history.size() > 3) history.erase(history.begin());
        const double rho = rho_pi(problem.a, v.pi);
        rho_max = std::max(rho_max, rho);
        const auto rate = rate_beta_zeta(std::span<const Tensor3>(history.data(), history.size() - 1), v.x,
                                         sw.projected, xs, &v.next, rho);
        factor_gap = std::max(factor_gap, rate.observed_factor - rho);
        bound_gap = std::max(bound_gap, rate.bound - rho);
        argmin = std::max(argmin, rel_diff(affine_argmin_oracle(history, sw.projected, xs), v.next));
        subspace = std::max(subspace, fro_norm(t_product(null_proj, v.next)) / std::max(fro_norm(v.next), 1e-300));
    };
    run_solver(problem, bank, cfg, SolverKind::DirectGk, observer);

    suite.add("solver.pythagoras", pyth, 1e-8);
    suite.add("solver.gamma_dual", dual, 1e-8);
    suite.add("solver.gamma_square", square, 1e-6);
    suite.add("rate.rho_below_one", rho_max, 1.0 - 1e-12);
    suite.add("rate.observed_factor_le_rho", factor_gap, 1e-8);
    suite.add("rate.bound_le_rho", bound_gap, 1e-8);
    suite.add("solver.direct_matches_affine_argmin", argmin, 1e-8);
    suite.add("solver.iterates_in_range", subspace, 1e-8);
}

void equivalence_checks(Suite& suite, const ProblemInstance& problem, std::size_t epochs, std::uint64_t seed) {
    const ProjectorBank bank(problem.a, problem.b);
    SolverConfig cfg;
    cfg.tau = Truncation(4);
    cfg.max_epochs = epochs;
    cfg.seed = seed;
    std::vector<Tensor3> seq[3];
    const SolverKind kinds[3] = {SolverKind::DirectGk, SolverKind::GramSchmidtGk, SolverKind::TridiagonalGk};
    for (int s = 0; s < 3; ++s) {
        run_solver(problem, bank, cfg, kinds[s], [&](const EpochView& v) { seq[s].push_back(v.next); });
    }
    double worst = 0.0;
    const std::size_t len = std::min({seq[0].size(), seq[1].size(), seq[2].size()});
    for (std::size_t k = 0; k < len; ++k) {
        worst = std::max({worst, rel_diff(seq[0][k], seq[1][k]), rel_diff(seq[0][k], seq[2][k])});
    }
    suite.add("solver.direct_gs_tri_agree", worst, 1e-8);
    suite.add_flag("solver.equal_sequence_lengths", seq[0].size() == seq[1].size() && seq[1].size() == seq[2].size());
}

void least_norm_checks(Suite& suite, const ProblemInstance& problem, std::uint64_t seed) {
    const ProjectorBank bank(problem.a, problem.b);
    SolverConfig cfg;
    cfg.tau = Truncation(5);
    cfg.max_epochs = 2000;
    cfg.tol_rse = 1e-20;
    cfg.seed = seed;
    double worst = 0.0;
    for (SolverKind k : {SolverKind::Kaczmarz, SolverKind::GramSchmidtGk, SolverKind::TridiagonalGk}) {
        const RunResult r = run_solver(problem, bank, cfg, k);
        worst = std::max(worst, fro_norm(r.x - *problem.x_star0) / fro_norm(*problem.x_star0));
    }
    suite.add("solver.least_norm_limit", worst, 1e-6);
}

void arnoldi_checks(Suite& suite, const VerifyPlan& plan, std::size_t epochs) {
    const ProblemInstance problem = gen_synthetic({20, 15, 2, 3, 15, 10.0, derive_seed(plan.seed, 303)});
    const ArnoldiReport rep = arnoldi_check(problem, plan.arnoldi_strategy, epochs, plan.seed);
    suite.add("arnoldi.orthogonality", rep.orth_error, 1e-8);
    suite.add("arnoldi.decomposition_residual", rep.decomposition_residual, 1e-7);
    suite.add("arnoldi.subdiagonal", rep.subdiag_mismatch, 1e-6);
    double below = 0.0;
    for (Eigen::Index j = 0; j < rep.hessenberg.cols(); ++j) {
        for (Eigen::Index i = j + 2; i < rep.hessenberg.rows(); ++i) below = std::max(below, std::abs(rep.hessenberg(i, j)));
    }
    suite.add("arnoldi.hessenberg_pattern", below, 0.0);
    suite.add("arnoldi.krylov_membership",
              krylov_membership_check(problem, plan.arnoldi_strategy, std::min<std::size_t>(epochs, 10), plan.seed),
              1e-6);
    bool refused = false;
    try {
        arnoldi_check(problem, Strategy::RandomReshuffle, 2, plan.seed);
    } catch (const std::invalid_argument&) {
        refused = true;
    }
    suite.add_flag("arnoldi.refuses_random_reshuffling", refused);
}

void tri_inverse_check(Suite& suite, const ProblemInstance& problem, std::uint64_t seed) {
    const ProjectorBank bank(problem.a, problem.b);
    PermutationStream perms(Strategy::ShuffleOnce, problem.m(), seed);
    TriState st(Tensor3(problem.l(), problem.p(), problem.n()), Truncation(4));
    double worst = 0.0;
    for (int k = 0; k < 8; ++k) {
        const SweepResult sw = sweep(st.x(), perms.next(), bank);
        if (!(sw.delta > 0.0)) break;
        tri_tkgk_step(st, sw);
        const auto& w = st.window();
        if (w.size() < 2) continue;
        Eigen::MatrixXd v(static_cast<Eigen::Index>(w.back().size()), static_cast<Eigen::Index>(w.size() - 1));
        for (std::size_t i = 0; i + 1 < w.size(); ++i) v.col(static_cast<Eigen::Index>(i)) = tv(w[i] - w.back());
        const Eigen::MatrixXd dense = (v.transpose() * v).inverse();
        worst = std::max(worst, (st.tridiagonal_inverse() - dense).norm() / dense.norm());
    }
    suite.add("solver.tridiagonal_inverse", worst, 1e-6);
}

}  // namespace

bool VerifyReport::all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

std::vector<std::string> VerifyReport::failing() const {
    std::vector<std::string> out;
    for (const auto& c : checks) {
        if (!c.pass) out.push_back(c.name);
    }
    return out;
}

nlohmann::json VerifyReport::to_json() const {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& c : checks) {
        list.push_back({{"name", c.name}, {"value", c.value}, {"threshold", c.threshold}, {"pass", c.pass}});
    }
    return {{"pass", all_pass()}, {"checks", list}, {"failing", failing()}};
}

VerifyReport run_verify(const VerifyPlan& plan) {
    bool corrupt_gamma = false;
    if (plan.inject_fault) {
        if (*plan.inject_fault != "gamma") throw std::invalid_argument("unknown fault '" + *plan.inject_fault + "'");
        corrupt_gamma = true;
    }
    if (plan.arnoldi_strategy == Strategy::RandomReshuffle) {
        throw std::invalid_argument(
            "arnoldi checks need a fixed row order; random reshuffling changes the sweep operator every epoch");
    }

    const Sizes sz = sizes_for(plan.scale, derive_seed(plan.seed, 1));
    Suite suite;
    algebra_checks(suite, sz.algebra_trials, plan.seed);

    const ProblemInstance full = gen_synthetic(sz.solver_spec);
    const ProblemInstance deficient = gen_synthetic(sz.deficient_spec);
    solver_checks(suite, full, sz.epochs, derive_seed(plan.seed, 2), corrupt_gamma);
    equivalence_checks(suite, full, sz.epochs, derive_seed(plan.seed, 3));
    least_norm_checks(suite, deficient, derive_seed(plan.seed, 4));
    tri_inverse_check(suite, full, derive_seed(plan.seed, 5));
    arnoldi_checks(suite, plan, sz.arnoldi_epochs);

    VerifyReport report;
    report.checks = std::move(suite.checks);
    return report;
}

}  // namespace tkz
