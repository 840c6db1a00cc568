#include "tkz/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "tkz/solvers.hpp"

namespace tkz {

namespace {

Eigen::Index idx(std::size_t v) { return static_cast<Eigen::Index>(v); }

// Row-projector complement I - pinv(A_i) * A_i, l x l x n.
Tensor3 row_complement(const ProjectorBank& bank, std::size_t i) {
    const Tensor3 ai = horizontal_slice(bank.a(), i);
    return t_identity(bank.a().cols(), bank.a().depth()) - t_product(bank.pinv_row(i), ai);
}

void require_fixed_order(Strategy strategy, const char* who) {
    if (strategy == Strategy::RandomReshuffle) {
        throw std::invalid_argument(std::string(who) +
                                    ": random reshuffling changes the sweep operator every epoch; "
                                    "the Krylov/Arnoldi structure needs a fixed order (is or so)");
    }
}

Eigen::VectorXd project_onto_columns(const Eigen::MatrixXd& v, const Eigen::VectorXd& d) {
    if (v.cols() == 0) return Eigen::VectorXd::Zero(d.size());
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(v);
    return v * cod.solve(d);
}

// Unbounded-history Gram-Schmidt run from X^0 = 0, stepped `steps` times.
struct GsRun {
    GsState state;
    Permutation pi;
    std::vector<Tensor3> iterates;  // X^0 .. X^steps
};

GsRun run_unbounded_gs(const ProblemInstance& problem, const ProjectorBank& bank, Strategy strategy,
                       std::size_t steps, std::uint64_t seed) {
    PermutationStream perms(strategy, problem.m(), seed);
    GsRun run{GsState(Tensor3(problem.l(), problem.p(), problem.n()), Truncation::unbounded()), {}, {}};
    run.iterates.push_back(run.state.x());
    for (std::size_t k = 0; k < steps; ++k) {
        run.pi = perms.next();
        const SweepResult sw = sweep(run.state.x(), run.pi, bank);
        if (!(sw.delta > 0.0)) {
            throw std::invalid_argument("arnoldi: the iteration reached a solution after " + std::to_string(k) +
                                        " steps; ask for fewer epochs");
        }
        gs_tkgk_step(run.state, sw);
        run.iterates.push_back(run.state.x());
    }
    return run;
}

}  // namespace

void require_dense_scale(const Tensor3& a) {
    if (a.cols() * a.depth() > kDenseCap || a.rows() * a.depth() > kDenseCap) {
        throw CapacityError("dense oracle refused: l*n and m*n must not exceed " + std::to_string(kDenseCap));
    }
}

Tensor3 compute_T_pi(const Tensor3& a, const Permutation& pi) {
    require_dense_scale(a);
    if (pi.size() != a.rows() || !is_permutation_of_range(pi)) {
        throw std::invalid_argument("compute_T_pi: pi is not a permutation of the rows");
    }
    const ProjectorBank bank(a, Tensor3(a.rows(), 1, a.depth()));
    Tensor3 t = t_identity(a.cols(), a.depth());
    for (std::size_t i : pi) t = t_product(row_complement(bank, i), t);
    return t;
}

Tensor3 compute_G_pi(const Tensor3& a, const Tensor3& b, const Permutation& pi) {
    require_dense_scale(a);
    if (pi.size() != a.rows() || !is_permutation_of_range(pi)) {
        throw std::invalid_argument("compute_G_pi: pi is not a permutation of the rows");
    }
    const ProjectorBank bank(a, b);
    // G = sum_t (C_{pi_m} ... C_{pi_{t+1}}) * pinv(A_{pi_t}) * B_{pi_t}, accumulated from the front.
    Tensor3 g(a.cols(), b.cols(), a.depth());
    for (std::size_t i : pi) {
        g = t_product(row_complement(bank, i), g);
        g += t_product(bank.pinv_row(i), horizontal_slice(b, i));
    }
    return g;
}

double rho_pi(const Tensor3& a, const Permutation& pi) {
    const Tensor3 t = compute_T_pi(a, pi);
    const Tensor3 m = t_product(t, t_product(t_pinv(a), a));
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(bcirc(m));
    const double s = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
    return s * s;
}

RateReport rate_beta_zeta(std::span<const Tensor3> older, const Tensor3& xk, const Tensor3& projected,
                          const Tensor3& x_star0, const Tensor3* next, double rho) {
    RateReport r;
    r.rho_pi = rho;
    const Eigen::VectorXd d = tv(projected - xk);
    const double d2 = d.squaredNorm();
    if (d2 == 0.0) throw std::invalid_argument("rate_beta_zeta: X^k is a fixed point of the sweep");

    Eigen::MatrixXd v(idx(xk.size()), idx(older.size()));
    for (std::size_t i = 0; i < older.size(); ++i) v.col(idx(i)) = tv(older[i] - xk);
    const double captured = project_onto_columns(v, d).squaredNorm() / d2;
    r.rate_beta = 1.0 / (1.0 - captured);

    const Tensor3 e = xk - x_star0;
    const double e2 = fro_norm2(e);
    r.zeta = inner(e, xk - projected) / (std::sqrt(e2) * std::sqrt(d2));
    r.bound = 1.0 - r.rate_beta * r.zeta * r.zeta;
    if (next) r.observed_factor = fro_norm2(*next - x_star0) / e2;
    return r;
}

ArnoldiReport arnoldi_check(const ProblemInstance& problem, Strategy strategy, std::size_t epochs,
                            std::uint64_t seed) {
    require_fixed_order(strategy, "arnoldi_check");
    require_dense_scale(problem.a);
    if (epochs == 0) throw std::invalid_argument("arnoldi_check: need at least one epoch");

    const ProjectorBank bank(problem.a, problem.b);
    // One extra step produces U_{k+1}, which closes the decomposition at k = epochs - 1.
    const GsRun run = run_unbounded_gs(problem, bank, strategy, epochs + 1, seed);
    const GsState& st = run.state;

    ArnoldiReport rep;
    rep.restarts = st.restarts();
    if (st.restarts() != 0 || st.basis_size() != epochs + 1) {
        throw BreakdownError("arnoldi_check: the basis restarted; the run is not in the Arnoldi regime");
    }
    const std::size_t kk = epochs;  // basis U_0 .. U_{k}, with k + 1 = epochs columns in U^k
    const Tensor3 t_pi = compute_T_pi(problem.a, run.pi);
    const Tensor3 c = t_identity(problem.l(), problem.n()) - t_pi;

    std::vector<Tensor3> u, cu;
    for (std::size_t i = 0; i <= kk; ++i) u.push_back(st.basis(i));
    for (std::size_t j = 0; j < kk; ++j) cu.push_back(t_product(c, u[j]));
    rep.lambdas.assign(st.lambdas().begin(), st.lambdas().begin() + static_cast<std::ptrdiff_t>(kk));

    // H from inner products; the zero pattern below the subdiagonal is imposed.
    rep.hessenberg = Eigen::MatrixXd::Zero(idx(kk), idx(kk));
    for (std::size_t j = 0; j < kk; ++j) {
        for (std::size_t i = 0; i <= std::min(j + 1, kk - 1); ++i) {
            rep.hessenberg(idx(i), idx(j)) = inner(u[i], cu[j]) / st.basis_norm2(i);
        }
    }
    for (std::size_t j = 0; j < kk; ++j) {
        const double measured = inner(u[j + 1], cu[j]) / st.basis_norm2(j + 1);
        const double expected = -1.0 / rep.lambdas[j];
        rep.subdiag_mismatch = std::max(rep.subdiag_mismatch, std::abs(measured - expected) / std::abs(expected));
        if (j + 1 < kk) rep.hessenberg(idx(j + 1), idx(j)) = expected;
    }

    for (std::size_t i = 0; i <= kk; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            const double cosine = inner(u[i], u[j]) / std::sqrt(st.basis_norm2(i) * st.basis_norm2(j));
            rep.orth_error = std::max(rep.orth_error, std::abs(cosine));
        }
    }

    // C * U^k = U^k * (H (x) I_p) + R * E^T with R = -(1/lambda_{k}) U_{k+1}, literal t-products.
    const std::size_t p = problem.p(), n = problem.n();
    const Tensor3 uk = lateral_concat(std::span<const Tensor3>(u.data(), kk));
    Tensor3 h(kk * p, kk * p, n);
    for (std::size_t j = 0; j < kk; ++j) {
        for (std::size_t i = 0; i < kk; ++i) {
            for (std::size_t q = 0; q < p; ++q) h(i * p + q, j * p + q, 0) = rep.hessenberg(idx(i), idx(j));
        }
    }
    Tensor3 e(kk * p, p, n);
    for (std::size_t q = 0; q < p; ++q) e((kk - 1) * p + q, q, 0) = 1.0;
    const Tensor3 r = (-1.0 / rep.lambdas[kk - 1]) * u[kk];

    const Tensor3 lhs = t_product(c, uk);
    const Tensor3 resid = lhs - t_product(uk, h) - t_product(r, t_transpose(e));
    const double scale = fro_norm(lhs);
    rep.decomposition_residual = scale > 0.0 ? fro_norm(resid) / scale : fro_norm(resid);
    return rep;
}

double krylov_membership_check(const ProblemInstance& problem, Strategy strategy, std::size_t epochs,
                               std::uint64_t seed) {
    require_fixed_order(strategy, "krylov_membership_check");
    require_dense_scale(problem.a);
    const ProjectorBank bank(problem.a, problem.b);
    const GsRun run = run_unbounded_gs(problem, bank, strategy, epochs, seed);
    if (epochs == 0) return 0.0;

    const Tensor3 c = t_identity(problem.l(), problem.n()) - compute_T_pi(problem.a, run.pi);
    const Tensor3 g = compute_G_pi(problem.a, problem.b, run.pi);
    const Tensor3& x0 = run.iterates.front();
    Tensor3 w = g - t_product(c, x0);

    // Orthonormal Krylov basis by repeated application of C, reorthogonalized twice.
    std::vector<Eigen::VectorXd> q;
    double worst = 0.0;
    bool invariant = false;
    for (std::size_t j = 0; j < epochs; ++j) {
        if (!invariant) {
            Eigen::VectorXd v = tv(w);
            const double before = v.norm();
            for (int pass = 0; pass < 2; ++pass) {
                for (const auto& b : q) v -= b.dot(v) * b;
            }
            if (before == 0.0 || v.norm() <= 1e-13 * before) {
                invariant = true;
            } else {
                v /= v.norm();
                q.push_back(v);
                w = t_product(c, Tensor3(problem.l(), problem.p(), problem.n(),
                                         std::vector<double>(v.data(), v.data() + v.size())));
            }
        }
        Eigen::VectorXd y = tv(run.iterates[j + 1] - x0);
        const double yn = y.norm();
        if (yn == 0.0) continue;
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& b : q) y -= b.dot(y) * b;
        }
        worst = std::max(worst, y.norm() / yn);
    }
    return worst;
}

Tensor3 affine_argmin_oracle(std::span<const Tensor3> window, const Tensor3& projected, const Tensor3& x_star0,
                             LeastSquaresRoute route) {
    if (window.empty()) throw std::invalid_argument("affine_argmin_oracle: empty window");
    const Tensor3& xk = window.back();
    const std::size_t q = window.size();
    Eigen::MatrixXd m(idx(xk.size()), idx(q));
    for (std::size_t i = 0; i + 1 < q; ++i) m.col(idx(i)) = tv(window[i] - xk);
    m.col(idx(q - 1)) = tv(projected - xk);
    const Eigen::VectorXd rhs = tv(x_star0 - xk);
    if (m.norm() == 0.0) return xk;  // hull is a single point; QR would divide by zero

    Eigen::VectorXd s;
    if (route == LeastSquaresRoute::Qr) {
        s = m.colPivHouseholderQr().solve(rhs);
    } else {
        Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
        s = svd.solve(rhs);
    }
    Tensor3 out = xk;
    out.vec() += m * s;
    return out;
}

}  // namespace tkz
