#include "tkz/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tkz/sampling.hpp"

namespace tkz {

namespace {

Eigen::Index idx(std::size_t v) { return static_cast<Eigen::Index>(v); }

Eigen::MatrixXd gaussian(std::size_t rows, std::size_t cols, SplitMix64& rng) {
    Eigen::MatrixXd g(idx(rows), idx(cols));
    for (Eigen::Index j = 0; j < g.cols(); ++j) {
        for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = rng.normal();
    }
    return g;
}

Eigen::MatrixXd thin_q(const Eigen::MatrixXd& g) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    return qr.householderQ() * Eigen::MatrixXd::Identity(g.rows(), g.cols());
}

// MATLAB toeplitz(c, r): first column c, first row r.
Eigen::MatrixXd toeplitz(const Eigen::VectorXd& c, const Eigen::VectorXd& r) {
    Eigen::MatrixXd t(c.size(), r.size());
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
        for (Eigen::Index j = 0; j < t.cols(); ++j) t(i, j) = i >= j ? c(i - j) : r(j - i);
    }
    return t;
}

}  // namespace

ProblemInstance gen_synthetic(const SyntheticSpec& spec) {
    if (spec.m == 0 || spec.l == 0 || spec.n == 0 || spec.p == 0 || spec.r == 0) {
        throw std::invalid_argument("gen_synthetic: all dimensions must be >= 1");
    }
    if (spec.r > std::min(spec.m, spec.l)) throw std::invalid_argument("gen_synthetic: r > min(m, l)");
    if (!(spec.kappa > 1.0)) throw std::invalid_argument("gen_synthetic: kappa must exceed 1");

    ProblemInstance out;
    out.a = Tensor3(spec.m, spec.l, spec.n);
    Tensor3 x_true(spec.l, spec.p, spec.n);
    for (std::size_t k = 0; k < spec.n; ++k) {
        SplitMix64 rng(derive_seed(spec.seed, 2 * k));
        const Eigen::MatrixXd u = thin_q(gaussian(spec.m, spec.r, rng));
        const Eigen::MatrixXd v = thin_q(gaussian(spec.l, spec.r, rng));
        Eigen::VectorXd d(idx(spec.r));
        for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = 1.0 + (spec.kappa - 1.0) * rng.uniform();
        out.a.slice(k) = u * d.asDiagonal() * v.transpose();

        SplitMix64 xrng(derive_seed(spec.seed, 2 * k + 1));
        x_true.slice(k) = gaussian(spec.l, spec.p, xrng);
    }
    out.b = t_product(out.a, x_true);
    out.x_star0 = least_norm_solution(out.a, out.b);
    out.provenance = "synthetic m=" + std::to_string(spec.m) + " l=" + std::to_string(spec.l) +
                     " n=" + std::to_string(spec.n) + " p=" + std::to_string(spec.p) +
                     " r=" + std::to_string(spec.r) + " kappa=" + std::to_string(spec.kappa) +
                     " seed=" + std::to_string(spec.seed);
    return out;
}

std::vector<double> blur_profile(const BlurSpec& spec) {
    if (spec.band < 1 || spec.band > spec.l) throw std::invalid_argument("gen_blur: need 1 <= band <= l");
    if (!(spec.sigma > 0.0)) throw std::invalid_argument("gen_blur: sigma must be positive");
    const double scale = 1.0 / std::sqrt(2.0 * std::numbers::pi * spec.sigma);
    std::vector<double> z(spec.l, 0.0);
    for (std::size_t i = 0; i < spec.band; ++i) {
        const double t = static_cast<double>(i);
        z[i] = scale * std::exp(-(t * t) / (2.0 * spec.sigma * spec.sigma));
    }
    return z;
}

Tensor3 gen_blur(const BlurSpec& spec) {
    if (spec.n < 1 || spec.n > spec.l) throw std::invalid_argument("gen_blur: need 1 <= n <= l");
    const std::vector<double> profile = blur_profile(spec);
    const double scale = 1.0 / std::sqrt(2.0 * std::numbers::pi * spec.sigma);

    Eigen::VectorXd z1 = Eigen::Map<const Eigen::VectorXd>(profile.data(), idx(profile.size())) / scale;
    Eigen::VectorXd z2(z1.size());
    z2(0) = z1(0);
    z2.tail(z1.size() - 1) = z1.tail(z1.size() - 1).reverse();

    const Eigen::MatrixXd m1 = scale * toeplitz(z1, z1);
    const Eigen::MatrixXd m2 = scale * toeplitz(z1, z2);

    Tensor3 a(spec.l, spec.l, spec.n);
    for (std::size_t j = 0; j < spec.n; ++j) a.slice(j) = m2(idx(j), 0) * m1;
    return a;
}

Tensor3 gen_video(std::size_t l, std::size_t p, std::size_t n, std::uint64_t seed) {
    SplitMix64 rng(seed);
    struct Blob {
        double r0, c0, dr, dc, radius, amp;
    };
    std::vector<Blob> blobs(3);
    for (auto& b : blobs) {
        b.r0 = rng.uniform() * static_cast<double>(l);
        b.c0 = rng.uniform() * static_cast<double>(p);
        b.dr = (rng.uniform() - 0.5) * 0.3 * static_cast<double>(l) / static_cast<double>(std::max<std::size_t>(n, 1));
        b.dc = (rng.uniform() - 0.5) * 0.6 * static_cast<double>(p) / static_cast<double>(std::max<std::size_t>(n, 1));
        b.radius = (0.08 + 0.1 * rng.uniform()) * static_cast<double>(std::min(l, p));
        b.amp = 0.4 + 0.4 * rng.uniform();
    }

    Tensor3 v(l, p, n);
    for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k);
        for (std::size_t j = 0; j < p; ++j) {
            for (std::size_t i = 0; i < l; ++i) {
                const double y = static_cast<double>(i), x = static_cast<double>(j);
                double val = 0.15 + 0.1 * y / static_cast<double>(l) + 0.05 * std::sin(0.3 * x);
                for (const auto& b : blobs) {
                    const double dy = y - (b.r0 + b.dr * t), dx = x - (b.c0 + b.dc * t);
                    val += b.amp * std::exp(-(dx * dx + dy * dy) / (2.0 * b.radius * b.radius));
                }
                v(i, j, k) = std::clamp(val, 0.0, 1.0);
            }
        }
    }
    return v;
}

Tensor3 least_norm_solution(const Tensor3& a, const Tensor3& b) {
    if (a.rows() != b.rows() || a.depth() != b.depth()) {
        throw DimensionError("least_norm_solution: A and B must share rows and depth");
    }
    Tensor3 x = t_product(t_pinv(a), b);
    const double bn = fro_norm(b);
    const double res = fro_norm(t_product(a, x) - b);
    if (res > 1e-8 * bn) {
        throw InconsistentSystemError("least_norm_solution: system is not consistent (relative residual " +
                                      std::to_string(res / bn) + ")");
    }
    return x;
}

double rse(const Tensor3& x, const Tensor3& x_star0, const Tensor3& x0) {
    return fro_norm2(x - x_star0) / fro_norm2(x0 - x_star0);
}

double psnr(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& reference, double peak) {
    if (estimate.rows() != reference.rows() || estimate.cols() != reference.cols()) {
        throw DimensionError("psnr: frame shapes differ");
    }
    const double mse = (estimate - reference).squaredNorm() / static_cast<double>(reference.size());
    if (mse == 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

std::vector<double> psnr_frames(const Tensor3& estimate, const Tensor3& reference) {
    if (!estimate.same_shape(reference)) throw DimensionError("psnr_frames: shapes differ");
    std::vector<double> out;
    out.reserve(reference.depth());
    for (std::size_t k = 0; k < reference.depth(); ++k) {
        out.push_back(psnr(estimate.slice(k), reference.slice(k), reference.slice(k).maxCoeff()));
    }
    return out;
}

}  // namespace tkz
