#include "cli.hpp"

#include <CLI11.hpp>

#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "tkz/bench.hpp"
#include "tkz/errors.hpp"
#include "tkz/io.hpp"
#include "tkz/problems.hpp"
#include "tkz/verify.hpp"

namespace tkz::cli {

namespace {

std::vector<std::string> split_list(const std::vector<std::string>& items) {
    std::vector<std::string> out;
    for (const auto& item : items) {
        std::stringstream ss(item);
        for (std::string part; std::getline(ss, part, ',');) {
            if (!part.empty()) out.push_back(part);
        }
    }
    return out;
}

std::vector<SolverKind> parse_solvers(const std::vector<std::string>& names) {
    std::vector<SolverKind> out;
    for (const auto& n : split_list(names)) {
        auto k = parse_solver(n);
        if (!k) throw CLI::ValidationError("--solver", "unknown solver '" + n + "'");
        out.push_back(*k);
    }
    if (out.empty()) throw CLI::ValidationError("--solver", "at least one solver is required");
    return out;
}

std::vector<Truncation> parse_taus(const std::vector<std::string>& items) {
    std::vector<Truncation> out;
    for (const auto& t : split_list(items)) {
        auto v = Truncation::parse(t);
        if (!v) throw CLI::ValidationError("--tau", "expected a positive integer or 'inf', got '" + t + "'");
        out.push_back(*v);
    }
    if (out.empty()) throw CLI::ValidationError("--tau", "at least one value is required");
    return out;
}

Strategy parse_strategy_opt(const std::string& s) {
    auto v = parse_strategy(s);
    if (!v) throw CLI::ValidationError("--strategy", "expected is, so or rr, got '" + s + "'");
    return *v;
}

// "LxPxN"
void parse_shape(const std::string& text, std::size_t& l, std::size_t& p, std::size_t& n) {
    std::size_t dims[3];
    std::stringstream ss(text);
    std::string part;
    int count = 0;
    while (std::getline(ss, part, 'x')) {
        if (count == 3 || part.empty() || part.find_first_not_of("0123456789") != std::string::npos) count = 4;
        if (count >= 3) break;
        dims[count++] = std::stoul(part);
    }
    if (count != 3 || dims[0] == 0 || dims[1] == 0 || dims[2] == 0) {
        throw CLI::ValidationError("--synthetic", "expected LxPxN with positive sizes, got '" + text + "'");
    }
    l = dims[0];
    p = dims[1];
    n = dims[2];
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Tensor Kaczmarz solvers with Gearhart-Koshy acceleration", "tkz"};
    app.require_subcommand(1);

    // synth-bench
    SynthBenchPlan bench;
    bench.spec = {100, 75, 3, 75, 75, 10.0, 0};
    std::vector<std::string> bench_solvers{"gs"}, bench_taus{"5"};
    std::string bench_strategy = "so";
    std::string bench_out;
    double bench_tol_rse = -1.0;
    auto* sb = app.add_subcommand("synth-bench", "Seeded synthetic experiments with per-trial traces");
    sb->add_option("--m", bench.spec.m, "Horizontal slices of A")->check(CLI::PositiveNumber);
    sb->add_option("--l", bench.spec.l, "Lateral slices of A")->check(CLI::PositiveNumber);
    sb->add_option("--n", bench.spec.n, "Frontal slices")->check(CLI::PositiveNumber);
    sb->add_option("--p", bench.spec.p, "Columns of X")->check(CLI::PositiveNumber);
    sb->add_option("--r", bench.spec.r, "Rank of each frontal slice")->check(CLI::PositiveNumber);
    sb->add_option("--kappa", bench.spec.kappa, "Condition bound of each frontal slice");
    sb->add_option("--solver", bench_solvers, "tk, tkgk, gs, tri, takshbm (comma list)");
    sb->add_option("--strategy", bench_strategy, "Row order: is, so or rr");
    sb->add_option("--tau", bench_taus, "Truncation list, e.g. 1,2,3 or inf");
    sb->add_option("--trials", bench.trials, "Independent trials")->check(CLI::PositiveNumber);
    sb->add_option("--seed", bench.seed, "Base seed");
    sb->add_option("--tol-rse", bench_tol_rse, "Stop at this relative squared error");
    sb->add_option("--tol-delta", bench.tol_delta, "Stop when the sweep displacement falls below this");
    sb->add_option("--max-epochs", bench.max_epochs, "Epoch cap");
    sb->add_option("--block-size", bench.block_size, "Block size of the momentum baseline")->check(CLI::PositiveNumber);
    sb->add_option("--threads", bench.threads, "Worker threads (0 = all cores)");
    sb->add_option("--out", bench_out, "Output directory")->required();

    // deblur
    DeblurPlan db;
    std::string truth_path, synthetic_shape, db_strategy = "so", db_tau = "5", db_out;
    std::vector<std::string> db_solvers{"gs"};
    double db_tol_rse = -1.0;
    auto* dc = app.add_subcommand("deblur", "Blur a ground-truth video and reconstruct it");
    auto* truth_opt = dc->add_option("--truth", truth_path, "Ground-truth TT3F tensor (l x p x n)");
    dc->add_option("--synthetic", synthetic_shape, "Generated video LxPxN instead of a file")->excludes(truth_opt);
    dc->add_option("--band", db.band, "Toeplitz bandwidth")->check(CLI::PositiveNumber);
    dc->add_option("--sigma", db.sigma, "Gaussian standard deviation")->check(CLI::PositiveNumber);
    dc->add_option("--solver", db_solvers, "Solvers (comma list)");
    dc->add_option("--strategy", db_strategy, "Row order: is, so or rr");
    dc->add_option("--tau", db_tau, "Truncation (integer or inf)");
    dc->add_option("--tol-rse", db_tol_rse, "Stop at this relative squared error");
    dc->add_option("--tol-delta", db.tol_delta, "Stop when the sweep displacement falls below this");
    dc->add_option("--max-epochs", db.max_epochs, "Cap in full iterations");
    dc->add_option("--block-size", db.block_size, "Block size of the momentum baseline")->check(CLI::PositiveNumber);
    dc->add_option("--seed", db.seed, "Seed");
    dc->add_option("--out", db_out, "Output directory")->required();

    // verify
    VerifyPlan vp;
    std::string scale = "tiny", fault, arnoldi_strategy = "is", report_path;
    auto* vc = app.add_subcommand("verify", "Run the invariant suite and print a JSON report");
    vc->add_option("--scale", scale, "tiny or small")->check(CLI::IsMember({"tiny", "small"}));
    vc->add_option("--inject-fault", fault, "Corrupt a quantity on purpose (negative control): gamma");
    vc->add_option("--arnoldi-strategy", arnoldi_strategy, "Row order for the Arnoldi checks: is or so");
    vc->add_option("--seed", vp.seed, "Seed");
    vc->add_option("--report", report_path, "Also write the JSON report to this file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "tkz: " << e.what() << "\n";
        return kUsage;
    }

    try {
        if (sb->parsed()) {
            bench.solvers = parse_solvers(bench_solvers);
            bench.taus = parse_taus(bench_taus);
            bench.strategy = parse_strategy_opt(bench_strategy);
            if (bench_tol_rse >= 0.0) bench.tol_rse = bench_tol_rse;
            bench.out = bench_out;
            synth_bench(bench, &out);
            out << "wrote " << bench.out.string() << "\n";
            return kOk;
        }
        if (dc->parsed()) {
            if (!truth_path.empty()) {
                db.truth = truth_path;
            } else if (!synthetic_shape.empty()) {
                parse_shape(synthetic_shape, db.video_l, db.video_p, db.video_n);
            }
            db.solvers = parse_solvers(db_solvers);
            db.strategy = parse_strategy_opt(db_strategy);
            const auto tau = Truncation::parse(db_tau);
            if (!tau) throw CLI::ValidationError("--tau", "expected a positive integer or 'inf'");
            db.tau = *tau;
            if (db_tol_rse >= 0.0) db.tol_rse = db_tol_rse;
            db.out = db_out;
            deblur(db, &out);
            out << "wrote " << db.out.string() << "\n";
            return kOk;
        }
        if (vc->parsed()) {
            vp.scale = scale == "small" ? VerifyScale::Small : VerifyScale::Tiny;
            if (!fault.empty()) vp.inject_fault = fault;
            const auto strat = parse_strategy(arnoldi_strategy);
            if (!strat) throw CLI::ValidationError("--arnoldi-strategy", "expected is or so");
            vp.arnoldi_strategy = *strat;
            const VerifyReport report = run_verify(vp);
            const std::string text = report.to_json().dump(2) + "\n";
            out << text;
            if (!report_path.empty()) write_text(report_path, text);
            if (!report.all_pass()) {
                err << "tkz verify: failing checks:";
                for (const auto& name : report.failing()) err << " " << name;
                err << "\n";
                return kFailure;
            }
            return kOk;
        }
    } catch (const CLI::ValidationError& e) {
        err << "tkz: " << e.what() << "\n";
        return kUsage;
    } catch (const IoError& e) {
        err << "tkz: " << e.what() << "\n";
        return kIo;
    } catch (const ParseError& e) {
        err << "tkz: " << e.what() << "\n";
        return kIo;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "tkz: " << e.what() << "\n";
        return kIo;
    } catch (const BreakdownError& e) {
        err << "tkz: solver breakdown: " << e.what() << "\n";
        return kFailure;
    } catch (const InconsistentSystemError& e) {
        err << "tkz: " << e.what() << "\n";
        return kFailure;
    } catch (const std::invalid_argument& e) {
        err << "tkz: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        err << "tkz: " << e.what() << "\n";
        return kFailure;
    }
    return kUsage;
}

}  // namespace tkz::cli
