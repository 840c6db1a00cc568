#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli.hpp"
#include "tkz/bench.hpp"
#include "tkz/io.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out, err;
};

Outcome run(std::vector<std::string> args) {
    args.insert(args.begin(), "tkz");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = tkz::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Drops the elapsed_s column.
std::string strip_timing(const std::string& csv) {
    std::stringstream in(csv);
    std::string out;
    for (std::string line; std::getline(in, line);) out += line.substr(0, line.rfind(',')) + "\n";
    return out;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("tkz_cli_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("percentiles interpolate linearly") {
    CHECK(tkz::percentile({4, 1, 3, 2}, 0.5) == doctest::Approx(2.5));
    CHECK(tkz::percentile({1, 2, 3, 4, 5}, 0.25) == doctest::Approx(2.0));
    CHECK(tkz::percentile({10}, 0.75) == 10.0);
    const auto s = tkz::summarize({1, 2, 3, 4});
    CHECK(s["min"] == 1.0);
    CHECK(s["max"] == 4.0);
    CHECK(s["p75"] == doctest::Approx(3.25));
}

TEST_CASE("usage errors exit with 2") {
    CHECK(run({}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({"synth-bench", "--out", "/tmp/x", "--solver", "cg"}).code == 2);
    CHECK(run({"synth-bench", "--out", "/tmp/x", "--tau", "0"}).code == 2);
    CHECK(run({"synth-bench", "--out", "/tmp/x", "--strategy", "zz"}).code == 2);
    CHECK(run({"synth-bench"}).code == 2);
    CHECK(run({"verify", "--scale", "huge"}).code == 2);
    CHECK(run({"verify", "--inject-fault", "nothing"}).code == 2);
    CHECK(run({"deblur", "--synthetic", "8x8", "--out", "/tmp/x"}).code == 2);
    CHECK(run({"--help"}).code == 0);
}

TEST_CASE("verify passes, detects an injected fault and refuses random reshuffling") {
    const Outcome ok = run({"verify", "--seed", "4"});
    CHECK(ok.code == 0);
    const auto report = nlohmann::json::parse(ok.out);
    CHECK(report["pass"] == true);
    CHECK(report["checks"].size() > 10);
    for (const auto& c : report["checks"]) {
        CHECK(c.contains("name"));
        CHECK(c.contains("value"));
        CHECK(c.contains("threshold"));
        CHECK(c.contains("pass"));
    }

    const Outcome bad = run({"verify", "--seed", "4", "--inject-fault", "gamma"});
    CHECK(bad.code == 1);
    CHECK(bad.err.find("solver.pythagoras") != std::string::npos);

    const Outcome rr = run({"verify", "--arnoldi-strategy", "rr"});
    CHECK(rr.code == 2);
    CHECK(rr.err.find("fixed row order") != std::string::npos);
}

TEST_CASE("synth-bench with a zero epoch cap writes one row with RSE 1") {
    const fs::path dir = scratch("zero");
    const Outcome o = run({"synth-bench", "--m", "8", "--l", "5", "--n", "2", "--p", "2", "--r", "5", "--trials",
                           "1", "--max-epochs", "0", "--out", dir.string()});
    REQUIRE(o.code == 0);
    const std::string csv = slurp(dir / "trace_gs_tau5_so_trial0.csv");
    std::stringstream ss(csv);
    std::string header, row, extra;
    std::getline(ss, header);
    std::getline(ss, row);
    CHECK(header == tkz::kTraceHeader);
    CHECK(row.rfind("0,1,,,", 0) == 0);
    CHECK_FALSE(std::getline(ss, extra));

    const auto agg = nlohmann::json::parse(slurp(dir / "aggregate.json"));
    CHECK(agg["configs"][0]["epochs"]["median"] == 0.0);
    const auto runs = nlohmann::json::parse(slurp(dir / "runs.json"));
    for (const char* key : {"solver", "strategy", "tau", "epochs", "rse_final", "wall_s", "seed"}) {
        CHECK(runs[0].contains(key));
    }
    fs::remove_all(dir);
}

TEST_CASE("synth-bench output is reproducible apart from timings") {
    const fs::path a = scratch("det_a"), b = scratch("det_b");
    const std::vector<std::string> common{"synth-bench", "--m", "12", "--l", "8", "--n", "2", "--p", "3", "--r",
                                          "8", "--solver", "tk,gs,tri,takshbm", "--strategy", "rr", "--tau", "1,3",
                                          "--trials", "2", "--seed", "5", "--max-epochs", "15"};
    auto args_a = common, args_b = common;
    args_a.insert(args_a.end(), {"--out", a.string()});
    args_b.insert(args_b.end(), {"--out", b.string(), "--threads", "3"});
    REQUIRE(run(args_a).code == 0);
    REQUIRE(run(args_b).code == 0);
    std::size_t compared = 0;
    for (const auto& entry : fs::directory_iterator(a)) {
        if (entry.path().extension() != ".csv") continue;
        CHECK(strip_timing(slurp(entry.path())) == strip_timing(slurp(b / entry.path().filename())));
        ++compared;
    }
    CHECK(compared == 2 * 6);
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("deblur writes reconstruction, PSNR and trace files") {
    const fs::path dir = scratch("deblur");
    const Outcome o = run({"deblur", "--synthetic", "12x10x4", "--solver", "gs,takshbm", "--tol-rse", "1e-2",
                           "--max-epochs", "100", "--out", dir.string()});
    REQUIRE(o.code == 0);
    const tkz::Tensor3 x = tkz::read_tensor(dir / "gs_reconstruction.tt3f");
    CHECK(x.rows() == 12);
    CHECK(x.cols() == 10);
    CHECK(x.depth() == 4);
    CHECK(slurp(dir / "gs_psnr.csv").rfind("frame,psnr\n", 0) == 0);
    CHECK(slurp(dir / "takshbm_trace.csv").rfind(tkz::kTraceHeader, 0) == 0);
    const auto summary = nlohmann::json::parse(slurp(dir / "deblur_summary.json"));
    CHECK(summary["runs"].size() == 2);
    CHECK(summary["runs"][0]["mean_psnr"].get<double>() >= summary["observed_mean_psnr"].get<double>());
    fs::remove_all(dir);
}

TEST_CASE("deblur with a truth file, and I/O failures exit with 3") {
    const fs::path dir = scratch("truth");
    fs::create_directories(dir);
    const tkz::Tensor3 truth = tkz::gen_video(10, 6, 3, 1);
    tkz::write_tensor(dir / "truth.tt3f", truth);
    CHECK(run({"deblur", "--truth", (dir / "truth.tt3f").string(), "--max-epochs", "5", "--out",
               (dir / "out").string()})
              .code == 0);

    CHECK(run({"deblur", "--truth", (dir / "missing.tt3f").string(), "--out", (dir / "out").string()}).code == 3);
    std::ofstream(dir / "garbage.tt3f") << "not a tensor";
    CHECK(run({"deblur", "--truth", (dir / "garbage.tt3f").string(), "--out", (dir / "out").string()}).code == 3);
    fs::remove_all(dir);
}

TEST_CASE("deblur with the identity operator converges in one epoch") {
    // band = 1 and depth 1 make the blur a scaled identity.
    tkz::DeblurPlan plan;
    plan.video_l = 8;
    plan.video_p = 5;
    plan.video_n = 1;
    plan.seed = 2;
    plan.band = 1;
    plan.solvers = {tkz::SolverKind::Kaczmarz};
    plan.max_epochs = 10;
    const auto rep = tkz::deblur(plan);
    CHECK(rep.runs[0].steps == 1);
    CHECK(rep.runs[0].rse_final < 1e-20);
}
