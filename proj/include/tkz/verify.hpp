#pragma once

// The invariant suite behind `tkz verify`.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tkz/sampling.hpp"

namespace tkz {

enum class VerifyScale { Tiny, Small };

struct VerifyPlan {
    VerifyScale scale = VerifyScale::Tiny;
    std::uint64_t seed = 0;
    /// "gamma" corrupts the in-sweep residual norm (and with it gamma) before checks.
    std::optional<std::string> inject_fault;
    /// Row order for the Arnoldi checks; random reshuffling is refused.
    Strategy arnoldi_strategy = Strategy::Incremental;
};

struct CheckResult {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

struct VerifyReport {
    std::vector<CheckResult> checks;
    bool all_pass() const;
    std::vector<std::string> failing() const;
    nlohmann::json to_json() const;
};

inline constexpr const char* kKnownFaults[] = {"gamma"};

/// Throws std::invalid_argument for an unknown fault or a refused strategy.
VerifyReport run_verify(const VerifyPlan& plan);

}  // namespace tkz
