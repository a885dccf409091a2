#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vsr/train.hpp"

namespace vsr {

enum class InjectedFault { None, ConcatOrder, BiasGrad };

InjectedFault injected_fault_from_string(const std::string& name);

struct VerifyOptions {
    Precision precision = Precision::Float32;
    InjectedFault fault = InjectedFault::None;
    std::uint64_t seed = 0;
    int oracleConfigs = 50;
};

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

std::vector<CheckResult> parameter_count_checks();
std::vector<CheckResult> gradient_checks(const VerifyOptions& options);
std::vector<CheckResult> conv_oracle_checks(const VerifyOptions& options);
std::vector<CheckResult> network_oracle_checks(const VerifyOptions& options);
std::vector<CheckResult> pixel_shuffle_checks(std::uint64_t seed);
std::vector<CheckResult> replacement_checks();

// Everything above, in that order.
std::vector<CheckResult> run_self_checks(const VerifyOptions& options);

}  // namespace vsr
