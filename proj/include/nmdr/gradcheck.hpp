#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace nmdr::gradcheck {

struct SuiteResult {
    std::string name;
    int instances = 0;
    int64_t checked_scalars = 0;
    double max_rel_err = 0.0;
    bool ok = true;
    std::string detail;  // first failure, if any
};

// Each suite compares analytic gradients against central finite differences
// (step 1e-3) of an independent 64-bit reference evaluator, over `instances`
// random cases per operation / module.
SuiteResult check_ops(int instances, uint64_t seed);
SuiteResult check_distributions(int instances, uint64_t seed);
SuiteResult check_world_model(int instances, uint64_t seed);
SuiteResult check_policy(int instances, uint64_t seed);
SuiteResult check_discriminator(int instances, uint64_t seed);

std::vector<SuiteResult> run_all(int instances, uint64_t seed);

}  // namespace nmdr::gradcheck
