#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "paygap/dataset.hpp"

namespace paygap {

struct BootstrapOptions {
    int B = 200;
    std::uint64_t seed = 1;
    int threads = 1;
    double max_failure_rate = 0.05;
};

struct BootstrapResult {
    double se = 0.0;
    int n_failures = 0;
    std::vector<double> replicates;  // successful replicate estimates, by index order
};

// Nonparametric row bootstrap: resamples rows with replacement (weights travel
// with their rows), re-runs the full procedure per replicate with a derived
// seed, and reports the standard deviation of the replicate estimates.
// Replicate failures are dropped and counted; more than max_failure_rate of B
// is an error. Results are identical under any thread count.
BootstrapResult bootstrap_se(const std::function<double(const Dataset&, std::uint64_t)>& procedure,
                             const Dataset& data, const BootstrapOptions& options);

}  // namespace paygap
