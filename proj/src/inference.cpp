#include "paygap/inference.hpp"

#include <atomic>
#include <cmath>
#include <thread>

namespace paygap {

BootstrapResult bootstrap_se(const std::function<double(const Dataset&, std::uint64_t)>& procedure,
                             const Dataset& data, const BootstrapOptions& options) {
    if (options.B < 2) throw std::invalid_argument("bootstrap: B must be >= 2");
    const std::size_t n = data.n_rows();
    const auto B = static_cast<std::size_t>(options.B);

    std::vector<double> slots(B, std::numeric_limits<double>::quiet_NaN());
    std::vector<char> ok(B, 0);

    auto run_replicate = [&](std::size_t b) {
        std::uint64_t rep_seed = mix_seed(options.seed, 0xb00257ULL, b);
        Rng rng(rep_seed);
        std::vector<std::size_t> rows(n);
        for (std::size_t i = 0; i < n; ++i) rows[i] = rng.below(n);
        try {
            slots[b] = procedure(data.subset(rows), mix_seed(rep_seed, 1));
            ok[b] = std::isfinite(slots[b]) ? 1 : 0;
        } catch (const std::exception&) {
            ok[b] = 0;
        }
    };

    int threads = std::max(1, options.threads);
    if (threads == 1) {
        for (std::size_t b = 0; b < B; ++b) run_replicate(b);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&]() {
            for (;;) {
                std::size_t b = next.fetch_add(1);
                if (b >= B) return;
                run_replicate(b);
            }
        };
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    BootstrapResult result;
    for (std::size_t b = 0; b < B; ++b) {
        if (ok[b])
            result.replicates.push_back(slots[b]);
        else
            ++result.n_failures;
    }
    if (result.n_failures > options.max_failure_rate * options.B)
        throw std::runtime_error("bootstrap: " + std::to_string(result.n_failures) + " of " +
                                 std::to_string(options.B) + " replicates failed");
    if (result.replicates.size() < 2)
        throw std::runtime_error("bootstrap: fewer than 2 successful replicates");

    double mean = 0.0;
    for (double v : result.replicates) mean += v;
    mean /= static_cast<double>(result.replicates.size());
    double s2 = 0.0;
    for (double v : result.replicates) s2 += (v - mean) * (v - mean);
    s2 /= static_cast<double>(result.replicates.size() - 1);
    result.se = std::sqrt(s2);
    return result;
}

}  // namespace paygap
