#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <thread>
#include <vector>

#include "wva/errors.hpp"
#include "wva/hypothesis_testing.hpp"
#include "wva/postselection_loss.hpp"
#include "wva/probe_distributions.hpp"
#include "wva/rng.hpp"
#include "wva/two_state.hpp"

// Sampling oracle.  Draws pointer outcomes from the exact physical model by
// rejection sampling and estimates every closed-form probability empirically.
// Batches are bit-reproducible: trials are generated in fixed-size shards,
// each from an RNG stream derived from (seed, shard index), so the result is
// independent of the number of worker threads.

namespace wva {

struct SampleBatch {
    std::uint64_t seed = 0;
    std::size_t n = 0;
    bool full_process = false;  // success flags meaningful only when true
    // Generation parameters, kept so estimators know which hypothesis the
    // batch was drawn under.
    double g = 0.0;
    double sigma = 1.0;
    double s = 0.0;
    std::vector<std::uint8_t> success;  // per trial; all 1 when !full_process
    std::vector<double> x;              // per trial pointer outcome
    double acceptance_rate = 1.0;       // accepted / proposed in the sampler
};

namespace mc_detail {

inline constexpr std::size_t kShardSize = 1 << 15;

// One standard normal via Box-Muller (cosine half; the spare is discarded
// for a fixed per-draw uniform budget).
inline double standard_normal(SplitMix64& rng) {
    const double u1 = rng.uniform_pos();
    const double u2 = rng.uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi_v<double> * u2);
}

struct RejectionCounts {
    std::uint64_t proposed = 0;
    std::uint64_t accepted = 0;
};

// Draw one x from the signed three-Gaussian mixture by rejection against
// the absolute-weight envelope.  Valid because the signed interference term
// can only lower the density below the envelope mixture.
inline double sample_mix(const detail::GaussianMix& m, SplitMix64& rng,
                         RejectionCounts& counts) {
    const double a_plus = std::abs(m.w_plus);
    const double a_minus = std::abs(m.w_minus);
    const double a_zero = std::abs(m.w_zero);
    const double a_total = a_plus + a_minus + a_zero;
    const double sd = std::sqrt(m.var);

    for (;;) {
        ++counts.proposed;
        const double u = rng.uniform() * a_total;
        double mean = 0.0;
        if (u < a_plus)
            mean = m.g;
        else if (u < a_plus + a_minus)
            mean = -m.g;
        const double x = mean + sd * standard_normal(rng);

        const double gp = gauss_pdf(x, m.g, m.var);
        const double gm = gauss_pdf(x, -m.g, m.var);
        const double g0 = gauss_pdf(x, 0.0, m.var);
        const double target = m.w_plus * gp + m.w_minus * gm + m.w_zero * g0;
        const double envelope = a_plus * gp + a_minus * gm + a_zero * g0;
        if (target > envelope * (1.0 + 1e-12))
            throw EnvelopeViolation(
                "sample_mix: density exceeded its envelope");
        if (rng.uniform() * envelope <= target) {
            ++counts.accepted;
            return x;
        }
    }
}

// Generate trials [begin, end) of a batch, one RNG stream per shard.
template <class PerTrial>
void run_sharded(std::size_t n, std::uint64_t seed, unsigned threads,
                 RejectionCounts& counts, PerTrial&& per_trial) {
    const std::size_t num_shards = (n + kShardSize - 1) / kShardSize;
    std::vector<RejectionCounts> shard_counts(num_shards);

    auto run_shard = [&](std::size_t shard) {
        SplitMix64 rng(stream_seed(seed, shard));
        const std::size_t lo = shard * kShardSize;
        const std::size_t hi = std::min(n, lo + kShardSize);
        for (std::size_t i = lo; i < hi; ++i)
            per_trial(i, rng, shard_counts[shard]);
    };

    unsigned workers = threads == 0
                           ? std::min(8u, std::max(
                                              1u,
                                              std::thread::hardware_concurrency()))
                           : threads;
    workers = static_cast<unsigned>(
        std::min<std::size_t>(workers, num_shards));

    if (workers <= 1) {
        for (std::size_t shard = 0; shard < num_shards; ++shard)
            run_shard(shard);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (std::size_t shard = w; shard < num_shards;
                     shard += workers)
                    run_shard(shard);
            });
        for (auto& t : pool) t.join();
    }

    for (const auto& sc : shard_counts) {  // order-independent integer merge
        counts.proposed += sc.proposed;
        counts.accepted += sc.accepted;
    }
}

}  // namespace mc_detail

// Draw n outcomes from the postselected pointer density.
inline SampleBatch sample_postselected(const MeasurementSetup& setup,
                                       const NoiseModel& noise, std::size_t n,
                                       std::uint64_t seed,
                                       unsigned threads = 0) {
    if (n < 1) throw EmptyBatch("sample_postselected: n must be >= 1");
    const auto mix = detail::mix_postselected(setup, noise);

    SampleBatch batch;
    batch.seed = seed;
    batch.n = n;
    batch.full_process = false;
    batch.g = setup.g;
    batch.sigma = setup.sigma;
    batch.s = noise.s;
    batch.success.assign(n, 1);
    batch.x.resize(n);

    mc_detail::RejectionCounts counts;
    mc_detail::run_sharded(
        n, seed, threads, counts,
        [&](std::size_t i, SplitMix64& rng,
            mc_detail::RejectionCounts& c) {
            batch.x[i] = mc_detail::sample_mix(mix, rng, c);
        });
    batch.acceptance_rate =
        static_cast<double>(counts.accepted) /
        static_cast<double>(std::max<std::uint64_t>(1, counts.proposed));
    return batch;
}

// Simulate the full experiment: per trial, postselection succeeds with the
// closed-form probability; the pointer is then drawn from the corresponding
// branch density (f on success, its orthogonal complement on failure).
inline SampleBatch sample_full_process(const MeasurementSetup& setup,
                                       const NoiseModel& noise, std::size_t n,
                                       std::uint64_t seed,
                                       unsigned threads = 0) {
    if (n < 1) throw EmptyBatch("sample_full_process: n must be >= 1");
    const double p_succ = success_probability(setup);
    const auto mix_s = detail::mix_postselected(setup, noise);
    const auto mix_f = detail::mix_failure(setup, noise);
    const bool failure_possible = mix_f.total > 1e-300;

    SampleBatch batch;
    batch.seed = seed;
    batch.n = n;
    batch.full_process = true;
    batch.g = setup.g;
    batch.sigma = setup.sigma;
    batch.s = noise.s;
    batch.success.resize(n);
    batch.x.resize(n);

    mc_detail::RejectionCounts counts;
    mc_detail::run_sharded(
        n, seed, threads, counts,
        [&](std::size_t i, SplitMix64& rng,
            mc_detail::RejectionCounts& c) {
            const bool ok = rng.uniform() < p_succ || !failure_possible;
            batch.success[i] = ok ? 1 : 0;
            batch.x[i] = mc_detail::sample_mix(ok ? mix_s : mix_f, rng, c);
        });
    batch.acceptance_rate =
        static_cast<double>(counts.accepted) /
        static_cast<double>(std::max<std::uint64_t>(1, counts.proposed));
    return batch;
}

struct ErrorEstimate {
    double value = 0.0;       // empirical error frequency
    double half_width = 0.0;  // 4 sqrt(p(1-p)/n), p the empirical frequency
    bool is_type1 = false;    // batch drawn under the null (g = 0)
    std::size_t n = 0;
};

namespace mc_detail {

inline ErrorEstimate freq_to_estimate(std::size_t wrong, std::size_t n,
                                      bool is_type1) {
    ErrorEstimate est;
    est.n = n;
    est.is_type1 = is_type1;
    est.value = static_cast<double>(wrong) / static_cast<double>(n);
    est.half_width =
        4.0 * std::sqrt(est.value * (1.0 - est.value) /
                        static_cast<double>(n));
    return est;
}

}  // namespace mc_detail

// Error frequency of the plain |x|/sigma rule over the batch.  Every trial's
// x is used regardless of flags: on a postselected batch this estimates the
// postselected-mode error, on a full-process batch the marginal over both
// branches is exactly the no-postselection density, so it estimates the
// unconditioned error.  Type-1 vs type-2 follows from the coupling the batch
// was drawn under.
inline ErrorEstimate empirical_errors(const SampleBatch& batch,
                                      const DecisionRule& rule, double sigma) {
    if (batch.n == 0 || batch.x.empty())
        throw EmptyBatch("empirical_errors: batch has no trials");
    const bool is_type1 = batch.g == 0.0;
    std::size_t wrong = 0;
    for (double x : batch.x) {
        const Decision d = decide(x, sigma, rule, 0.0);
        const bool rejected = d == Decision::reject_null;
        wrong += (is_type1 ? rejected : !rejected) ? 1 : 0;
    }
    return mc_detail::freq_to_estimate(wrong, batch.n, is_type1);
}

// Error frequency of the revised (loss-accounting) rule; needs the
// postselection flags, so the batch must come from sample_full_process.
inline ErrorEstimate empirical_errors(const SampleBatch& batch,
                                      const LossDecisionRule& rule,
                                      double sigma) {
    if (batch.n == 0 || batch.x.empty())
        throw EmptyBatch("empirical_errors: batch has no trials");
    if (!batch.full_process)
        throw std::invalid_argument(
            "empirical_errors: the loss rule needs a full-process batch");
    const bool is_type1 = batch.g == 0.0;
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < batch.n; ++i) {
        const Decision d =
            decide(batch.success[i] != 0, batch.x[i], sigma, rule, 0.0);
        const bool rejected = d == Decision::reject_null;
        wrong += (is_type1 ? rejected : !rejected) ? 1 : 0;
    }
    return mc_detail::freq_to_estimate(wrong, batch.n, is_type1);
}

}  // namespace wva
