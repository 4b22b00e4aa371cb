#ifndef DIRICHLET_MC_SAMPLING_HPP
#define DIRICHLET_MC_SAMPLING_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <thread>
#include <vector>

#include "core.hpp"
#include "rng.hpp"

namespace dmc {

//! Deterministic pairwise sum; the reduction tree depends only on the length,
//! never on worker count.
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 32) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

struct MeanStderr {
    double mean = 0.0;
    double se = 0.0;
};

inline MeanStderr mean_and_se(std::span<const double> v) {
    const double n = static_cast<double>(v.size());
    const double mean = pairwise_sum(v) / n;
    std::vector<double> sq(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double d = v[i] - mean;
        sq[i] = d * d;
    }
    const double var = v.size() > 1 ? pairwise_sum(sq) / (n - 1.0) : 0.0;
    return {mean, std::sqrt(var / n)};
}

//! Sample variance with its standard error (via the fourth central moment).
struct VarianceEstimate {
    double value = 0.0;
    double se = 0.0;
};

inline VarianceEstimate variance_and_se(std::span<const double> v) {
    const double n = static_cast<double>(v.size());
    if (v.size() < 2) return {};
    const double mean = pairwise_sum(v) / n;
    std::vector<double> m2(v.size()), m4(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double d = v[i] - mean;
        m2[i] = d * d;
        m4[i] = d * d * d * d;
    }
    const double s2 = pairwise_sum(m2) / (n - 1.0);
    const double mu4 = pairwise_sum(m4) / n;
    const double var_of_var = (mu4 - s2 * s2 * (n - 3.0) / (n - 1.0)) / n;
    return {s2, std::sqrt(std::max(0.0, var_of_var))};
}

namespace detail {

//! Chunked parallel index loop.  Each index does its own substream
//! derivation, so the produced content is identical for every worker count.
template <class Fn>
void parallel_for(std::size_t count, unsigned workers, Fn&& fn) {
    if (workers <= 1 || count < 2048) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (count + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(count, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace detail

//! Batch of scalar triplet draws; draw i uses substream (seed, job, i).
inline std::vector<ScalarTriplet> sample_batch(const StructureProvider& provider,
                                               std::size_t count, std::uint64_t seed,
                                               std::uint32_t job, unsigned workers = 1) {
    std::vector<ScalarTriplet> out(count);
    detail::parallel_for(count, workers, [&](std::size_t i) {
        RngStream rng = derive_substream(seed, job, static_cast<std::uint32_t>(i));
        out[i] = provider.sample_scalar(rng);
    });
    return out;
}

inline std::vector<TripletSample> sample_batch_triplet(const StructureProvider& provider,
                                                       std::size_t count,
                                                       std::uint64_t seed,
                                                       std::uint32_t job,
                                                       unsigned workers = 1) {
    std::vector<TripletSample> out(count);
    detail::parallel_for(count, workers, [&](std::size_t i) {
        RngStream rng = derive_substream(seed, job, static_cast<std::uint32_t>(i));
        out[i] = provider.sample_triplet(rng);
    });
    return out;
}

//! Batch of extended draws, optionally attaching a payload G = phi(X).
inline std::vector<ExtendedSample> sample_batch_extended(
    const StructureProvider& provider, std::size_t count, std::uint64_t seed,
    std::uint32_t job, unsigned workers = 1,
    const std::function<double(double)>& phi = nullptr,
    const std::function<double(double)>& phi_x = nullptr) {
    std::vector<ExtendedSample> out(count);
    detail::parallel_for(count, workers, [&](std::size_t i) {
        RngStream rng = derive_substream(seed, job, static_cast<std::uint32_t>(i));
        out[i] = provider.sample_extended(rng);
        if (phi) attach_payload(out[i], phi, phi_x);
    });
    return out;
}

} // namespace dmc

#endif
