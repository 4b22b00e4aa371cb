#ifndef DIRICHLET_MC_RNG_HPP
#define DIRICHLET_MC_RNG_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

namespace dmc {

//! Counter-based stream generator (Philox4x32-10, Salmon et al. 2011).
//!
//! A stream is identified by (seed, worker, index).  The seed forms the
//! cipher key and (worker, index) occupy the high counter words, so distinct
//! stream ids walk provably disjoint counter ranges of one keyed permutation:
//! equal ids replay bit-identical sequences, distinct ids are independent
//! regardless of how many values each stream consumes.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint32_t worker, std::uint32_t index)
        : key0_(static_cast<std::uint32_t>(seed)),
          key1_(static_cast<std::uint32_t>(seed >> 32)),
          worker_(worker),
          index_(index) {}

    std::uint64_t seed() const {
        return key0_ | (static_cast<std::uint64_t>(key1_) << 32);
    }
    std::uint32_t worker() const { return worker_; }
    std::uint32_t index() const { return index_; }

    //! Next 64 uniformly random bits.
    std::uint64_t next_u64() {
        if (buffered_ == 0) refill();
        --buffered_;
        return buf_[buffered_];
    }

    //! Uniform draw in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    //! Uniform draw in (0, 1]; safe as a log argument.
    double uniform_pos() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    //! Standard normal draw (Box-Muller, pairs cached).
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        const double u1 = uniform_pos();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 6.283185307179586476925286766559 * u2;
        cached_ = radius * std::sin(angle);
        have_cached_ = true;
        return radius * std::cos(angle);
    }

    //! Poisson draw with the given mean (exact; mean split into chunks so the
    //! multiplicative method never underflows).
    std::uint64_t poisson(double mean) {
        if (!(mean >= 0.0)) throw std::invalid_argument("poisson: mean must be >= 0");
        std::uint64_t total = 0;
        while (mean > 16.0) {
            total += poisson_small(16.0);
            mean -= 16.0;
        }
        return total + poisson_small(mean);
    }

private:
    std::uint64_t poisson_small(double mean) {
        if (mean <= 0.0) return 0;
        const double limit = std::exp(-mean);
        std::uint64_t k = 0;
        double product = 1.0;
        do {
            ++k;
            product *= uniform_pos();
        } while (product > limit);
        return k - 1;
    }

    void refill() {
        std::uint32_t c0 = static_cast<std::uint32_t>(block_);
        std::uint32_t c1 = static_cast<std::uint32_t>(block_ >> 32);
        std::uint32_t c2 = index_;
        std::uint32_t c3 = worker_;
        std::uint32_t k0 = key0_;
        std::uint32_t k1 = key1_;
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = 0xD2511F53ull * c0;
            const std::uint64_t p1 = 0xCD9E8D57ull * c2;
            const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
            const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
            c0 = hi1 ^ c1 ^ k0;
            c1 = lo1;
            c2 = hi0 ^ c3 ^ k1;
            c3 = lo0;
            k0 += 0x9E3779B9u;
            k1 += 0xBB67AE85u;
        }
        buf_[0] = c0 | (static_cast<std::uint64_t>(c1) << 32);
        buf_[1] = c2 | (static_cast<std::uint64_t>(c3) << 32);
        buffered_ = 2;
        ++block_;
    }

    std::uint32_t key0_, key1_, worker_, index_;
    std::uint64_t block_ = 0;
    std::uint64_t buf_[2] = {0, 0};
    int buffered_ = 0;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

//! Deterministic, collision-free mapping of (seed, worker, index) to a stream.
inline RngStream derive_substream(std::uint64_t seed, std::uint32_t worker,
                                  std::uint32_t index) {
    return RngStream(seed, worker, index);
}

//! Inverse standard normal CDF (Acklam's rational approximation polished with
//! one Halley step through erfc; relative error below 1e-14 on (0,1)).
inline double inverse_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::domain_error("inverse_normal_cdf: p must lie in (0,1)");
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // Halley refinement against the exact CDF.
    const double e = 0.5 * std::erfc(-x / 1.4142135623730950488) - p;
    const double u = e * 2.5066282746310002 * std::exp(0.5 * x * x);
    x = x - u / (1.0 + 0.5 * x * u);
    return x;
}

} // namespace dmc

#endif
