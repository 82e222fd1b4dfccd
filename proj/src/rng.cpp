#include "bellsim/rng.hpp"

#include <cmath>

#include "bellsim/mathutil.hpp"

namespace bellsim::rng {

std::uint64_t geometric_skip(Stream& rng, double p, std::uint64_t remaining) {
    if (p >= 1.0) return 0;
    if (p <= 0.0) return remaining + 1;
    const double u = rng.next_double();
    const double ratio = std::log1p(-u) / std::log1p(-p);
    if (!(ratio < static_cast<double>(remaining) + 1.0)) return remaining + 1;
    return static_cast<std::uint64_t>(ratio);
}

namespace {

double log_binom_pmf(std::uint64_t n, std::uint64_t k, double p, double q) {
    const double nd = static_cast<double>(n);
    const double kd = static_cast<double>(k);
    return mathutil::log_choose(nd, kd) + kd * std::log(p) + (nd - kd) * std::log(q);
}

std::uint64_t binomial_by_counting(Stream& rng, std::uint64_t n, double p) {
    std::uint64_t count = 0;
    std::uint64_t pos = 0;
    while (pos < n) {
        const std::uint64_t skip = geometric_skip(rng, p, n - pos);
        if (skip >= n - pos) break;
        pos += skip + 1;
        ++count;
    }
    return count;
}

// Inversion starting at the mode, expanding outward. Expected number of
// steps is O(sqrt(n p q)).
std::uint64_t binomial_by_inversion(Stream& rng, std::uint64_t n, double p) {
    const double q = 1.0 - p;
    const std::uint64_t mode =
        static_cast<std::uint64_t>((static_cast<double>(n) + 1.0) * p);
    const double u = rng.next_double();
    double f_mode = std::exp(log_binom_pmf(n, mode, p, q));
    double cum = f_mode;
    if (u < cum) return mode;
    double f_hi = f_mode;
    double f_lo = f_mode;
    std::uint64_t k_hi = mode;
    std::uint64_t k_lo = mode;
    while (k_lo > 0 || k_hi < n) {
        if (k_hi < n) {
            f_hi *= (static_cast<double>(n - k_hi) / static_cast<double>(k_hi + 1)) * (p / q);
            ++k_hi;
            cum += f_hi;
            if (u < cum) return k_hi;
        }
        if (k_lo > 0) {
            f_lo *= (static_cast<double>(k_lo) / static_cast<double>(n - k_lo + 1)) * (q / p);
            --k_lo;
            cum += f_lo;
            if (u < cum) return k_lo;
        }
    }
    return mode;  // u fell in the rounding tail
}

}  // namespace

std::uint64_t binomial(Stream& rng, std::uint64_t n, double p) {
    if (n == 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    const double np_min = static_cast<double>(n) * std::min(p, 1.0 - p);
    if (np_min < 30.0) {
        if (p <= 0.5) return binomial_by_counting(rng, n, p);
        return n - binomial_by_counting(rng, n, 1.0 - p);
    }
    return binomial_by_inversion(rng, n, p);
}

}  // namespace bellsim::rng
