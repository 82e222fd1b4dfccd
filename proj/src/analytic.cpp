#include "bellsim/analytic.hpp"

#include <cmath>
#include <stdexcept>

#include "bellsim/mathutil.hpp"

namespace bellsim::analytic {

namespace {

void check_p1(double p1) {
    if (p1 < 0.0 || p1 > 1.0) throw std::invalid_argument("p1 must lie in [0, 1]");
}

double binom_pmf(int n, int k, double p1) {
    if (p1 == 0.0) return k == 0 ? 1.0 : 0.0;
    if (p1 == 1.0) return k == n ? 1.0 : 0.0;
    const double lp = mathutil::log_choose(n, k) + k * std::log(p1) +
                      (n - k) * std::log1p(-p1);
    return std::exp(lp);
}

// P(|S| > 2 | n detections) = P(k > 3n/4) + P(k < n/4).
double tail_given_n(double p1, int n) {
    double mass = 0.0;
    for (int k = 0; k <= n; ++k) {
        if (std::abs(4.0 * (2.0 * k - n) / n) > 2.0) mass += binom_pmf(n, k, p1);
    }
    return mass;
}

// Poisson pmf sequence p(1..n_max) by recurrence. nbar must stay below the
// exp underflow threshold (~700), which covers the intended use.
std::vector<double> poisson_pmf(double nbar, int n_max) {
    std::vector<double> pmf(n_max + 1, 0.0);
    pmf[0] = std::exp(-nbar);
    for (int n = 1; n <= n_max; ++n) pmf[n] = pmf[n - 1] * nbar / n;
    return pmf;
}

int resolve_cutoff(double nbar, int n_max) {
    return n_max > 0 ? n_max : poisson_tail_cutoff(nbar);
}

}  // namespace

double p_s_given_n(double p1, int n, double s) {
    check_p1(p1);
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    const double k_real = static_cast<double>(n) * (s + 4.0) / 8.0;
    const long k = std::lround(k_real);
    if (k < 0 || k > n) return 0.0;
    const double s_k = 4.0 * (2.0 * static_cast<double>(k) - n) / n;
    if (std::abs(s_k - s) > 1e-9) return 0.0;
    return binom_pmf(n, static_cast<int>(k), p1);
}

std::vector<SupportPoint> s_distribution(double p1, int n) {
    check_p1(p1);
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    std::vector<SupportPoint> dist;
    dist.reserve(n + 1);
    for (int k = 0; k <= n; ++k) {
        dist.push_back({4.0 * (2.0 * k - n) / n, binom_pmf(n, k, p1)});
    }
    return dist;
}

double p_s(double p1, double nbar, double s, int n_max) {
    check_p1(p1);
    if (nbar <= 0.0) throw std::invalid_argument("nbar must be > 0");
    const int cutoff = resolve_cutoff(nbar, n_max);
    const auto pois = poisson_pmf(nbar, cutoff);
    double total = 0.0;
    for (int n = 1; n <= cutoff; ++n) {
        total += pois[n] * p_s_given_n(p1, n, s);
    }
    return total;
}

double p_success(double p1, double nbar, int n_max) {
    check_p1(p1);
    if (nbar <= 0.0) throw std::invalid_argument("nbar must be > 0");
    const int cutoff = resolve_cutoff(nbar, n_max);
    const auto pois = poisson_pmf(nbar, cutoff);
    double total = 0.0;
    for (int n = 1; n <= cutoff; ++n) {
        total += pois[n] * tail_given_n(p1, n);
    }
    return total;
}

Moments s_moments(double p1, double nbar, int n_max) {
    check_p1(p1);
    if (nbar <= 0.0) throw std::invalid_argument("nbar must be > 0");
    const int cutoff = resolve_cutoff(nbar, n_max);
    const auto pois = poisson_pmf(nbar, cutoff);
    double mass = 0.0, first = 0.0, second = 0.0;
    for (int n = 1; n <= cutoff; ++n) {
        for (int k = 0; k <= n; ++k) {
            const double s = 4.0 * (2.0 * k - n) / n;
            const double w = pois[n] * binom_pmf(n, k, p1);
            mass += w;
            first += w * s;
            second += w * s * s;
        }
    }
    Moments m;
    m.mass = mass;
    if (mass > 0.0) {
        m.mean = first / mass;
        m.variance = second / mass - m.mean * m.mean;
    }
    return m;
}

double werner_chsh(double visibility) {
    if (visibility < 0.0 || visibility > 1.0)
        throw std::invalid_argument("visibility must lie in [0, 1]");
    return 2.0 * std::sqrt(2.0) * visibility;
}

double visibility_from_mixing_weight(double w) {
    if (w < 0.0 || w > 4.0)
        throw std::invalid_argument("mixing weight must lie in [0, 4]");
    return 1.0 - w / 4.0;
}

double effective_p1(double genuine_fraction) {
    if (genuine_fraction < 0.0 || genuine_fraction > 1.0)
        throw std::invalid_argument("genuine_fraction must lie in [0, 1]");
    return genuine_fraction * (2.0 + std::sqrt(2.0)) / 4.0 +
           (1.0 - genuine_fraction) * 0.5;
}

int poisson_tail_cutoff(double nbar, double tail_mass) {
    double pmf = std::exp(-nbar);
    double cum = pmf;
    int n = 0;
    while (1.0 - cum >= tail_mass && n < 100000) {
        ++n;
        pmf *= nbar / n;
        cum += pmf;
    }
    return n + 1;
}

}  // namespace bellsim::analytic
