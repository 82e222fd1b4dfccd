#pragma once

#include <vector>

namespace bellsim::analytic {

// Finite-statistics CHSH distribution for a run of n detected pairs, with a
// single sign-adjusted probability p1 of a +1 contribution per pair and each
// basis pair weighted equally.
//
// Attainable values are S = 4(k - l)/n with k + l = n; then
// P(S, n) = C(n, k) p1^k (1 - p1)^(n - k), and 0 for off-lattice S.
// Any n >= 1 is accepted: the distribution depends only on (k, l), so the
// divisibility-by-4 assumption can be relaxed.
double p_s_given_n(double p1, int n, double s);

// Full support of P(S, n): (s_k, P(S = s_k)) for k = 0..n.
struct SupportPoint {
    double s;
    double prob;
};
std::vector<SupportPoint> s_distribution(double p1, int n);

// Poisson mixture over the detected-pair count:
// P(S) = sum_{n>=1} Poisson(n; nbar) P(S, n). n_max <= 0 selects a cutoff
// with Poisson tail mass below 1e-12.
double p_s(double p1, double nbar, double s, int n_max = 0);

// Total probability mass with |S| > 2. Runs with zero detections count as
// failures.
double p_success(double p1, double nbar, int n_max = 0);

// Mean/variance of S conditional on at least one detection.
struct Moments {
    double mean = 0.0;
    double variance = 0.0;
    double mass = 0.0;  // 1 - Poisson(0; nbar)
};
Moments s_moments(double p1, double nbar, int n_max = 0);

// |S| for a Werner state rho = v |psi><psi| + (1 - v) I/4: |S| = 2 sqrt(2) v.
double werner_chsh(double visibility);

// Visibility of rho(w) = (1 - w/4)|psi><psi| + (w/4) I/4.
double visibility_from_mixing_weight(double w);

// Bridge from a coincidence stream that is genuine with fraction f (singlet,
// optimal bases, sign-adjusted) and uniformly random otherwise:
// p1 = f (2 + sqrt(2))/4 + (1 - f)/2.
double effective_p1(double genuine_fraction);

// Smallest cutoff with Poisson(> n_max; nbar) below tail_mass.
int poisson_tail_cutoff(double nbar, double tail_mass = 1e-12);

}  // namespace bellsim::analytic
