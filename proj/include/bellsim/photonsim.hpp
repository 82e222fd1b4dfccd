#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "bellsim/mathutil.hpp"
#include "bellsim/rng.hpp"

namespace bellsim::photonsim {

// Entangled-pair source. The emitted state is the polarization singlet
// (|HV> - |VH>)/sqrt(2).
struct SourceParams {
    double pair_rate_hz = 1e7;
};

// Uncorrelated click rates per receiver. Side A and B match the eta_a/eta_b
// arms of RunConfig.
struct NoiseParams {
    double bkg_rate_a_hz = 0.0;
    double bkg_rate_b_hz = 0.0;
    double dark_rate_a_hz = 0.0;
    double dark_rate_b_hz = 0.0;

    double total_a_hz() const { return bkg_rate_a_hz + dark_rate_a_hz; }
    double total_b_hz() const { return bkg_rate_b_hz + dark_rate_b_hz; }
};

// Polarizer angle pairs, radians. Basis indices 1/2 select the first/second
// entry.
struct MeasurementBases {
    std::array<double, 2> alice{0.0, mathutil::deg2rad(45.0)};
    std::array<double, 2> bob{mathutil::deg2rad(-22.5), mathutil::deg2rad(22.5)};

    // Bases maximizing |S| for the singlet under the S = E11 + E12 - E21 + E22
    // combination. The optimum is S = -2*sqrt(2).
    static MeasurementBases chsh_optimal() { return MeasurementBases{}; }

    // Matched key-generation bases for entanglement-based BB84.
    static MeasurementBases qkd_key() {
        MeasurementBases b;
        b.alice = {0.0, mathutil::deg2rad(45.0)};
        b.bob = {0.0, mathutil::deg2rad(45.0)};
        return b;
    }
};

enum class Provenance : std::uint8_t { genuine, contaminated };

struct CoincidenceRecord {
    std::uint8_t alice_basis = 1;  // 1 or 2
    std::uint8_t bob_basis = 1;
    std::int8_t alice_outcome = 1;  // +1 or -1
    std::int8_t bob_outcome = 1;
    Provenance provenance = Provenance::genuine;
};

// One acquisition window. slot_duration_s <= 0 selects 1/pair_rate.
struct RunConfig {
    double t_acq_s = 1e-3;
    double eta_a = 1.0;
    double eta_b = 1.0;
    double slot_duration_s = 0.0;
    rng::StreamKey stream;
};

// Per-slot event probabilities of the slotted coincidence model, derived
// once per run. Also doubles as the closed-form bridge from hardware rates
// to the genuine-coincidence fraction.
struct SlotProbabilities {
    double slot_duration_s = 0.0;
    double p_pair = 0.0;     // pair emitted in the slot
    double p_noise_a = 0.0;  // >= 1 background/dark click on side A
    double p_noise_b = 0.0;
    double resolve_genuine_a = 0.0;  // ambiguity rule: P(side resolved genuine)
    double resolve_genuine_b = 0.0;
    double p_genuine = 0.0;      // slot yields a genuine coincidence
    double p_coincidence = 0.0;  // slot yields any coincidence

    double genuine_fraction() const {
        return p_coincidence > 0.0 ? p_genuine / p_coincidence : 0.0;
    }
};

SlotProbabilities slot_probabilities(const SourceParams& src, const NoiseParams& noise,
                                     const RunConfig& cfg);

// Joint singlet measurement outcome for polarizer angles alpha, beta:
//   P(++) = P(--) = sin^2(alpha-beta)/2, P(+-) = P(-+) = cos^2(alpha-beta)/2,
// so E[product] = -cos 2(alpha-beta).
std::pair<int, int> born_outcome(double alpha_rad, double beta_rad, rng::Stream& rng);

// One acquisition run of the slotted model. Both sides must click in the
// same slot to produce a record; sides carrying a noise or dark click (or
// resolved to one by the ambiguity rule) give uniformly random outcomes and
// mark the record contaminated. Throws std::invalid_argument when a
// per-slot, per-category expectation exceeds one.
std::vector<CoincidenceRecord> simulate_run(const SourceParams& src,
                                            const NoiseParams& noise,
                                            const MeasurementBases& bases,
                                            const RunConfig& cfg);

// Same event stream, with each coincidence routed to the key-generation
// substream with probability key_fraction and to the Bell substream
// otherwise.
struct DualRunOutput {
    std::vector<CoincidenceRecord> bell;
    std::vector<CoincidenceRecord> key;
};
DualRunOutput simulate_run_dual(const SourceParams& src, const NoiseParams& noise,
                                const MeasurementBases& bell_bases,
                                const MeasurementBases& key_bases, double key_fraction,
                                const RunConfig& cfg);

// Entanglement swapping over two independent downlinks held in memory for
// one acquisition window. Stored links are paired up to min(n1, n2); each
// pairing is swapped with success probability p_sw.
//
// heralded = true: failed swaps are discarded (record count thins by p_sw).
// heralded = false (default): a failed swap goes unnoticed and the parties
// measure an uncorrelated state, producing a contaminated record. The
// non-heralded mode is what degrades S in proportion to p_sw and drives the
// swap-probability threshold of the swapped Bell shadow.
struct SwapConfig {
    double p_sw = 1.0;
    bool heralded = false;
};
std::vector<CoincidenceRecord> simulate_swap_run(const RunConfig& link1,
                                                 const RunConfig& link2,
                                                 const SourceParams& src,
                                                 const NoiseParams& noise,
                                                 const MeasurementBases& bases,
                                                 const SwapConfig& swap);

// Fixed-size synthetic stream with an exact genuine-record probability.
// With balanced_bases each of the four basis pairs occurs exactly n/4 times
// (n must be divisible by 4), matching the equal-weight assumption of the
// analytic CHSH distribution.
std::vector<CoincidenceRecord> synthesize_records(std::size_t n, double genuine_fraction,
                                                  const MeasurementBases& bases,
                                                  rng::Stream& rng,
                                                  bool balanced_bases = false);

}  // namespace bellsim::photonsim
