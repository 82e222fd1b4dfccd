#include "bellsim/photonsim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bellsim::photonsim {

namespace {

double resolve_slot_duration(const SourceParams& src, const RunConfig& cfg) {
    if (cfg.slot_duration_s > 0.0) return cfg.slot_duration_s;
    if (src.pair_rate_hz <= 0.0)
        throw std::invalid_argument("slot_duration must be given when pair_rate is 0");
    return 1.0 / src.pair_rate_hz;
}

void validate(const SourceParams& src, const NoiseParams& noise, const RunConfig& cfg,
              double dt) {
    if (src.pair_rate_hz < 0.0) throw std::invalid_argument("pair_rate must be >= 0");
    if (cfg.t_acq_s <= 0.0) throw std::invalid_argument("t_acq must be > 0");
    if (dt > cfg.t_acq_s) throw std::invalid_argument("slot_duration exceeds t_acq");
    const double eps = 1e-12;
    if (src.pair_rate_hz * dt > 1.0 + eps)
        throw std::invalid_argument("slot too coarse: expected pairs per slot > 1");
    for (double r : {noise.bkg_rate_a_hz, noise.bkg_rate_b_hz, noise.dark_rate_a_hz,
                     noise.dark_rate_b_hz}) {
        if (r < 0.0) throw std::invalid_argument("noise rates must be >= 0");
        if (r * dt > 1.0 + eps)
            throw std::invalid_argument("slot too coarse: expected noise clicks per slot > 1");
    }
    if (cfg.eta_a < 0.0 || cfg.eta_a > 1.0 || cfg.eta_b < 0.0 || cfg.eta_b > 1.0)
        throw std::invalid_argument("eta must lie in [0, 1]");
}

std::uint64_t slot_count(const RunConfig& cfg, double dt) {
    return static_cast<std::uint64_t>(std::llround(cfg.t_acq_s / dt));
}

// P(side resolved genuine | pair emitted) and P(side resolved noise | pair
// emitted). A side with both a genuine arm and a noise click is resolved by
// the expected-rate ratio.
struct SideProbs {
    double genuine_given_pair;
    double noise_given_pair;
};

SideProbs side_probs(double eta, double p_noise, double resolve_genuine) {
    SideProbs s;
    s.genuine_given_pair = eta * (1.0 - p_noise * (1.0 - resolve_genuine));
    s.noise_given_pair = (1.0 - eta) * p_noise + eta * p_noise * (1.0 - resolve_genuine);
    return s;
}

void random_pair_outcome(CoincidenceRecord& rec, rng::Stream& rng) {
    rec.alice_outcome = rng.uniform_index(2) ? 1 : -1;
    rec.bob_outcome = rng.uniform_index(2) ? 1 : -1;
}

void fill_bases(CoincidenceRecord& rec, rng::Stream& rng) {
    rec.alice_basis = static_cast<std::uint8_t>(1 + rng.uniform_index(2));
    rec.bob_basis = static_cast<std::uint8_t>(1 + rng.uniform_index(2));
}

void fill_outcomes(CoincidenceRecord& rec, const MeasurementBases& bases, bool genuine,
                   rng::Stream& rng) {
    if (genuine) {
        rec.provenance = Provenance::genuine;
        auto [a, b] = born_outcome(bases.alice[rec.alice_basis - 1],
                                   bases.bob[rec.bob_basis - 1], rng);
        rec.alice_outcome = static_cast<std::int8_t>(a);
        rec.bob_outcome = static_cast<std::int8_t>(b);
    } else {
        rec.provenance = Provenance::contaminated;
        random_pair_outcome(rec, rng);
    }
}

}  // namespace

SlotProbabilities slot_probabilities(const SourceParams& src, const NoiseParams& noise,
                                     const RunConfig& cfg) {
    const double dt = resolve_slot_duration(src, cfg);
    SlotProbabilities p;
    p.slot_duration_s = dt;
    p.p_pair = std::min(src.pair_rate_hz * dt, 1.0);
    const double p_bkg_a = noise.bkg_rate_a_hz * dt;
    const double p_bkg_b = noise.bkg_rate_b_hz * dt;
    const double p_dark_a = noise.dark_rate_a_hz * dt;
    const double p_dark_b = noise.dark_rate_b_hz * dt;
    p.p_noise_a = 1.0 - (1.0 - p_bkg_a) * (1.0 - p_dark_a);
    p.p_noise_b = 1.0 - (1.0 - p_bkg_b) * (1.0 - p_dark_b);

    // Expected genuine vs expected total clicks per slot, per side.
    const double exp_gen_a = p.p_pair * cfg.eta_a;
    const double exp_gen_b = p.p_pair * cfg.eta_b;
    const double exp_noise_a = noise.total_a_hz() * dt;
    const double exp_noise_b = noise.total_b_hz() * dt;
    p.resolve_genuine_a =
        exp_gen_a > 0.0 ? exp_gen_a / (exp_gen_a + exp_noise_a) : 0.0;
    p.resolve_genuine_b =
        exp_gen_b > 0.0 ? exp_gen_b / (exp_gen_b + exp_noise_b) : 0.0;

    const SideProbs a = side_probs(cfg.eta_a, p.p_noise_a, p.resolve_genuine_a);
    const SideProbs b = side_probs(cfg.eta_b, p.p_noise_b, p.resolve_genuine_b);

    p.p_genuine = p.p_pair * a.genuine_given_pair * b.genuine_given_pair;
    const double click_a_given_pair = a.genuine_given_pair + a.noise_given_pair;
    const double click_b_given_pair = b.genuine_given_pair + b.noise_given_pair;
    p.p_coincidence = p.p_pair * click_a_given_pair * click_b_given_pair +
                      (1.0 - p.p_pair) * p.p_noise_a * p.p_noise_b;
    return p;
}

std::pair<int, int> born_outcome(double alpha_rad, double beta_rad, rng::Stream& rng) {
    const double s = std::sin(alpha_rad - beta_rad);
    const double p_same = s * s;  // P(++) + P(--)
    const double u = rng.next_double();
    if (u < p_same) {
        const int v = (u < p_same * 0.5) ? 1 : -1;
        return {v, v};
    }
    const int v = (u < p_same + (1.0 - p_same) * 0.5) ? 1 : -1;
    return {v, -v};
}

std::vector<CoincidenceRecord> simulate_run(const SourceParams& src,
                                            const NoiseParams& noise,
                                            const MeasurementBases& bases,
                                            const RunConfig& cfg) {
    const double dt = resolve_slot_duration(src, cfg);
    validate(src, noise, cfg, dt);
    const std::uint64_t slots = slot_count(cfg, dt);
    const SlotProbabilities p = slot_probabilities(src, noise, cfg);

    std::vector<CoincidenceRecord> records;
    if (p.p_coincidence <= 0.0 || slots == 0) return records;
    records.reserve(static_cast<std::size_t>(p.p_coincidence * static_cast<double>(slots) * 1.1) + 16);

    rng::Stream rng(cfg.stream);
    const double genuine_given_coinc = p.genuine_fraction();
    std::uint64_t cursor = 0;
    while (cursor < slots) {
        const std::uint64_t skip = rng::geometric_skip(rng, p.p_coincidence, slots - cursor);
        if (skip >= slots - cursor) break;
        cursor += skip + 1;
        CoincidenceRecord rec;
        const bool genuine = rng.bernoulli(genuine_given_coinc);
        fill_bases(rec, rng);
        fill_outcomes(rec, bases, genuine, rng);
        records.push_back(rec);
    }
    return records;
}

DualRunOutput simulate_run_dual(const SourceParams& src, const NoiseParams& noise,
                                const MeasurementBases& bell_bases,
                                const MeasurementBases& key_bases, double key_fraction,
                                const RunConfig& cfg) {
    const double dt = resolve_slot_duration(src, cfg);
    validate(src, noise, cfg, dt);
    if (key_fraction < 0.0 || key_fraction > 1.0)
        throw std::invalid_argument("key_fraction must lie in [0, 1]");
    const std::uint64_t slots = slot_count(cfg, dt);
    const SlotProbabilities p = slot_probabilities(src, noise, cfg);

    DualRunOutput out;
    if (p.p_coincidence <= 0.0 || slots == 0) return out;

    rng::Stream rng(cfg.stream);
    const double genuine_given_coinc = p.genuine_fraction();
    std::uint64_t cursor = 0;
    while (cursor < slots) {
        const std::uint64_t skip = rng::geometric_skip(rng, p.p_coincidence, slots - cursor);
        if (skip >= slots - cursor) break;
        cursor += skip + 1;
        const bool to_key = rng.bernoulli(key_fraction);
        CoincidenceRecord rec;
        const bool genuine = rng.bernoulli(genuine_given_coinc);
        fill_bases(rec, rng);
        fill_outcomes(rec, to_key ? key_bases : bell_bases, genuine, rng);
        (to_key ? out.key : out.bell).push_back(rec);
    }
    return out;
}

std::vector<CoincidenceRecord> simulate_swap_run(const RunConfig& link1,
                                                 const RunConfig& link2,
                                                 const SourceParams& src,
                                                 const NoiseParams& noise,
                                                 const MeasurementBases& bases,
                                                 const SwapConfig& swap) {
    if (swap.p_sw < 0.0 || swap.p_sw > 1.0)
        throw std::invalid_argument("p_sw must lie in [0, 1]");

    // Each link is a downlink whose eta_a arm is the satellite memory
    // (noiseless storage) and whose eta_b arm is the receiving ground
    // station. Noise side A applies to link 1's ground arm, side B to
    // link 2's.
    auto link_counts = [&](const RunConfig& cfg, double bkg_hz, double dark_hz,
                           rng::Stream& rng) -> std::pair<std::uint64_t, double> {
        const NoiseParams ln{0.0, bkg_hz, 0.0, dark_hz};
        const double dt = resolve_slot_duration(src, cfg);
        validate(src, ln, cfg, dt);
        const std::uint64_t slots = slot_count(cfg, dt);
        const SlotProbabilities p = slot_probabilities(src, ln, cfg);
        const std::uint64_t n = rng::binomial(rng, slots, p.p_coincidence);
        return {n, p.genuine_fraction()};
    };

    rng::Stream rng1(link1.stream);
    rng::Stream rng2(link2.stream);
    rng::Stream swap_rng(link1.stream.with_purpose(link1.stream.purpose + 0x5157ULL));

    const auto [n1, g1] =
        link_counts(link1, noise.bkg_rate_a_hz, noise.dark_rate_a_hz, rng1);
    const auto [n2, g2] =
        link_counts(link2, noise.bkg_rate_b_hz, noise.dark_rate_b_hz, rng2);
    const std::uint64_t stored_pairs = std::min(n1, n2);

    std::vector<CoincidenceRecord> records;
    records.reserve(stored_pairs);
    for (std::uint64_t i = 0; i < stored_pairs; ++i) {
        const bool swapped = swap_rng.bernoulli(swap.p_sw);
        if (!swapped && swap.heralded) continue;
        CoincidenceRecord rec;
        const bool genuine = swapped && swap_rng.bernoulli(g1 * g2);
        fill_bases(rec, swap_rng);
        fill_outcomes(rec, bases, genuine, swap_rng);
        records.push_back(rec);
    }
    return records;
}

std::vector<CoincidenceRecord> synthesize_records(std::size_t n, double genuine_fraction,
                                                  const MeasurementBases& bases,
                                                  rng::Stream& rng, bool balanced_bases) {
    if (genuine_fraction < 0.0 || genuine_fraction > 1.0)
        throw std::invalid_argument("genuine_fraction must lie in [0, 1]");
    if (balanced_bases && n % 4 != 0)
        throw std::invalid_argument("balanced bases require n divisible by 4");

    std::vector<CoincidenceRecord> records(n);
    for (std::size_t i = 0; i < n; ++i) {
        CoincidenceRecord& rec = records[i];
        if (balanced_bases) {
            rec.alice_basis = static_cast<std::uint8_t>(1 + (i % 4) / 2);
            rec.bob_basis = static_cast<std::uint8_t>(1 + (i % 4) % 2);
        } else {
            fill_bases(rec, rng);
        }
        fill_outcomes(rec, bases, rng.bernoulli(genuine_fraction), rng);
    }
    return records;
}

}  // namespace bellsim::photonsim
