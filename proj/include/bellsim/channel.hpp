#pragma once

#include "bellsim/geodyn.hpp"

namespace bellsim::channel {

enum class Direction { downlink, uplink };

struct ChannelParams {
    double wavelength_m = 810e-9;
    double sat_radius_m = 0.10;  // satellite telescope aperture radius
    double gs_radius_m = 0.60;   // ground telescope aperture radius
    double det_eff_sat = 0.5;
    double det_eff_gs = 0.5;
    double atm_zenith_transmittance = 0.5;
};

struct LinkEfficiency {
    double eta_fs = 0.0;
    double eta_atm = 0.0;
    double eta_total = 0.0;  // eta_fs * eta_atm * det_eff_sat * det_eff_gs
    Direction direction = Direction::downlink;
};

// Fraction of a diffraction-limited Gaussian beam (waist = transmitter
// aperture radius) collected by the receiver aperture at distance L:
//   eta_fs = 1 - exp(-2 r_rx^2 / w(L)^2),  w(L)^2 = w0^2 (1 + (lambda L / (pi w0^2))^2)
// Throws std::invalid_argument for L <= 0.
double free_space_transmittance(const ChannelParams& params, double distance_m,
                                Direction direction);

// Beer-Lambert zenith transmittance with secant airmass scaling. Returns 0
// for zenith angles at or beyond pi/2.
double atmospheric_transmittance(const ChannelParams& params, double zenith_angle_rad);

// Product of the four transmittance factors for one full link (local
// detection of one partner plus remote detection of the other). Throws if
// the geometry is not visible.
LinkEfficiency link_efficiency(const ChannelParams& params,
                               const geodyn::LinkGeometry& geom, Direction direction);

// Detection probability of the travelling photon alone:
// eta_fs * eta_atm * (receiver detector efficiency).
double receiver_arm_efficiency(const ChannelParams& params,
                               const geodyn::LinkGeometry& geom, Direction direction);

// Detection probability of the partner measured locally at the transmitter.
double local_arm_efficiency(const ChannelParams& params, Direction direction);

// Plain product rule, exposed for composing scenario-specific budgets.
double compose_efficiency(double eta_fs, double eta_atm, double det_local,
                          double det_remote);

}  // namespace bellsim::channel
