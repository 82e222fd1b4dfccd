#include "bellsim/channel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bellsim::channel {

namespace {

double tx_radius(const ChannelParams& p, Direction d) {
    return d == Direction::downlink ? p.sat_radius_m : p.gs_radius_m;
}

double rx_radius(const ChannelParams& p, Direction d) {
    return d == Direction::downlink ? p.gs_radius_m : p.sat_radius_m;
}

double rx_det_eff(const ChannelParams& p, Direction d) {
    return d == Direction::downlink ? p.det_eff_gs : p.det_eff_sat;
}

}  // namespace

double free_space_transmittance(const ChannelParams& params, double distance_m,
                                Direction direction) {
    if (distance_m <= 0.0) {
        throw std::invalid_argument("free_space_transmittance: distance must be > 0");
    }
    const double w0 = tx_radius(params, direction);
    const double rr = rx_radius(params, direction);
    const double spread = params.wavelength_m * distance_m / (mathutil::kPi * w0 * w0);
    const double w2 = w0 * w0 * (1.0 + spread * spread);
    const double eta = 1.0 - std::exp(-2.0 * rr * rr / w2);
    return std::clamp(eta, 0.0, 1.0);
}

double atmospheric_transmittance(const ChannelParams& params, double zenith_angle_rad) {
    if (zenith_angle_rad >= mathutil::kPi / 2.0) return 0.0;
    const double airmass = 1.0 / std::cos(zenith_angle_rad);
    const double eta = std::pow(params.atm_zenith_transmittance, airmass);
    return std::clamp(eta, 0.0, 1.0);
}

LinkEfficiency link_efficiency(const ChannelParams& params,
                               const geodyn::LinkGeometry& geom, Direction direction) {
    if (!geom.visible) {
        throw std::invalid_argument("link_efficiency: link is not visible");
    }
    LinkEfficiency e;
    e.direction = direction;
    e.eta_fs = free_space_transmittance(params, geom.distance_m, direction);
    e.eta_atm = atmospheric_transmittance(params, geom.zenith_angle_rad);
    e.eta_total = compose_efficiency(e.eta_fs, e.eta_atm, params.det_eff_sat,
                                     params.det_eff_gs);
    return e;
}

double receiver_arm_efficiency(const ChannelParams& params,
                               const geodyn::LinkGeometry& geom, Direction direction) {
    if (!geom.visible) return 0.0;
    return free_space_transmittance(params, geom.distance_m, direction) *
           atmospheric_transmittance(params, geom.zenith_angle_rad) *
           rx_det_eff(params, direction);
}

double local_arm_efficiency(const ChannelParams& params, Direction direction) {
    return direction == Direction::downlink ? params.det_eff_sat : params.det_eff_gs;
}

double compose_efficiency(double eta_fs, double eta_atm, double det_local,
                          double det_remote) {
    return std::clamp(eta_fs * eta_atm * det_local * det_remote, 0.0, 1.0);
}

}  // namespace bellsim::channel
