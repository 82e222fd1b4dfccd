#include "bellsim/geodyn.hpp"

#include <algorithm>

namespace bellsim::geodyn {

double orbital_radius(const OrbitSpec& orbit, const EarthModel& earth) {
    return earth.radius_m + orbit.altitude_m;
}

double orbital_angular_rate(const OrbitSpec& orbit, const EarthModel& earth) {
    const double r = orbital_radius(orbit, earth);
    return std::sqrt(earth.mu_m3_s2 / (r * r * r));
}

double orbital_period(const OrbitSpec& orbit, const EarthModel& earth) {
    return 2.0 * mathutil::kPi / orbital_angular_rate(orbit, earth);
}

SatelliteState propagate(const OrbitSpec& orbit, const EarthModel& earth, double t_s) {
    const double r = orbital_radius(orbit, earth);
    const double w = orbital_angular_rate(orbit, earth);
    const double u = orbit.phase_at_epoch_rad + w * t_s;  // argument of latitude
    const double cu = std::cos(u), su = std::sin(u);
    const double ci = std::cos(orbit.inclination_rad), si = std::sin(orbit.inclination_rad);
    const double co = std::cos(orbit.raan_rad), so = std::sin(orbit.raan_rad);

    SatelliteState s;
    s.position_m = {r * (co * cu - so * su * ci),
                    r * (so * cu + co * su * ci),
                    r * (su * si)};
    s.velocity_mps = {r * w * (-co * su - so * cu * ci),
                      r * w * (-so * su + co * cu * ci),
                      r * w * (cu * si)};
    s.epoch_offset_s = t_s;
    return s;
}

Vec3 ground_position_eci(const GroundStation& gs, const EarthModel& earth, double t_s) {
    const double lon = gs.longitude_rad + earth.rotation_rate_rad_s * t_s;
    const double cl = std::cos(gs.latitude_rad);
    return {earth.radius_m * cl * std::cos(lon),
            earth.radius_m * cl * std::sin(lon),
            earth.radius_m * std::sin(gs.latitude_rad)};
}

Vec3 ground_velocity_eci(const GroundStation& gs, const EarthModel& earth, double t_s) {
    const double lon = gs.longitude_rad + earth.rotation_rate_rad_s * t_s;
    const double cl = std::cos(gs.latitude_rad);
    const double w = earth.rotation_rate_rad_s;
    return {-earth.radius_m * cl * std::sin(lon) * w,
            earth.radius_m * cl * std::cos(lon) * w,
            0.0};
}

LinkGeometry link_geometry(const SatelliteState& sat, const GroundStation& gs,
                           const EarthModel& earth, double t_s) {
    const Vec3 gp = ground_position_eci(gs, earth, t_s);
    const Vec3 gv = ground_velocity_eci(gs, earth, t_s);
    const Vec3 d = sat.position_m - gp;
    const double dist = d.norm();

    LinkGeometry g;
    g.distance_m = dist;
    // Zenith direction at the station is radially outward.
    const double cos_zenith = std::clamp(gp.dot(d) / (gp.norm() * dist), -1.0, 1.0);
    g.zenith_angle_rad = std::acos(cos_zenith);
    g.visible = g.zenith_angle_rad < mathutil::kPi / 2.0;
    g.radial_velocity_mps = d.dot(sat.velocity_mps - gv) / dist;
    return g;
}

VisibilityCap visibility_footprint(const SatelliteState& sat, const EarthModel& earth) {
    VisibilityCap cap;
    const double r = sat.position_m.norm();
    cap.central_angle_rad = std::acos(std::clamp(earth.radius_m / r, -1.0, 1.0));
    // Cap center in Earth-fixed coordinates, like ground stations.
    subsatellite_point(sat, earth, sat.epoch_offset_s, cap.center_lat_rad,
                       cap.center_lon_rad);
    return cap;
}

double central_angle_rad(double lat1, double lon1, double lat2, double lon2) {
    const double c = std::sin(lat1) * std::sin(lat2) +
                     std::cos(lat1) * std::cos(lat2) * std::cos(lon1 - lon2);
    return std::acos(std::clamp(c, -1.0, 1.0));
}

bool cap_contains(const VisibilityCap& cap, double lat_rad, double lon_rad, double tol_rad) {
    return central_angle_rad(cap.center_lat_rad, cap.center_lon_rad, lat_rad, lon_rad) <=
           cap.central_angle_rad + tol_rad;
}

bool intersat_visible(const SatelliteState& a, const SatelliteState& b,
                      const EarthModel& earth) {
    // Minimum distance from the Earth center to the segment [a, b].
    const Vec3 ab = b.position_m - a.position_m;
    const double len2 = ab.dot(ab);
    double t = 0.0;
    if (len2 > 0.0) t = std::clamp(-a.position_m.dot(ab) / len2, 0.0, 1.0);
    const Vec3 closest = a.position_m + ab * t;
    return closest.norm() > earth.radius_m;
}

void subsatellite_point(const SatelliteState& sat, const EarthModel& earth,
                        double t_s, double& lat_rad, double& lon_rad) {
    const double r = sat.position_m.norm();
    lat_rad = std::asin(sat.position_m.z / r);
    // ECI longitude minus the accumulated Earth rotation.
    double lon = std::atan2(sat.position_m.y, sat.position_m.x) -
                 earth.rotation_rate_rad_s * t_s;
    lon = std::remainder(lon, 2.0 * mathutil::kPi);
    lon_rad = lon;
}

}  // namespace bellsim::geodyn
