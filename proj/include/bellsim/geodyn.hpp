#pragma once

#include <cmath>
#include <string>

#include "bellsim/mathutil.hpp"

namespace bellsim::geodyn {

struct Vec3 {
    double x = 0, y = 0, z = 0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(dot(*this)); }
};

// Spherical, uniformly rotating Earth.
struct EarthModel {
    double radius_m = 6371e3;
    double rotation_rate_rad_s = 7.2921159e-5;  // sidereal
    double mu_m3_s2 = 3.986004418e14;
};

// Circular orbit; phase_at_epoch is the argument of latitude at t = 0.
struct OrbitSpec {
    double altitude_m = 500e3;
    double inclination_rad = mathutil::kPi / 2.0;
    double raan_rad = 0.0;
    double phase_at_epoch_rad = 0.0;
};

// Earth-centered inertial state.
struct SatelliteState {
    Vec3 position_m;
    Vec3 velocity_mps;
    double epoch_offset_s = 0.0;
};

struct GroundStation {
    double latitude_rad = 0.0;
    double longitude_rad = 0.0;
    std::string name;
};

struct LinkGeometry {
    double distance_m = 0.0;
    bool visible = false;
    double radial_velocity_mps = 0.0;  // signed, positive = receding
    double zenith_angle_rad = 0.0;
};

// Spherical cap of ground points that can see the satellite.
struct VisibilityCap {
    double center_lat_rad = 0.0;  // sub-satellite point
    double center_lon_rad = 0.0;
    double central_angle_rad = 0.0;
};

double orbital_radius(const OrbitSpec& orbit, const EarthModel& earth);
double orbital_angular_rate(const OrbitSpec& orbit, const EarthModel& earth);
double orbital_period(const OrbitSpec& orbit, const EarthModel& earth);

SatelliteState propagate(const OrbitSpec& orbit, const EarthModel& earth, double t_s);

// ECI position/velocity of a ground station, carried around by Earth rotation.
Vec3 ground_position_eci(const GroundStation& gs, const EarthModel& earth, double t_s);
Vec3 ground_velocity_eci(const GroundStation& gs, const EarthModel& earth, double t_s);

LinkGeometry link_geometry(const SatelliteState& sat, const GroundStation& gs,
                           const EarthModel& earth, double t_s);

VisibilityCap visibility_footprint(const SatelliteState& sat, const EarthModel& earth);

// Geodesic central angle between two (lat, lon) points on the sphere.
double central_angle_rad(double lat1_rad, double lon1_rad, double lat2_rad, double lon2_rad);

bool cap_contains(const VisibilityCap& cap, double lat_rad, double lon_rad,
                  double tol_rad = 1e-9);

// True iff the straight segment between the two satellites clears the Earth
// sphere.
bool intersat_visible(const SatelliteState& a, const SatelliteState& b,
                      const EarthModel& earth);

// Latitude/longitude of the point directly beneath the satellite at t.
void subsatellite_point(const SatelliteState& sat, const EarthModel& earth,
                        double t_s, double& lat_rad, double& lon_rad);

}  // namespace bellsim::geodyn
