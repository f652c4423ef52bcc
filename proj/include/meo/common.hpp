// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

namespace meo {

using cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kSpeedOfLight = 299792458.0;      // m/s
inline constexpr double kMuEarth = 3.986004418e14;        // m^3/s^2
inline constexpr double kEarthRotationRate = 7.2921150e-5; // rad/s
inline constexpr double kWgs84A = 6378137.0;              // m
inline constexpr double kWgs84F = 1.0 / 298.257223563;
inline constexpr double kJ2 = 1.08262668e-3;
inline constexpr double kDeg = std::numbers::pi / 180.0;

/// Sentinel used wherever a ratio in dB would be +infinity.
inline constexpr double kCappedDb = 99.0;

/// Base class for recoverable library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Vec3 {
    double x{};
    double y{};
    double z{};
};

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
inline Vec3 operator*(double s, const Vec3& v) { return {s * v.x, s * v.y, s * v.z}; }
inline Vec3 operator*(const Vec3& v, double s) { return s * v; }
inline Vec3 operator/(const Vec3& v, double s) { return {v.x / s, v.y / s, v.z / s}; }
inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b)
{
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }
inline Vec3 unit(const Vec3& v) { return v / norm(v); }

/// Rotation about +z by angle (rad), active.
inline Vec3 rotate_z(const Vec3& v, double angle)
{
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return {c * v.x - s * v.y, s * v.x + c * v.y, v.z};
}

/// Wraps an angle to (-pi, pi].
inline double wrap_pi(double a)
{
    if (a > -kPi && a <= kPi) return a;
    double r = std::remainder(a, kTwoPi);
    if (r <= -kPi) r += kTwoPi;
    return r;
}

inline double to_db(double linear_power)
{
    if (!(linear_power > 0.0)) return -kCappedDb;
    return std::min(10.0 * std::log10(linear_power), kCappedDb);
}
inline double from_db(double db) { return std::pow(10.0, db / 10.0); }

/// FNV-1a, 64 bit. Stable across platforms, used for scenario hashes and seed streams.
inline std::uint64_t fnv1a64(std::string_view text)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// splitmix64 finalizer; mixes a master seed with a stream id.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream)
{
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace meo
