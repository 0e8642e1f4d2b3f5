#pragma once

#include <numbers>

namespace robcal::units {

inline constexpr double kGravity = 9.80665;  // m/s^2
inline constexpr double kMicron = 1e-6;      // m

/// Compliance report unit: micro-radian per newton-metre.
inline constexpr double kComplianceReport = 1e-6;  // rad/(N*m)

constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }
constexpr double um_to_m(double um) { return um * kMicron; }
constexpr double m_to_um(double m) { return m / kMicron; }

}  // namespace robcal::units
