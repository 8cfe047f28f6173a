#pragma once

#include <numbers>

namespace selfrep::units {

constexpr double kGravity = 9.81;

constexpr double kmh_to_mps(double v) { return v / 3.6; }
constexpr double mps_to_kmh(double v) { return v * 3.6; }
constexpr double deg_to_rad(double a) { return a * std::numbers::pi / 180.0; }
constexpr double rad_to_deg(double a) { return a * 180.0 / std::numbers::pi; }

}  // namespace selfrep::units
