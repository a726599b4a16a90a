#pragma once

namespace protocell::constants {

inline constexpr double gas_constant = 8.314462618;  // J/(mol K)
inline constexpr double pi = 3.14159265358979323846;

inline constexpr double molar_mass_air = 28.96546e-3;  // kg/mol, dry air
inline constexpr double molar_mass_o3 = 48.0e-3;       // kg/mol

inline constexpr double standard_temperature = 273.15;  // K
inline constexpr double standard_pressure = 101325.0;   // Pa (1 atm)

// Unit helpers for the CLI boundary.
inline constexpr double ccm_to_m3s = 1.0e-6 / 60.0;  // cm^3/min -> m^3/s
inline constexpr double ppm = 1.0e-6;

}  // namespace protocell::constants
