#pragma once

namespace clab::consts {

// CODATA 2018 values, SI units.
inline constexpr double hbar = 1.054571817e-34;         // J s
inline constexpr double boltzmann = 1.380649e-23;       // J / K (exact)
inline constexpr double gravitation = 6.67430e-11;      // m^3 kg^-1 s^-2
inline constexpr double amu = 1.66053906660e-27;        // kg

// Hartree atomic units: hbar = 1, one time unit = hbar / E_h.
inline constexpr double atomic_time_s = 2.4188843265857e-17;  // s
inline constexpr double au_per_fs = 1.0e-15 / atomic_time_s;  // ~41.34 atomic time units per femtosecond

inline constexpr double pi = 3.14159265358979323846;

}  // namespace clab::consts
