#pragma once

// Order-of-magnitude timescale estimators, SI units throughout.
//
// Thermal-gas decoherence: superposition of a molecule displaced by dx in a
// gas of scatterers decays at
//   1/tau_D = (8 / 3 hbar^2) * n * sqrt(2 pi M) * (k_B T)^(3/2) * a^2 * dx^2.
//
// Gravitational collapse: for two smeared mass distributions ("up" and "down"
// branch), the self-energy of the difference is
//   E_Delta = 4 pi G sum_ij w_i w_j K(|r_i - r_j|),   K(d) = erf(d / 2 sigma) / d,
// with signed weights (+up, -down) and K(0) = 1 / (sigma sqrt(pi)); the
// collapse time is tau_c = hbar / E_Delta.

#include <vector>

#include <Eigen/Dense>

#include "clab/errors.hpp"

namespace clab {

struct GasParameters {
    double number_density = 0.0;   // scatterers per m^3
    double temperature = 0.0;      // K
    double molecular_mass = 0.0;   // kg (scatterer mass)
    double size = 0.0;             // effective cross-section radius a, m
    double displacement = 0.0;     // superposition separation dx, m

    void check() const;
};

// Returns +infinity when displacement or temperature is zero (no decoherence).
double joos_zeh_tau(const GasParameters& gas);

// Off-diagonal coherence amplitude after time t: c0 * exp(-t / tau_d).
std::complex<double> coherence_decay(std::complex<double> c0, double t, double tau_d);

struct MassDistribution {
    std::vector<Eigen::Vector3d> points;  // m
    std::vector<double> masses;           // kg, >= 0
    double smear_sigma = 0.0;             // Gaussian smearing width, m

    void check() const;
    double total_mass() const;
};

MassDistribution translated(const MassDistribution& dist, const Eigen::Vector3d& shift);

// Gravitational self-energy (J) of the difference between the two branches.
// Both distributions must share the same smear_sigma. Exactly zero for
// bitwise-identical inputs.
double dp_self_energy(const MassDistribution& up, const MassDistribution& down);

// tau_c = hbar / E; +infinity at E = 0, error for negative energies.
double dp_collapse_time(double e_delta_joules);

// Homogeneous sphere of the given mass and material density, discretized on a
// cubic lattice with linear_resolution cells across the diameter (cell centers
// inside the sphere are kept, each carrying mass/N). The effective smearing is
// max(smear_sigma, cell/2) so the discrete sum approximates the continuum.
MassDistribution make_sphere_lattice(double mass, double material_density, int linear_resolution,
                                     double smear_sigma, const Eigen::Vector3d& center);

struct DpSweepPoint {
    double mass = 0.0;          // kg
    double self_energy = 0.0;   // J, at doubled resolution
    double collapse_time = 0.0; // s
    double convergence = 0.0;   // |E(2L) - E(L)| / E(2L)
};

// Sphere-in-superposition sweep: for each mass, a lattice sphere displaced by
// `displacement` against itself, computed at base_resolution and at twice that
// resolution (the reported energy; the relative change is the convergence
// diagnostic).
std::vector<DpSweepPoint> dp_mass_sweep(double material_density,
                                        const std::vector<double>& masses, double displacement,
                                        double smear_sigma, int base_resolution = 13);

}  // namespace clab
