#pragma once

// Hybrid toy: a qubit coupled to one classical oscillator degree of freedom
// through stochastic collapse events. Each step the qubit may "jump" with
// probability dt/tau; a jump projects it onto |k> drawn from its current Born
// weights and delivers the momentum kick s_k * B to the oscillator
// (s_0 = -1, s_1 = +1). Between jumps the oscillator feels the steady force
// s_k * B * omega once the qubit has collapsed (zero while undecided) and
// evolves by symplectic Euler; the qubit is constant between jumps.

#include <array>
#include <cstdint>
#include <limits>
#include <vector>

#include "clab/hilbert.hpp"
#include "clab/rng.hpp"

namespace clab {

struct ClassicalState {
    double q = 0.0;  // position
    double p = 0.0;  // momentum
};

struct CqToyConfig {
    double coupling_b = 1.0;  // kick magnitude B
    double mass = 1.0;
    double omega = 1.0;
    double tau = 0.01;  // mean time between jump attempts succeeding
    double dt = 1e-4;
    double t_max = 0.05;
    int record_stride = 1;

    void check() const;  // enforces dt <= tau/10 among the basic ranges
};

inline double outcome_sign(int outcome) { return outcome == 0 ? -1.0 : 1.0; }

// Force exerted by a collapsed qubit outcome on the oscillator; 0 if undecided (-1).
double outcome_force(int outcome, const CqToyConfig& config);

struct CqJumpResult {
    bool jumped = false;
    int drawn = -1;  // basis outcome selected, -1 when no jump fired
};

// One jump attempt: consumes exactly one uniform; on success consumes a second
// to select the outcome, projects the qubit, and kicks the oscillator momentum.
// Projecting an already-collapsed qubit redraws its (certain) outcome, so
// repeated jumps keep kicking in the same direction.
CqJumpResult cq_jump(Vec& qubit, ClassicalState& classical, const CqToyConfig& config,
                     RngStream& stream);

// Symplectic Euler under force f - m omega^2 q: kick momentum first, then drift.
ClassicalState classical_drift(const ClassicalState& state, double qubit_outcome_force,
                               const CqToyConfig& config, double dt);

struct HybridTrajectory {
    std::vector<double> times;
    std::vector<std::array<double, 2>> populations;
    std::vector<ClassicalState> classical;
    std::vector<std::uint8_t> jump_flags;  // 1 if a jump fired during the recorded step
    std::vector<double> jump_times;
    int outcome = -1;  // first projection outcome; -1 if no jump ever fired
    long jump_count = 0;
    double first_jump_time = std::numeric_limits<double>::quiet_NaN();
    Vec final_qubit;
};

HybridTrajectory run_cq_trajectory(const StateVector& qubit0, const ClassicalState& classical0,
                                   const CqToyConfig& config, RngStream& stream);

}  // namespace clab
