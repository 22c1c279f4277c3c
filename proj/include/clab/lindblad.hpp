#pragma once

// Deterministic density-matrix evolution
//   d rho / dt = -(i/hbar) [H, rho] + sum_n lambda_n (L_n rho L_n^dag - 1/2 {L_n^dag L_n, rho}),
// integrated with classical RK4. Serves as the exact reference the stochastic
// trajectory averages are checked against.

#include <utility>
#include <vector>

#include "clab/hilbert.hpp"

namespace clab {

struct MasterEquationModel {
    Mat hamiltonian;
    std::vector<Mat> lindblad_ops;
    std::vector<double> rates;  // lambda_n >= 0, one per operator
    double hbar = 1.0;

    int dim() const { return static_cast<int>(hamiltonian.rows()); }
    void check() const;
};

// Right-hand side of the master equation for an arbitrary (not necessarily
// normalized) Hermitian matrix.
Mat lindblad_rhs(const Mat& rho, const MasterEquationModel& model);

// Largest decay rate lambda_n * sigma_max(L_n)^2 across channels (0 if none);
// sets the stability-motivated step bound dt <= 0.01 / max_rate.
double max_decay_rate(const MasterEquationModel& model);

// Evolve rho0 for duration t. The effective step is min(dt, 0.01 / max_rate);
// a trailing partial step lands exactly on t. Throws StepTooLarge if the trace
// drifts from 1 by more than 1e-6 along the way.
DensityOperator propagate(const DensityOperator& rho0, const MasterEquationModel& model, double t,
                          double dt);

struct DensitySeries {
    std::vector<double> times;
    std::vector<Mat> densities;
};

// Fixed-step variant for grid-aligned comparisons: takes n_steps = round(t/dt)
// steps of exactly dt and records every record_stride steps plus the endpoint.
// Uses dt as given (no automatic reduction) so the grid matches a stochastic
// run with the same dt; the trace guard still applies.
DensitySeries propagate_series(const DensityOperator& rho0, const MasterEquationModel& model,
                               double t, double dt, int record_stride);

// Closed-form dephasing of a superposition a|0> + b|1> whose off-diagonal
// decays as exp(-rate * t); |a|^2 + |b|^2 must be 1.
DensityOperator decoherence_demo(Cplx a, Cplx b, double overlap_decay_rate, double t);

}  // namespace clab
