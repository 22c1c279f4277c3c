#pragma once

// Stochastic pure-state unraveling of collapse dynamics. A trajectory follows
// the Ito equation
//   d|psi> = -(i/hbar) H |psi> dt
//            + sum_n (A_n - <A_n>) |psi> dW_n
//            - (eta/2) sum_n (A_n - <A_n>)^2 |psi> dt,
// with independent channel increments dW_n of variance eta*dt, integrated by
// Euler-Maruyama with renormalization after every step. Averaging the pure
// projectors over trajectories reproduces the master-equation evolution with
// Lindblad operators A_n at rate eta (checked against the deterministic
// integrator in the tests).
//
// Mass-density models replace the independent channels by a spatially
// correlated field: E[dW_i dW_j] given by CorrelatedFieldNoise, and the drift
// generalizes to -(1/2) sum_mn (C_mn/dt) (A_m - <A_m>)(A_n - <A_n>) |psi> dt.

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "clab/hilbert.hpp"
#include "clab/rng.hpp"

namespace clab {

enum class ModelFamily { hamiltonian, position, number, mass_density };

const char* to_string(ModelFamily family);

struct CollapseModel {
    Mat hamiltonian;
    std::vector<Mat> collapse_ops;
    double eta = 0.0;  // noise strength for independent channels; ignored when correlated
    ModelFamily label = ModelFamily::hamiltonian;
    double hbar = 1.0;  // 1 in model units; set to the SI value for SI-unit models
    std::optional<CorrelatedFieldNoise> field_noise;  // mass-density family only

    int dim() const { return static_cast<int>(hamiltonian.rows()); }
    bool correlated() const { return field_noise.has_value(); }
    void check() const;
};

struct QsdConfig {
    double dt = 1e-3;
    double t_max = 1.0;
    int record_stride = 1;
    double collapse_epsilon = 1e-3;  // resolved when max population >= 1 - epsilon

    void check() const;
};

struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> populations;  // reference-basis populations per recorded time
    std::vector<double> norms;                 // pre-renormalization norm per recorded step
    int outcome = -1;                          // argmax population at the end, -1 if unresolved
    double collapse_time = std::numeric_limits<double>::quiet_NaN();  // first passage
    double max_norm_deviation = 0.0;           // max |pre_norm - 1| over all steps
    StateVector final_state;
    long n_steps = 0;
};

// Raw Ito increment d|psi> for one step with externally supplied noise values
// (one per collapse operator). Returned unnormalized; intended for stepping
// analysis and cross-checks.
Vec qsd_increment(const StateVector& psi, const CollapseModel& model,
                  const Eigen::VectorXd& noise_values, double dt);

// One Euler-Maruyama step drawing its own noise: returns the renormalized new
// state and the pre-renormalization norm. Convenience API; recompiles internal
// tables per call, so prefer run_trajectory for long evolutions.
std::pair<StateVector, double> step(const StateVector& psi, const CollapseModel& model,
                                    const QsdConfig& config, RngStream& stream);

// Called at every recorded step with the renormalized state.
using RecordHook = std::function<void(int record_index, double t, const Vec& psi)>;

TrajectoryRecord run_trajectory(const StateVector& psi0, const CollapseModel& model,
                                const QsdConfig& config, RngStream& stream,
                                const RecordHook& hook = {});

// Orthonormal basis in which populations and outcomes are reported: the
// eigenbasis of the first collapse operator (ascending eigenvalues), the
// computational basis when that operator is already diagonal (this keeps
// degenerate subspaces unmixed), or the Hamiltonian eigenbasis when the model
// has no collapse operators. Returns an empty matrix for the computational
// basis.
Mat reference_basis(const CollapseModel& model);

// --- model factories ----------------------------------------------------------------------------

// Self-measurement of energy: single channel A = H.
CollapseModel make_hamiltonian_model(const HermitianOperator& h, double eta);

// Localization on a 1-D site register: A = diag(site_positions).
CollapseModel make_position_model(const HermitianOperator& h,
                                  const std::vector<double>& site_positions, double eta);

// Mode-occupation channels on a tensor product of truncated modes: one
// operator per mode, A_m = I x ... x diag(0..d_m-1) x ... x I. The product of
// mode_dims must match dim(h).
CollapseModel make_number_model(const HermitianOperator& h, const std::vector<int>& mode_dims,
                                double eta);

// Smeared mass-density channels on a spatial grid. Basis state k places point
// particle p (mass masses[p]) at configurations[k][p]; grid cell c gets the
// diagonal operator A_c(k,k) = sum_p masses[p] * w_c(x_kp) with Gaussian cell
// weights w_c normalized per particle, so sum_c A_c = (total mass) * identity.
// Noise between cells is correlated with the gravitational kernel; dt must
// match the step size the model is later run with. SI units.
CollapseModel make_mass_density_model(const HermitianOperator& h,
                                      const std::vector<double>& masses,
                                      const std::vector<std::vector<Eigen::Vector3d>>& configurations,
                                      const std::vector<Eigen::Vector3d>& grid, double sigma_noise,
                                      double kappa, double dt);

}  // namespace clab
