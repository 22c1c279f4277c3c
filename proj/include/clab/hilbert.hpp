#pragma once

// Finite-dimensional Hilbert space primitives: states, Hermitian observables,
// density operators, composite spaces. Thin value types over Eigen with the
// physics invariants checked at well-defined construction points (not silently
// re-enforced in hot loops).

#include <complex>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "clab/errors.hpp"

namespace clab {

using Cplx = std::complex<double>;
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;

// --- tolerances for invariant checks -----------------------------------------------------------
namespace tol {
inline constexpr double norm = 1e-12;         // state normalization
inline constexpr double hermitian = 1e-12;    // max |A - A^dag| entry
inline constexpr double trace = 1e-12;        // |tr(rho) - 1|
inline constexpr double psd = -1e-10;         // smallest eigenvalue floor for density operators
inline constexpr double weights = 1e-10;      // ensemble weight sum
inline constexpr double orthonormal = 1e-10;  // basis column orthonormality
inline constexpr double unitary = 1e-10;      // unitarity of transforms
inline constexpr double eigen_rel = 1e-10;    // reconstruction, relative to ||A||
}  // namespace tol

// --- state vectors ------------------------------------------------------------------------------

struct StateVector {
    Vec amplitudes;

    StateVector() = default;
    explicit StateVector(Vec a) : amplitudes(std::move(a)) {}

    int dim() const { return static_cast<int>(amplitudes.size()); }
    double norm() const { return amplitudes.norm(); }
};

// Returns psi / ||psi||; throws ZeroNorm if ||psi|| is too small to normalize meaningfully.
StateVector normalize(const StateVector& psi);

// Real expectation value <psi|A|psi> / <psi|psi>. The imaginary residue of the sandwich is a
// numerical artifact for Hermitian A; callers that care assert on it via expectation_raw.
double expectation(const Mat& a, const StateVector& psi);
Cplx expectation_raw(const Mat& a, const StateVector& psi);

// Populations |<k|psi>|^2 / <psi|psi> in the computational basis, or in the orthonormal basis
// given by the columns of `basis` (checked against tol::orthonormal).
Eigen::VectorXd born_probabilities(const StateVector& psi);
Eigen::VectorXd born_probabilities(const StateVector& psi, const Mat& basis);

// Coordinates of psi in the orthonormal basis given by the columns of u: returns u^dag psi.
// u must be unitary within tol::unitary.
StateVector basis_transform(const StateVector& psi, const Mat& u);
Mat basis_transform(const Mat& a, const Mat& u);  // u^dag A u

// --- Hermitian observables ----------------------------------------------------------------------

struct HermitianOperator {
    Mat matrix;

    HermitianOperator() = default;
    explicit HermitianOperator(Mat m) : matrix(std::move(m)) {}
    // Checks Hermiticity entrywise within tol::hermitian.
    static HermitianOperator from_matrix(Mat m);
    // For operators Hermitian by construction (e.g. real diagonals).
    static HermitianOperator trusted(Mat m);

    int dim() const { return static_cast<int>(matrix.rows()); }
};

struct EigenSystem {
    Eigen::VectorXd values;  // ascending
    Mat vectors;             // columns, orthonormal
};

// Eigendecomposition with a reconstruction check: ||V D V^dag - A|| <= tol::eigen_rel * ||A||.
EigenSystem eigendecompose(const HermitianOperator& a);

// --- density operators --------------------------------------------------------------------------

struct DensityOperator {
    Mat matrix;

    DensityOperator() = default;
    explicit DensityOperator(Mat m) : matrix(std::move(m)) {}

    // Validating constructor: Hermitian within herm_tol, unit trace within trace_tol, and
    // positive semidefinite with smallest eigenvalue >= psd_floor.
    static DensityOperator from_matrix(Mat m, double herm_tol = tol::hermitian,
                                       double trace_tol = tol::trace, double psd_floor = tol::psd);
    // For matrices that satisfy the invariants by construction (internal aggregation paths).
    static DensityOperator trusted(Mat m);

    int dim() const { return static_cast<int>(matrix.rows()); }
    double purity() const;  // tr(rho^2), real
};

DensityOperator pure_density(const StateVector& psi);

// rho = sum_i w_i |psi_i><psi_i| with each state normalized first.
// Weights must be >= 0 and sum to 1 within tol::weights.
DensityOperator density_from_ensemble(const std::vector<StateVector>& states,
                                      const std::vector<double>& weights);

// --- composite spaces ---------------------------------------------------------------------------

// Tensor-product space with the leftmost factor slowest: index i = ((i_0 d_1 + i_1) d_2 + ...).
struct CompositeSpace {
    std::vector<int> dims;

    explicit CompositeSpace(std::vector<int> d);
    int total_dim() const;
    int factors() const { return static_cast<int>(dims.size()); }
};

StateVector tensor(const StateVector& a, const StateVector& b);
Mat tensor(const Mat& a, const Mat& b);

// Trace out factor `traced` (0-based) of a density operator living on `space`.
DensityOperator partial_trace(const DensityOperator& rho, const CompositeSpace& space, int traced);

}  // namespace clab
