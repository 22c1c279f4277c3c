#include "clab/hilbert.hpp"

#include <cmath>
#include <numeric>

namespace clab {

namespace {

double max_abs_dev_from_hermitian(const Mat& m) {
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

void check_orthonormal_columns(const Mat& u, double tolerance, const char* what) {
    Mat gram = u.adjoint() * u;
    gram.diagonal().array() -= 1.0;
    if (gram.cwiseAbs().maxCoeff() > tolerance) {
        if (std::string(what) == "basis")
            throw NonOrthonormalBasis("basis columns are not orthonormal");
        throw NonUnitary("transform is not unitary");
    }
}

}  // namespace

StateVector normalize(const StateVector& psi) {
    const double n = psi.norm();
    if (!(n > 1e-300)) throw ZeroNorm("cannot normalize a (near-)zero state vector");
    return StateVector{psi.amplitudes / n};
}

Cplx expectation_raw(const Mat& a, const StateVector& psi) {
    if (a.rows() != psi.dim() || a.cols() != psi.dim())
        throw DimMismatch("operator/state dimension mismatch in expectation");
    const double n2 = psi.amplitudes.squaredNorm();
    if (!(n2 > 0.0)) throw ZeroNorm("expectation of a zero state");
    return (psi.amplitudes.adjoint() * (a * psi.amplitudes))(0) / n2;
}

double expectation(const Mat& a, const StateVector& psi) {
    return expectation_raw(a, psi).real();
}

Eigen::VectorXd born_probabilities(const StateVector& psi) {
    const double n2 = psi.amplitudes.squaredNorm();
    if (!(n2 > 0.0)) throw ZeroNorm("Born probabilities of a zero state");
    return psi.amplitudes.cwiseAbs2() / n2;
}

Eigen::VectorXd born_probabilities(const StateVector& psi, const Mat& basis) {
    if (basis.rows() != psi.dim()) throw DimMismatch("basis/state dimension mismatch");
    check_orthonormal_columns(basis, tol::orthonormal, "basis");
    const double n2 = psi.amplitudes.squaredNorm();
    if (!(n2 > 0.0)) throw ZeroNorm("Born probabilities of a zero state");
    return (basis.adjoint() * psi.amplitudes).cwiseAbs2() / n2;
}

StateVector basis_transform(const StateVector& psi, const Mat& u) {
    if (u.rows() != u.cols() || u.rows() != psi.dim())
        throw DimMismatch("transform/state dimension mismatch");
    check_orthonormal_columns(u, tol::unitary, "unitary");
    return StateVector{u.adjoint() * psi.amplitudes};
}

Mat basis_transform(const Mat& a, const Mat& u) {
    if (u.rows() != u.cols() || u.rows() != a.rows() || a.rows() != a.cols())
        throw DimMismatch("transform/operator dimension mismatch");
    check_orthonormal_columns(u, tol::unitary, "unitary");
    return u.adjoint() * a * u;
}

HermitianOperator HermitianOperator::from_matrix(Mat m) {
    if (m.rows() != m.cols()) throw DimMismatch("Hermitian operator must be square");
    if (max_abs_dev_from_hermitian(m) > tol::hermitian)
        throw NotHermitian("matrix is not Hermitian within tolerance");
    return HermitianOperator{std::move(m)};
}

HermitianOperator HermitianOperator::trusted(Mat m) { return HermitianOperator{std::move(m)}; }

EigenSystem eigendecompose(const HermitianOperator& a) {
    Eigen::SelfAdjointEigenSolver<Mat> solver(a.matrix);
    if (solver.info() != Eigen::Success)
        throw ConvergenceFailure("eigendecomposition did not converge");
    EigenSystem sys{solver.eigenvalues(), solver.eigenvectors()};
    const Mat recon =
        sys.vectors * sys.values.cast<Cplx>().asDiagonal() * sys.vectors.adjoint();
    const double scale = std::max(1e-300, a.matrix.norm());
    if ((recon - a.matrix).norm() > tol::eigen_rel * scale)
        throw ConvergenceFailure("eigendecomposition reconstruction check failed");
    return sys;
}

DensityOperator DensityOperator::from_matrix(Mat m, double herm_tol, double trace_tol,
                                             double psd_floor) {
    if (m.rows() != m.cols()) throw DimMismatch("density operator must be square");
    if (max_abs_dev_from_hermitian(m) > herm_tol)
        throw NotHermitian("density operator is not Hermitian within tolerance");
    if (std::abs(m.trace().real() - 1.0) > trace_tol || std::abs(m.trace().imag()) > trace_tol)
        throw NotDensity("density operator trace deviates from 1");
    Eigen::SelfAdjointEigenSolver<Mat> solver(m);
    if (solver.info() != Eigen::Success)
        throw ConvergenceFailure("eigendecomposition did not converge in density check");
    if (solver.eigenvalues().minCoeff() < psd_floor)
        throw NotDensity("density operator has a negative eigenvalue beyond tolerance");
    return DensityOperator{std::move(m)};
}

DensityOperator DensityOperator::trusted(Mat m) { return DensityOperator{std::move(m)}; }

double DensityOperator::purity() const { return matrix.squaredNorm(); }

DensityOperator pure_density(const StateVector& psi) {
    const StateVector unit = normalize(psi);
    return DensityOperator::trusted(unit.amplitudes * unit.amplitudes.adjoint());
}

DensityOperator density_from_ensemble(const std::vector<StateVector>& states,
                                      const std::vector<double>& weights) {
    if (states.empty() || states.size() != weights.size())
        throw DimMismatch("ensemble needs equally many states and weights");
    const int d = states.front().dim();
    double sum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw BadWeights("ensemble weights must be non-negative");
        sum += w;
    }
    if (std::abs(sum - 1.0) > tol::weights) throw BadWeights("ensemble weights must sum to 1");
    Mat rho = Mat::Zero(d, d);
    for (std::size_t i = 0; i < states.size(); ++i) {
        if (states[i].dim() != d) throw DimMismatch("ensemble states must share a dimension");
        const StateVector unit = normalize(states[i]);
        rho.noalias() += weights[i] * (unit.amplitudes * unit.amplitudes.adjoint());
    }
    return DensityOperator::trusted(std::move(rho));
}

CompositeSpace::CompositeSpace(std::vector<int> d) : dims(std::move(d)) {
    if (dims.empty()) throw DimMismatch("composite space needs at least one factor");
    for (int di : dims)
        if (di < 1) throw DimMismatch("composite factor dimensions must be >= 1");
}

int CompositeSpace::total_dim() const {
    return std::accumulate(dims.begin(), dims.end(), 1, std::multiplies<int>());
}

StateVector tensor(const StateVector& a, const StateVector& b) {
    Vec out(a.dim() * b.dim());
    for (int i = 0; i < a.dim(); ++i)
        out.segment(i * b.dim(), b.dim()) = a.amplitudes(i) * b.amplitudes;
    return StateVector{std::move(out)};
}

Mat tensor(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

DensityOperator partial_trace(const DensityOperator& rho, const CompositeSpace& space,
                              int traced) {
    const int m = space.factors();
    if (traced < 0 || traced >= m) throw DimMismatch("traced factor index out of range");
    if (rho.dim() != space.total_dim())
        throw DimMismatch("density operator does not live on the composite space");

    // Strides for the mixed-radix index, leftmost factor slowest.
    std::vector<long> stride(m);
    long s = 1;
    for (int k = m - 1; k >= 0; --k) {
        stride[k] = s;
        s *= space.dims[k];
    }
    std::vector<int> kept_dims;
    std::vector<long> kept_stride;
    for (int k = 0; k < m; ++k)
        if (k != traced) {
            kept_dims.push_back(space.dims[k]);
            kept_stride.push_back(stride[k]);
        }
    long reduced_dim = 1;
    for (int dk : kept_dims) reduced_dim *= dk;

    // Map a reduced index to the base full index (traced digit = 0).
    auto base_index = [&](long r) {
        long full = 0;
        for (int k = static_cast<int>(kept_dims.size()) - 1; k >= 0; --k) {
            full += (r % kept_dims[k]) * kept_stride[k];
            r /= kept_dims[k];
        }
        return full;
    };

    Mat out = Mat::Zero(reduced_dim, reduced_dim);
    const long dt = space.dims[traced];
    const long st = stride[traced];
    for (long ra = 0; ra < reduced_dim; ++ra) {
        const long base_a = base_index(ra);
        for (long rb = 0; rb < reduced_dim; ++rb) {
            const long base_b = base_index(rb);
            Cplx acc = 0.0;
            for (long j = 0; j < dt; ++j) acc += rho.matrix(base_a + j * st, base_b + j * st);
            out(ra, rb) = acc;
        }
    }
    return DensityOperator::trusted(std::move(out));
}

}  // namespace clab
