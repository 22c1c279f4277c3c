#include "clab/lindblad.hpp"

#include <cmath>

namespace clab {

namespace {

// Precomputed channel tables: L, L^dag, L^dag L.
struct Channels {
    std::vector<Mat> l, ldag, ldagl;
    std::vector<double> rates;
};

Channels build_channels(const MasterEquationModel& model) {
    Channels ch;
    for (std::size_t n = 0; n < model.lindblad_ops.size(); ++n) {
        ch.l.push_back(model.lindblad_ops[n]);
        ch.ldag.push_back(model.lindblad_ops[n].adjoint());
        ch.ldagl.push_back(ch.ldag.back() * ch.l.back());
        ch.rates.push_back(model.rates[n]);
    }
    return ch;
}

Mat rhs(const Mat& rho, const Mat& h, double hbar, const Channels& ch) {
    Mat out = Cplx(0.0, -1.0 / hbar) * (h * rho - rho * h);
    for (std::size_t n = 0; n < ch.l.size(); ++n) {
        if (ch.rates[n] == 0.0) continue;
        out += ch.rates[n] * (ch.l[n] * rho * ch.ldag[n] -
                              0.5 * (ch.ldagl[n] * rho + rho * ch.ldagl[n]));
    }
    return out;
}

void rk4_step(Mat& rho, double dt, const Mat& h, double hbar, const Channels& ch) {
    const Mat k1 = rhs(rho, h, hbar, ch);
    const Mat k2 = rhs(rho + 0.5 * dt * k1, h, hbar, ch);
    const Mat k3 = rhs(rho + 0.5 * dt * k2, h, hbar, ch);
    const Mat k4 = rhs(rho + dt * k3, h, hbar, ch);
    rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    // Roundoff hygiene: the exact flow preserves Hermiticity, so fold numerical
    // asymmetry back instead of letting it accumulate.
    rho = 0.5 * (rho + rho.adjoint()).eval();
}

void check_trace(const Mat& rho, double dt) {
    const Cplx tr = rho.trace();
    const bool finite = std::isfinite(tr.real()) && std::isfinite(tr.imag());
    if (!finite || std::abs(tr.real() - 1.0) > 1e-6 || std::abs(tr.imag()) > 1e-6)
        throw StepTooLarge("trace drifted beyond 1e-6 during propagation; dt = " +
                           std::to_string(dt) + " is too large for this model");
}

}  // namespace

void MasterEquationModel::check() const {
    if (hamiltonian.rows() != hamiltonian.cols() || hamiltonian.rows() < 1)
        throw DimMismatch("Hamiltonian must be square and non-empty");
    if ((hamiltonian - hamiltonian.adjoint()).cwiseAbs().maxCoeff() > tol::hermitian)
        throw NotHermitian("Hamiltonian is not Hermitian within tolerance");
    if (lindblad_ops.size() != rates.size())
        throw DimMismatch("one rate per Lindblad operator required");
    for (const Mat& l : lindblad_ops)
        if (l.rows() != hamiltonian.rows() || l.cols() != hamiltonian.cols())
            throw DimMismatch("Lindblad operator dimension mismatch");
    for (double r : rates)
        if (!(r >= 0.0)) throw BadParameter("Lindblad rates must be >= 0");
    if (!(hbar > 0.0)) throw BadParameter("hbar must be positive");
}

Mat lindblad_rhs(const Mat& rho, const MasterEquationModel& model) {
    model.check();
    if (rho.rows() != model.dim() || rho.cols() != model.dim())
        throw DimMismatch("state/model dimension mismatch");
    return rhs(rho, model.hamiltonian, model.hbar, build_channels(model));
}

double max_decay_rate(const MasterEquationModel& model) {
    double max_rate = 0.0;
    for (std::size_t n = 0; n < model.lindblad_ops.size(); ++n) {
        Eigen::SelfAdjointEigenSolver<Mat> solver(model.lindblad_ops[n].adjoint() *
                                                  model.lindblad_ops[n]);
        max_rate = std::max(max_rate, model.rates[n] * solver.eigenvalues().maxCoeff());
    }
    return max_rate;
}

DensityOperator propagate(const DensityOperator& rho0, const MasterEquationModel& model, double t,
                          double dt) {
    model.check();
    if (rho0.dim() != model.dim()) throw DimMismatch("state/model dimension mismatch");
    if (!(t >= 0.0)) throw BadParameter("propagation time must be >= 0");
    if (!(dt > 0.0)) throw BadParameter("dt must be positive");

    const double rate = max_decay_rate(model);
    const double dt_eff = rate > 0.0 ? std::min(dt, 0.01 / rate) : dt;
    const Channels ch = build_channels(model);

    Mat rho = rho0.matrix;
    const long n_full = static_cast<long>(std::floor(t / dt_eff + 1e-9));
    for (long s = 0; s < n_full; ++s) {
        rk4_step(rho, dt_eff, model.hamiltonian, model.hbar, ch);
        check_trace(rho, dt_eff);
    }
    const double remainder = t - static_cast<double>(n_full) * dt_eff;
    if (remainder > 1e-12 * std::max(1.0, t)) {
        rk4_step(rho, remainder, model.hamiltonian, model.hbar, ch);
        check_trace(rho, remainder);
    }
    // Outputs earn slightly relaxed positivity: RK4 can undershoot small
    // eigenvalues at the integration-error level.
    return DensityOperator::from_matrix(std::move(rho), 1e-10, 1e-8, -1e-8);
}

DensitySeries propagate_series(const DensityOperator& rho0, const MasterEquationModel& model,
                               double t, double dt, int record_stride) {
    model.check();
    if (rho0.dim() != model.dim()) throw DimMismatch("state/model dimension mismatch");
    if (!(dt > 0.0)) throw BadParameter("dt must be positive");
    if (!(t >= dt)) throw BadParameter("duration must cover at least one step");
    if (record_stride < 1) throw BadParameter("record_stride must be >= 1");

    const Channels ch = build_channels(model);
    const long n_steps = std::max<long>(1, std::llround(t / dt));

    DensitySeries series;
    Mat rho = rho0.matrix;
    series.times.push_back(0.0);
    series.densities.push_back(rho);
    for (long s = 1; s <= n_steps; ++s) {
        rk4_step(rho, dt, model.hamiltonian, model.hbar, ch);
        check_trace(rho, dt);
        if (s % record_stride == 0 || s == n_steps) {
            series.times.push_back(static_cast<double>(s) * dt);
            series.densities.push_back(rho);
        }
    }
    return series;
}

DensityOperator decoherence_demo(Cplx a, Cplx b, double overlap_decay_rate, double t) {
    const double pa = std::norm(a), pb = std::norm(b);
    if (std::abs(pa + pb - 1.0) > tol::weights)
        throw BadParameter("amplitudes must satisfy |a|^2 + |b|^2 = 1");
    if (!(overlap_decay_rate >= 0.0)) throw BadParameter("decay rate must be >= 0");
    if (!(t >= 0.0)) throw BadParameter("time must be >= 0");
    const double envelope = std::exp(-overlap_decay_rate * t);
    Mat rho(2, 2);
    rho(0, 0) = pa;
    rho(1, 1) = pb;
    rho(0, 1) = a * std::conj(b) * envelope;
    rho(1, 0) = std::conj(rho(0, 1));
    return DensityOperator::trusted(std::move(rho));
}

}  // namespace clab
