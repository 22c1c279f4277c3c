#include "clab/qsd.hpp"

#include <cmath>
#include <limits>

#include "clab/constants.hpp"

namespace clab {

namespace {

bool is_exactly_diagonal(const Mat& m) {
    for (int j = 0; j < m.cols(); ++j)
        for (int i = 0; i < m.rows(); ++i)
            if (i != j && m(i, j) != Cplx(0.0, 0.0)) return false;
    return true;
}

// Per-run tables: diagonal models step in O(dim) per channel, dense models via
// precomputed A and A^2 matvecs, mass-density models via the correlated-field
// quadratic form. Collapse operators of correlated models are diagonal by
// contract; the Hamiltonian may still be dense.
struct Compiled {
    int dim = 0;
    double hbar = 1.0;
    double eta = 0.0;
    double dt = 0.0;
    bool ops_diagonal = false;
    bool h_diagonal = false;
    bool correlated = false;

    Eigen::VectorXd h_diag;
    std::vector<Eigen::VectorXd> op_diag;

    const Mat* h = nullptr;
    const std::vector<Mat>* ops = nullptr;
    std::vector<Mat> op_sq;

    const CorrelatedFieldNoise* noise = nullptr;
    Eigen::MatrixXd step_covariance;  // E[dW dW^T] for one step (dt included)

    // workspaces
    Eigen::VectorXd probs, coef, dw;
    Eigen::MatrixXd btilde, cb;
    Vec hpsi, apsi, sqpsi, dpsi;
};

Compiled compile(const CollapseModel& model, double dt) {
    Compiled c;
    c.dim = model.dim();
    c.hbar = model.hbar;
    c.eta = model.eta;
    c.dt = dt;
    c.correlated = model.correlated();

    c.h_diagonal = is_exactly_diagonal(model.hamiltonian);
    c.ops_diagonal = true;
    for (const Mat& a : model.collapse_ops)
        c.ops_diagonal = c.ops_diagonal && is_exactly_diagonal(a);

    if (c.h_diagonal) c.h_diag = model.hamiltonian.diagonal().real();
    else c.h = &model.hamiltonian;

    if (c.ops_diagonal) {
        for (const Mat& a : model.collapse_ops) c.op_diag.push_back(a.diagonal().real());
    } else {
        c.ops = &model.collapse_ops;
        c.op_sq.reserve(model.collapse_ops.size());
        for (const Mat& a : model.collapse_ops) c.op_sq.push_back(a * a);
    }

    if (c.correlated) {
        c.noise = &*model.field_noise;
        const int g = c.noise->size();
        c.step_covariance = c.noise->covariance();
        c.btilde.resize(g, c.dim);
        c.cb.resize(g, c.dim);
        c.dw.resize(g);
    }

    c.probs.resize(c.dim);
    c.coef.resize(c.dim);
    c.hpsi.resize(c.dim);
    c.apsi.resize(c.dim);
    c.sqpsi.resize(c.dim);
    c.dpsi.resize(c.dim);
    return c;
}

// One Euler-Maruyama step on a unit-norm state; returns the pre-renormalization norm.
double do_step(Vec& psi, Compiled& c, RngStream& stream) {
    const double dt = c.dt;
    if (c.ops_diagonal) {
        // Channel terms are elementwise: accumulate a real coefficient per basis state.
        c.probs = psi.cwiseAbs2();
        c.coef.setZero();
        if (c.correlated) {
            const int g = c.noise->size();
            for (int m = 0; m < g; ++m) {
                const double mean = c.probs.dot(c.op_diag[m]);
                c.btilde.row(m) = (c.op_diag[m].array() - mean).transpose();
            }
            c.dw = c.noise->sample(stream);
            c.cb.noalias() = c.step_covariance * c.btilde;
            c.coef.noalias() = c.btilde.transpose() * c.dw;
            c.coef.noalias() -= 0.5 * c.btilde.cwiseProduct(c.cb).colwise().sum().transpose();
        } else if (c.eta > 0.0) {
            const double root = std::sqrt(c.eta * dt);
            for (const Eigen::VectorXd& a : c.op_diag) {
                const double mean = c.probs.dot(a);
                const double dw = root * stream.normal();
                c.coef.array() +=
                    (a.array() - mean) * dw - 0.5 * c.eta * dt * (a.array() - mean).square();
            }
        }
        if (c.h_diagonal) {
            const double phase_scale = dt / c.hbar;
            for (int k = 0; k < c.dim; ++k)
                psi(k) *= Cplx(1.0 + c.coef(k), -phase_scale * c.h_diag(k));
        } else {
            c.hpsi.noalias() = (*c.h) * psi;
            const Cplx unitary_scale(0.0, -dt / c.hbar);
            for (int k = 0; k < c.dim; ++k)
                psi(k) = psi(k) * (1.0 + c.coef(k)) + unitary_scale * c.hpsi(k);
        }
    } else {
        if (c.h_diagonal) c.hpsi = c.h_diag.cast<Cplx>().cwiseProduct(psi);
        else c.hpsi.noalias() = (*c.h) * psi;
        c.dpsi = Cplx(0.0, -dt / c.hbar) * c.hpsi;
        if (c.eta > 0.0) {
            const double root = std::sqrt(c.eta * dt);
            for (std::size_t n = 0; n < c.ops->size(); ++n) {
                c.apsi.noalias() = (*c.ops)[n] * psi;
                const double mean = psi.dot(c.apsi).real();
                const double dw = root * stream.normal();
                c.sqpsi.noalias() = c.op_sq[n] * psi;
                c.dpsi += dw * (c.apsi - mean * psi) -
                          (0.5 * c.eta * dt) *
                              (c.sqpsi - 2.0 * mean * c.apsi + mean * mean * psi);
            }
        }
        psi += c.dpsi;
    }
    const double pre_norm = psi.norm();
    if (!(pre_norm > 1e-300) || !std::isfinite(pre_norm))
        throw ZeroNorm("state norm collapsed or became non-finite during stepping; reduce dt");
    psi /= pre_norm;
    return pre_norm;
}

}  // namespace

const char* to_string(ModelFamily family) {
    switch (family) {
        case ModelFamily::hamiltonian: return "hamiltonian";
        case ModelFamily::position: return "position";
        case ModelFamily::number: return "number";
        case ModelFamily::mass_density: return "mass_density";
    }
    return "unknown";
}

void CollapseModel::check() const {
    if (hamiltonian.rows() != hamiltonian.cols() || hamiltonian.rows() < 1)
        throw DimMismatch("Hamiltonian must be square and non-empty");
    if ((hamiltonian - hamiltonian.adjoint()).cwiseAbs().maxCoeff() > tol::hermitian)
        throw NotHermitian("Hamiltonian is not Hermitian within tolerance");
    for (const Mat& a : collapse_ops) {
        if (a.rows() != hamiltonian.rows() || a.cols() != hamiltonian.cols())
            throw DimMismatch("collapse operator dimension mismatch");
        if ((a - a.adjoint()).cwiseAbs().maxCoeff() > tol::hermitian)
            throw NotHermitian("collapse operators must be Hermitian");
    }
    if (!(eta >= 0.0)) throw BadParameter("noise strength eta must be >= 0");
    if (!(hbar > 0.0)) throw BadParameter("hbar must be positive");
    if (correlated()) {
        if (field_noise->size() != static_cast<int>(collapse_ops.size()))
            throw DimMismatch("one correlated noise channel per collapse operator required");
        for (const Mat& a : collapse_ops)
            if (!is_exactly_diagonal(a))
                throw BadParameter(
                    "correlated-field models require diagonal collapse operators");
    }
}

void QsdConfig::check() const {
    if (!(dt > 0.0)) throw BadParameter("dt must be positive");
    if (!(t_max >= dt)) throw BadParameter("t_max must be at least one step");
    if (record_stride < 1) throw BadParameter("record_stride must be >= 1");
    if (!(collapse_epsilon > 0.0 && collapse_epsilon < 1.0))
        throw BadParameter("collapse_epsilon must lie in (0, 1)");
}

Vec qsd_increment(const StateVector& psi, const CollapseModel& model,
                  const Eigen::VectorXd& noise_values, double dt) {
    model.check();
    if (psi.dim() != model.dim()) throw DimMismatch("state/model dimension mismatch");
    if (noise_values.size() != static_cast<Eigen::Index>(model.collapse_ops.size()))
        throw DimMismatch("one noise value per collapse operator required");
    if (!(dt > 0.0)) throw BadParameter("dt must be positive");

    const Vec& v = psi.amplitudes;
    const double n2 = v.squaredNorm();
    if (!(n2 > 0.0)) throw ZeroNorm("cannot step a zero state");

    Vec dpsi = Cplx(0.0, -dt / model.hbar) * (model.hamiltonian * v);
    const std::size_t g = model.collapse_ops.size();
    std::vector<Vec> apsi(g);
    std::vector<double> mean(g);
    for (std::size_t n = 0; n < g; ++n) {
        apsi[n] = model.collapse_ops[n] * v;
        mean[n] = v.dot(apsi[n]).real() / n2;
        dpsi += noise_values(n) * (apsi[n] - mean[n] * v);
    }
    if (model.correlated()) {
        // Drift uses the full rate covariance R = C/dt of the field.
        const Eigen::MatrixXd& cov = model.field_noise->covariance();
        const double field_dt = model.field_noise->dt();
        for (std::size_t m = 0; m < g; ++m)
            for (std::size_t n = 0; n < g; ++n) {
                const double rate = cov(m, n) / field_dt;
                dpsi -= (0.5 * rate * dt) *
                        (model.collapse_ops[m] * (apsi[n] - mean[n] * v) -
                         mean[m] * (apsi[n] - mean[n] * v));
            }
    } else {
        for (std::size_t n = 0; n < g; ++n) {
            const Vec centered = apsi[n] - mean[n] * v;
            dpsi -= (0.5 * model.eta * dt) *
                    (model.collapse_ops[n] * centered - mean[n] * centered);
        }
    }
    return dpsi;
}

std::pair<StateVector, double> step(const StateVector& psi, const CollapseModel& model,
                                    const QsdConfig& config, RngStream& stream) {
    model.check();
    config.check();
    if (psi.dim() != model.dim()) throw DimMismatch("state/model dimension mismatch");
    Compiled c = compile(model, config.dt);
    Vec v = normalize(psi).amplitudes;
    const double pre_norm = do_step(v, c, stream);
    return {StateVector{std::move(v)}, pre_norm};
}

Mat reference_basis(const CollapseModel& model) {
    if (model.collapse_ops.empty()) {
        if (is_exactly_diagonal(model.hamiltonian)) return Mat();
        return eigendecompose(HermitianOperator::trusted(model.hamiltonian)).vectors;
    }
    if (is_exactly_diagonal(model.collapse_ops.front())) return Mat();
    return eigendecompose(HermitianOperator::trusted(model.collapse_ops.front())).vectors;
}

TrajectoryRecord run_trajectory(const StateVector& psi0, const CollapseModel& model,
                                const QsdConfig& config, RngStream& stream,
                                const RecordHook& hook) {
    model.check();
    config.check();
    if (psi0.dim() != model.dim()) throw DimMismatch("state/model dimension mismatch");
    if (model.correlated()) {
        const double noise_dt = model.field_noise->dt();
        if (std::abs(noise_dt - config.dt) > 1e-12 * std::max(noise_dt, config.dt))
            throw BadParameter("field noise was built for a different dt than the run uses");
    }

    Compiled c = compile(model, config.dt);
    Vec psi = normalize(psi0).amplitudes;

    const Mat basis = reference_basis(model);
    const bool computational = basis.size() == 0;
    auto populations = [&](const Vec& v) -> Eigen::VectorXd {
        if (computational) return v.cwiseAbs2();
        return (basis.adjoint() * v).cwiseAbs2();
    };

    const long n_steps = std::max<long>(1, std::llround(config.t_max / config.dt));
    TrajectoryRecord rec;
    rec.n_steps = n_steps;
    const long n_records = n_steps / config.record_stride + 2;
    rec.times.reserve(n_records);
    rec.populations.reserve(n_records);
    rec.norms.reserve(n_records);

    int record_index = 0;
    rec.times.push_back(0.0);
    rec.populations.push_back(populations(psi));
    rec.norms.push_back(1.0);
    if (hook) hook(record_index++, 0.0, psi);

    const double threshold = 1.0 - config.collapse_epsilon;
    bool collapsed = rec.populations.front().maxCoeff() >= threshold;
    if (collapsed) rec.collapse_time = 0.0;
    Eigen::VectorXd pops = rec.populations.front();
    for (long s = 1; s <= n_steps; ++s) {
        const double pre_norm = do_step(psi, c, stream);
        rec.max_norm_deviation = std::max(rec.max_norm_deviation, std::abs(pre_norm - 1.0));
        const double t = static_cast<double>(s) * config.dt;
        pops = populations(psi);
        if (!collapsed && pops.maxCoeff() >= threshold) {
            collapsed = true;
            rec.collapse_time = t;
        }
        if (s % config.record_stride == 0 || s == n_steps) {
            rec.times.push_back(t);
            rec.populations.push_back(pops);
            rec.norms.push_back(pre_norm);
            if (hook) hook(record_index++, t, psi);
        }
    }

    Eigen::Index arg_max = 0;
    const double final_max = pops.maxCoeff(&arg_max);
    rec.outcome = final_max >= threshold ? static_cast<int>(arg_max) : -1;
    rec.final_state = StateVector{std::move(psi)};
    return rec;
}

// --- factories ----------------------------------------------------------------------------------

CollapseModel make_hamiltonian_model(const HermitianOperator& h, double eta) {
    CollapseModel m;
    m.hamiltonian = h.matrix;
    m.collapse_ops = {h.matrix};
    m.eta = eta;
    m.label = ModelFamily::hamiltonian;
    m.check();
    return m;
}

CollapseModel make_position_model(const HermitianOperator& h,
                                  const std::vector<double>& site_positions, double eta) {
    if (static_cast<int>(site_positions.size()) != h.dim())
        throw DimMismatch("one site position per basis state required");
    CollapseModel m;
    m.hamiltonian = h.matrix;
    Mat a = Mat::Zero(h.dim(), h.dim());
    for (int k = 0; k < h.dim(); ++k) a(k, k) = site_positions[k];
    m.collapse_ops = {std::move(a)};
    m.eta = eta;
    m.label = ModelFamily::position;
    m.check();
    return m;
}

CollapseModel make_number_model(const HermitianOperator& h, const std::vector<int>& mode_dims,
                                double eta) {
    long total = 1;
    for (int d : mode_dims) {
        if (d < 1) throw BadParameter("mode dimensions must be >= 1");
        total *= d;
    }
    if (total != h.dim()) throw DimMismatch("product of mode dimensions must match dim");
    CollapseModel m;
    m.hamiltonian = h.matrix;
    // Mixed-radix digit `mode` of the basis index is that mode's occupation.
    const int n_modes = static_cast<int>(mode_dims.size());
    std::vector<long> stride(n_modes);
    long s = 1;
    for (int k = n_modes - 1; k >= 0; --k) {
        stride[k] = s;
        s *= mode_dims[k];
    }
    for (int mode = 0; mode < n_modes; ++mode) {
        Mat a = Mat::Zero(h.dim(), h.dim());
        for (long idx = 0; idx < total; ++idx)
            a(idx, idx) = static_cast<double>((idx / stride[mode]) % mode_dims[mode]);
        m.collapse_ops.push_back(std::move(a));
    }
    m.eta = eta;
    m.label = ModelFamily::number;
    m.check();
    return m;
}

CollapseModel make_mass_density_model(const HermitianOperator& h,
                                      const std::vector<double>& masses,
                                      const std::vector<std::vector<Eigen::Vector3d>>& configurations,
                                      const std::vector<Eigen::Vector3d>& grid, double sigma_noise,
                                      double kappa, double dt) {
    const int dim = h.dim();
    if (static_cast<int>(configurations.size()) != dim)
        throw DimMismatch("one particle configuration per basis state required");
    if (masses.empty()) throw BadParameter("at least one particle required");
    double total_mass = 0.0;
    for (double mp : masses) {
        if (!(mp >= 0.0)) throw BadParameter("particle masses must be >= 0");
        total_mass += mp;
    }
    if (!(total_mass > 0.0)) throw BadParameter("total mass must be positive");
    if (grid.empty()) throw BadParameter("density grid must be non-empty");
    if (!(sigma_noise > 0.0)) throw BadSigma("smearing length sigma_noise must be positive");

    const int cells = static_cast<int>(grid.size());
    std::vector<Eigen::VectorXd> cell_diag(cells, Eigen::VectorXd::Zero(dim));
    const double inv_two_sigma_sq = 1.0 / (2.0 * sigma_noise * sigma_noise);
    Eigen::VectorXd g(cells);
    for (int k = 0; k < dim; ++k) {
        if (configurations[k].size() != masses.size())
            throw DimMismatch("each configuration must place every particle");
        for (std::size_t p = 0; p < masses.size(); ++p) {
            for (int cell = 0; cell < cells; ++cell)
                g(cell) = std::exp(-(grid[cell] - configurations[k][p]).squaredNorm() *
                                   inv_two_sigma_sq);
            const double support = g.sum();
            if (!(support > 0.0))
                throw BadParameter("a particle configuration has no support on the density grid");
            // Per-particle normalization: each particle deposits exactly its mass.
            for (int cell = 0; cell < cells; ++cell)
                cell_diag[cell](k) += masses[p] * g(cell) / support;
        }
    }

    CollapseModel m;
    m.hamiltonian = h.matrix;
    for (int cell = 0; cell < cells; ++cell) {
        Mat a = Mat::Zero(dim, dim);
        a.diagonal() = cell_diag[cell].cast<Cplx>();
        m.collapse_ops.push_back(std::move(a));
    }
    m.eta = 0.0;
    m.label = ModelFamily::mass_density;
    m.hbar = consts::hbar;  // SI-unit family
    m.field_noise.emplace(grid, kappa, sigma_noise, dt);
    m.check();
    return m;
}

}  // namespace clab
