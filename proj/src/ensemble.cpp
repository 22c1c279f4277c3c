#include "clab/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include <boost/math/special_functions/gamma.hpp>

namespace clab {

namespace {

constexpr int kHistogramBins = 50;

// First trajectory error encountered, tagged with the lowest trajectory index.
struct ErrorSlot {
    std::mutex mutex;
    long index = -1;
    std::exception_ptr error;

    void offer(long idx, std::exception_ptr err) {
        std::lock_guard<std::mutex> lock(mutex);
        if (index < 0 || idx < index) {
            index = idx;
            error = std::move(err);
        }
    }

    void rethrow_if_set() const {
        if (index < 0) return;
        try {
            std::rethrow_exception(error);
        } catch (const std::exception& e) {
            throw Error("trajectory " + std::to_string(index) + ": " + e.what());
        }
    }
};

// Runs `body(trajectory_index, block_index)` over all trajectories, blocks
// claimed atomically by `workers` threads. Exceptions are captured per
// trajectory and the lowest-index one is rethrown after all threads join.
void run_blocked(long n, int workers, ErrorSlot& errors,
                 const std::function<void(long, long)>& body) {
    const long blocks = (n + EnsembleConfig::block_size - 1) / EnsembleConfig::block_size;
    std::atomic<long> next_block{0};
    auto worker = [&]() {
        for (;;) {
            const long b = next_block.fetch_add(1);
            if (b >= blocks) return;
            const long begin = b * EnsembleConfig::block_size;
            const long end = std::min(n, begin + EnsembleConfig::block_size);
            for (long idx = begin; idx < end; ++idx) {
                try {
                    body(idx, b);
                } catch (...) {
                    errors.offer(idx, std::current_exception());
                }
            }
        }
    };
    const int n_threads = std::min<long>(workers, blocks);
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (int w = 0; w < n_threads; ++w) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
}

void fill_histogram_and_median(OutcomeStats& stats, std::vector<double> times, double t_max) {
    stats.collapse_time_edges.resize(kHistogramBins + 1);
    for (int b = 0; b <= kHistogramBins; ++b)
        stats.collapse_time_edges[b] = t_max * static_cast<double>(b) / kHistogramBins;
    stats.collapse_time_counts.assign(kHistogramBins, 0);

    std::vector<double> finite;
    finite.reserve(times.size());
    for (double t : times)
        if (std::isfinite(t)) finite.push_back(t);
    for (double t : finite) {
        int bin = static_cast<int>(std::floor(t / t_max * kHistogramBins));
        bin = std::clamp(bin, 0, kHistogramBins - 1);
        ++stats.collapse_time_counts[bin];
    }
    if (!finite.empty()) {
        std::sort(finite.begin(), finite.end());
        const std::size_t m = finite.size();
        stats.median_collapse_time =
            m % 2 ? finite[m / 2] : 0.5 * (finite[m / 2 - 1] + finite[m / 2]);
    }
}

OutcomeStats build_stats(const std::vector<int>& outcomes, const std::vector<double>& times,
                         const std::vector<double>& expected, double t_max) {
    OutcomeStats stats;
    stats.n_total = static_cast<long>(outcomes.size());
    stats.counts.assign(expected.size(), 0);
    for (int o : outcomes) {
        if (o < 0) ++stats.unresolved;
        else ++stats.counts[o];
    }
    const long resolved = stats.n_total - stats.unresolved;
    stats.frequencies.assign(expected.size(), 0.0);
    if (resolved > 0) {
        for (std::size_t k = 0; k < stats.counts.size(); ++k)
            stats.frequencies[k] = static_cast<double>(stats.counts[k]) / resolved;
        const ChiSquareResult chi = chi_square_born(stats.counts, expected);
        stats.chi_square = chi.statistic;
        stats.p_value = chi.p_value;
        stats.dof = chi.dof;
    }
    fill_histogram_and_median(stats, times, t_max);
    return stats;
}

}  // namespace

void EnsembleConfig::check() const {
    if (n_trajectories < 1) throw BadParameter("n_trajectories must be >= 1");
    if (workers < 1) throw BadParameter("workers must be >= 1");
    if (record_first < 0 || record_first > n_trajectories)
        throw BadParameter("record_first must lie in [0, n_trajectories]");
    if (secondary_average < 0 || secondary_average > n_trajectories)
        throw BadParameter("secondary_average must lie in [0, n_trajectories]");
    if (secondary_average % block_size != 0)
        throw BadParameter("secondary_average must be a multiple of the block size");
}

ChiSquareResult chi_square_born(const std::vector<long>& counts,
                                const std::vector<double>& expected) {
    if (counts.empty() || counts.size() != expected.size())
        throw DimMismatch("counts and expected probabilities must align");
    double prob_sum = 0.0;
    long n = 0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        if (counts[k] < 0) throw BadParameter("counts must be >= 0");
        if (!(expected[k] >= 0.0)) throw BadParameter("expected probabilities must be >= 0");
        prob_sum += expected[k];
        n += counts[k];
    }
    if (std::abs(prob_sum - 1.0) > tol::weights)
        throw BadWeights("expected probabilities must sum to 1");
    if (n == 0) throw BadParameter("chi-square needs at least one observation");

    ChiSquareResult result;
    long kept = 0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        if (expected[k] == 0.0) {
            if (counts[k] > 0)
                throw DegenerateExpected("observed counts in a zero-probability bin");
            continue;  // impossible bin, never observed: carries no information
        }
        ++kept;
        const double mean = static_cast<double>(n) * expected[k];
        const double dev = static_cast<double>(counts[k]) - mean;
        result.statistic += dev * dev / mean;
    }
    result.dof = kept - 1;
    result.p_value =
        result.dof > 0 ? boost::math::gamma_q(0.5 * result.dof, 0.5 * result.statistic) : 1.0;
    return result;
}

double trace_distance(const DensityOperator& a, const DensityOperator& b) {
    if (a.dim() != b.dim()) throw DimMismatch("trace distance needs equal dimensions");
    Eigen::SelfAdjointEigenSolver<Mat> solver(a.matrix - b.matrix);
    if (solver.info() != Eigen::Success)
        throw ConvergenceFailure("eigendecomposition failed in trace distance");
    return 0.5 * solver.eigenvalues().cwiseAbs().sum();
}

QsdEnsembleResult run_qsd_ensemble(const StateVector& psi0, const CollapseModel& model,
                                   const QsdConfig& qsd_config, const EnsembleConfig& config) {
    model.check();
    qsd_config.check();
    config.check();
    if (config.engine != EngineKind::qsd)
        throw BadParameter("run_qsd_ensemble requires the qsd engine");
    const StateVector unit = normalize(psi0);

    const Mat basis = reference_basis(model);
    QsdEnsembleResult result;
    result.expected_probs.resize(model.dim());
    {
        const Eigen::VectorXd p =
            basis.size() ? born_probabilities(unit, basis) : born_probabilities(unit);
        for (int k = 0; k < model.dim(); ++k) result.expected_probs[k] = p(k);
    }

    // Recording grid, matching run_trajectory's schedule.
    const long n_steps = std::max<long>(1, std::llround(qsd_config.t_max / qsd_config.dt));
    result.times.push_back(0.0);
    for (long s = 1; s <= n_steps; ++s)
        if (s % qsd_config.record_stride == 0 || s == n_steps)
            result.times.push_back(static_cast<double>(s) * qsd_config.dt);
    const std::size_t n_records = result.times.size();

    const long n = config.n_trajectories;
    const long blocks = (n + EnsembleConfig::block_size - 1) / EnsembleConfig::block_size;
    result.outcomes.assign(n, -1);
    result.collapse_times.assign(n, std::numeric_limits<double>::quiet_NaN());
    result.first_records.resize(config.record_first);

    const int dim = model.dim();
    std::vector<std::vector<Mat>> block_density;
    if (config.record_density)
        block_density.assign(blocks, std::vector<Mat>(n_records, Mat::Zero(dim, dim)));
    std::vector<double> block_norm_dev(blocks, 0.0);

    ErrorSlot errors;
    run_blocked(n, config.workers, errors, [&](long idx, long b) {
        RecordHook hook;
        if (config.record_density) {
            std::vector<Mat>& acc = block_density[b];
            hook = [&acc](int record_index, double, const Vec& psi) {
                acc[record_index].noalias() += psi * psi.adjoint();
            };
        }
        RngStream stream = make_stream(config.master_seed, static_cast<std::uint64_t>(idx));
        TrajectoryRecord rec = run_trajectory(unit, model, qsd_config, stream, hook);
        result.outcomes[idx] = rec.outcome;
        result.collapse_times[idx] = rec.collapse_time;
        block_norm_dev[b] = std::max(block_norm_dev[b], rec.max_norm_deviation);
        if (idx < config.record_first) result.first_records[idx] = std::move(rec);
    });
    errors.rethrow_if_set();

    if (config.record_density) {
        // Block-ordered reduction keeps the sums independent of thread scheduling.
        result.mean_density.assign(n_records, Mat::Zero(dim, dim));
        for (long b = 0; b < blocks; ++b)
            for (std::size_t r = 0; r < n_records; ++r)
                result.mean_density[r] += block_density[b][r];
        if (config.secondary_average > 0) {
            const long k_blocks = config.secondary_average / EnsembleConfig::block_size;
            result.mean_density_secondary.assign(n_records, Mat::Zero(dim, dim));
            for (long b = 0; b < k_blocks; ++b)
                for (std::size_t r = 0; r < n_records; ++r)
                    result.mean_density_secondary[r] += block_density[b][r];
            for (Mat& m : result.mean_density_secondary)
                m /= static_cast<double>(config.secondary_average);
        }
        for (Mat& m : result.mean_density) m /= static_cast<double>(n);
    }
    for (long b = 0; b < blocks; ++b)
        result.max_norm_deviation = std::max(result.max_norm_deviation, block_norm_dev[b]);

    result.stats = build_stats(result.outcomes, result.collapse_times, result.expected_probs,
                               qsd_config.t_max);
    return result;
}

CqEnsembleResult run_cq_ensemble(const StateVector& qubit0, const ClassicalState& classical0,
                                 const CqToyConfig& cq_config, const EnsembleConfig& config) {
    cq_config.check();
    config.check();
    if (config.engine != EngineKind::cq)
        throw BadParameter("run_cq_ensemble requires the cq engine");
    const StateVector unit = normalize(qubit0);
    if (unit.dim() != 2) throw DimMismatch("hybrid toy qubit must be two-dimensional");

    const long n = config.n_trajectories;
    CqEnsembleResult result;
    result.expected_probs = {std::norm(unit.amplitudes(0)), std::norm(unit.amplitudes(1))};
    result.outcomes.assign(n, -1);
    result.jump_counts.assign(n, 0);
    result.first_jump_times.assign(n, std::numeric_limits<double>::quiet_NaN());
    result.first_records.resize(config.record_first);

    ErrorSlot errors;
    run_blocked(n, config.workers, errors, [&](long idx, long) {
        RngStream stream = make_stream(config.master_seed, static_cast<std::uint64_t>(idx));
        HybridTrajectory traj = run_cq_trajectory(unit, classical0, cq_config, stream);
        result.outcomes[idx] = traj.outcome;
        result.jump_counts[idx] = traj.jump_count;
        result.first_jump_times[idx] = traj.first_jump_time;
        if (idx < config.record_first) result.first_records[idx] = std::move(traj);
    });
    errors.rethrow_if_set();

    result.stats = build_stats(result.outcomes, result.first_jump_times, result.expected_probs,
                               cq_config.t_max);
    return result;
}

}  // namespace clab
