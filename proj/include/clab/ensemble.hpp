#pragma once

// Ensembles of stochastic trajectories with bitwise-reproducible statistics.
// Trajectory i always draws from stream (master_seed, i); trajectories are
// processed in fixed blocks of 100 claimed by worker threads, per-block
// accumulators are summed sequentially within a block and combined in block
// order afterwards, so every statistic is independent of the worker count.
// One consequence used by the tests: averaging the first k*100 trajectories
// of a larger run equals an independent run with n = k*100 bit for bit.

#include <cstdint>
#include <vector>

#include "clab/cq.hpp"
#include "clab/hilbert.hpp"
#include "clab/qsd.hpp"

namespace clab {

enum class EngineKind { qsd, cq };

struct EnsembleConfig {
    long n_trajectories = 1;
    std::uint64_t master_seed = 42;
    int workers = 1;
    EngineKind engine = EngineKind::qsd;
    int record_first = 0;         // keep full per-step records for this many leading trajectories
    long secondary_average = 0;   // extra density average over the first k trajectories
                                  // (multiple of the block size), 0 = off
    bool record_density = true;   // accumulate mean densities (qsd engine)

    static constexpr long block_size = 100;
    void check() const;
};

struct ChiSquareResult {
    double statistic = 0.0;
    double p_value = 1.0;
    long dof = 0;
};

// Pearson chi-square of observed outcome counts against expected Born
// probabilities (summing to 1). Bins with zero expected probability must have
// zero counts (DegenerateExpected otherwise) and drop out of the statistic and
// the dof. p-value from the chi-square survival function with (k-1) dof.
ChiSquareResult chi_square_born(const std::vector<long>& counts,
                                const std::vector<double>& expected);

// 1/2 sum |eigenvalues| of (a - b).
double trace_distance(const DensityOperator& a, const DensityOperator& b);

struct OutcomeStats {
    std::vector<long> counts;         // resolved trajectories per outcome index
    std::vector<double> frequencies;  // counts / n_resolved
    long n_total = 0;
    long unresolved = 0;
    double chi_square = 0.0;
    double p_value = 1.0;
    long dof = 0;
    std::vector<double> collapse_time_edges;  // histogram over resolution times
    std::vector<long> collapse_time_counts;
    double median_collapse_time = std::numeric_limits<double>::quiet_NaN();
};

struct QsdEnsembleResult {
    OutcomeStats stats;
    std::vector<double> times;                // recording grid
    std::vector<Mat> mean_density;            // ensemble average at each recorded time
    std::vector<Mat> mean_density_secondary;  // over the first secondary_average trajectories
    std::vector<TrajectoryRecord> first_records;
    std::vector<int> outcomes;                // per trajectory, -1 unresolved
    std::vector<double> collapse_times;       // per trajectory, NaN if never resolved
    double max_norm_deviation = 0.0;          // worst |pre_norm - 1| across the ensemble
    std::vector<double> expected_probs;       // initial reference-basis populations
};

QsdEnsembleResult run_qsd_ensemble(const StateVector& psi0, const CollapseModel& model,
                                   const QsdConfig& qsd_config, const EnsembleConfig& config);

struct CqEnsembleResult {
    OutcomeStats stats;  // outcome = first projection; times = first jump times
    std::vector<HybridTrajectory> first_records;
    std::vector<int> outcomes;
    std::vector<long> jump_counts;
    std::vector<double> first_jump_times;  // NaN if no jump fired
    std::vector<double> expected_probs;    // initial Born weights
};

CqEnsembleResult run_cq_ensemble(const StateVector& qubit0, const ClassicalState& classical0,
                                 const CqToyConfig& cq_config, const EnsembleConfig& config);

}  // namespace clab
