#include "clab/cq.hpp"

#include <cmath>

namespace clab {

void CqToyConfig::check() const {
    if (!(coupling_b > 0.0)) throw BadParameter("coupling B must be positive");
    if (!(mass > 0.0)) throw BadParameter("mass must be positive");
    if (!(omega > 0.0)) throw BadParameter("omega must be positive");
    if (!(tau > 0.0)) throw BadParameter("jump timescale tau must be positive");
    if (!(dt > 0.0)) throw BadParameter("dt must be positive");
    if (dt > tau / 10.0)
        throw BadParameter("dt must satisfy dt <= tau/10 so jump probabilities stay small");
    if (!(t_max >= dt)) throw BadParameter("t_max must cover at least one step");
    if (record_stride < 1) throw BadParameter("record_stride must be >= 1");
}

double outcome_force(int outcome, const CqToyConfig& config) {
    if (outcome < 0) return 0.0;
    return outcome_sign(outcome) * config.coupling_b * config.omega;
}

CqJumpResult cq_jump(Vec& qubit, ClassicalState& classical, const CqToyConfig& config,
                     RngStream& stream) {
    if (qubit.size() != 2) throw DimMismatch("hybrid toy qubit must be two-dimensional");
    CqJumpResult result;
    if (stream.uniform() > config.dt / config.tau) return result;

    const double n2 = qubit.squaredNorm();
    if (!(n2 > 0.0)) throw ZeroNorm("cannot project a zero qubit state");
    const double p0 = std::norm(qubit(0)) / n2;
    result.jumped = true;
    result.drawn = stream.uniform() <= p0 ? 0 : 1;
    qubit.setZero();
    qubit(result.drawn) = 1.0;
    classical.p += outcome_sign(result.drawn) * config.coupling_b;
    return result;
}

ClassicalState classical_drift(const ClassicalState& state, double qubit_outcome_force,
                               const CqToyConfig& config, double dt) {
    ClassicalState next = state;
    next.p += dt * (qubit_outcome_force - config.mass * config.omega * config.omega * state.q);
    next.q += dt * next.p / config.mass;
    return next;
}

HybridTrajectory run_cq_trajectory(const StateVector& qubit0, const ClassicalState& classical0,
                                   const CqToyConfig& config, RngStream& stream) {
    config.check();
    if (qubit0.dim() != 2) throw DimMismatch("hybrid toy qubit must be two-dimensional");
    Vec qubit = normalize(qubit0).amplitudes;
    ClassicalState classical = classical0;

    const long n_steps = std::max<long>(1, std::llround(config.t_max / config.dt));
    HybridTrajectory traj;
    traj.times.reserve(n_steps / config.record_stride + 2);

    auto record = [&](double t, bool jumped) {
        traj.times.push_back(t);
        const double n2 = qubit.squaredNorm();
        traj.populations.push_back({std::norm(qubit(0)) / n2, std::norm(qubit(1)) / n2});
        traj.classical.push_back(classical);
        traj.jump_flags.push_back(jumped ? 1 : 0);
    };
    record(0.0, false);

    int outcome = -1;
    for (long s = 1; s <= n_steps; ++s) {
        classical = classical_drift(classical, outcome_force(outcome, config), config, config.dt);
        const CqJumpResult jump = cq_jump(qubit, classical, config, stream);
        const double t = static_cast<double>(s) * config.dt;
        if (jump.jumped) {
            ++traj.jump_count;
            traj.jump_times.push_back(t);
            if (outcome < 0) {
                outcome = jump.drawn;
                traj.first_jump_time = t;
            }
        }
        if (s % config.record_stride == 0 || s == n_steps) record(t, jump.jumped);
    }

    traj.outcome = outcome;
    traj.final_qubit = std::move(qubit);
    return traj;
}

}  // namespace clab
