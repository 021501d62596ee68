#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "rateindep/dissipation.hpp"
#include "rateindep/energy.hpp"
#include "rateindep/errors.hpp"
#include "rateindep/linalg.hpp"
#include "rateindep/partition.hpp"
#include "rateindep/piecewise_curve.hpp"
#include "rateindep/prox_step.hpp"
#include "rateindep/spd_operator.hpp"

namespace rateindep {

enum class WarmStart { PreviousState, Predictor };

struct StepRecord {
    double residual = 0.0;
    int iterations = 0;
    double energy = 0.0;                 // E(t_k, z_k)
    double dissipation_increment = 0.0;  // tau_k R_eps((z_k - z_{k-1})/tau_k), evaluated unscaled
    Vec driving_load;                    // load value the step minimized against
};

struct DiscreteTrajectory {
    Partition partition;
    std::vector<Vec> states;  // z_0 ... z_N
    double eps = 0.0;
    std::vector<StepRecord> steps;  // per step 1..N
    double lambda_rho = 0.0;        // semiconvexity modulus used for this run
    double rho = 0.0;               // state-ball radius actually observed

    int dim() const { return static_cast<int>(states.front().size()); }

    Vec increment(std::size_t k) const { return states[k + 1] - states[k]; }

    Vec rate(std::size_t k) const {
        Vec d = increment(k);
        double tau = partition.tau(k);
        for (auto& x : d) x /= tau;
        return d;
    }

    PiecewiseLinearCurve affine_interpolant() const { return PiecewiseLinearCurve(partition.times, states); }

    double max_state_norm() const {
        double m = 0.0;
        for (const auto& z : states) m = std::max(m, norm2(z));
        return m;
    }
};

// Interpolant views over a trajectory: the continuous affine one, the
// left/right constant ones, and the right time marker.
struct Interpolants {
    const DiscreteTrajectory& traj;

    Vec affine(double t) const { return traj.affine_interpolant().eval(t); }

    Vec left_constant(double t) const { return traj.states[left_index(t)]; }

    Vec right_constant(double t) const { return traj.states[right_index(t)]; }

    double right_time(double t) const { return traj.partition.times[right_index(t)]; }

  private:
    // smallest node index with time >= t: marks the interval (t_{k-1}, t_k]
    std::size_t right_index(double t) const {
        const auto& times = traj.partition.times;
        auto it = std::lower_bound(times.begin(), times.end(), t);
        if (it == times.end()) return times.size() - 1;
        return static_cast<std::size_t>(it - times.begin());
    }

    // largest node index with time <= t: marks the interval [t_k, t_{k+1})
    std::size_t left_index(double t) const {
        const auto& times = traj.partition.times;
        auto it = std::upper_bound(times.begin(), times.end(), t);
        return (it == times.begin()) ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
    }
};

struct TrajectoryConfig {
    StepConfig step;
    WarmStart warm = WarmStart::PreviousState;
    double calibration_rho = 0.0;  // 0: calibrate from a coercivity-based ball
};

// Recursive time-incremental minimization over the partition. The
// semiconvexity modulus for the multistart gate is calibrated on a ball that
// covers the a-priori state bound.
inline DiscreteTrajectory solve_trajectory(const SemilinearEnergy& E, const Dissipation& R, const SpdOperator& V,
                                           const Partition& partition, double eps, const Vec& z0,
                                           const TrajectoryConfig& cfg = {}) {
    if (!all_finite(z0)) throw Error(ErrorCode::BadConfig, "initial state must be finite");
    DiscreteTrajectory traj;
    traj.partition = partition;
    traj.eps = eps;
    traj.states.push_back(z0);
    traj.steps.reserve(partition.steps());

    double rho = cfg.calibration_rho;
    if (rho <= 0.0) {
        // coercivity ball from (E(0,z0)+c0) exp(Var l) / c_Z, Euclidean radius
        double cZ = std::sqrt(V.lambda_max());
        double alpha = E.A().ellipticity();
        double lsup = E.load().sup_norm(V);
        double c0 = cZ * cZ / alpha * (1.0 + lsup * lsup);
        double var = E.load().variation(V);
        rho = (E.energy(0.0, z0) + c0) * std::exp(var) / cZ;
        rho = std::max(rho, 2.0 * norm2(z0) + 1.0);
    }
    ConvexityCalibration cal = calibrate_convexity(E.F(), V, E.dim(), rho);
    traj.lambda_rho = cal.lambda;

    Vec prev = z0;
    Vec prev_increment(z0.size(), 0.0);
    for (std::size_t k = 0; k < partition.steps(); ++k) {
        double t_k = partition.times[k + 1];
        double tau = partition.tau(k);
        Vec warm = prev;
        if (cfg.warm == WarmStart::Predictor && k > 0) {
            warm = prev;
            axpy(tau / partition.tau(k - 1), prev_increment, warm);
        }
        Vec load_value = E.load().eval(t_k, Side::At);
        StepResult res;
        try {
            res = incremental_step_with_load(E, R, V, load_value, tau, eps, prev, warm, cfg.step, cal.lambda);
        } catch (const Error& e) {
            throw Error(e.code(), "step " + std::to_string(k + 1) + " at t=" + std::to_string(t_k) + ": " +
                                      e.what());
        }
        StepRecord rec;
        rec.residual = res.residual;
        rec.iterations = res.iterations;
        rec.energy = E.energy(t_k, res.z);
        Vec inc = res.z - prev;
        rec.dissipation_increment = R.value(inc);
        if (eps > 0.0) rec.dissipation_increment += 0.5 * eps / tau * V.quad(inc);
        rec.driving_load = load_value;
        traj.steps.push_back(std::move(rec));
        prev_increment = inc;
        prev = res.z;
        traj.states.push_back(prev);
    }
    traj.rho = traj.max_state_norm();
    return traj;
}

}  // namespace rateindep
