#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pdmpnet/model.hpp"
#include "pdmpnet/policy.hpp"
#include "pdmpnet/rng.hpp"

namespace pdmpnet {

/// Advances the edge-coordinate ODE under a fixed control for at most dt with
/// one RK4 step, stopping early (bisection to 1e-14 in time) when the junction
/// or an edge end is reached; steps shorter than 1e-12 do not move.  Returns the time actually advanced; `p` is
/// updated in place.  Throws LeftNetwork / StalledEvent.
double advance(const Dynamics& dyn, int mode, NetworkPoint& p, const Control& c, double dt);

struct ArcSample {
    double t = 0.0;
    NetworkPoint p;
    int control = 0;  ///< index into Arc::controls, in force until the next sample
};

/// Deterministic piece of a path (no mode change).
struct Arc {
    double t_start = 0.0;
    int mode = 0;
    std::vector<ArcSample> samples;
    std::vector<Control> controls;

    double t_end() const { return samples.empty() ? t_start : samples.back().t; }
    const NetworkPoint& end() const { return samples.back().p; }
    /// Control in force at time t.
    const Control& control_at(double t) const;
    /// Position at time t, re-integrated from the preceding sample.
    NetworkPoint position_at(const Dynamics& dyn, double t) const;
};

/// Integrates the controlled flow from x0 over [0, T] with step at most h.
/// Open-loop policies use the schedule started at (x0, mode); feedback
/// policies are re-evaluated at every step.
Arc flow(const Dynamics& dyn, int mode, const NetworkPoint& x0, const Policy& policy, double T,
         double h = 1e-3);

struct JumpSample {
    bool jumped = false;  ///< false: no jump within the arc
    double tau = 0.0;
    NetworkPoint position;
    Control control;
};

/// Thinning against |λ|_0 along an existing arc.
JumpSample sample_jump(const Dynamics& dyn, const Arc& arc, RngStream& rng);

/// Post-jump mode by inverse CDF over the modes in declaration order.
int sample_mode(const std::vector<double>& qrow, RngStream& rng);

struct StopRule {
    double horizon = kInf;
    int max_jumps = -1;  ///< negative: unlimited
};

struct Trajectory {
    std::vector<Arc> arcs;
    std::vector<double> jump_times;
    std::vector<std::pair<NetworkPoint, int>> postjump;
    double horizon = 0.0;

    std::string to_csv(const Dynamics& dyn) const;
};

/// Receives every integration step of a simulated path.
class PathObserver {
public:
    virtual ~PathObserver() = default;
    virtual void on_step(double /*t0*/, double /*t1*/, const NetworkPoint& /*p0*/,
                         const NetworkPoint& /*p1*/, int /*mode*/, const Control& /*c*/) {}
    virtual void on_jump(double /*t*/, const NetworkPoint& /*p*/, int /*from*/, int /*to*/) {}
    /// Return true to stop the path early.
    virtual bool done() const { return false; }
};

/// Streaming path simulation; returns the final time reached.
double simulate_path(const Dynamics& dyn, const NetworkPoint& x, int mode, const Policy& policy,
                     const StopRule& stop, RngStream& rng, double h, PathObserver& obs);

Trajectory simulate(const Dynamics& dyn, const NetworkPoint& x, int mode, const Policy& policy,
                    const StopRule& stop, RngStream& rng, double h = 1e-3);

struct McEstimate {
    double estimate = 0.0;
    double stderr_ = 0.0;
    double tail_bound = 0.0;
    int n_paths = 0;
};

/// Discounted running cost over [0, T_trunc] averaged over n_paths; path i
/// uses RngStream(seed, i).
McEstimate mc_cost(const Dynamics& dyn, const NetworkPoint& x, int mode, const Policy& policy,
                   int n_paths, double T_trunc, std::uint64_t seed, double h = 1e-3);

/// Worker count: hardware concurrency capped by PDMPNET_THREADS.
int worker_count();

/// Runs fn(i) for i in [0, n) on worker_count() threads.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace pdmpnet
