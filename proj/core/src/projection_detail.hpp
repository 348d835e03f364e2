#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pdmpnet/projection.hpp"

namespace pdmpnet::detail {

/// Control admissible at p and not leaving the network from there.
bool legal(const Dynamics& dyn, int mode, const NetworkPoint& p, const Control& c);

/// Signed position along `edge`: the coordinate on it, minus the coordinate elsewhere.
double axial(const NetworkPoint& p, int edge);

/// First time the constant-control flow from `start` reaches axial position
/// `target` (kInf if not within tmax or if it comes to rest first).
double time_to_reach(const Dynamics& dyn, int mode, const NetworkPoint& start, const Control& c, int edge,
                     double target, double tmax, double h);

/// A control resting at the junction, if any.
std::optional<Control> null_at_junction(const Dynamics& dyn, int mode);
/// A control of `edge` resting at its far end, if any.
std::optional<Control> null_at_end(const Dynamics& dyn, int mode, int edge);
/// Sampled control of `edge` maximizing sign·(speed along edge) at p (for
/// p = O: among controls leaving O into `edge`); nullopt if none is positive.
std::optional<Control> best_push(const Dynamics& dyn, int mode, const NetworkPoint& p, int edge, double sign);

struct Choice {
    Control control;
    std::string label;
    double until = kInf;  ///< keep the choice at most until this time
};

/// (t, follower, target, target control, close) -> follower control.
using Chooser = std::function<Choice(double, const NetworkPoint&, const NetworkPoint&, const Control&, bool)>;

struct FollowerRun {
    Schedule schedule;
    std::vector<std::string> trace;
    std::vector<double> splice_times;
    int renewals = 0;
    Deviation deviation;
    NetworkPoint final_point;
    double horizon = 0.0;
};

/// Steps follower and target together over [0, T]; meeting times on a common
/// edge are located by bisection.
FollowerRun run_follower(const Dynamics& fdyn, const Dynamics& tdyn, int mode, const NetworkPoint& x,
                         const Schedule& target, double T, double h, double tol, const Chooser& choose);

}  // namespace pdmpnet::detail
