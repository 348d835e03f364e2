#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pdmpnet/policy.hpp"
#include "pdmpnet/rng.hpp"
#include "pdmpnet/simulate.hpp"

namespace pdmpnet {

/// A constructed control together with the construction steps that fired.
struct ProjectionResult {
    Schedule policy;
    std::vector<std::string> case_trace;
    std::vector<double> splice_times;  ///< times where the output control departs from the input
};

struct ProjectionOptions {
    bool enforce_scale = true;  ///< raise ScaleViolated outside the lemma's radius
    double h = 1e-3;            ///< integration step for hitting times
    double horizon = 0.0;       ///< hitting-time search horizon (0: 2·t_ε)
};

/// Projects a control admissible from x to one admissible from y, for x, y on
/// the closure of one edge, by the case analysis: lead-in to the junction (a),
/// hold or push out of the junction (b1/b2), copy-and-repair after the first
/// boundary event (c1–c4), endpoint lead-in (d).
ProjectionResult project_control(const Dynamics& dyn, int mode, const NetworkPoint& x, const NetworkPoint& y,
                                 const Schedule& alpha, double eps, const ProjectionOptions& opt = {});

/// Admissible-forever fallback: inward push to the junction, then a control
/// with zero drift there (or short out-and-back trips when none exists).
Schedule canonical_policy(const Dynamics& dyn, int mode, const NetworkPoint& start, double h = 1e-3);

struct RandomScheduleOptions {
    double horizon = 5.0;        ///< length of the randomized part
    double mean_duration = 0.25; ///< mean segment length
    int restrict_edge = -1;      ///< draw controls from this edge's set when possible
    bool shaken = false;         ///< draw a shaking level b in [-1,1] along the current edge
    double h = 1e-3;
};

/// Random piecewise-constant control admissible from `start`: segments are
/// redrawn whenever the current control would leave the network (boundary
/// repair), then followed by canonical_policy.
Schedule random_admissible_schedule(const Dynamics& dyn, int mode, const NetworkPoint& start, RngStream& rng,
                                    const RandomScheduleOptions& opt = {});

/// sup over t ≤ T of the distance between two controlled trajectories and of
/// the gap between their discounted partial costs.
struct Deviation {
    double sup_distance = 0.0;
    double sup_cost_gap = 0.0;
    double sup_rate_gap = 0.0;
    double sup_kernel_gap = 0.0;  ///< l1 distance of the jump rows
};

enum class Metric { Euclidean, Geodesic };

Deviation compare_trajectories(const Dynamics& dyn_a, int mode, const NetworkPoint& xa, const Schedule& sa,
                               const Dynamics& dyn_b, const NetworkPoint& xb, const Schedule& sb, double T,
                               double h = 1e-3, Metric metric = Metric::Euclidean);

struct ExponentOptions {
    double eps = 0.5;                 ///< sets the horizon t_ε
    double junction_fraction = 0.5;   ///< share of pairs with one point at the junction
    double h = 1e-3;
};

struct ExponentRow {
    double radius = 0.0;
    double sup_deviation = 0.0;  ///< max over pairs of sup_t |y(t;y,P) − y(t;x,α)|
    double mean_deviation = 0.0;
    double sup_cost_gap = 0.0;
    std::map<std::string, int> cases;
    int junction_runs = 0;        ///< runs of the junction lead-in case
    int junction_violations = 0;  ///< runs breaking that case's explicit bounds
};

struct ExponentReport {
    std::vector<ExponentRow> rows;
    double slope = 0.0;
    double residual = 0.0;
    double lemma_radius = 0.0;  ///< radius the estimate is stated for
    int junction_violations = 0;
    std::string to_csv() const;
};

/// Log-log regression of the worst deviation against |x − y| over random
/// pairs on `edge` and random admissible controls (scale gate disabled).
ExponentReport verify_projection_exponent(const Dynamics& dyn, int edge, int mode, const std::vector<double>& radii,
                                          int n_pairs, std::uint64_t seed, const ExponentOptions& opt = {});

/// Result of the follower constructions on the extended network.
struct FollowerResult : ProjectionResult {
    double horizon = 0.0;
    int renewals = 0;
    Deviation deviation;  ///< follower vs target over [0, horizon]
    double bound = 0.0;   ///< guaranteed deviation bound (extended lemma only)
};

/// Follower with zero shaking that tracks the shaken target driven by
/// `target` (controls (a, b)) from x, over [0, t_ε].
FollowerResult project_control_extended(const ShakenModel& shaken, int mode, const NetworkPoint& x,
                                        const Schedule& target, double eps, double h = 1e-3);

/// Control admissible on the base network that mimics a zero-shaking control
/// of the extended model over [0, T]: waits at the junction (or at the edge
/// end) while the target is on a fictive branch (or on a prolongation).
FollowerResult restrict_to_network(const PdmpModel& base, const PdmpModel& extended, int mode,
                                   const NetworkPoint& x, const Schedule& alpha, double T, double eps,
                                   double h = 1e-3);

}  // namespace pdmpnet
