#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pdmpnet/grid.hpp"
#include "pdmpnet/policy.hpp"

namespace pdmpnet {

/// Metadata of the scheme that produced a value table.
struct SchemeInfo {
    double dx = 0.0;
    double h = 0.0;
    std::string control_set;
    int outer_iterations = 0;
    long inner_sweeps = 0;
    std::vector<double> increments;  ///< sup-norm change per outer iteration
    double polish_change = 0.0;      ///< sup change made by the policy-iteration polish
    int polish_iterations = 0;
};

/// Value per (grid node, mode).
class ValueField {
public:
    ValueField() = default;
    ValueField(std::shared_ptr<const Grid> grid, int n_modes, double fill = 0.0);

    const Grid& grid() const { return *grid_; }
    std::shared_ptr<const Grid> grid_ptr() const { return grid_; }
    int num_modes() const { return modes_; }
    double operator()(int node, int mode) const { return values_[node * modes_ + mode]; }
    double& operator()(int node, int mode) { return values_[node * modes_ + mode]; }
    const std::vector<double>& data() const { return values_; }
    std::vector<double>& data() { return values_; }
    /// Linear interpolation along the edge of p.
    double interpolate(const NetworkPoint& p, int mode) const;
    double sup_abs() const;
    double sup_diff(const ValueField& o) const;

    /// CSV with columns edge,coord,mode,value (junction edge written as -1).
    std::string to_csv() const;

    SchemeInfo scheme;

private:
    std::shared_ptr<const Grid> grid_;
    int modes_ = 0;
    std::vector<double> values_;
};

/// Per-mode deterministic problem (jumps ignored): the fixed point of
/// v = min_a [w_h·l + e^{−δh}·I(v)(x + h f)].  mode < 0 solves every mode.
ValueField solve_deterministic(const DiscreteControlSet& cs, double tol, int mode = -1);

/// One application of the iterated-value map: the first-jump problem with
/// continuation v_prev, solved as an inner fixed point
/// v = min_a [w_h·l + e^{−δh}((1−λh)·I(v)(x+hf) + λh·Σ Q v_prev)].
/// Here w_h = (1 − e^{−δh})/δ is the discounted length of one step.
/// The inner iteration stops once its a-posteriori error is below tol.
ValueField bellman_jump_operator(const DiscreteControlSet& cs, const ValueField& v_prev, double tol,
                                 const ValueField* warm = nullptr);

struct ValueSolveOptions {
    double tol = 1e-8;        ///< inner fixed-point accuracy
    double tol_outer = 1e-7;  ///< stop when the outer increment is below this
    bool polish = true;       ///< finish with policy iteration (exact discrete value)
    int max_outer = 100000;
};

/// Iterates bellman_jump_operator from v ≡ 0; increments are logged in scheme.
ValueField solve_value(const DiscreteControlSet& cs, const ValueSolveOptions& opt = {});

/// Iteration log (increments, observed ratios, polish data) as JSON.
nlohmann::json iteration_log(const ValueField& v);

/// Index of a minimizing action per state (ties go to the lowest index).
std::vector<int> greedy_actions(const DiscreteControlSet& cs, const ValueField& v);

/// Exact value of a stationary policy of the discrete decision process.
ValueField policy_evaluation(const DiscreteControlSet& cs, const std::vector<int>& policy);

/// Policy iteration started from the greedy policy of `start`.
ValueField policy_iteration(const DiscreteControlSet& cs, const ValueField& start, int max_iter = 200,
                            int* iterations = nullptr);

/// Stationary feedback policy that plays, at a point, the greedy action of
/// the nearest node of its own edge.
Policy greedy_policy(std::shared_ptr<const DiscreteControlSet> cs, const ValueField& v);

/// Random stationary feedback: one random control per (mode, edge), a random
/// discrete junction control per mode, and the endpoint return control where
/// the chosen one would push outward.
Policy random_feedback_policy(std::shared_ptr<const DiscreteControlSet> cs, std::uint64_t seed,
                              std::uint64_t index);

/// Dynamics with the same flow and cost but no jumps.
std::shared_ptr<const Dynamics> freeze_modes(std::shared_ptr<const Dynamics> dyn);

struct DppPoint {
    NetworkPoint x;
    int mode = 0;
    double value = 0.0;
    double rhs = 0.0;
    double stderr_ = 0.0;
    double residual = 0.0;
    int best_policy = 0;  ///< 0 is the greedy policy
};

/// Dynamic-programming residual |v(x,γ) − min_α E[∫_0^{T∧τ1} e^{−δt} l dt
/// + e^{−δ(T∧τ1)} v(X, Γ)]| over the greedy policy and n_policy_samples
/// random feedback policies, with common random numbers.
std::vector<DppPoint> dpp_residual(std::shared_ptr<const DiscreteControlSet> cs, const ValueField& v,
                                   const std::vector<std::pair<NetworkPoint, int>>& points, double T,
                                   int n_mc, int n_policy_samples, std::uint64_t seed,
                                   double h_sim = 1e-3);

/// Signed residual of the Hamilton-Jacobi system with upwind differences.
struct HjbResidual {
    std::vector<double> residual;  ///< per state (node·modes + mode)
    double interior_sub = 0.0;     ///< max positive part at interior nodes
    double interior_super = 0.0;   ///< max negative part (as a positive number) at interior nodes
    double endpoint_sub = 0.0;
    double endpoint_super = 0.0;
    double junction_sub = 0.0;
    double junction_super = 0.0;   ///< reported only
    int witness_state = -1;        ///< state of the largest interior |residual|

    double interior_abs() const { return std::max(interior_sub, interior_super); }
    nlohmann::json to_json() const;
};

/// At every node: δv + sup_a{−f·Dv − l − λΣQ(v(γ')−v(γ))} over the scheme's
/// discrete controls, Dv the one-sided difference in the direction of f; at
/// the junction the sup also runs over pairwise mixtures (weights
/// 0, 1/4, 1/2, 3/4, 1) of controls of one branch.
HjbResidual hjb_residual(const DiscreteControlSet& cs, const ValueField& v);

/// Value of the shaken extended problem plus its restriction to base nodes.
struct ExtendedSolve {
    std::shared_ptr<const DiscreteControlSet> controls;
    ValueField extended;
    ValueField restricted;
};

ExtendedSolve solve_value_extended(std::shared_ptr<const ShakenModel> shaken, double dx, double h, int n_a,
                                   const ValueSolveOptions& opt = {},
                                   std::vector<double> b_levels = {-1.0, -0.5, 0.0, 0.5, 1.0});

/// Samples a field on the nodes of `base_grid` (its network must be the base
/// of the field's extended network, with the edges in the same order).
ValueField restrict_field(const ValueField& v_ext, std::shared_ptr<const Grid> base_grid);

/// max |v(n) − v(n')| over node pairs at index distance `lag` on one edge
/// (through the junction for the first nodes), over all modes.
double empirical_modulus(const ValueField& v, int lag);

}  // namespace pdmpnet
