#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "pdmpnet/model.hpp"

namespace pdmpnet {

/// Uniform nodes on every edge, the junction shared as node 0.
class Grid {
public:
    /// Each edge of length L gets round(L/dx) intervals; L/dx must be an
    /// integer within 1e-9 and every edge needs at least two intervals.
    Grid(std::shared_ptr<const Network> net, double dx);

    const Network& network() const { return *net_; }
    std::shared_ptr<const Network> network_ptr() const { return net_; }
    double dx() const { return dx_; }
    int num_nodes() const { return static_cast<int>(edge_of_.size()); }
    int num_edges() const { return net_->num_edges(); }
    /// Number of intervals on edge j (nodes excluding the junction).
    int edge_intervals(int j) const { return count_.at(j); }
    double spacing(int j) const { return spacing_.at(j); }
    /// Node k along edge j (k = 0 is the junction).
    int node(int edge, int k) const { return k == 0 ? 0 : offset_.at(edge) + k - 1; }
    int edge_of(int node) const { return edge_of_.at(node); }
    int index_of(int node) const { return index_.at(node); }
    NetworkPoint point(int node) const;
    bool is_junction(int node) const { return node == 0; }
    bool is_endpoint(int node) const {
        return node != 0 && index_.at(node) == count_.at(edge_of_.at(node));
    }
    /// Node located at p (within tol), or -1.
    int find(const NetworkPoint& p, double tol = 1e-9) const;

    /// Linear interpolation stencil along an edge.
    struct Stencil {
        int n0 = 0, n1 = 0;
        double w0 = 1.0, w1 = 0.0;
    };
    /// Stencil for p; coordinates are clamped into the edge.
    Stencil locate(const NetworkPoint& p) const;
    /// Stencil for coordinate s on edge j (s <= 0 is the junction).
    Stencil locate(int edge, double s) const;

private:
    std::shared_ptr<const Network> net_;
    double dx_;
    std::vector<int> count_, offset_;
    std::vector<double> spacing_;
    std::vector<int> edge_of_, index_;
};

/// One discrete control at one node, with everything the scheme needs:
/// coefficients at the node and the interpolation stencil of node + h·f.
struct Action {
    Control control;
    int branch = 0;        ///< edge whose control set the control comes from
    double speed = 0.0;    ///< drift component along `branch`
    double cost = 0.0;
    double rate = 0.0;
    std::vector<double> q;
    Grid::Stencil foot;
    int neighbor = -1;     ///< adjacent node in the direction of motion (-1 if at rest)
};

/// Finite control sets A_h per (node, mode): n_a uniform points per declared
/// segment plus the distinguished controls; at the junction only controls
/// whose drift leaves along their own branch (or vanishes); at edge ends only
/// controls that do not push outward.  Optional shaking levels b are applied
/// along the branch direction.
class DiscreteControlSet {
public:
    DiscreteControlSet(std::shared_ptr<const Dynamics> dyn, std::shared_ptr<const Grid> grid, double h,
                       int n_a, std::vector<double> b_levels = {});

    const Dynamics& dynamics() const { return *dyn_; }
    std::shared_ptr<const Dynamics> dynamics_ptr() const { return dyn_; }
    const Grid& grid() const { return *grid_; }
    std::shared_ptr<const Grid> grid_ptr() const { return grid_; }
    double h() const { return h_; }
    /// Weight of the running cost over one step, ∫_0^h e^{−δt}dt = (1 − e^{−δh})/δ.
    double cost_weight() const { return -std::expm1(-dyn_->discount() * h_) / dyn_->discount(); }
    int n_a() const { return n_a_; }
    const std::vector<double>& b_levels() const { return b_levels_; }
    int num_modes() const { return modes_; }
    int num_states() const { return grid_->num_nodes() * modes_; }
    int state(int node, int mode) const { return node * modes_ + mode; }
    const std::vector<Action>& actions(int node, int mode) const { return actions_.at(state(node, mode)); }
    /// Identifier of the scheme parameters.
    std::string id() const;
    /// True if both sets describe the same discrete problem.
    bool same_scheme(const DiscreteControlSet& o) const;

private:
    std::shared_ptr<const Dynamics> dyn_;
    std::shared_ptr<const Grid> grid_;
    double h_;
    int n_a_;
    std::vector<double> b_levels_;
    int modes_;
    std::vector<std::vector<Action>> actions_;
};

}  // namespace pdmpnet
