#include "pdmpnet/grid.hpp"

#include <cmath>
#include <sstream>

namespace pdmpnet {

Grid::Grid(std::shared_ptr<const Network> net, double dx) : net_(std::move(net)), dx_(dx) {
    if (!(dx > 0.0)) throw BadParameter("grid spacing must be positive");
    edge_of_.push_back(JUNCTION);
    index_.push_back(0);
    for (int j = 0; j < net_->num_edges(); ++j) {
        const double ratio = net_->length(j) / dx;
        const long n = std::lround(ratio);
        if (std::abs(ratio - static_cast<double>(n)) > 1e-9 * std::max(1.0, ratio))
            throw BadParameter("edge length " + std::to_string(net_->length(j)) +
                               " is not a multiple of the grid spacing");
        if (n < 2) throw BadParameter("every edge needs at least two grid intervals");
        count_.push_back(static_cast<int>(n));
        spacing_.push_back(net_->length(j) / static_cast<double>(n));
        offset_.push_back(num_nodes());
        for (int k = 1; k <= n; ++k) {
            edge_of_.push_back(j);
            index_.push_back(k);
        }
    }
}

NetworkPoint Grid::point(int node) const {
    if (node == 0) return NetworkPoint::junction();
    const int j = edge_of_.at(node);
    const int k = index_.at(node);
    // Snap the far end exactly to the edge length.
    const double s = k == count_[j] ? net_->length(j) : k * spacing_[j];
    return {j, s};
}

int Grid::find(const NetworkPoint& p, double tol) const {
    if (p.is_junction()) return 0;
    if (p.edge < 0 || p.edge >= num_edges()) return -1;
    const double r = p.coord / spacing_[p.edge];
    const long k = std::lround(r);
    if (std::abs(r - static_cast<double>(k)) * spacing_[p.edge] > tol) return -1;
    if (k < 0 || k > count_[p.edge]) return -1;
    return node(p.edge, static_cast<int>(k));
}

Grid::Stencil Grid::locate(int edge, double s) const {
    Stencil st;
    if (edge == JUNCTION || s <= 0.0) return st;
    const int n = count_.at(edge);
    const double r = s / spacing_[edge];
    if (r >= n) {
        st.n0 = st.n1 = node(edge, n);
        return st;
    }
    const int k = static_cast<int>(std::floor(r));
    const double t = r - k;
    st.n0 = node(edge, k);
    st.n1 = node(edge, k + 1);
    st.w0 = 1.0 - t;
    st.w1 = t;
    return st;
}

Grid::Stencil Grid::locate(const NetworkPoint& p) const { return locate(p.edge, p.coord); }

DiscreteControlSet::DiscreteControlSet(std::shared_ptr<const Dynamics> dyn, std::shared_ptr<const Grid> grid,
                                       double h, int n_a, std::vector<double> b_levels)
    : dyn_(std::move(dyn)),
      grid_(std::move(grid)),
      h_(h),
      n_a_(n_a),
      b_levels_(std::move(b_levels)),
      modes_(dyn_->num_modes()) {
    if (!(h > 0.0)) throw BadParameter("time step must be positive");
    if (h * dyn_->constants().lambda_bound >= 1.0)
        throw StepTooLarge("h·|λ|_0 must be below 1 for the jump split");
    if (&grid_->network() != &dyn_->network())
        throw BadParameter("grid and dynamics live on different networks");
    if (!b_levels_.empty() && dyn_->shake_radius() == 0.0)
        for (double b : b_levels_)
            if (b != 0.0) throw BadParameter("shaking levels need a shaken model");

    const Network& net = grid_->network();
    std::vector<double> levels = b_levels_.empty() ? std::vector<double>{0.0} : b_levels_;
    actions_.resize(num_states());

    auto make_control = [&](const Vec& a, int k, double b) {
        if (b_levels_.empty()) return Control(a);
        return Control(a, Vec(b * net.direction(k)));
    };
    auto fill = [&](Action& act, const NetworkPoint& p, int mode) {
        act.cost = dyn_->cost_raw(p, mode, act.control);
        act.rate = dyn_->rate_raw(p, mode, act.control);
        dyn_->jump_row_raw(p, mode, act.control, act.q);
    };

    for (int mode = 0; mode < modes_; ++mode) {
        // Junction: union over branches of controls leaving along their branch.
        {
            auto& acts = actions_[state(0, mode)];
            const NetworkPoint o = NetworkPoint::junction();
            for (int k = 0; k < net.num_edges(); ++k)
                for (const Vec& a : dyn_->edge_controls(mode, k).sample(n_a))
                    for (double b : levels) {
                        Action act;
                        act.control = make_control(a, k, b);
                        bool dup = false;
                        for (const auto& other : acts) dup = dup || other.control == act.control;
                        if (dup) continue;
                        const Vec f = dyn_->drift_raw(o, mode, act.control);
                        const double nf = f.norm();
                        act.branch = k;
                        if (nf > 1e-12) {
                            if ((f / nf - net.direction(k)).norm() > 1e-9) continue;
                            act.speed = nf;
                            act.foot = grid_->locate(k, h * nf);
                            act.neighbor = grid_->node(k, 1);
                        }
                        fill(act, o, mode);
                        acts.push_back(std::move(act));
                    }
            if (acts.empty()) throw NoAdmissibleControl("no discrete control at the junction");
        }
        for (int node = 1; node < grid_->num_nodes(); ++node) {
            auto& acts = actions_[state(node, mode)];
            const int j = grid_->edge_of(node);
            const int idx = grid_->index_of(node);
            const NetworkPoint p = grid_->point(node);
            const Vec& e = net.direction(j);
            const bool end = grid_->is_endpoint(node);
            for (const Vec& a : dyn_->edge_controls(mode, j).sample(n_a))
                for (double b : levels) {
                    Action act;
                    act.control = make_control(a, j, b);
                    act.branch = j;
                    const Vec f = dyn_->drift_raw(p, mode, act.control);
                    const double s = f.dot(e);
                    if ((f - s * e).norm() > 1e-9 * std::max(1.0, f.norm()))
                        throw BadParameter("drift is not tangent to the edge");
                    if (end && s > 1e-12) continue;
                    act.speed = s;
                    act.foot = grid_->locate(j, p.coord + h * s);
                    if (s > 1e-12) act.neighbor = grid_->node(j, idx + 1);
                    else if (s < -1e-12) act.neighbor = grid_->node(j, idx - 1);
                    fill(act, p, mode);
                    acts.push_back(std::move(act));
                }
            if (acts.empty())
                throw NoAdmissibleControl("no discrete control at node " + std::to_string(node));
        }
    }
}

std::string DiscreteControlSet::id() const {
    std::ostringstream os;
    os.precision(17);
    os << dyn_->name() << ";dx=" << grid_->dx() << ";h=" << h_ << ";n_a=" << n_a_ << ";b=";
    for (double b : b_levels_) os << b << ",";
    return os.str();
}

bool DiscreteControlSet::same_scheme(const DiscreteControlSet& o) const {
    return dyn_ == o.dyn_ && grid_->dx() == o.grid_->dx() && &grid_->network() == &o.grid_->network() &&
           h_ == o.h_ && n_a_ == o.n_a_ && b_levels_ == o.b_levels_;
}

}  // namespace pdmpnet
