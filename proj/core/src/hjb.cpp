#include "pdmpnet/hjb.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "pdmpnet/simulate.hpp"
#include "pdmpnet/stats.hpp"

namespace pdmpnet {

// ---------------------------------------------------------------- ValueField

ValueField::ValueField(std::shared_ptr<const Grid> grid, int n_modes, double fill)
    : grid_(std::move(grid)), modes_(n_modes), values_(grid_->num_nodes() * n_modes, fill) {
    scheme.dx = grid_->dx();
}

double ValueField::interpolate(const NetworkPoint& p, int mode) const {
    const auto st = grid_->locate(p);
    return st.w0 * (*this)(st.n0, mode) + st.w1 * (*this)(st.n1, mode);
}

double ValueField::sup_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

double ValueField::sup_diff(const ValueField& o) const {
    if (o.values_.size() != values_.size()) throw BadParameter("value fields of different shapes");
    double m = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) m = std::max(m, std::abs(values_[i] - o.values_[i]));
    return m;
}

std::string ValueField::to_csv() const {
    std::ostringstream os;
    os << "edge,coord,mode,value\n";
    char buf[96];
    for (int n = 0; n < grid_->num_nodes(); ++n) {
        const auto p = grid_->point(n);
        for (int m = 0; m < modes_; ++m) {
            std::snprintf(buf, sizeof buf, "%d,%.17g,%d,%.17g\n", p.edge, p.coord, m, (*this)(n, m));
            os << buf;
        }
    }
    return os.str();
}

// ---------------------------------------------------------------- fixed points

namespace {

/// v(node) = min over affine maps c + k·(w0 v[n0] + w1 v[n1]).
struct Affine {
    double c, k, w0, w1;
    int n0, n1;
};

struct ModeProblem {
    std::vector<int> start;  // per node, offsets into maps (size nodes+1)
    std::vector<Affine> maps;
    double kmax = 0.0;
};

ModeProblem build_problem(const DiscreteControlSet& cs, int mode, const ValueField* v_prev) {
    const double disc = std::exp(-cs.dynamics().discount() * cs.h());
    const double h = cs.h();
    ModeProblem pr;
    const int nodes = cs.grid().num_nodes();
    pr.start.reserve(nodes + 1);
    for (int n = 0; n < nodes; ++n) {
        pr.start.push_back(static_cast<int>(pr.maps.size()));
        for (const auto& a : cs.actions(n, mode)) {
            Affine m{cs.cost_weight() * a.cost, disc, a.foot.w0, a.foot.w1, a.foot.n0, a.foot.n1};
            if (v_prev) {
                const double lh = a.rate * h;
                double jump = 0.0;
                for (int g = 0; g < static_cast<int>(a.q.size()); ++g)
                    if (a.q[g] != 0.0) jump += a.q[g] * (*v_prev)(n, g);
                m.c += disc * lh * jump;
                m.k = disc * (1.0 - lh);
            }
            pr.kmax = std::max(pr.kmax, m.k);
            pr.maps.push_back(m);
        }
    }
    pr.start.push_back(static_cast<int>(pr.maps.size()));
    return pr;
}

/// Gauss-Seidel until the a-posteriori error bound is below tol.
long solve_problem(const ModeProblem& pr, std::vector<double>& x, double tol) {
    const int nodes = static_cast<int>(pr.start.size()) - 1;
    const double factor = pr.kmax / (1.0 - pr.kmax);
    long sweeps = 0;
    while (true) {
        double change = 0.0;
        for (int n = 0; n < nodes; ++n) {
            double best = kInf;
            for (int i = pr.start[n]; i < pr.start[n + 1]; ++i) {
                const auto& m = pr.maps[i];
                const double val = m.c + m.k * (m.w0 * x[m.n0] + m.w1 * x[m.n1]);
                if (val < best) best = val;
            }
            change = std::max(change, std::abs(best - x[n]));
            x[n] = best;
        }
        ++sweeps;
        if (change * factor <= tol) return sweeps;
        if (sweeps > 50000000 / std::max(1, nodes)) throw IterationLimit("inner fixed point did not converge");
    }
}

std::vector<double> slice(const ValueField& v, int mode) {
    std::vector<double> out(v.grid().num_nodes());
    for (int n = 0; n < v.grid().num_nodes(); ++n) out[n] = v(n, mode);
    return out;
}

void put(ValueField& v, int mode, const std::vector<double>& x) {
    for (int n = 0; n < v.grid().num_nodes(); ++n) v(n, mode) = x[n];
}

}  // namespace

ValueField solve_deterministic(const DiscreteControlSet& cs, double tol, int mode) {
    ValueField v(cs.grid_ptr(), cs.num_modes());
    v.scheme.h = cs.h();
    v.scheme.control_set = cs.id();
    for (int g = 0; g < cs.num_modes(); ++g) {
        if (mode >= 0 && g != mode) continue;
        const auto pr = build_problem(cs, g, nullptr);
        std::vector<double> x(cs.grid().num_nodes(), 0.0);
        v.scheme.inner_sweeps += solve_problem(pr, x, tol);
        put(v, g, x);
    }
    return v;
}

ValueField bellman_jump_operator(const DiscreteControlSet& cs, const ValueField& v_prev, double tol,
                                 const ValueField* warm) {
    if (cs.h() * cs.dynamics().constants().lambda_bound >= 1.0)
        throw StepTooLarge("h·|λ|_0 must be below 1 for the jump split");
    if (v_prev.grid().num_nodes() != cs.grid().num_nodes() || v_prev.num_modes() != cs.num_modes())
        throw BadParameter("continuation value does not match the scheme");
    ValueField v(cs.grid_ptr(), cs.num_modes());
    v.scheme.h = cs.h();
    v.scheme.control_set = cs.id();
    for (int g = 0; g < cs.num_modes(); ++g) {
        const auto pr = build_problem(cs, g, &v_prev);
        std::vector<double> x = warm ? slice(*warm, g) : std::vector<double>(cs.grid().num_nodes(), 0.0);
        v.scheme.inner_sweeps += solve_problem(pr, x, tol);
        put(v, g, x);
    }
    return v;
}

ValueField solve_value(const DiscreteControlSet& cs, const ValueSolveOptions& opt) {
    ValueField v(cs.grid_ptr(), cs.num_modes());
    SchemeInfo info;
    info.dx = cs.grid().dx();
    info.h = cs.h();
    info.control_set = cs.id();
    while (true) {
        ValueField next = bellman_jump_operator(cs, v, opt.tol, &v);
        const double incr = next.sup_diff(v);
        info.inner_sweeps += next.scheme.inner_sweeps;
        info.increments.push_back(incr);
        ++info.outer_iterations;
        v = std::move(next);
        if (incr < opt.tol_outer) break;
        if (info.outer_iterations >= opt.max_outer) throw IterationLimit("outer value iteration did not converge");
    }
    if (opt.polish) {
        ValueField exact = policy_iteration(cs, v, 200, &info.polish_iterations);
        info.polish_change = exact.sup_diff(v);
        v = std::move(exact);
    }
    v.scheme = info;
    return v;
}

nlohmann::json iteration_log(const ValueField& v) {
    nlohmann::json j;
    const auto& s = v.scheme;
    j["dx"] = s.dx;
    j["h"] = s.h;
    j["control_set"] = s.control_set;
    j["outer_iterations"] = s.outer_iterations;
    j["inner_sweeps"] = s.inner_sweeps;
    j["increments"] = s.increments;
    std::vector<double> ratios;
    for (std::size_t i = 1; i < s.increments.size(); ++i)
        if (s.increments[i - 1] > 0.0) ratios.push_back(s.increments[i] / s.increments[i - 1]);
    j["ratios"] = ratios;
    j["polish_change"] = s.polish_change;
    j["polish_iterations"] = s.polish_iterations;
    return j;
}

// ---------------------------------------------------------------- policies

namespace {

double action_value(const DiscreteControlSet& cs, const ValueField& v, int node, int mode, const Action& a,
                    double disc) {
    const double lh = a.rate * cs.h();
    double jump = 0.0;
    for (int g = 0; g < static_cast<int>(a.q.size()); ++g)
        if (a.q[g] != 0.0) jump += a.q[g] * v(node, g);
    const double flow = a.foot.w0 * v(a.foot.n0, mode) + a.foot.w1 * v(a.foot.n1, mode);
    return cs.cost_weight() * a.cost + disc * ((1.0 - lh) * flow + lh * jump);
}

}  // namespace

std::vector<int> greedy_actions(const DiscreteControlSet& cs, const ValueField& v) {
    const double disc = std::exp(-cs.dynamics().discount() * cs.h());
    std::vector<int> pol(cs.num_states(), 0);
    for (int n = 0; n < cs.grid().num_nodes(); ++n)
        for (int g = 0; g < cs.num_modes(); ++g) {
            const auto& acts = cs.actions(n, g);
            double best = kInf;
            for (int i = 0; i < static_cast<int>(acts.size()); ++i) {
                const double val = action_value(cs, v, n, g, acts[i], disc);
                if (val < best) {
                    best = val;
                    pol[cs.state(n, g)] = i;
                }
            }
        }
    return pol;
}

ValueField policy_evaluation(const DiscreteControlSet& cs, const std::vector<int>& policy) {
    const int ns = cs.num_states();
    const double disc = std::exp(-cs.dynamics().discount() * cs.h());
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd rhs(ns);
    for (int n = 0; n < cs.grid().num_nodes(); ++n)
        for (int g = 0; g < cs.num_modes(); ++g) {
            const int s = cs.state(n, g);
            const auto& a = cs.actions(n, g).at(policy.at(s));
            const double lh = a.rate * cs.h();
            trip.emplace_back(s, s, 1.0);
            trip.emplace_back(s, cs.state(a.foot.n0, g), -disc * (1.0 - lh) * a.foot.w0);
            if (a.foot.w1 != 0.0) trip.emplace_back(s, cs.state(a.foot.n1, g), -disc * (1.0 - lh) * a.foot.w1);
            for (int g2 = 0; g2 < static_cast<int>(a.q.size()); ++g2)
                if (a.q[g2] != 0.0) trip.emplace_back(s, cs.state(n, g2), -disc * lh * a.q[g2]);
            rhs(s) = cs.cost_weight() * a.cost;
        }
    Eigen::SparseMatrix<double> mat(ns, ns);
    mat.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(mat);
    if (lu.info() != Eigen::Success) throw BadParameter("policy evaluation system is singular");
    const Eigen::VectorXd x = lu.solve(rhs);
    ValueField v(cs.grid_ptr(), cs.num_modes());
    v.scheme.h = cs.h();
    v.scheme.control_set = cs.id();
    for (int s = 0; s < ns; ++s) v.data()[s] = x(s);
    return v;
}

ValueField policy_iteration(const DiscreteControlSet& cs, const ValueField& start, int max_iter,
                            int* iterations) {
    const double disc = std::exp(-cs.dynamics().discount() * cs.h());
    std::vector<int> pol = greedy_actions(cs, start);
    ValueField v = policy_evaluation(cs, pol);
    for (int it = 1; it <= max_iter; ++it) {
        bool changed = false;
        for (int n = 0; n < cs.grid().num_nodes(); ++n)
            for (int g = 0; g < cs.num_modes(); ++g) {
                const int s = cs.state(n, g);
                const auto& acts = cs.actions(n, g);
                double cur = action_value(cs, v, n, g, acts[pol[s]], disc);
                const double slack = 1e-13 * (1.0 + std::abs(cur));
                for (int i = 0; i < static_cast<int>(acts.size()); ++i) {
                    const double val = action_value(cs, v, n, g, acts[i], disc);
                    if (val < cur - slack) {
                        cur = val;
                        pol[s] = i;
                        changed = true;
                    }
                }
            }
        if (iterations) *iterations = it;
        if (!changed) return v;
        v = policy_evaluation(cs, pol);
    }
    throw IterationLimit("policy iteration did not terminate");
}

namespace {

int nearest_node_on_edge(const Grid& grid, const NetworkPoint& p) {
    if (p.is_junction()) return 0;
    const int n = grid.edge_intervals(p.edge);
    const long k = std::clamp<long>(std::lround(p.coord / grid.spacing(p.edge)), 1, n);
    return grid.node(p.edge, static_cast<int>(k));
}

}  // namespace

Policy greedy_policy(std::shared_ptr<const DiscreteControlSet> cs, const ValueField& v) {
    auto pol = std::make_shared<std::vector<int>>(greedy_actions(*cs, v));
    return Policy::feedback([cs, pol](const NetworkPoint& p, int mode) {
        const int node = nearest_node_on_edge(cs->grid(), p);
        return cs->actions(node, mode).at((*pol)[cs->state(node, mode)]).control;
    });
}

Policy random_feedback_policy(std::shared_ptr<const DiscreteControlSet> cs, std::uint64_t seed,
                              std::uint64_t index) {
    RngStream rng(seed, index);
    const Dynamics& dyn = cs->dynamics();
    const Network& net = dyn.network();
    const int modes = dyn.num_modes();
    const bool with_b = !cs->b_levels().empty();
    auto table = std::make_shared<std::vector<Control>>();  // [mode][edge], then junction per mode
    for (int g = 0; g < modes; ++g)
        for (int j = 0; j < net.num_edges(); ++j) {
            Control c(dyn.edge_controls(g, j).random(rng.uniform_fn()));
            if (with_b) c.b = Vec::Zero(net.ambient_dim());
            table->push_back(c);
        }
    for (int g = 0; g < modes; ++g) {
        const auto& acts = cs->actions(0, g);
        Control c = acts.at(rng.index(static_cast<int>(acts.size()))).control;
        if (with_b) c.b = Vec::Zero(net.ambient_dim());
        table->push_back(c);
    }
    const int ne = net.num_edges();
    return Policy::feedback([cs, table, ne, modes, with_b](const NetworkPoint& p, int mode) {
        const Dynamics& d = cs->dynamics();
        if (p.is_junction()) {
            Control c = (*table)[modes * ne + mode];
            // Shaking levels are dropped; keep the control leaving along an edge.
            return c;
        }
        Control c = (*table)[mode * ne + p.edge];
        if (d.network().at_endpoint(p) && d.edge_speed(p, mode, c) > 1e-12) {
            const auto& cs_e = d.edge_controls(mode, p.edge);
            Control back(cs_e.endpoint ? *cs_e.endpoint : (cs_e.minus ? *cs_e.minus : *cs_e.zero));
            if (with_b) back.b = Vec::Zero(d.network().ambient_dim());
            return back;
        }
        return c;
    });
}

namespace {

class FrozenModes : public Dynamics {
public:
    explicit FrozenModes(std::shared_ptr<const Dynamics> base) : base_(std::move(base)), k_(base_->constants()) {
        k_.lambda_bound = 0.0;
    }
    const Network& network() const override { return base_->network(); }
    std::shared_ptr<const Network> network_ptr() const override { return base_->network_ptr(); }
    const ModeSpace& modes() const override { return base_->modes(); }
    double discount() const override { return base_->discount(); }
    const ModelConstants& constants() const override { return k_; }
    int control_dim() const override { return base_->control_dim(); }
    const EdgeControlSet& edge_controls(int mode, int edge) const override {
        return base_->edge_controls(mode, edge);
    }
    double shake_radius() const override { return base_->shake_radius(); }
    std::string name() const override { return base_->name() + "+frozen"; }
    Vec drift_raw(const NetworkPoint& p, int mode, const Control& c) const override {
        return base_->drift_raw(p, mode, c);
    }
    double rate_raw(const NetworkPoint&, int, const Control&) const override { return 0.0; }
    double cost_raw(const NetworkPoint& p, int mode, const Control& c) const override {
        return base_->cost_raw(p, mode, c);
    }
    void jump_row_raw(const NetworkPoint& p, int mode, const Control& c,
                      std::vector<double>& row) const override {
        base_->jump_row_raw(p, mode, c, row);
    }

private:
    std::shared_ptr<const Dynamics> base_;
    ModelConstants k_;
};

/// Discounted cost up to the first jump or the horizon, plus the discounted
/// continuation value there.
class DppObserver : public PathObserver {
public:
    DppObserver(const Dynamics& dyn, const ValueField& v) : dyn_(dyn), v_(v), delta_(dyn.discount()) {}
    void on_step(double t0, double t1, const NetworkPoint& p0, const NetworkPoint& p1, int mode,
                 const Control& c) override {
        if (t1 > t0)
            cost += 0.5 * (std::exp(-delta_ * t0) * dyn_.cost_raw(p0, mode, c) +
                           std::exp(-delta_ * t1) * dyn_.cost_raw(p1, mode, c)) *
                    (t1 - t0);
        last = p1;
        last_mode = mode;
    }
    void on_jump(double t, const NetworkPoint& p, int, int to) override {
        jumped = true;
        t_jump = t;
        last = p;
        last_mode = to;
    }
    bool done() const override { return jumped; }
    double total(double T) const {
        const double t = jumped ? t_jump : T;
        return cost + std::exp(-delta_ * t) * v_.interpolate(last, last_mode);
    }

    double cost = 0.0;
    bool jumped = false;
    double t_jump = 0.0;
    NetworkPoint last;
    int last_mode = 0;

private:
    const Dynamics& dyn_;
    const ValueField& v_;
    double delta_;
};

}  // namespace

std::shared_ptr<const Dynamics> freeze_modes(std::shared_ptr<const Dynamics> dyn) {
    return std::make_shared<FrozenModes>(std::move(dyn));
}

std::vector<DppPoint> dpp_residual(std::shared_ptr<const DiscreteControlSet> cs, const ValueField& v,
                                   const std::vector<std::pair<NetworkPoint, int>>& points, double T,
                                   int n_mc, int n_policy_samples, std::uint64_t seed, double h_sim) {
    const Dynamics& dyn = cs->dynamics();
    std::vector<Policy> policies{greedy_policy(cs, v)};
    for (int k = 0; k < n_policy_samples; ++k)
        policies.push_back(random_feedback_policy(cs, seed ^ 0x5eedULL, static_cast<std::uint64_t>(k)));
    std::vector<DppPoint> out;
    for (std::size_t pi = 0; pi < points.size(); ++pi) {
        const auto& [x, mode] = points[pi];
        DppPoint r;
        r.x = x;
        r.mode = mode;
        r.value = v.interpolate(x, mode);
        r.rhs = kInf;
        const std::uint64_t point_seed = seed + 0x9e3779b97f4a7c15ULL * (pi + 1);
        for (std::size_t k = 0; k < policies.size(); ++k) {
            std::vector<double> vals(n_mc);
            parallel_for(n_mc, [&](int i) {
                RngStream rng(point_seed, static_cast<std::uint64_t>(i));  // common random numbers
                DppObserver obs(dyn, v);
                simulate_path(dyn, x, mode, policies[k], {T, -1}, rng, h_sim, obs);
                vals[i] = obs.total(T);
            });
            const auto st = sample_stats(vals);
            if (st.mean < r.rhs) {
                r.rhs = st.mean;
                r.stderr_ = st.stderr_;
                r.best_policy = static_cast<int>(k);
            }
        }
        r.residual = std::abs(r.value - r.rhs);
        out.push_back(r);
    }
    return out;
}

// ---------------------------------------------------------------- residuals

nlohmann::json HjbResidual::to_json() const {
    return {{"interior_sub", interior_sub},     {"interior_super", interior_super},
            {"interior_abs", interior_abs()},   {"endpoint_sub", endpoint_sub},
            {"endpoint_super", endpoint_super}, {"junction_sub", junction_sub},
            {"junction_super", junction_super}, {"witness_state", witness_state}};
}

HjbResidual hjb_residual(const DiscreteControlSet& cs, const ValueField& v) {
    static const double kWeights[] = {0.25, 0.5, 0.75};
    const double delta = cs.dynamics().discount();
    const Grid& grid = cs.grid();
    HjbResidual out;
    out.residual.assign(cs.num_states(), 0.0);
    double worst = -1.0;
    for (int n = 0; n < grid.num_nodes(); ++n)
        for (int g = 0; g < cs.num_modes(); ++g) {
            const auto& acts = cs.actions(n, g);
            const double vn = v(n, g);
            std::vector<double> ham(acts.size());
            for (std::size_t i = 0; i < acts.size(); ++i) {
                const auto& a = acts[i];
                double drift_term = 0.0;
                if (a.neighbor >= 0)
                    drift_term = std::abs(a.speed) * (v(a.neighbor, g) - vn) / grid.spacing(a.branch);
                double jump = 0.0;
                for (int g2 = 0; g2 < static_cast<int>(a.q.size()); ++g2)
                    if (a.q[g2] != 0.0) jump += a.q[g2] * (v(n, g2) - vn);
                ham[i] = delta * vn - drift_term - a.cost - a.rate * jump;
            }
            double sup = *std::max_element(ham.begin(), ham.end());
            if (n == 0) {
                // Relaxed junction dynamics: time-sharing within one branch.
                for (std::size_t i = 0; i < acts.size(); ++i)
                    for (std::size_t k = i + 1; k < acts.size(); ++k) {
                        if (acts[i].branch != acts[k].branch) continue;
                        for (double w : kWeights) sup = std::max(sup, w * ham[i] + (1.0 - w) * ham[k]);
                    }
            }
            const int s = cs.state(n, g);
            out.residual[s] = sup;
            const double pos = std::max(sup, 0.0), neg = std::max(-sup, 0.0);
            if (n == 0) {
                out.junction_sub = std::max(out.junction_sub, pos);
                out.junction_super = std::max(out.junction_super, neg);
            } else if (grid.is_endpoint(n)) {
                out.endpoint_sub = std::max(out.endpoint_sub, pos);
                out.endpoint_super = std::max(out.endpoint_super, neg);
            } else {
                out.interior_sub = std::max(out.interior_sub, pos);
                out.interior_super = std::max(out.interior_super, neg);
                if (std::abs(sup) > worst) {
                    worst = std::abs(sup);
                    out.witness_state = s;
                }
            }
        }
    return out;
}

// ---------------------------------------------------------------- extended problem

ExtendedSolve solve_value_extended(std::shared_ptr<const ShakenModel> shaken, double dx, double h, int n_a,
                                   const ValueSolveOptions& opt, std::vector<double> b_levels) {
    const auto* xnet = dynamic_cast<const ExtendedNetwork*>(&shaken->network());
    if (!xnet) throw MissingPrecondition("shaken model must live on an extended network");
    auto grid = std::make_shared<Grid>(shaken->network_ptr(), dx);
    ExtendedSolve out;
    out.controls = std::make_shared<DiscreteControlSet>(shaken, grid, h, n_a, std::move(b_levels));
    out.extended = solve_value(*out.controls, opt);
    out.restricted = restrict_field(out.extended, std::make_shared<Grid>(xnet->base_ptr(), dx));
    return out;
}

ValueField restrict_field(const ValueField& v_ext, std::shared_ptr<const Grid> base_grid) {
    const Network& ext = v_ext.grid().network();
    const Network& base = base_grid->network();
    for (int j = 0; j < base.num_edges(); ++j)
        if (j >= ext.num_edges() || (ext.direction(j) - base.direction(j)).norm() > 1e-12)
            throw BadParameter("base grid edges do not match the extended network");
    ValueField out(base_grid, v_ext.num_modes());
    out.scheme = v_ext.scheme;
    for (int n = 0; n < base_grid->num_nodes(); ++n) {
        const auto p = base_grid->point(n);
        for (int g = 0; g < v_ext.num_modes(); ++g) out(n, g) = v_ext.interpolate(p, g);
    }
    return out;
}

double empirical_modulus(const ValueField& v, int lag) {
    const Grid& grid = v.grid();
    double m = 0.0;
    for (int j = 0; j < grid.num_edges(); ++j)
        for (int k = 0; k + lag <= grid.edge_intervals(j); ++k)
            for (int g = 0; g < v.num_modes(); ++g)
                m = std::max(m, std::abs(v(grid.node(j, k), g) - v(grid.node(j, k + lag), g)));
    return m;
}

}  // namespace pdmpnet
