#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "pdmpnet/linearize.hpp"
#include "pdmpnet/simulate.hpp"

namespace pdmpnet {

// ---------------------------------------------------------------- LP assembly

int OccupationLP::column(int state, int action) const {
    if (state < 0 || state >= static_cast<int>(first_column.size())) return -1;
    const int j = first_column[state] + action;
    const int end = state + 1 < static_cast<int>(first_column.size()) ? first_column[state + 1] : num_columns();
    return (action >= 0 && j < end) ? j : -1;
}

OccupationLP build_occupation_lp(std::shared_ptr<const DiscreteControlSet> cs, const NetworkPoint& x, int mode) {
    const DiscreteControlSet& c = *cs;
    const Grid& grid = c.grid();
    const Network& net = grid.network();
    if (!net.contains(x)) throw BadParameter("start point must lie on the network");
    if (mode < 0 || mode >= c.num_modes()) throw BadParameter("mode out of range");
    const int modes = c.num_modes();
    const int ns = c.num_states();
    const double delta = c.dynamics().discount();
    const double h = c.h();
    const double beta = std::exp(-delta * h);
    const double scale = delta / (1.0 - beta);

    OccupationLP out;
    out.controls = cs;
    out.x = net.canonical(x);
    out.mode = mode;
    for (int s = 0; s < ns; ++s) {
        out.first_column.push_back(static_cast<int>(out.columns.size()));
        const int n = s / modes, g = s % modes;
        for (int i = 0; i < static_cast<int>(c.actions(n, g).size()); ++i) out.columns.emplace_back(s, i);
    }
    const int nc = out.num_columns();
    const auto anchor = grid.locate(out.x);
    out.lp.A = Eigen::MatrixXd::Zero(ns + 1, nc);
    out.lp.b = Eigen::VectorXd::Zero(ns + 1);
    out.lp.b(ns) = 1.0;
    out.lp.c = Eigen::VectorXd::Zero(nc);
    // Row φ_{s'}: Σ μ·[δ/(1−β)(βPφ − φ)(s) + δφ(x,γ)] = 0 (discrete ∫[𝒰φ − δ(φ − φ(x,γ))]dμ = 0).
    parallel_for(ns, [&](int s) {
        const int n = s / modes, g = s % modes;
        const auto& acts = c.actions(n, g);
        for (int i = 0; i < static_cast<int>(acts.size()); ++i) {
            const Action& a = acts[i];
            const int j = out.first_column[s] + i;
            auto col = out.lp.A.col(j);
            const double lh = a.rate * h;
            col(s) -= scale;
            col(c.state(a.foot.n0, g)) += scale * beta * (1.0 - lh) * a.foot.w0;
            if (a.foot.w1 != 0.0) col(c.state(a.foot.n1, g)) += scale * beta * (1.0 - lh) * a.foot.w1;
            for (int g2 = 0; g2 < modes; ++g2)
                if (a.q[g2] != 0.0) col(c.state(n, g2)) += scale * beta * lh * a.q[g2];
            col(c.state(anchor.n0, mode)) += delta * anchor.w0;
            if (anchor.w1 != 0.0) col(c.state(anchor.n1, mode)) += delta * anchor.w1;
            col(ns) = 1.0;
            out.lp.c(j) = a.cost;  // δ·(cost weight)/(1 − β) = 1
        }
    });
    return out;
}

void require_same_scheme(const DiscreteControlSet& cs, const ValueField& v) {
    if (v.scheme.control_set != cs.id() || std::abs(v.scheme.h - cs.h()) > 1e-15 ||
        v.grid().num_nodes() != cs.grid().num_nodes() || v.num_modes() != cs.num_modes())
        throw SchemeMismatch("value field was computed with scheme '" + v.scheme.control_set + "', expected '" +
                             cs.id() + "'");
}

// ---------------------------------------------------------------- duality

DualityReport duality_report(std::shared_ptr<const DiscreteControlSet> cs, const ValueField& v,
                             const std::vector<std::pair<NetworkPoint, int>>& points, const LpOptions& opt) {
    require_same_scheme(*cs, v);
    const double delta = cs->dynamics().discount();
    DualityReport rep;
    for (const auto& [x, mode] : points) {
        const OccupationLP lp = build_occupation_lp(cs, x, mode);
        const LpSolution sol = solve_lp(lp.lp, opt);
        DualityRow row;
        row.x = lp.x;
        row.mode = mode;
        row.delta_v = delta * v.interpolate(lp.x, mode);
        row.primal = sol.objective;
        row.dual = sol.dual_objective;
        row.gap_primal_dual = std::abs(sol.objective - sol.dual_objective);
        row.gap_value = std::abs(sol.objective - row.delta_v);
        row.dual_violation = sol.dual_infeasibility;
        row.pivots = sol.pivots;
        row.phi.assign(sol.dual.data(), sol.dual.data() + lp.num_rows() - 1);
        row.eta = sol.dual(lp.num_rows() - 1);
        rep.rows.push_back(row);
    }
    return rep;
}

std::string DualityReport::to_csv() const {
    std::ostringstream os;
    os << "edge,coord,mode,delta_v,primal,dual,gap_primal_dual,gap_value,dual_violation,pivots\n";
    char buf[400];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%ld\n", r.x.edge, r.x.coord,
                      r.mode, r.delta_v, r.primal, r.dual, r.gap_primal_dual, r.gap_value, r.dual_violation,
                      r.pivots);
        os << buf;
    }
    return os.str();
}

nlohmann::json DualityReport::to_json() const {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : rows)
        out.push_back({{"edge", r.x.edge},
                       {"coord", r.x.coord},
                       {"mode", r.mode},
                       {"delta_v", r.delta_v},
                       {"primal", r.primal},
                       {"dual", r.dual},
                       {"gap_primal_dual", r.gap_primal_dual},
                       {"gap_value", r.gap_value},
                       {"dual_violation", r.dual_violation},
                       {"pivots", r.pivots},
                       {"certificate", {{"eta", r.eta}, {"phi", r.phi}}}});
    return out;
}

// ---------------------------------------------------------------- Monte Carlo occupation

namespace {

int nearest_action(const std::vector<Action>& acts, const Control& c) {
    int best = 0;
    double bd = kInf;
    for (int i = 0; i < static_cast<int>(acts.size()); ++i) {
        double d = (acts[i].control.a - c.a).norm();
        if (c.b.size() > 0 && acts[i].control.b.size() == c.b.size()) d += (acts[i].control.b - c.b).norm();
        if (d < bd) {
            bd = d;
            best = i;
        }
    }
    return best;
}

/// Charges each step's discounted duration to the hat-weighted nodes of its
/// two end points.
class OccupationObserver : public PathObserver {
public:
    OccupationObserver(const DiscreteControlSet& cs, std::map<long, double>& acc) : cs_(cs), acc_(acc) {}

    void on_step(double t0, double t1, const NetworkPoint& p0, const NetworkPoint& p1, int mode,
                 const Control& c) override {
        const double delta = cs_.dynamics().discount();
        const double w = std::exp(-delta * t0) - std::exp(-delta * t1);
        if (w <= 0.0) return;
        charge(p0, mode, c, 0.5 * w);
        charge(p1, mode, c, 0.5 * w);
    }

    static long key(int state, int action) { return static_cast<long>(state) * kStride + action; }
    static constexpr long kStride = 1L << 20;

private:
    void charge(const NetworkPoint& p, int mode, const Control& c, double w) {
        const auto st = cs_.grid().locate(p);
        add(st.n0, mode, c, w * st.w0);
        if (st.w1 != 0.0) add(st.n1, mode, c, w * st.w1);
    }
    void add(int node, int mode, const Control& c, double w) {
        if (w == 0.0) return;
        const int a = nearest_action(cs_.actions(node, mode), c);
        acc_[key(cs_.state(node, mode), a)] += w;
    }

    const DiscreteControlSet& cs_;
    std::map<long, double>& acc_;
};

}  // namespace

OccupationMeasure mc_occupation(std::shared_ptr<const DiscreteControlSet> cs, const NetworkPoint& x, int mode,
                                const Policy& policy, int n_paths, double T, std::uint64_t seed, double h_sim) {
    if (n_paths < 1) throw BadParameter("need at least one path");
    if (!(T > 0.0)) throw BadParameter("truncation horizon must be positive");
    const Dynamics& dyn = cs->dynamics();
    std::vector<std::map<long, double>> per_path(static_cast<std::size_t>(n_paths));
    parallel_for(n_paths, [&](int i) {
        RngStream rng(seed, static_cast<std::uint64_t>(i));
        OccupationObserver obs(*cs, per_path[static_cast<std::size_t>(i)]);
        StopRule stop;
        stop.horizon = T;
        simulate_path(dyn, x, mode, policy, stop, rng, h_sim, obs);
    });
    std::map<long, std::pair<double, double>> sums;  // key -> (Σw, Σw²)
    for (const auto& path : per_path)
        for (const auto& [k, w] : path) {
            auto& s = sums[k];
            s.first += w;
            s.second += w * w;
        }
    OccupationMeasure mu;
    mu.controls = cs;
    mu.start = dyn.network().canonical(x);
    mu.start_mode = mode;
    mu.deficit = std::exp(-dyn.discount() * T);
    mu.horizon = T;
    mu.n_paths = n_paths;
    const double n = static_cast<double>(n_paths);
    std::map<long, int> index;
    for (const auto& [k, s] : sums) {
        OccupationAtom a;
        a.state = static_cast<int>(k / OccupationObserver::kStride);
        a.action = static_cast<int>(k % OccupationObserver::kStride);
        a.weight = s.first / n;
        const double var = n > 1.0 ? std::max(0.0, (s.second - n * a.weight * a.weight) / (n - 1.0)) : 0.0;
        a.stderr_ = std::sqrt(var / n);
        index[k] = static_cast<int>(mu.atoms.size());
        mu.atoms.push_back(a);
        mu.mass += a.weight;
    }
    mu.path_atoms.resize(per_path.size());
    for (std::size_t p = 0; p < per_path.size(); ++p)
        for (const auto& [k, w] : per_path[p]) mu.path_atoms[p].emplace_back(index.at(k), w);
    return mu;
}

nlohmann::json OccupationMeasure::to_json() const {
    nlohmann::json atoms_j = nlohmann::json::array();
    const int modes = controls->num_modes();
    for (const auto& a : atoms) {
        const int node = a.state / modes;
        const NetworkPoint p = controls->grid().point(node);
        atoms_j.push_back({{"edge", p.edge},
                           {"coord", p.coord},
                           {"mode", a.state % modes},
                           {"action", a.action},
                           {"weight", a.weight},
                           {"stderr", a.stderr_}});
    }
    return {{"n_paths", n_paths}, {"horizon", horizon}, {"mass", mass}, {"deficit", deficit}, {"atoms", atoms_j}};
}

// ---------------------------------------------------------------- feasibility

namespace {

/// Row-wise mean and standard error of per-path row values Σ_atoms A(r,·)·w.
struct RowStats {
    Eigen::VectorXd mean, stderr_;
};

RowStats row_statistics(const OccupationMeasure& mu, const std::function<void(int, double, Eigen::VectorXd&)>& add,
                        int rows) {
    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(rows), s2 = Eigen::VectorXd::Zero(rows);
    Eigen::VectorXd v(rows);
    for (const auto& path : mu.path_atoms) {
        v.setZero();
        for (const auto& [atom, w] : path) add(atom, w, v);
        s1 += v;
        s2 += v.cwiseProduct(v);
    }
    const double n = static_cast<double>(mu.n_paths);
    RowStats out;
    out.mean = s1 / n;
    out.stderr_ = Eigen::VectorXd::Zero(rows);
    if (n > 1.0)
        for (int r = 0; r < rows; ++r)
            out.stderr_(r) = std::sqrt(std::max(0.0, (s2(r) - n * out.mean(r) * out.mean(r)) / (n - 1.0)) / n);
    return out;
}

}  // namespace

FeasibilityReport occupation_feasibility(const OccupationLP& lp, const OccupationMeasure& mu) {
    if (!mu.controls || !mu.controls->same_scheme(*lp.controls))
        throw SchemeMismatch("occupation measure was binned on a different scheme");
    if (!(mu.start == lp.x) || mu.start_mode != lp.mode)
        throw BadParameter("occupation measure and LP have different start states");
    const int rows = lp.num_rows();
    const int ns = rows - 1;
    const double h = lp.controls->h();
    std::vector<int> col(mu.atoms.size());
    for (std::size_t i = 0; i < mu.atoms.size(); ++i) {
        col[i] = lp.column(mu.atoms[i].state, mu.atoms[i].action);
        if (col[i] < 0) throw BadParameter("occupation atom has no LP column");
    }
    const RowStats st = row_statistics(
        mu, [&](int atom, double w, Eigen::VectorXd& v) { v += w * lp.lp.A.col(col[static_cast<std::size_t>(atom)]); },
        rows);
    const auto& k = lp.controls->dynamics().constants();
    const double disc = lp.controls->grid().dx() *
                        (k.f_bound + k.lambda_bound + lp.controls->dynamics().discount());
    FeasibilityReport rep;
    rep.max_excess = -kInf;
    for (int r = 0; r < rows; ++r) {
        FeasibilityRow fr;
        fr.row = r;
        const double scale = r < ns ? h : 1.0;
        fr.residual = scale * (st.mean(r) - lp.lp.b(r));
        fr.stderr_ = scale * st.stderr_(r);
        fr.tolerance = 3.0 * fr.stderr_ + (r < ns ? disc : mu.deficit + 1e-9);
        const double excess = std::abs(fr.residual) - fr.tolerance;
        if (excess > rep.max_excess) {
            rep.max_excess = excess;
            rep.worst_row = r;
        }
        rep.rows.push_back(fr);
    }
    return rep;
}

// ---------------------------------------------------------------- adjoint identity

std::vector<AdjointResidual> adjoint_identity_check(const OccupationMeasure& mu,
                                                    const std::vector<const TestFunction*>& phis,
                                                    const std::vector<double>& sup_norms) {
    if (phis.size() != sup_norms.size()) throw BadParameter("one sup norm per test function");
    const DiscreteControlSet& cs = *mu.controls;
    const Dynamics& dyn = cs.dynamics();
    const Grid& grid = cs.grid();
    const Network& net = grid.network();
    const int modes = cs.num_modes();
    const double delta = dyn.discount();
    std::vector<double> row;

    std::vector<AdjointResidual> out;
    for (std::size_t f = 0; f < phis.size(); ++f) {
        const TestFunction& phi = *phis[f];
        const double phi_x = phi.value(mu.start, mu.start_mode);
        // Integrand at point p (on `edge`, or O) under control c in mode g.
        auto integrand = [&](const NetworkPoint& p, int edge, int g, const Control& c) {
            double speed = 0.0;
            if (edge >= 0) speed = dyn.drift_raw(p, g, c).dot(net.direction(edge));
            double gen = 0.0;
            if (speed != 0.0) gen += speed * phi.slope(p, g, edge, speed > 0.0 ? 1 : -1);
            const double lam = dyn.rate_raw(p, g, c);
            dyn.jump_row_raw(p, g, c, row);
            const double here = phi.value(p, g);
            for (int g2 = 0; g2 < modes; ++g2)
                if (row[g2] != 0.0) gen += lam * row[g2] * (phi.value(p, g2) - here);
            return gen - delta * (here - phi_x);
        };
        std::vector<double> term(mu.atoms.size()), osc(mu.atoms.size());
        for (std::size_t i = 0; i < mu.atoms.size(); ++i) {
            const auto& atom = mu.atoms[i];
            const int node = atom.state / modes, g = atom.state % modes;
            const Action& a = cs.actions(node, g).at(atom.action);
            const NetworkPoint p = grid.point(node);
            const int edge = p.is_junction() ? (a.speed != 0.0 ? a.branch : -1) : p.edge;
            const double here = integrand(p, edge, g, a.control);
            term[i] = here;
            // Oscillation over the neighbouring nodes bounds the hat-binning error.
            double o = 0.0;
            const int e = p.is_junction() ? a.branch : p.edge;
            const int k = p.is_junction() ? 0 : grid.index_of(node);
            for (int dk : {-1, 1}) {
                const int kk = k + dk;
                if (kk < 0 || kk > grid.edge_intervals(e)) continue;
                const NetworkPoint q = grid.point(grid.node(e, kk));
                o = std::max(o, std::abs(integrand(q, q.is_junction() ? -1 : e, g, a.control) - here));
            }
            osc[i] = o;
        }
        AdjointResidual r;
        double sum = 0.0, s1 = 0.0, s2 = 0.0;
        for (std::size_t i = 0; i < mu.atoms.size(); ++i) {
            sum += mu.atoms[i].weight * term[i];
            r.binning += mu.atoms[i].weight * osc[i];
        }
        for (const auto& path : mu.path_atoms) {
            double v = 0.0;
            for (const auto& [atom, w] : path) v += w * term[static_cast<std::size_t>(atom)];
            s1 += v;
            s2 += v * v;
        }
        const double n = static_cast<double>(mu.n_paths);
        const double mean = s1 / n;
        r.stderr_ = n > 1.0 ? std::sqrt(std::max(0.0, (s2 - n * mean * mean) / (n - 1.0)) / n) : 0.0;
        r.residual = std::abs(sum);
        r.truncation = delta * mu.deficit * 2.0 * sup_norms[f];
        out.push_back(r);
    }
    return out;
}

}  // namespace pdmpnet
