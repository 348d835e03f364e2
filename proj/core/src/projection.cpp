#include "pdmpnet/projection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "projection_detail.hpp"
#include "pdmpnet/stats.hpp"

namespace pdmpnet {

namespace detail {

bool legal(const Dynamics& dyn, int mode, const NetworkPoint& p, const Control& c) {
    if (!dyn.admissible(p, mode, c)) return false;
    try {
        if (p.is_junction()) {
            dyn.junction_exit(mode, c);
            return true;
        }
        if (dyn.network().at_endpoint(p)) return dyn.edge_speed(p, mode, c) <= 1e-12;
    } catch (const LeftNetwork&) {
        return false;
    }
    return true;
}

double axial(const NetworkPoint& p, int edge) {
    if (p.is_junction()) return 0.0;
    return p.edge == edge ? p.coord : -p.coord;
}

double time_to_reach(const Dynamics& dyn, int mode, const NetworkPoint& start, const Control& c, int edge,
                     double target, double tmax, double h) {
    NetworkPoint p = dyn.network().canonical(start);
    const double g0 = axial(p, edge) - target;
    if (std::abs(g0) <= 1e-13) return 0.0;
    double t = 0.0;
    while (t < tmax) {
        NetworkPoint q = p;
        const double dt = std::min(h, tmax - t);
        const double adv = advance(dyn, mode, q, c, dt);
        const double g1 = axial(q, edge) - target;
        // Landing on the target (edge-end and junction hits included) uses the
        // event time reported by advance, so replays switch at the same instant.
        if (std::abs(g1) <= 1e-13) return t + adv;
        if ((g1 > 0.0) != (g0 > 0.0)) {
            double lo = 0.0, hi = adv;
            for (int it = 0; it < 80 && hi - lo > 1e-13; ++it) {
                const double mid = 0.5 * (lo + hi);
                NetworkPoint r = p;
                advance(dyn, mode, r, c, mid);
                const double g = axial(r, edge) - target;
                ((g > 0.0) == (g0 > 0.0) && std::abs(g) > 1e-13 ? lo : hi) = mid;
            }
            return t + hi;
        }
        if (q == p) return kInf;  // at rest short of the target
        p = q;
        t += adv;
    }
    return kInf;
}

std::optional<Control> null_at_junction(const Dynamics& dyn, int mode) {
    const Network& net = dyn.network();
    for (int k = 0; k < net.num_edges(); ++k) {
        const auto& cs = dyn.edge_controls(mode, k);
        std::vector<Vec> cand;
        if (cs.zero) cand.push_back(*cs.zero);
        for (const auto& a : cs.sample(9)) cand.push_back(a);
        for (const auto& a : cand) {
            const Control c(a);
            if (!legal(dyn, mode, NetworkPoint::junction(), c)) continue;
            if (dyn.junction_exit(mode, c).edge == JUNCTION) return c;
        }
    }
    return std::nullopt;
}

std::optional<Control> null_at_end(const Dynamics& dyn, int mode, int edge) {
    const auto& cs = dyn.edge_controls(mode, edge);
    const NetworkPoint e{edge, dyn.network().length(edge)};
    std::vector<Vec> cand;
    if (cs.zero) cand.push_back(*cs.zero);
    for (const auto& a : cs.sample(9)) cand.push_back(a);
    for (const auto& a : cand)
        if (std::abs(dyn.edge_speed(e, mode, Control(a))) <= 1e-12) return Control(a);
    return std::nullopt;
}

std::optional<Control> best_push(const Dynamics& dyn, int mode, const NetworkPoint& p, int edge, double sign) {
    const auto& cs = dyn.edge_controls(mode, edge);
    const Vec& e = dyn.network().direction(edge);
    std::optional<Control> best;
    double best_v = 1e-12;
    std::vector<Vec> cand = cs.sample(9);
    for (const auto& a : cand) {
        const Control c(a);
        double v;
        if (p.is_junction()) {
            if (!legal(dyn, mode, p, c)) continue;
            const auto ex = dyn.junction_exit(mode, c);
            if (ex.edge != edge) continue;
            v = sign * ex.speed;
        } else {
            v = sign * dyn.drift_raw(p, mode, c).dot(e);
        }
        if (v > best_v) {
            best_v = v;
            best = c;
        }
    }
    return best;
}

// -------------------------------------------------------------- follower loop

FollowerRun run_follower(const Dynamics& fdyn, const Dynamics& tdyn, int mode, const NetworkPoint& x,
                         const Schedule& target, double T, double h, double tol, const Chooser& choose) {
    FollowerRun run;
    NetworkPoint F = fdyn.network().canonical(x);
    NetworkPoint G = tdyn.network().canonical(x);
    const double delta = fdyn.discount();
    double t = 0.0;
    double cost_gap = 0.0;
    bool close = true;
    bool departed = false;
    std::string last_label;
    std::vector<double> qf, qt;

    auto measure = [&](const NetworkPoint& f, const NetworkPoint& g, const Control& cf, const Control& ct) {
        auto& d = run.deviation;
        d.sup_distance = std::max(d.sup_distance, geodesic_distance(f, g));
        d.sup_rate_gap = std::max(d.sup_rate_gap, std::abs(fdyn.rate_raw(f, mode, cf) - tdyn.rate_raw(g, mode, ct)));
        fdyn.jump_row_raw(f, mode, cf, qf);
        tdyn.jump_row_raw(g, mode, ct, qt);
        double l1 = 0.0;
        for (std::size_t i = 0; i < qf.size(); ++i) l1 += std::abs(qf[i] - qt[i]);
        d.sup_kernel_gap = std::max(d.sup_kernel_gap, l1);
        return fdyn.cost_raw(f, mode, cf) - tdyn.cost_raw(g, mode, ct);
    };

    int guard = 0;
    while (t < T - 1e-14) {
        const Control& ct = target.at(t);
        const double d = geodesic_distance(F, G);
        if (d < tol && !close) ++run.renewals;
        close = d < tol;
        const Choice ch = choose(t, F, G, ct, close);
        if (ch.label != last_label) {
            run.trace.push_back(ch.label);
            last_label = ch.label;
        }
        const bool deviates = !(ch.control.a.size() == ct.a.size() && (ch.control.a - ct.a).norm() <= 1e-15);
        if (deviates && !departed) run.splice_times.push_back(t);
        departed = deviates;

        double dt = std::min({h, target.next_switch(t) - t, T - t, ch.until - t});
        if (!(dt > 0.0)) dt = std::min(h, T - t);
        const NetworkPoint F0 = F, G0 = G;
        double step = advance(tdyn, mode, G, ct, dt);
        const double fstep = advance(fdyn, mode, F, ch.control, step);
        if (fstep < step) {
            G = G0;
            advance(tdyn, mode, G, ct, fstep);
            step = fstep;
        }
        // Pass-through on a common edge: stop the step at the meeting time.
        if (!F0.is_junction() && !F.is_junction() && F0.edge == G0.edge && F.edge == G.edge &&
            F0.edge == F.edge && G0.edge == G.edge) {
            const double s0 = F0.coord - G0.coord, s1 = F.coord - G.coord;
            if (std::abs(s0) >= tol && (s0 > 0.0) != (s1 > 0.0)) {
                double lo = 0.0, hi = step;
                for (int it = 0; it < 80 && hi - lo > 1e-13; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    NetworkPoint fa = F0, ga = G0;
                    advance(fdyn, mode, fa, ch.control, mid);
                    advance(tdyn, mode, ga, ct, mid);
                    const double s = fa.coord - ga.coord;
                    ((s > 0.0) == (s0 > 0.0) && std::abs(s) >= tol ? lo : hi) = mid;
                }
                F = F0;
                G = G0;
                advance(fdyn, mode, F, ch.control, hi);
                advance(tdyn, mode, G, ct, hi);
                step = hi;
            }
        }
        if (step <= 0.0) {
            if (++guard > 1000) throw StalledEvent("follower made no progress");
            continue;
        }
        guard = 0;
        const double g0 = measure(F0, G0, ch.control, ct);
        const double g1 = measure(F, G, ch.control, ct);
        cost_gap += 0.5 * step * (std::exp(-delta * t) * g0 + std::exp(-delta * (t + step)) * g1);
        run.deviation.sup_cost_gap = std::max(run.deviation.sup_cost_gap, std::abs(cost_gap));
        run.schedule.append(step, ch.control);
        t += step;
    }
    if (geodesic_distance(F, G) < tol && !close) ++run.renewals;
    run.final_point = F;
    run.horizon = t;
    return run;
}

}  // namespace detail

using detail::axial;
using detail::legal;
using detail::time_to_reach;

namespace {

const Vec& need(const std::optional<Vec>& v, const char* what) {
    if (!v) throw MissingPrecondition(std::string("model provides no ") + what + " control");
    return *v;
}

double first_junction_time(const Arc& arc) {
    for (std::size_t i = 1; i < arc.samples.size(); ++i)
        if (arc.samples[i].p.is_junction()) return arc.samples[i].t;
    return kInf;
}

/// Cumulative discounted running cost along an arc, at its samples.
struct CumulativeCost {
    std::vector<double> t, c;

    CumulativeCost(const Dynamics& dyn, const Arc& arc) {
        const double delta = dyn.discount();
        double acc = 0.0;
        for (std::size_t i = 0; i < arc.samples.size(); ++i) {
            const auto& s = arc.samples[i];
            if (i > 0) {
                const auto& p = arc.samples[i - 1];
                const Control& c = arc.controls.at(p.control);
                acc += 0.5 * (s.t - p.t) *
                       (std::exp(-delta * p.t) * dyn.cost_raw(p.p, arc.mode, c) +
                        std::exp(-delta * s.t) * dyn.cost_raw(s.p, arc.mode, c));
            }
            t.push_back(s.t);
            c.push_back(acc);
        }
    }
    double at(double u) const {
        auto it = std::upper_bound(t.begin(), t.end(), u);
        if (it == t.begin()) return c.front();
        if (it == t.end()) return c.back();
        const auto i = static_cast<std::size_t>(it - t.begin());
        const double w = (u - t[i - 1]) / (t[i] - t[i - 1]);
        return c[i - 1] + w * (c[i] - c[i - 1]);
    }
};

}  // namespace

// ---------------------------------------------------------------- canonical

Schedule canonical_policy(const Dynamics& dyn, int mode, const NetworkPoint& start, double h) {
    const Network& net = dyn.network();
    const NetworkPoint p = net.canonical(start);
    const double horizon = 50.0 / dyn.discount();
    Schedule at_junction;
    if (auto null = detail::null_at_junction(dyn, mode)) {
        at_junction = Schedule::constant(*null);
    } else {
        // Out-and-back trips along an edge that can be entered from O.
        int k = -1;
        std::optional<Control> out;
        for (int j = 0; j < net.num_edges() && !out; ++j) {
            out = detail::best_push(dyn, mode, NetworkPoint::junction(), j, 1.0);
            if (out) k = j;
        }
        if (!out) throw MissingPrecondition("no control keeps the junction state admissible");
        const auto back = detail::best_push(dyn, mode, NetworkPoint{k, 0.5 * net.length(k)}, k, -1.0);
        if (!back) throw MissingPrecondition("no control returns to the junction");
        const double d_out = 0.05 / std::max(dyn.constants().f_bound, 1e-12);
        const NetworkPoint far = [&] {
            NetworkPoint q = p.is_junction() ? p : NetworkPoint::junction();
            double t = 0.0;
            while (t < d_out) t += advance(dyn, mode, q, *out, std::min(h, d_out - t));
            return q;
        }();
        const double d_back = time_to_reach(dyn, mode, far, *back, k, 0.0, horizon, h);
        if (!std::isfinite(d_back)) throw MissingPrecondition("return trip does not reach the junction");
        for (double t = 0.0; t < horizon; t += d_out + d_back) {
            at_junction.append(d_out, *out);
            at_junction.append(d_back, *back);
        }
    }
    if (p.is_junction()) return at_junction;
    const auto& cs = dyn.edge_controls(mode, p.edge);
    std::optional<Control> in;
    if (cs.minus) in = Control(*cs.minus);
    if (!in || (net.at_endpoint(p) && !legal(dyn, mode, p, *in))) in = detail::best_push(dyn, mode, p, p.edge, -1.0);
    if (!in) throw MissingPrecondition("no inward control on edge " + std::to_string(p.edge));
    const double t1 = time_to_reach(dyn, mode, p, *in, p.edge, 0.0, horizon, h);
    if (!std::isfinite(t1)) return Schedule::constant(*in);
    return Schedule::constant(*in).then(t1, at_junction);
}

// ---------------------------------------------------------------- random

Schedule random_admissible_schedule(const Dynamics& dyn, int mode, const NetworkPoint& start, RngStream& rng,
                                    const RandomScheduleOptions& opt) {
    const Network& net = dyn.network();
    NetworkPoint p = net.canonical(start);
    auto draw = [&](const NetworkPoint& q) -> Control {
        for (int attempt = 0; attempt < 64; ++attempt) {
            int k;
            if (opt.restrict_edge >= 0 && attempt < 32)
                k = opt.restrict_edge;
            else
                k = q.is_junction() ? rng.index(net.num_edges()) : q.edge;
            Control c(dyn.edge_controls(mode, k).random(rng.uniform_fn()));
            if (opt.shaken) {
                const int kb = q.is_junction() ? k : q.edge;
                c.b = rng.uniform(-1.0, 1.0) * net.direction(kb);
            }
            if (legal(dyn, mode, q, c)) return c;
        }
        // Boundary repair: a control keeping q admissible.
        if (q.is_junction()) {
            if (auto null = detail::null_at_junction(dyn, mode)) return *null;
        } else if (auto in = detail::best_push(dyn, mode, q, q.edge, -1.0)) {
            return *in;
        }
        throw MissingPrecondition("no admissible control found for the random schedule");
    };
    Schedule out;
    double t = 0.0;
    Control c = draw(p);
    double seg = 0.0, len = rng.exponential(1.0 / opt.mean_duration);
    int stall = 0;
    while (t < opt.horizon - 1e-14) {
        if (!legal(dyn, mode, p, c)) {
            out.append(seg, c);
            c = draw(p);
            seg = 0.0;
            len = rng.exponential(1.0 / opt.mean_duration);
            if (++stall > 1000) throw StalledEvent("random schedule repair does not terminate");
            continue;
        }
        stall = 0;
        const double dt = std::min({opt.h, len - seg, opt.horizon - t});
        const double adv = advance(dyn, mode, p, c, dt);
        t += adv;
        seg += adv;
        if (seg >= len - 1e-15) {
            out.append(seg, c);
            c = draw(p);
            seg = 0.0;
            len = rng.exponential(1.0 / opt.mean_duration);
        }
    }
    out.append(seg, c);
    return out.then(t, canonical_policy(dyn, mode, p, opt.h));
}

// ---------------------------------------------------------------- projection

ProjectionResult project_control(const Dynamics& dyn, int mode, const NetworkPoint& x0, const NetworkPoint& y0,
                                 const Schedule& alpha, double eps, const ProjectionOptions& opt) {
    const Network& net = dyn.network();
    const NetworkPoint x = net.canonical(x0), y = net.canonical(y0);
    if (!net.contains(x) || !net.contains(y)) throw BadParameter("points must lie on the network");
    if (mode < 0 || mode >= dyn.num_modes()) throw BadParameter("mode out of range");
    const ShakingScales sc = shaking_scales(dyn, eps);
    const double t_eps = sc.t_eps;
    const double H = opt.horizon > 0.0 ? opt.horizon : 2.0 * t_eps;
    const double h = opt.h;

    ProjectionResult res;
    if (geodesic_distance(x, y) <= 1e-15) {
        res.policy = alpha;
        res.case_trace = {"identity"};
        return res;
    }
    if (!x.is_junction() && !y.is_junction() && x.edge != y.edge)
        throw BadParameter("points must lie on the closure of one edge");
    const int j = x.is_junction() ? y.edge : x.edge;
    const bool active = dyn.modes().is_active(j, mode);
    if (opt.enforce_scale) {
        const double r = (net.embed(x) - net.embed(y)).norm();
        const double radius = active ? sc.radius_active : sc.radius_inactive;
        if (r > radius) {
            std::ostringstream os;
            os << "|x-y| = " << r << " exceeds the admissible radius " << radius;
            throw ScaleViolated(os.str());
        }
    }

    Arc ax;
    try {
        ax = flow(dyn, mode, x, Policy::from_schedule(alpha), H, h);
    } catch (const LeftNetwork& e) {
        throw InadmissibleInput(std::string("control leaves the network from x: ") + e.what());
    }
    for (std::size_t i = 0; i + 1 < ax.samples.size(); ++i) {
        const auto& s = ax.samples[i];
        if (ax.samples[i + 1].t - s.t < 1e-12) continue;  // round-off sliver
        if (!legal(dyn, mode, s.p, ax.controls.at(s.control)))
            throw InadmissibleInput("control is not admissible along the trajectory from x");
    }

    const auto& cs = dyn.edge_controls(mode, j);
    const double L = net.length(j);
    auto reach = [&](const NetworkPoint& from, const Control& c, double target, const char* what) {
        const double tt = time_to_reach(dyn, mode, from, c, j, target, H, h);
        if (!std::isfinite(tt))
            throw MissingPrecondition(std::string(what) + " control does not reach its target in time");
        return tt;
    };
    auto hold_at_junction = [&]() {
        const Control z(need(cs.zero, "null"));
        if (!legal(dyn, mode, NetworkPoint::junction(), z) || dyn.junction_exit(mode, z).edge != JUNCTION)
            throw MissingPrecondition("null control does not rest at the junction");
        return z;
    };
    const double tx = first_junction_time(ax);

    if (x.is_junction()) {  // (a)
        const Control m(need(cs.minus, "inward"));
        const double t1 = reach(y, m, 0.0, "inward");
        res.policy = Schedule::constant(m).then(t1, alpha);
        res.case_trace = {"a"};
        res.splice_times = {0.0};
        return res;
    }
    if (y.is_junction()) {
        if (!active) {  // (b1): wait for the reference trajectory, then α unshifted
            const Control z = hold_at_junction();
            res.case_trace = {"b1"};
            res.splice_times = {0.0};
            if (std::isfinite(tx))
                res.policy = Schedule::constant(z).then(tx, alpha.shifted(tx));
            else
                res.policy = Schedule::constant(z).then(H, canonical_policy(dyn, mode, y, h));
            return res;
        }
        const Control pl(need(cs.plus, "outward"));  // (b2)
        const double t1 = reach(y, pl, x.coord, "outward");
        res.policy = Schedule::constant(pl).then(t1, alpha);
        res.case_trace = {"b2"};
        res.splice_times = {0.0};
        return res;
    }
    const bool y_end = y.coord >= L - kCanonTol;
    bool end_differs = false;
    for (const auto& a : cs.sample(9))
        if (dyn.edge_speed({j, L}, mode, Control(a)) > 1e-12) end_differs = true;
    if (y_end && end_differs) {  // (d)
        const Control e(need(cs.endpoint, "endpoint"));
        const double t1 = reach(y, e, x.coord, "endpoint");
        res.policy = Schedule::constant(e).then(t1, alpha);
        res.case_trace = {"d"};
        res.splice_times = {0.0};
        return res;
    }

    // (c): run y under α up to the first boundary event of either trajectory.
    enum class Event { None, End, Junction };
    Event ev = Event::None;
    const double t_stop = std::min(tx, t_eps);
    NetworkPoint py = y;
    double t = 0.0;
    while (t < t_stop - 1e-14) {
        const Control& c = alpha.at(t);
        if (net.at_endpoint(py) && dyn.edge_speed(py, mode, c) > 1e-12) {
            ev = Event::End;
            break;
        }
        const double dt = std::min({h, alpha.next_switch(t) - t, t_stop - t});
        t += advance(dyn, mode, py, c, dt);
        if (py.is_junction()) {
            ev = Event::Junction;
            break;
        }
    }
    const double ts = (ev == Event::None) ? t_stop : t;
    res.splice_times = {ts};
    if (ev == Event::None) {
        if (t_stop >= t_eps) {  // (c1)
            res.policy = alpha.then(t_eps, canonical_policy(dyn, mode, py, h));
            res.case_trace = {"c1"};
        } else {  // (c4): the reference trajectory reached O first
            const Control m(need(cs.minus, "inward"));
            const double tw = reach(py, m, 0.0, "inward");
            res.policy = alpha.then(ts, Schedule::constant(m).then(tw, alpha.shifted(ts)));
            res.case_trace = {"c4"};
        }
        return res;
    }
    const NetworkPoint z = ax.position_at(dyn, ts);
    if (ev == Event::End) {  // (c2)
        const Control e(need(cs.endpoint, "endpoint"));
        const double te = reach(py, e, axial(z, j), "endpoint");
        res.policy = alpha.then(ts, Schedule::constant(e).then(te, alpha.shifted(ts)));
        res.case_trace = {"c2"};
        return res;
    }
    if (active) {  // (c3.1)
        const Control pl(need(cs.plus, "outward"));
        const double tz = reach(py, pl, axial(z, j), "outward");
        res.policy = alpha.then(ts, Schedule::constant(pl).then(tz, alpha.shifted(ts)));
        res.case_trace = {"c3.1"};
        return res;
    }
    const Control zc = hold_at_junction();  // (c3.2)
    if (std::isfinite(tx))
        res.policy = alpha.then(ts, Schedule::constant(zc).then(tx - ts, alpha.shifted(tx)));
    else
        res.policy = alpha.then(ts, Schedule::constant(zc).then(H - ts, canonical_policy(dyn, mode, py, h)));
    res.case_trace = {"c3.2"};
    return res;
}

// ---------------------------------------------------------------- deviation

Deviation compare_trajectories(const Dynamics& dyn_a, int mode, const NetworkPoint& xa, const Schedule& sa,
                               const Dynamics& dyn_b, const NetworkPoint& xb, const Schedule& sb, double T,
                               double h, Metric metric) {
    const Arc A = flow(dyn_a, mode, xa, Policy::from_schedule(sa), T, h);
    const Arc B = flow(dyn_b, mode, xb, Policy::from_schedule(sb), T, h);
    const CumulativeCost ca(dyn_a, A), cb(dyn_b, B);
    std::vector<double> times;
    for (const auto& s : A.samples) times.push_back(s.t);
    for (const auto& s : B.samples) times.push_back(s.t);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    Deviation d;
    std::vector<double> qa, qb;
    for (double t : times) {
        const NetworkPoint pa = A.position_at(dyn_a, t), pb = B.position_at(dyn_b, t);
        const Control& ua = A.control_at(t);
        const Control& ub = B.control_at(t);
        const double dist = metric == Metric::Euclidean
                                ? (dyn_a.network().embed(pa) - dyn_b.network().embed(pb)).norm()
                                : geodesic_distance(pa, pb);
        d.sup_distance = std::max(d.sup_distance, dist);
        d.sup_cost_gap = std::max(d.sup_cost_gap, std::abs(ca.at(t) - cb.at(t)));
        d.sup_rate_gap =
            std::max(d.sup_rate_gap, std::abs(dyn_a.rate_raw(pa, mode, ua) - dyn_b.rate_raw(pb, mode, ub)));
        dyn_a.jump_row_raw(pa, mode, ua, qa);
        dyn_b.jump_row_raw(pb, mode, ub, qb);
        double l1 = 0.0;
        for (std::size_t i = 0; i < qa.size(); ++i) l1 += std::abs(qa[i] - qb[i]);
        d.sup_kernel_gap = std::max(d.sup_kernel_gap, l1);
    }
    return d;
}

// ---------------------------------------------------------------- exponent

std::string ExponentReport::to_csv() const {
    std::ostringstream os;
    os << "radius,sup_deviation,mean_deviation,sup_cost_gap,cases\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,", r.radius, r.sup_deviation, r.mean_deviation,
                      r.sup_cost_gap);
        os << buf;
        bool first = true;
        for (const auto& [name, n] : r.cases) {
            os << (first ? "" : ";") << name << ":" << n;
            first = false;
        }
        os << "\n";
    }
    return os.str();
}

ExponentReport verify_projection_exponent(const Dynamics& dyn, int edge, int mode, const std::vector<double>& radii,
                                          int n_pairs, std::uint64_t seed, const ExponentOptions& opt) {
    if (radii.size() < 2) throw BadParameter("need at least two radii");
    if (n_pairs < 1) throw BadParameter("need at least one pair per radius");
    const Network& net = dyn.network();
    if (edge < 0 || edge >= net.num_edges()) throw BadParameter("edge out of range");
    const ShakingScales sc = shaking_scales(dyn, opt.eps);
    const auto& k = dyn.constants();
    const bool active = dyn.modes().is_active(edge, mode);
    const double kappa = active ? 0.0 : k.kappa;
    const double L = net.length(edge);

    ExponentReport rep;
    rep.lemma_radius = active ? sc.radius_active : sc.radius_inactive;
    rep.rows.resize(radii.size());
    std::vector<double> xs, ys;
    for (std::size_t ri = 0; ri < radii.size(); ++ri) {
        const double r = radii[ri];
        if (!(r > 0.0) || 2.0 * r >= L) throw BadParameter("radius must lie in (0, length/2)");
        ExponentRow& row = rep.rows[ri];
        row.radius = r;
        std::vector<double> devs(static_cast<std::size_t>(n_pairs));
        std::vector<double> gaps(devs.size());
        std::vector<std::string> cases(devs.size());
        std::vector<int> junction_run(devs.size(), 0), junction_bad(devs.size(), 0);
        parallel_for(n_pairs, [&](int i) {
            RngStream rng(seed, ri * static_cast<std::uint64_t>(n_pairs) + static_cast<std::uint64_t>(i));
            NetworkPoint x, y;
            if (rng.uniform() < opt.junction_fraction) {
                const NetworkPoint near = NetworkPoint::on(edge, r);
                if (rng.uniform() < 0.5) {
                    x = NetworkPoint::junction();
                    y = near;
                } else {
                    x = near;
                    y = NetworkPoint::junction();
                }
            } else {
                const double s = rng.uniform(r + 1e-9, L - r);
                const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
                x = NetworkPoint::on(edge, s);
                y = NetworkPoint::on(edge, s + sign * r);
            }
            RandomScheduleOptions ro;
            ro.horizon = sc.t_eps + 1.0;
            ro.restrict_edge = edge;
            ro.h = opt.h;
            const Schedule alpha = random_admissible_schedule(dyn, mode, x, rng, ro);
            ProjectionOptions po;
            po.enforce_scale = false;
            po.h = opt.h;
            const auto res = project_control(dyn, mode, x, y, alpha, opt.eps, po);
            const auto dev = compare_trajectories(dyn, mode, x, alpha, dyn, y, res.policy, sc.t_eps, opt.h);
            const auto ui = static_cast<std::size_t>(i);
            devs[ui] = dev.sup_distance;
            gaps[ui] = dev.sup_cost_gap;
            cases[ui] = res.case_trace.front();
            if (cases[ui] == "a") {
                junction_run[ui] = 1;
                const double ry = std::pow(r, 1.0 - kappa);
                const double dev_bound = (2.0 * k.f_bound / ((1.0 - kappa) * k.beta) + 1.0) * ry;
                const double gap_bound = 4.0 * k.l_bound * ry / ((1.0 - kappa) * k.beta);
                const double slack = 1e-9 + 1e-6 * ry;
                junction_bad[ui] = (dev.sup_distance > dev_bound + slack || dev.sup_cost_gap > gap_bound + slack);
            }
        });
        double sum = 0.0;
        for (std::size_t i = 0; i < devs.size(); ++i) {
            row.sup_deviation = std::max(row.sup_deviation, devs[i]);
            row.sup_cost_gap = std::max(row.sup_cost_gap, gaps[i]);
            sum += devs[i];
            ++row.cases[cases[i]];
            row.junction_runs += junction_run[i];
            row.junction_violations += junction_bad[i];
        }
        row.mean_deviation = sum / static_cast<double>(devs.size());
        rep.junction_violations += row.junction_violations;
        xs.push_back(r);
        ys.push_back(std::max(row.sup_deviation, 1e-300));
    }
    const LineFit fit = fit_loglog(xs, ys);
    rep.slope = fit.slope;
    rep.residual = fit.residual;
    return rep;
}

}  // namespace pdmpnet
