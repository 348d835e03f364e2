#include <algorithm>
#include <cmath>

#include "pdmpnet/audit.hpp"
#include "pdmpnet/projection.hpp"
#include "projection_detail.hpp"

namespace pdmpnet {

using detail::best_push;
using detail::Choice;
using detail::legal;

namespace {

Choice return_to_junction(const Dynamics& dyn, int mode, const NetworkPoint& f) {
    const auto& cs = dyn.edge_controls(mode, f.edge);
    if (cs.minus) {
        const Control m(*cs.minus);
        if (legal(dyn, mode, f, m) && dyn.edge_speed(f, mode, m) < -1e-12) return {m, "return-junction"};
    }
    if (auto in = best_push(dyn, mode, f, f.edge, -1.0)) return {*in, "return-junction"};
    throw MissingPrecondition("no control returns the follower to the junction from edge " +
                              std::to_string(f.edge));
}

/// Short excursion from O along the first enterable edge.
Choice micro_trip_from_junction(const Dynamics& dyn, int mode, double t, double duration) {
    for (int k = 0; k < dyn.network().num_edges(); ++k)
        if (auto p = best_push(dyn, mode, NetworkPoint::junction(), k, 1.0))
            return {*p, "micro-trip-junction", t + duration};
    throw MissingPrecondition("no control keeps the follower near the junction");
}

FollowerResult finish(const Dynamics& fdyn, int mode, detail::FollowerRun run, double h) {
    FollowerResult res;
    res.policy = run.schedule.then(run.horizon, canonical_policy(fdyn, mode, run.final_point, h));
    res.case_trace = std::move(run.trace);
    res.splice_times = std::move(run.splice_times);
    res.renewals = run.renewals;
    res.deviation = run.deviation;
    res.horizon = run.horizon;
    return res;
}

}  // namespace

FollowerResult project_control_extended(const ShakenModel& shaken, int mode, const NetworkPoint& x,
                                        const Schedule& target, double eps, double h) {
    const PdmpModel& ext = shaken.base();
    const Network& net = ext.network();
    if (mode < 0 || mode >= ext.num_modes()) throw BadParameter("mode out of range");
    if (!net.contains(x)) throw BadParameter("start point must lie on the network");
    if (!audit_assumptions(ext, 200, 0).passed("C"))
        throw AssumptionCViolated("cost depends on the control at the junction or at an edge end");
    const ShakingScales sc = shaking_scales(ext, eps);
    if (shaken.rho() > sc.rho_ext * (1.0 + 1e-12))
        throw ScaleViolated("shaking radius exceeds the extended-lemma radius " + std::to_string(sc.rho_ext));
    const double rp = sc.r_prime;
    const double tol = std::max(1e-9, rp * 1e-3);
    const double trip = rp / (2.0 * ext.constants().f_bound);
    const auto null_o = detail::null_at_junction(ext, mode);

    int chase = -1;
    bool from_end = false;
    Control chase_ctrl;
    Choice in_trip;
    in_trip.until = -kInf;
    auto choose = [&](double t, const NetworkPoint& f, const NetworkPoint& g, const Control& ct,
                      bool close) -> Choice {
        const Control ca(ct.a);
        if (t < in_trip.until) return in_trip;
        if (close) {
            chase = -1;
            if (legal(ext, mode, f, ca)) return {ca, "track"};
            if (f.is_junction() && null_o) return {*null_o, "hold-junction"};
            if (!f.is_junction())
                if (auto in = best_push(ext, mode, f, f.edge, -1.0)) return {*in, "repair-end"};
        }
        const int bt = g.is_junction() ? JUNCTION : g.edge;
        if (chase >= 0) {
            bool keep = bt == chase && (f.is_junction() || f.edge == chase);
            if (keep) {
                const double s = f.is_junction() ? 0.0 : f.coord;
                keep = from_end ? (net.length(chase) - s < rp) : (s < rp);
            }
            if (keep && legal(ext, mode, f, chase_ctrl)) return {chase_ctrl, from_end ? "chase-end" : "chase-junction"};
            chase = -1;
        }
        if (f.is_junction()) {
            if (bt != JUNCTION) {
                if (legal(ext, mode, f, ca) && ext.junction_exit(mode, ca).edge == bt) return {ca, "track"};
                if (ext.modes().is_active(bt, mode))
                    if (auto p = best_push(ext, mode, f, bt, 1.0)) {
                        chase = bt;
                        from_end = false;
                        chase_ctrl = *p;
                        return {*p, "chase-junction"};
                    }
            }
            if (null_o) return {*null_o, "hold-junction"};
            in_trip = micro_trip_from_junction(ext, mode, t, trip);
            return in_trip;
        }
        if (f.edge == bt) {
            if (legal(ext, mode, f, ca)) return {ca, "track"};
            if (auto in = best_push(ext, mode, f, f.edge, -1.0)) {
                chase = f.edge;
                from_end = true;
                chase_ctrl = *in;
                return {*in, "chase-end"};
            }
        }
        return return_to_junction(ext, mode, f);
    };

    detail::FollowerRun run;
    try {
        run = detail::run_follower(ext, shaken, mode, x, target, sc.t_eps, h, tol, choose);
    } catch (const LeftNetwork& e) {
        throw InadmissibleInput(std::string("target control leaves the network: ") + e.what());
    }
    FollowerResult res = finish(ext, mode, std::move(run), h);
    res.bound = sc.extended_bound();
    return res;
}

FollowerResult restrict_to_network(const PdmpModel& base, const PdmpModel& extended, int mode,
                                   const NetworkPoint& x, const Schedule& alpha, double T, double eps, double h) {
    const Network& bnet = base.network();
    const Network& xnet = extended.network();
    if (xnet.num_base_edges() != bnet.num_edges() || !(xnet.epsilon() > 0.0))
        throw BadParameter("second model must live on an extension of the first model's network");
    if (mode < 0 || mode >= base.num_modes()) throw BadParameter("mode out of range");
    if (!bnet.contains(x)) throw BadParameter("start point must lie on the base network");
    if (!(T > 0.0)) throw BadParameter("horizon must be positive");
    for (const auto& s : alpha.segments())
        if (s.control.shaken()) throw InadmissibleInput("control must have zero shaking");

    auto in_base = [&](const NetworkPoint& p) {
        return p.is_junction() || (!xnet.is_fictive(p.edge) && p.coord <= bnet.length(p.edge) + 1e-12);
    };
    Arc arc;
    try {
        arc = flow(extended, mode, x, Policy::from_schedule(alpha), T, h);
    } catch (const LeftNetwork& e) {
        throw InadmissibleInput(std::string("control leaves the extended network: ") + e.what());
    }
    bool stays = true;
    for (std::size_t i = 0; stays && i < arc.samples.size(); ++i) {
        const auto& s = arc.samples[i];
        stays = in_base(s.p) && (i + 1 == arc.samples.size() || arc.samples[i + 1].t - s.t < 1e-12 ||
                                 legal(base, mode, bnet.canonical(s.p), arc.controls.at(s.control)));
    }
    if (stays) {
        FollowerResult res;
        res.policy = alpha;
        res.case_trace = {"identity"};
        res.horizon = T;
        return res;
    }

    const ShakingScales sc = shaking_scales(base, eps);
    const double rp = sc.r_prime;
    const double tol = std::max(1e-9, rp * 1e-3);
    const double trip = rp / (2.0 * base.constants().f_bound);
    const auto null_o = detail::null_at_junction(base, mode);
    Choice in_trip;
    in_trip.until = -kInf;

    auto hold_end = [&](double t, const NetworkPoint& f) -> Choice {
        if (auto z = detail::null_at_end(base, mode, f.edge)) return {*z, "hold-end"};
        if (auto in = best_push(base, mode, f, f.edge, -1.0)) {
            in_trip = {*in, "micro-trip-end", t + trip};
            return in_trip;
        }
        throw MissingPrecondition("no control keeps the follower at the end of edge " + std::to_string(f.edge));
    };
    auto hold_junction = [&](double t) -> Choice {
        if (null_o) return {*null_o, "hold-junction"};
        in_trip = micro_trip_from_junction(base, mode, t, trip);
        return in_trip;
    };

    auto choose = [&](double t, const NetworkPoint& f, const NetworkPoint& g, const Control& ct,
                      bool close) -> Choice {
        const Control ca(ct.a);
        if (t < in_trip.until) return in_trip;
        const bool f_end = !f.is_junction() && bnet.at_endpoint(f);
        if (!g.is_junction() && xnet.is_fictive(g.edge)) {  // target behind the junction
            if (f.is_junction()) return hold_junction(t);
            return return_to_junction(base, mode, f);
        }
        if (!g.is_junction() && g.coord > bnet.length(g.edge) + 1e-12) {  // target on a prolongation
            const int j = g.edge;
            if (!f.is_junction() && f.edge == j) {
                if (f_end) return hold_end(t, f);
                if (legal(base, mode, f, ca) && base.edge_speed(f, mode, ca) > 1e-12) return {ca, "track"};
                if (auto out = best_push(base, mode, f, j, 1.0)) return {*out, "advance-end"};
                return hold_end(t, f);
            }
            if (f.is_junction()) {
                if (auto out = best_push(base, mode, f, j, 1.0)) return {*out, "advance-end"};
                return hold_junction(t);
            }
            return return_to_junction(base, mode, f);
        }
        // target in the closure of the base network
        if (close) {
            if (legal(base, mode, f, ca)) return {ca, "track"};
            if (f.is_junction()) return hold_junction(t);
            return hold_end(t, f);
        }
        if (g.is_junction()) {
            if (f.is_junction()) return hold_junction(t);
            return return_to_junction(base, mode, f);
        }
        if (f.is_junction()) {
            if (legal(base, mode, f, ca) && base.junction_exit(mode, ca).edge == g.edge) return {ca, "track"};
            if (auto p = best_push(base, mode, f, g.edge, 1.0)) return {*p, "chase-junction"};
            return hold_junction(t);
        }
        if (f.edge == g.edge) {
            if (legal(base, mode, f, ca)) return {ca, "track"};
            return hold_end(t, f);
        }
        return return_to_junction(base, mode, f);
    };

    auto run = detail::run_follower(base, extended, mode, x, alpha, T, h, tol, choose);
    return finish(base, mode, std::move(run), h);
}

}  // namespace pdmpnet
