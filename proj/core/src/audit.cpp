#include "pdmpnet/audit.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "pdmpnet/rng.hpp"

namespace pdmpnet {

using nlohmann::json;

const AuditEntry* AuditReport::find(const std::string& name) const {
    for (const auto& e : entries)
        if (e.name == name) return &e;
    return nullptr;
}

bool AuditReport::passed(const std::string& name) const {
    const auto* e = find(name);
    return e && e->pass;
}

bool AuditReport::all_passed() const {
    return std::all_of(entries.begin(), entries.end(), [](const AuditEntry& e) { return e.pass; });
}

bool AuditReport::passed_all_of(const std::vector<std::string>& names) const {
    return std::all_of(names.begin(), names.end(), [&](const std::string& n) { return passed(n); });
}

json AuditReport::to_json() const {
    json j;
    j["model"] = model;
    j["n_samples"] = n_samples;
    j["seed"] = seed;
    j["all_passed"] = all_passed();
    j["assumptions"] = json::array();
    for (const auto& e : entries)
        j["assumptions"].push_back(
            {{"name", e.name}, {"pass", e.pass}, {"detail", e.detail}, {"witness", e.witness}});
    j["notes"] = notes;
    return j;
}

namespace {

json vec_json(const Vec& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

/// Accumulates the first failure of one assumption.
class Check {
public:
    explicit Check(std::string name) { e_.name = std::move(name); }
    void fail(const std::string& detail, json witness) {
        if (!e_.pass) return;
        e_.pass = false;
        e_.detail = detail;
        e_.witness = std::move(witness);
    }
    bool ok() const { return e_.pass; }
    AuditEntry done(const std::string& pass_detail) {
        if (e_.pass) e_.detail = pass_detail;
        return e_;
    }

private:
    AuditEntry e_;
};

json with(json w, const json& extra) {
    w.update(extra);
    return w;
}

json point_json(int edge, double r, int mode, const Vec& a) {
    return {{"edge", edge}, {"coord", r}, {"mode", mode}, {"control", vec_json(a)}};
}

}  // namespace

AuditReport audit_assumptions(const PdmpModel& model, int n_samples, std::uint64_t seed) {
    AuditReport rep;
    rep.model = model.name();
    rep.n_samples = n_samples;
    rep.seed = seed;

    const auto& net = model.network();
    const auto& k = model.constants();
    const int nm = model.num_modes();
    const int ne = net.num_edges();
    const int m_free = net.antipode_free_count();
    RngStream rng(seed, 0x617564u);
    auto u = rng.uniform_fn();
    const double rel = 1e-9;

    auto embed = [&](int j, double r) { return NetworkPoint::on(j, r); };
    auto sample_control = [&](int g, int j) { return model.edge_controls(g, j).random(u); };

    Check a1("A1"), a2("A2"), a3("A3"), a4("A4");
    double two_sided_f = 0.0;
    std::vector<double> q0, q1;
    for (int s = 0; s < n_samples; ++s) {
        const int g = rng.index(nm);
        const int j = rng.index(ne);
        const double r = rng.uniform();
        const Vec a = sample_control(g, j);
        const Control c(a);
        const auto p = embed(j, r);
        const Vec f = model.drift_raw(p, g, c);
        const double lam = model.rate_raw(p, g, c);
        const double l = model.cost_raw(p, g, c);
        model.jump_row_raw(p, g, c, q0);
        const json w = point_json(j, r, g, a);

        if (f.norm() > k.f_bound * (1 + rel) + 1e-12)
            a1.fail("|f| exceeds the declared bound", with(w, {{"value", f.norm()}}));
        if (lam < -1e-12 || lam > k.lambda_bound * (1 + rel) + 1e-12)
            a2.fail("rate outside [0, |lambda|_0]", with(w, {{"value", lam}}));
        double sum = 0.0;
        for (int h = 0; h < nm; ++h) {
            sum += q0[h];
            if (q0[h] < -1e-12 || q0[h] > 1 + 1e-12)
                a3.fail("kernel entry outside [0,1]", with(w, {{"target", h}, {"value", q0[h]}}));
        }
        if (std::abs(sum - 1.0) > 1e-12)
            a3.fail("kernel row does not sum to 1", with(w, {{"value", sum}}));
        if (q0[g] != 0.0)
            a3.fail("kernel puts mass on the current mode", with(w, {{"value", q0[g]}}));
        if (std::abs(l) > k.l_bound * (1 + rel) + 1e-12)
            a4.fail("|l| exceeds the declared bound", with(w, {{"value", l}}));

        // Colinear partner: same edge, or the antipodal edge through O.
        int j2 = j;
        double r2 = std::clamp(r + (rng.uniform() - 0.5) * 0.1, 0.0, 1.0);
        if (net.antipode(j) >= 0 && rng.uniform() < 0.25) {
            j2 = net.antipode(j);
            r2 = rng.uniform() * 0.05;
        }
        const auto p2 = embed(j2, r2);
        const Vec x1 = net.embed(p), x2 = net.embed(p2);
        const double dist = (x1 - x2).norm();
        if (dist < 1e-9) continue;
        const Vec f2 = model.drift_raw(p2, g, c);
        const double inner = (f - f2).dot(x1 - x2);
        if (inner > k.c_a1 * dist * dist * (1 + rel) + 1e-12)
            a1.fail("one-sided Lipschitz inequality violated",
                    with(w, {{"partner_edge", j2}, {"partner_coord", r2}, {"value", inner / (dist * dist)}}));
        two_sided_f = std::max(two_sided_f, (f - f2).norm() / dist);
        const double lq = std::abs(lam - model.rate_raw(p2, g, c)) / dist;
        if (lq > k.lip_lambda * (1 + 1e-6) + 1e-9)
            a2.fail("rate difference quotient exceeds Lip(lambda)", with(w, {{"value", lq}}));
        model.jump_row_raw(p2, g, c, q1);
        double qd = 0.0;
        for (int h = 0; h < nm; ++h) qd = std::max(qd, std::abs(q0[h] - q1[h]));
        if (qd / dist > k.lip_q * (1 + 1e-6) + 1e-9)
            a3.fail("kernel difference quotient exceeds Lip(Q)", with(w, {{"value", qd / dist}}));
        const double ll = std::abs(l - model.cost_raw(p2, g, c)) / dist;
        if (ll > k.lip_l * (1 + 1e-6) + 1e-9)
            a4.fail("cost difference quotient exceeds Lip(l)", with(w, {{"value", ll}}));
    }
    rep.entries.push_back(a1.done("one-sided inner-product bound and |f| bound hold on sampled pairs"));
    rep.entries.push_back(a2.done("rate bounds and Lipschitz quotients hold"));
    rep.entries.push_back(a3.done("kernel rows are stochastic with zero self-transition"));
    rep.entries.push_back(a4.done("cost bounds and Lipschitz quotients hold"));
    if (two_sided_f > k.lip_f * (1 + 1e-6) + 1e-9) {
        std::ostringstream os;
        os << "drift satisfies the one-sided condition but its two-sided difference quotient reaches "
           << two_sided_f << " (declared Lip(f) = " << k.lip_f
           << "); only the one-sided form is assumed";
        rep.notes.push_back(os.str());
    }

    const int per = std::max(8, n_samples / std::max(1, nm * ne));
    auto on = [&](int j) { return net.direction(j); };
    Check aa("Aa"), ab("Ab"), abp("Ab'"), ac("Ac"), acp("Ac'"), b("B"), cc("C");
    for (int g = 0; g < nm; ++g)
        for (int j = 0; j < ne; ++j) {
            const auto& cs = model.edge_controls(g, j);
            const bool active = model.modes().is_active(j, g);
            const NetworkPoint O = NetworkPoint::junction();
            const NetworkPoint end = embed(j, net.length(j));
            // Distinguished controls must be members of A^{γ,j}.
            for (const auto* d : {&cs.plus, &cs.minus, &cs.zero, &cs.endpoint})
                if (d->has_value() && !cs.contains(**d))
                    aa.fail("distinguished control outside its edge control set",
                            point_json(j, 0.0, g, **d));
            // Endpoint controls: either all controls are admissible at e_j or
            // a return control with speed above beta exists.
            bool all_inward = true;
            for (int s = 0; s < per && all_inward; ++s) {
                const Vec a = sample_control(g, j);
                if (model.drift_raw(end, g, Control(a)).dot(on(j)) > 1e-12) all_inward = false;
            }
            if (!all_inward) {
                if (!cs.endpoint ||
                    !(model.drift_raw(end, g, Control(*cs.endpoint)).dot(on(j)) < -k.beta))
                    aa.fail("no endpoint return control with speed above beta",
                            point_json(j, net.length(j), g, cs.endpoint.value_or(Vec::Zero(model.control_dim()))));
            }
            if (active) {
                if (!cs.plus || !cs.minus) {
                    ab.fail("active edge lacks inward/outward controls", point_json(j, 0.0, g, Vec::Zero(model.control_dim())));
                } else {
                    const double sp = model.drift_raw(O, g, Control(*cs.plus)).dot(on(j));
                    const double sm = model.drift_raw(O, g, Control(*cs.minus)).dot(on(j));
                    if (!(sp > k.beta))
                        ab.fail("outward speed at O not above beta", with(point_json(j, 0.0, g, *cs.plus), {{"value", sp}}));
                    if (!(sm < -k.beta))
                        ab.fail("inward speed at O not below -beta", with(point_json(j, 0.0, g, *cs.minus), {{"value", sm}}));
                }
            } else {
                if (!cs.minus || !cs.zero) {
                    ab.fail("inactive edge lacks return or null control", point_json(j, 0.0, g, Vec::Zero(model.control_dim())));
                } else {
                    const Vec f0 = model.drift_raw(O, g, Control(*cs.zero));
                    if (f0.norm() > 1e-12)
                        ab.fail("null control has nonzero drift at O", with(point_json(j, 0.0, g, *cs.zero), {{"value", f0.norm()}}));
                    for (int s = 0; s < per; ++s) {
                        const double r = k.eta * rng.uniform();
                        if (r < 1e-12) continue;
                        const auto p = embed(j, r);
                        const double sm = model.drift_raw(p, g, Control(*cs.minus)).dot(on(j));
                        if (sm > -k.beta * std::pow(r, k.kappa) + 1e-12)
                            ab.fail("return speed below beta*r^kappa", with(point_json(j, r, g, *cs.minus), {{"value", sm}}));
                        const Vec a = sample_control(g, j);
                        const double sa = model.drift_raw(p, g, Control(a)).dot(on(j));
                        if (sa > 1e-12)
                            ab.fail("inactive edge allows outward motion near O", with(point_json(j, r, g, a), {{"value", sa}}));
                    }
                }
                // Control independence of the cost at O on inactive edges.
                const Vec a0 = sample_control(g, j);
                const double l0 = model.cost_raw(O, g, Control(a0));
                bool outward_set_differs = false;
                for (int s = 0; s < per; ++s) {
                    const Vec a = sample_control(g, j);
                    if (std::abs(model.cost_raw(O, g, Control(a)) - l0) > 1e-12)
                        ac.fail("cost at O depends on the control", point_json(j, 0.0, g, a));
                    const Vec f = model.drift_raw(O, g, Control(a));
                    if (f.norm() > 1e-12 && (f / f.norm() - on(j)).norm() > 1e-9) outward_set_differs = true;
                    if (j < m_free && f.norm() > 1e-12)
                        abp.fail("inactive antipode-free edge has nonzero drift at O", with(point_json(j, 0.0, g, a), {{"value", f.norm()}}));
                }
                if (outward_set_differs) {
                    const double lam0 = model.rate_raw(O, g, Control(a0));
                    model.jump_row_raw(O, g, Control(a0), q0);
                    for (int s = 0; s < per; ++s) {
                        const Vec a = sample_control(g, j);
                        model.jump_row_raw(O, g, Control(a), q1);
                        double qd = 0.0;
                        for (int h = 0; h < nm; ++h) qd = std::max(qd, std::abs(q0[h] - q1[h]));
                        if (std::abs(model.rate_raw(O, g, Control(a)) - lam0) > 1e-12 || qd > 1e-12)
                            acp.fail("rate or kernel at O depends on the control", point_json(j, 0.0, g, a));
                    }
                }
            }
            // (B): antipodal crossing roads share their control sets.
            const int jp = net.antipode(j);
            if (jp >= 0) {
                const auto& other = model.edge_controls(g, jp);
                for (const auto& sgm : cs.segments)
                    for (const Vec* v : {&sgm.lo, &sgm.hi})
                        if (!other.contains(*v))
                            b.fail("antipodal edges carry different control sets", point_json(j, 0.0, g, *v));
            }
            // (C): cost control-independent at O and at e_j.
            const Vec a0 = sample_control(g, j);
            const double lO = model.cost_raw(O, g, Control(a0));
            const double lE = model.cost_raw(end, g, Control(a0));
            for (int s = 0; s < per; ++s) {
                const Vec a = sample_control(g, j);
                if (std::abs(model.cost_raw(O, g, Control(a)) - lO) > 1e-12)
                    cc.fail("cost at O depends on the control", point_json(j, 0.0, g, a));
                if (std::abs(model.cost_raw(end, g, Control(a)) - lE) > 1e-12)
                    cc.fail("cost at the edge end depends on the control", point_json(j, net.length(j), g, a));
            }
        }
    rep.entries.push_back(aa.done("distinguished controls are members; endpoint sets nonempty"));
    rep.entries.push_back(ab.done("active/inactive sign conditions hold with the declared beta, eta, kappa"));
    rep.entries.push_back(abp.done("inactive antipode-free edges have zero drift at O"));
    rep.entries.push_back(ac.done("cost at O is control-independent on inactive edges"));
    rep.entries.push_back(acp.done("rate and kernel at O are control-independent where required"));
    rep.entries.push_back(b.done("antipodal edges share control sets"));
    rep.entries.push_back(cc.done("cost is control-independent at O and at edge ends"));
    return rep;
}

}  // namespace pdmpnet
