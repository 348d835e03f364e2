#include "pdmpnet/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <thread>

namespace pdmpnet {

double advance(const Dynamics& dyn, int mode, NetworkPoint& p, const Control& c, double dt) {
    if (!(dt > 0.0)) return 0.0;
    // Round-off slivers (e.g. between an edge-end hit and a control switch
    // computed along a different summation order) carry no motion.
    if (dt < 1e-12) return dt;
    const Network& net = dyn.network();
    int k;
    double s;
    if (p.is_junction()) {
        const auto ex = dyn.junction_exit(mode, c);
        if (ex.edge == JUNCTION) return dt;  // rests at O
        k = ex.edge;
        s = 0.0;
    } else {
        k = p.edge;
        s = p.coord;
    }
    const double len = net.length(k);
    const Vec& e = net.direction(k);
    auto g = [&](double y) {
        y = std::clamp(y, 0.0, len);
        return dyn.drift_raw(NetworkPoint::on(k, y), mode, c).dot(e);
    };
    if (s >= len - kCanonTol) {
        const double v = g(len);
        if (v > 1e-12) throw LeftNetwork("control pushes beyond the end of edge " + std::to_string(k));
        if (v >= -1e-14) {
            p = net.canonical({k, len});
            return dt;
        }
        s = len;
    }
    auto rk4 = [&](double tau) {
        const double k1 = g(s);
        const double k2 = g(s + 0.5 * tau * k1);
        const double k3 = g(s + 0.5 * tau * k2);
        const double k4 = g(s + tau * k3);
        return s + tau / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    };
    const double s1 = rk4(dt);
    if (s1 > 0.0 && s1 <= len) {
        p = net.canonical(NetworkPoint::on(k, s1));
        return dt;
    }
    // Event: localize the boundary crossing by bisection on the step size.
    const bool low = s1 <= 0.0;
    auto inside = [&](double y) { return low ? y > 0.0 : y < len; };
    double lo = 0.0, hi = dt;
    int it = 0;
    while (hi - lo > 1e-14) {
        if (++it > 200) throw StalledEvent("event bisection did not converge");
        const double mid = 0.5 * (lo + hi);
        (inside(rk4(mid)) ? lo : hi) = mid;
    }
    p = low ? NetworkPoint::junction() : net.canonical({k, len});
    return hi;
}

const Control& Arc::control_at(double t) const {
    auto it = std::upper_bound(samples.begin(), samples.end(), t,
                               [](double v, const ArcSample& s) { return v < s.t; });
    if (it != samples.begin()) --it;
    return controls.at(it->control);
}

NetworkPoint Arc::position_at(const Dynamics& dyn, double t) const {
    auto it = std::upper_bound(samples.begin(), samples.end(), t,
                               [](double v, const ArcSample& s) { return v < s.t; });
    if (it != samples.begin()) --it;
    NetworkPoint q = it->p;
    const double dt = t - it->t;
    if (dt > 0.0) advance(dyn, mode, q, controls.at(it->control), dt);
    return q;
}

namespace {

int control_index(std::vector<Control>& controls, const Control& c) {
    if (!controls.empty() && controls.back() == c) return static_cast<int>(controls.size()) - 1;
    controls.push_back(c);
    return static_cast<int>(controls.size()) - 1;
}

class StallGuard {
public:
    void step(double adv) {
        if (adv < 1e-12) {
            if (++count_ > 1000) throw StalledEvent("flow makes no progress (chattering at a boundary)");
        } else {
            count_ = 0;
        }
    }

private:
    int count_ = 0;
};

}  // namespace

Arc flow(const Dynamics& dyn, int mode, const NetworkPoint& x0, const Policy& policy, double T,
         double h) {
    if (!(h > 0.0)) throw BadParameter("step must be positive");
    const Network& net = dyn.network();
    NetworkPoint p = net.canonical(x0);
    if (!net.contains(p)) throw LeftNetwork("start point outside the network");
    const bool open = policy.kind() == Policy::Kind::OpenLoop;
    Schedule sched;
    if (open) sched = policy.schedule_from(p, mode);
    Arc arc;
    arc.mode = mode;
    double t = 0.0;
    arc.samples.push_back({t, p, 0});
    StallGuard guard;
    while (t < T - 1e-14) {
        const Control c = open ? sched.at(t) : policy.feedback_at(p, mode);
        double dt = std::min(h, T - t);
        if (open) dt = std::min(dt, sched.next_switch(t) - t);
        arc.samples.back().control = control_index(arc.controls, c);
        const double adv = advance(dyn, mode, p, c, dt);
        guard.step(adv);
        t += adv;
        arc.samples.push_back({t, p, arc.samples.back().control});
    }
    if (arc.controls.empty())
        arc.controls.push_back(open ? sched.at(0.0) : policy.feedback_at(p, mode));
    return arc;
}

JumpSample sample_jump(const Dynamics& dyn, const Arc& arc, RngStream& rng) {
    JumpSample out;
    const double bound = dyn.constants().lambda_bound;
    if (!(bound > 0.0)) return out;
    double t = arc.t_start;
    while (true) {
        t += rng.exponential(bound);
        if (t >= arc.t_end()) return out;
        const NetworkPoint y = arc.position_at(dyn, t);
        const Control& c = arc.control_at(t);
        const double lam = dyn.rate_raw(y, arc.mode, c);
        if (lam > bound * (1.0 + 1e-9)) throw RateBoundViolated("rate exceeds the declared bound");
        if (rng.uniform() * bound < lam) {
            out.jumped = true;
            out.tau = t;
            out.position = y;
            out.control = c;
            return out;
        }
    }
}

int sample_mode(const std::vector<double>& qrow, RngStream& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    int last = -1;
    for (std::size_t g = 0; g < qrow.size(); ++g) {
        if (qrow[g] <= 0.0) continue;
        acc += qrow[g];
        last = static_cast<int>(g);
        if (u < acc) return last;
    }
    return last;
}

double simulate_path(const Dynamics& dyn, const NetworkPoint& x, int mode, const Policy& policy,
                     const StopRule& stop, RngStream& rng, double h, PathObserver& obs) {
    if (!std::isfinite(stop.horizon) && stop.max_jumps < 0)
        throw BadParameter("simulation needs a finite horizon or a jump cap");
    if (!(h > 0.0)) throw BadParameter("step must be positive");
    const Network& net = dyn.network();
    const double bound = dyn.constants().lambda_bound;
    const bool open = policy.kind() == Policy::Kind::OpenLoop;
    NetworkPoint p = net.canonical(x);
    if (!net.contains(p)) throw LeftNetwork("start point outside the network");
    Schedule sched;
    double local = 0.0;  // time since the schedule was (re)started
    if (open) sched = policy.schedule_from(p, mode);
    double t = 0.0;
    int jumps = 0;
    double next_cand = bound > 0.0 ? rng.exponential(bound) : kInf;
    std::vector<double> row;
    StallGuard guard;
    auto capped = [&] { return stop.max_jumps >= 0 && jumps >= stop.max_jumps; };
    while (t < stop.horizon - 1e-14 && !obs.done()) {
        if (capped() && !std::isfinite(stop.horizon)) break;
        const Control c = open ? sched.at(local) : policy.feedback_at(p, mode);
        double dt = std::min(h, stop.horizon - t);
        // Schedule time is tracked on its own clock so that switch times are
        // hit exactly instead of through the rounding of t − t_jump.
        double next_switch = kInf;
        if (open) {
            next_switch = sched.next_switch(local);
            dt = std::min(dt, next_switch - local);
        }
        bool to_cand = false;
        if (next_cand - t <= dt) {
            dt = next_cand - t;
            to_cand = true;
        }
        const NetworkPoint p0 = p;
        const double adv = advance(dyn, mode, p, c, dt);
        guard.step(adv);
        const bool reached = to_cand && adv == dt;
        const double t1 = reached ? next_cand : t + adv;
        obs.on_step(t, t1, p0, p, mode, c);
        local = (adv == dt && local + dt >= next_switch) ? next_switch : local + (t1 - t);
        t = t1;
        if (!reached) continue;
        const double lam = dyn.rate_raw(p, mode, c);
        if (lam > bound * (1.0 + 1e-9)) throw RateBoundViolated("rate exceeds the declared bound");
        const bool accept = rng.uniform() * bound < lam;
        next_cand = t + rng.exponential(bound);
        if (!accept || capped()) continue;
        dyn.jump_row_raw(p, mode, c, row);
        const int to = sample_mode(row, rng);
        if (to == mode || to < 0) throw MissingPrecondition("jump kernel produced no mode change");
        obs.on_jump(t, p, mode, to);
        mode = to;
        ++jumps;
        if (open) {
            sched = policy.schedule_from(p, mode);
            local = 0.0;
        }
    }
    return t;
}

namespace {

class Recorder : public PathObserver {
public:
    Recorder(Trajectory& tr, int mode) : tr_(tr) { start_arc(0.0, mode); }
    void on_step(double t0, double t1, const NetworkPoint& p0, const NetworkPoint& p1, int,
                 const Control& c) override {
        Arc& a = tr_.arcs.back();
        if (a.samples.empty()) a.samples.push_back({t0, p0, 0});
        a.samples.back().control = control_index(a.controls, c);
        a.samples.push_back({t1, p1, a.samples.back().control});
    }
    void on_jump(double t, const NetworkPoint& p, int, int to) override {
        tr_.jump_times.push_back(t);
        tr_.postjump.push_back({p, to});
        start_arc(t, to);
    }

private:
    void start_arc(double t, int mode) {
        Arc a;
        a.t_start = t;
        a.mode = mode;
        tr_.arcs.push_back(a);
    }
    Trajectory& tr_;
};

}  // namespace

Trajectory simulate(const Dynamics& dyn, const NetworkPoint& x, int mode, const Policy& policy,
                    const StopRule& stop, RngStream& rng, double h) {
    Trajectory tr;
    Recorder rec(tr, mode);
    tr.horizon = simulate_path(dyn, x, mode, policy, stop, rng, h, rec);
    for (auto& a : tr.arcs) {
        if (a.samples.empty()) a.samples.push_back({a.t_start, tr.postjump.empty() ? x : tr.postjump.back().first, 0});
        if (a.controls.empty()) a.controls.push_back(dyn.zero_control());
    }
    return tr;
}

std::string Trajectory::to_csv(const Dynamics& dyn) const {
    std::ostringstream os;
    os << "t,edge,coord,mode";
    for (int i = 0; i < dyn.control_dim(); ++i) os << ",a" << i;
    os << "\n";
    char buf[64];
    for (const auto& a : arcs)
        for (const auto& s : a.samples) {
            std::snprintf(buf, sizeof buf, "%.17g", s.t);
            os << buf << "," << s.p.edge << ",";
            std::snprintf(buf, sizeof buf, "%.17g", s.p.coord);
            os << buf << "," << a.mode;
            const Control& c = a.controls.at(s.control);
            for (Eigen::Index i = 0; i < c.a.size(); ++i) {
                std::snprintf(buf, sizeof buf, "%.17g", c.a(i));
                os << "," << buf;
            }
            os << "\n";
        }
    return os.str();
}

namespace {

class CostIntegrator : public PathObserver {
public:
    explicit CostIntegrator(const Dynamics& dyn) : dyn_(dyn), delta_(dyn.discount()) {}
    void on_step(double t0, double t1, const NetworkPoint& p0, const NetworkPoint& p1, int mode,
                 const Control& c) override {
        if (t1 <= t0) return;
        const double l0 = dyn_.cost_raw(p0, mode, c);
        const double l1 = dyn_.cost_raw(p1, mode, c);
        sum += 0.5 * (std::exp(-delta_ * t0) * l0 + std::exp(-delta_ * t1) * l1) * (t1 - t0);
    }
    double sum = 0.0;

private:
    const Dynamics& dyn_;
    double delta_;
};

}  // namespace

McEstimate mc_cost(const Dynamics& dyn, const NetworkPoint& x, int mode, const Policy& policy,
                   int n_paths, double T_trunc, std::uint64_t seed, double h) {
    if (n_paths <= 0 || !(T_trunc > 0.0)) throw BadParameter("mc_cost needs paths and a positive horizon");
    std::vector<double> vals(n_paths);
    parallel_for(n_paths, [&](int i) {
        RngStream rng(seed, static_cast<std::uint64_t>(i));
        CostIntegrator ci(dyn);
        simulate_path(dyn, x, mode, policy, {T_trunc, -1}, rng, h, ci);
        vals[i] = ci.sum;
    });
    McEstimate out;
    out.n_paths = n_paths;
    double s = 0.0, s2 = 0.0;
    for (double v : vals) s += v;
    out.estimate = s / n_paths;
    for (double v : vals) s2 += (v - out.estimate) * (v - out.estimate);
    out.stderr_ = n_paths > 1 ? std::sqrt(s2 / (n_paths - 1) / n_paths) : 0.0;
    out.tail_bound = dyn.constants().l_bound * std::exp(-dyn.discount() * T_trunc) / dyn.discount();
    return out;
}

int worker_count() {
    int n = static_cast<int>(std::thread::hardware_concurrency());
    if (n <= 0) n = 1;
    if (const char* env = std::getenv("PDMPNET_THREADS")) {
        const int cap = std::atoi(env);
        if (cap > 0) n = std::min(n, cap);
    }
    return n;
}

void parallel_for(int n, const std::function<void(int)>& fn) {
    const int workers = std::min(worker_count(), n);
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr err;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            while (!failed) {
                const int i = next++;
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    if (!failed.exchange(true)) err = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace pdmpnet
