#include "pdmpnet/policy.hpp"

#include <cmath>

namespace pdmpnet {

Schedule::Schedule(std::vector<Segment> segs) {
    for (auto& s : segs) append(s.duration, s.control);
}

Schedule Schedule::constant(const Control& c) { return Schedule({{kInf, c}}); }

const Control& Schedule::at(double t) const {
    if (segs_.empty()) throw BadParameter("empty schedule");
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < segs_.size(); ++i) {
        acc += segs_[i].duration;
        if (t < acc) return segs_[i].control;
    }
    return segs_.back().control;
}

double Schedule::next_switch(double t) const {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < segs_.size(); ++i) {
        acc += segs_[i].duration;
        if (acc > t) return acc;
    }
    return kInf;
}

std::vector<double> Schedule::switch_times() const {
    std::vector<double> out;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < segs_.size(); ++i) {
        acc += segs_[i].duration;
        out.push_back(acc);
    }
    return out;
}

Schedule Schedule::shifted(double t0) const {
    if (t0 <= 0.0) return *this;
    Schedule out;
    double acc = 0.0;
    for (std::size_t i = 0; i < segs_.size(); ++i) {
        const bool last = i + 1 == segs_.size();
        const double end = last ? kInf : acc + segs_[i].duration;
        if (end > t0) out.append(last ? kInf : end - std::max(acc, t0), segs_[i].control);
        acc = end;
    }
    return out;
}

Schedule Schedule::then(double at, const Schedule& tail) const {
    Schedule out;
    double acc = 0.0;
    for (std::size_t i = 0; i < segs_.size() && acc < at; ++i) {
        const bool last = i + 1 == segs_.size();
        const double d = last ? at - acc : std::min(segs_[i].duration, at - acc);
        if (d > 0.0) out.append(d, segs_[i].control);
        acc += d;
    }
    for (const auto& s : tail.segs_) out.append(s.duration, s.control);
    return out;
}

void Schedule::append(double duration, const Control& c) {
    if (!(duration > 0.0)) return;
    if (!segs_.empty() && segs_.back().control == c && std::isfinite(segs_.back().duration)) {
        segs_.back().duration += duration;
        return;
    }
    if (!segs_.empty() && !std::isfinite(segs_.back().duration))
        throw BadParameter("cannot append after an unbounded segment");
    segs_.push_back({duration, c});
}

double Schedule::finite_horizon() const {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < segs_.size(); ++i) acc += segs_[i].duration;
    return acc;
}

Policy Policy::open_loop(ScheduleFn fn) {
    Policy p;
    p.kind_ = Kind::OpenLoop;
    p.sched_ = std::move(fn);
    return p;
}

Policy Policy::from_schedule(Schedule s) {
    return open_loop([s = std::move(s)](const NetworkPoint&, int) { return s; });
}

Policy Policy::feedback(FeedbackFn fn) {
    Policy p;
    p.kind_ = Kind::Feedback;
    p.fb_ = std::move(fn);
    return p;
}

}  // namespace pdmpnet
