#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "pdmpnet/model.hpp"

namespace pdmpnet {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// One piece of a piecewise-constant control schedule.
struct Segment {
    double duration = kInf;
    Control control;
};

/// Piecewise-constant control t -> α(t); the last segment extends to +∞.
class Schedule {
public:
    Schedule() = default;
    explicit Schedule(std::vector<Segment> segs);
    static Schedule constant(const Control& c);

    const std::vector<Segment>& segments() const { return segs_; }
    bool empty() const { return segs_.empty(); }
    /// Control in force at time t (right-continuous).
    const Control& at(double t) const;
    /// First switching time strictly after t (kInf if none).
    double next_switch(double t) const;
    /// Switching times (segment boundaries), excluding +∞.
    std::vector<double> switch_times() const;
    /// The schedule s -> α(t0 + s).
    Schedule shifted(double t0) const;
    /// This schedule on [0, at), followed by tail(· − at).
    Schedule then(double at, const Schedule& tail) const;
    /// Appends a segment, merging with the previous one if the control is equal.
    void append(double duration, const Control& c);
    /// Total finite duration (sum of all but the last segment).
    double finite_horizon() const;

private:
    std::vector<Segment> segs_;
};

/// Admissible control policy: either open-loop per start (the schedule is
/// restarted after each jump from the post-jump pair) or stationary feedback.
class Policy {
public:
    enum class Kind { OpenLoop, Feedback };
    using ScheduleFn = std::function<Schedule(const NetworkPoint&, int)>;
    using FeedbackFn = std::function<Control(const NetworkPoint&, int)>;

    static Policy open_loop(ScheduleFn fn);
    /// The same schedule from every start.
    static Policy from_schedule(Schedule s);
    static Policy feedback(FeedbackFn fn);

    Kind kind() const { return kind_; }
    Schedule schedule_from(const NetworkPoint& x, int mode) const { return sched_(x, mode); }
    Control feedback_at(const NetworkPoint& x, int mode) const { return fb_(x, mode); }

private:
    Kind kind_ = Kind::OpenLoop;
    ScheduleFn sched_;
    FeedbackFn fb_;
};

}  // namespace pdmpnet
