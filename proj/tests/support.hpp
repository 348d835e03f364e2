#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "pdmpnet/model.hpp"

/// Small hand-checkable models shared by the tests.
namespace pdmpnet::testing {

inline Vec vec(std::initializer_list<double> xs) {
    Vec v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

/// Coefficients given as plain callables of (ambient point, mode, control).
class LambdaField : public CoefficientField {
public:
    using VecFn = std::function<Vec(const Vec&, int, const Vec&)>;
    using ScalarFn = std::function<double(const Vec&, int, const Vec&)>;
    using RowFn = std::function<void(const Vec&, int, const Vec&, std::vector<double>&)>;

    LambdaField(int modes, VecFn f, ScalarFn rate, RowFn row, ScalarFn cost)
        : modes_(modes), f_(std::move(f)), rate_(std::move(rate)), row_(std::move(row)), cost_(std::move(cost)) {}

    int num_modes() const override { return modes_; }
    Vec drift(const Vec& x, int m, const Vec& a) const override { return f_(x, m, a); }
    double rate(const Vec& x, int m, const Vec& a) const override { return rate_(x, m, a); }
    void jump_row(const Vec& x, int m, const Vec& a, std::vector<double>& row) const override { row_(x, m, a, row); }
    double cost(const Vec& x, int m, const Vec& a) const override { return cost_(x, m, a); }

private:
    int modes_;
    VecFn f_;
    ScalarFn rate_;
    RowFn row_;
    ScalarFn cost_;
};

struct LineOptions {
    int modes = 2;          ///< 1 or 2 (two modes flip into each other)
    double speed = 1.0;     ///< drift = speed·a·(1,0); 0 gives a static model
    double rate = 1.0;      ///< constant jump rate (ignored with one mode)
    double delta = 1.0;
    /// Cost as a function of the first ambient coordinate, mode and control.
    std::function<double(double, int, double)> cost = [](double x, int m, double a) {
        return 1.0 + 0.5 * x * x + 0.25 * m + 0.1 * a * a;
    };
    double cost_bound = 2.0;
};

/// The line [−1, 1] seen as a star with two antipodal edges e_1 = (1,0) and
/// e_2 = (−1,0); control a ∈ [−1, 1] moves along the first axis; every edge
/// is active in every mode.
inline std::shared_ptr<const PdmpModel> line_model(const LineOptions& o = {}) {
    auto net = StarNetwork::make({vec({1, 0}), vec({-1, 0})});
    const int modes = o.modes;
    const double speed = o.speed, rate = modes > 1 ? o.rate : 0.0;
    auto cost = o.cost;
    auto field = std::make_shared<LambdaField>(
        modes, [speed](const Vec&, int, const Vec& a) { return vec({speed * a(0), 0.0}); },
        [rate](const Vec&, int, const Vec&) { return rate; },
        [modes](const Vec&, int m, const Vec&, std::vector<double>& row) {
            row.assign(static_cast<std::size_t>(modes), 0.0);
            if (modes > 1) row[static_cast<std::size_t>(1 - m)] = 1.0;
        },
        [cost](const Vec& x, int m, const Vec& a) { return cost(x(0), m, a(0)); });
    ModeSpace ms;
    for (int m = 0; m < modes; ++m) ms.labels.push_back("m" + std::to_string(m));
    ms.active.assign(2, std::vector<bool>(static_cast<std::size_t>(modes), true));
    std::vector<std::vector<EdgeControlSet>> controls(static_cast<std::size_t>(modes), std::vector<EdgeControlSet>(2));
    for (int m = 0; m < modes; ++m)
        for (int j = 0; j < 2; ++j) {
            const double out = j == 0 ? 1.0 : -1.0;  // control value moving outward along edge j
            EdgeControlSet cs;
            cs.segments.push_back({vec({-1.0}), vec({1.0})});
            cs.zero = vec({0.0});
            cs.plus = vec({out});
            cs.minus = vec({-out});
            cs.endpoint = vec({-out});
            controls[static_cast<std::size_t>(m)][static_cast<std::size_t>(j)] = cs;
        }
    ModelConstants k;
    k.beta = 0.5 * speed;
    k.eta = 0.5;
    k.kappa = 0.0;
    k.f_bound = speed;
    k.lambda_bound = rate;
    k.l_bound = o.cost_bound;
    k.lip_f = 0.0;
    k.lip_l = 1.0;
    return std::make_shared<PdmpModel>("line", net, ms, 1, field, o.delta, controls, k);
}

}  // namespace pdmpnet::testing
