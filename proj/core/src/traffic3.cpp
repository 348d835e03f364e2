#include <cmath>

#include "pdmpnet/model.hpp"

namespace pdmpnet {

namespace {

struct Mode3 {
    int g1, g2;
};
constexpr Mode3 kModes[4] = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};

Vec vec2(double x, double y) {
    Vec v(2);
    v << x, y;
    return v;
}

/// Coefficients of the three-road intersection: a vertical road e1 and a
/// horizontal road crossing the junction (e2, e3 = -e2).
class Traffic3Field : public CoefficientField {
public:
    Traffic3Field(double l0, double lambda0, double q_self)
        : l0_(l0), lambda0_(lambda0), q_self_(q_self) {}

    int num_modes() const override { return 4; }

    Vec drift(const Vec& x, int mode, const Vec& a) const override {
        const auto m = kModes[mode];
        const double a1 = a(1), a2 = a(0);  // components along e1=(0,1), e2=(1,0)
        const double x1 = x(1), x2 = x(0);
        const double na = a.norm();
        const double s1 = (1 - m.g1) * std::sqrt(std::max(x1, 0.0));
        const double s2 = (1 - m.g2) * std::sqrt(std::max(x2, 0.0));
        const double s3 = (1 - m.g2) * std::sqrt(std::max(-x2, 0.0));
        // e3 = -e2, so the e3 term contributes +s3 along the first axis.
        const double f1 = m.g1 * a1 - na * s1;
        const double f2 = m.g2 * a2 - na * (s2 - s3);
        return vec2(f2, f1);
    }

    double single_cost(const Vec& x, int mode, const Vec& a) const {
        const auto m = kModes[mode];
        const double r = x.norm();
        return l0_ + (1.0 - r) * (1.0 - r) / (m.g1 + m.g2 + 1.0) + a.norm() * (r - r * r);
    }

    double cost(const Vec& x, int mode, const Vec& a) const override { return single_cost(x, mode, a); }

    double rate(const Vec& x, int mode, const Vec& a) const override {
        double s = 0.0;
        for (int g = 0; g < 4; ++g)
            if (g != mode) s += lambda0_ * single_cost(x, g, a);
        return s;
    }

    void jump_row(const Vec& x, int mode, const Vec& a, std::vector<double>& row) const override {
        row.assign(4, 0.0);
        double s = 0.0;
        for (int g = 0; g < 4; ++g)
            if (g != mode) {
                row[g] = lambda0_ * single_cost(x, g, a);
                s += row[g];
            }
        for (int g = 0; g < 4; ++g) row[g] = (g == mode) ? q_self_ : (1.0 - q_self_) * row[g] / s;
    }

private:
    double l0_, lambda0_, q_self_;
};

}  // namespace

std::shared_ptr<const PdmpModel> traffic3_model(double l0, double lambda0, double delta,
                                                double q_self) {
    if (!(l0 > 0.0) || !(lambda0 > 0.0) || !(delta > 0.0))
        throw BadParameter("traffic3 parameters must be positive");
    if (!(q_self >= 0.0 && q_self < 1.0)) throw BadParameter("q_self must lie in [0,1)");
    auto net = StarNetwork::make({vec2(0, 1), vec2(1, 0), vec2(-1, 0)});

    ModeSpace modes;
    modes.labels = {"000", "011", "100", "111"};
    modes.active.assign(3, std::vector<bool>(4, false));
    for (int g = 0; g < 4; ++g) {
        modes.active[0][g] = kModes[g].g1 == 1;
        modes.active[1][g] = kModes[g].g2 == 1;
        modes.active[2][g] = kModes[g].g2 == 1;
    }

    std::vector<std::vector<EdgeControlSet>> controls(4, std::vector<EdgeControlSet>(3));
    for (int g = 0; g < 4; ++g)
        for (int j = 0; j < 3; ++j) {
            const Vec e = net->direction(j);
            // Controls along the edge's own axis; both roads of the horizontal
            // line share the same segment [-1,1]e2.
            const Vec axis = (j == 0) ? vec2(0, 1) : vec2(1, 0);
            EdgeControlSet cs;
            cs.segments.push_back({-axis, axis});
            cs.zero = Vec::Zero(2);
            cs.minus = Vec(-e);
            cs.endpoint = Vec(-e);
            if (modes.active[j][g]) cs.plus = Vec(e);
            controls[g][j] = cs;
        }

    ModelConstants k;
    k.beta = 0.5;
    k.eta = 0.5;
    k.kappa = 0.5;
    k.f_bound = 1.0;
    k.l_bound = l0 + 1.0;
    k.lambda_bound = lambda0 * (3.0 * l0 + 2.0);
    k.c_a1 = 0.0;
    k.lip_f = 0.0;
    k.lip_l = 3.0;
    k.lip_lambda = 9.0 * lambda0;
    k.lip_q = (18.0 * l0 + 15.0) / (9.0 * l0 * l0);

    auto field = std::make_shared<Traffic3Field>(l0, lambda0, q_self);
    return std::make_shared<PdmpModel>("traffic3", net, modes, 2, field, delta, controls, k);
}

}  // namespace pdmpnet
