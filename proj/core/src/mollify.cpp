#include <algorithm>
#include <cmath>

#include "pdmpnet/linearize.hpp"

namespace pdmpnet {

// ---------------------------------------------------------------- test functions

double GridTestFunction::value(const NetworkPoint& p, int mode) const { return v_.interpolate(p, mode) + shift_; }

double GridTestFunction::slope(const NetworkPoint& p, int mode, int edge, int sign) const {
    const Grid& g = v_.grid();
    const Network& net = g.network();
    const double s = p.is_junction() ? 0.0 : p.coord;
    const double ds = g.spacing(edge);
    const double len = net.length(edge);
    auto at = [&](double u) { return v_.interpolate(net.canonical({edge, std::clamp(u, 0.0, len)}), mode); };
    const bool forward = sign >= 0 ? s + ds <= len + 1e-12 : s - ds < -1e-12;
    if (forward) return (at(s + ds) - at(s)) / ds;
    return (at(s) - at(s - ds)) / ds;
}

// ---------------------------------------------------------------- kernel

double BumpKernel::mass() const {
    double m = 0.0;
    for (double w : weights) m += w;
    return m;
}

const BumpKernel& bump_kernel() {
    static const BumpKernel k = [] {
        constexpr int n = 64;
        BumpKernel out;
        const double du = 2.0 / (n - 1);
        double mass = 0.0, moment = 0.0;
        std::vector<double> psi(n), dpsi(n);
        for (int i = 0; i < n; ++i) {
            const double u = -1.0 + du * i;
            out.nodes.push_back(u);
            const double q = 1.0 - u * u;
            if (q > 0.0) {
                psi[i] = std::exp(-1.0 / q);
                dpsi[i] = psi[i] * (-2.0 * u / (q * q));
            }
            mass += du * psi[i];
            moment += du * u * dpsi[i];
        }
        for (int i = 0; i < n; ++i) {
            out.weights.push_back(du * psi[i] / mass);
            // ∫u ψ'(u) du = −∫ψ: normalizing the discrete first moment to −1
            // makes the derivative quadrature exact on affine inputs.
            out.dweights.push_back(-du * dpsi[i] / moment);
        }
        return out;
    }();
    return k;
}

// ---------------------------------------------------------------- mollified fields

MollifiedField::MollifiedField(std::shared_ptr<const ValueField> v_ext, int edge, double width)
    : v_(std::move(v_ext)), edge_(edge), width_(width) {
    const Network& net = v_->grid().network();
    if (!(width > 0.0)) throw BadParameter("mollification width must be positive");
    if (edge < 0 || edge >= net.num_base_edges()) throw BadParameter("edge out of range");
    const double base_len = net.length(edge) - net.epsilon();
    if (!point_on_line(net, edge, -width) || !point_on_line(net, edge, base_len + width))
        throw MarginViolated("kernel stencil of width " + std::to_string(width) +
                             " leaves the extended network along edge " + std::to_string(edge));
}

double MollifiedField::length() const {
    const Network& net = v_->grid().network();
    return net.length(edge_) - net.epsilon();
}

double MollifiedField::sample(double s, int mode) const {
    const auto p = point_on_line(v_->grid().network(), edge_, s);
    if (!p) throw MarginViolated("kernel stencil leaves the extended network at coordinate " + std::to_string(s));
    return v_->interpolate(*p, mode);
}

double MollifiedField::value(double s, int mode) const {
    const auto& k = bump_kernel();
    double acc = 0.0;
    for (std::size_t i = 0; i < k.nodes.size(); ++i)
        if (k.weights[i] != 0.0) acc += k.weights[i] * sample(s - width_ * k.nodes[i], mode);
    return acc;
}

double MollifiedField::slope(double s, int mode) const {
    const auto& k = bump_kernel();
    double acc = 0.0;
    for (std::size_t i = 0; i < k.nodes.size(); ++i)
        if (k.dweights[i] != 0.0) acc += k.dweights[i] * sample(s - width_ * k.nodes[i], mode);
    return acc / width_;
}

std::vector<MollifiedField> mollify_edgewise(std::shared_ptr<const ValueField> v_ext, double width) {
    const Network& net = v_ext->grid().network();
    if (!(net.epsilon() > 0.0)) throw BadParameter("mollification needs a field on an extended network");
    std::vector<MollifiedField> out;
    for (int j = 0; j < net.num_base_edges(); ++j) out.emplace_back(v_ext, j, width);
    return out;
}

SubsolutionDiagnostics subsolution_diagnostics(const ValueField& restricted, const ValueField& v, double width) {
    if (restricted.data().size() != v.data().size()) throw BadParameter("fields live on different grids");
    SubsolutionDiagnostics d;
    d.sup_gap = restricted.sup_diff(v);
    const int lag = std::max(1, static_cast<int>(std::ceil(width / v.grid().dx() - 1e-9)));
    d.modulus = empirical_modulus(v, lag);
    return d;
}

// ---------------------------------------------------------------- subsolution

SmoothSubsolution::SmoothSubsolution(std::vector<MollifiedField> fields, std::vector<double> junction_values,
                                     double omega, double correction)
    : fields_(std::move(fields)), junction_(std::move(junction_values)), omega_(omega), correction_(correction) {}

double SmoothSubsolution::value(const NetworkPoint& p, int mode) const {
    if (p.is_junction()) return junction_.at(mode);
    const auto& m = fields_.at(p.edge);
    return m.value(p.coord, mode) - m.value(0.0, mode) + junction_.at(mode);
}

double SmoothSubsolution::slope(const NetworkPoint& p, int mode, int edge, int) const {
    return fields_.at(edge).slope(p.is_junction() ? 0.0 : p.coord, mode);
}

double SmoothSubsolution::lipschitz_estimate() const {
    double lip = 0.0;
    for (const auto& m : fields_)
        for (int g = 0; g < static_cast<int>(junction_.size()); ++g)
            for (int i = 0; i <= 200; ++i) lip = std::max(lip, std::abs(m.slope(m.length() * i / 200.0, g)));
    return lip;
}

SmoothSubsolution assemble_subsolution(std::vector<MollifiedField> fields, const Dynamics& base,
                                       const SubsolutionDiagnostics& diag) {
    if (fields.empty()) throw BadParameter("no mollified fields");
    const int modes = base.num_modes();
    const double omega = diag.omega();
    const double correction = 4.0 * base.constants().lambda_bound / base.discount() * omega;
    std::vector<double> junction(modes, kInf);
    for (int g = 0; g < modes; ++g) {
        for (const auto& m : fields) junction[g] = std::min(junction[g], m.value(0.0, g));
        junction[g] -= correction;
    }
    return SmoothSubsolution(std::move(fields), std::move(junction), omega, correction);
}

nlohmann::json SubsolutionCheck::to_json() const {
    return {{"max_violation", max_violation},
            {"witness_node", witness_node},
            {"witness_mode", witness_mode},
            {"witness_action", witness_action}};
}

SubsolutionCheck check_subsolution(const DiscreteControlSet& cs, const TestFunction& w) {
    const Grid& grid = cs.grid();
    const double delta = cs.dynamics().discount();
    const int modes = cs.num_modes();
    SubsolutionCheck out;
    out.per_state.assign(cs.num_states(), -kInf);
    std::vector<double> wv(modes);
    for (int n = 0; n < grid.num_nodes(); ++n) {
        const NetworkPoint p = grid.point(n);
        for (int g = 0; g < modes; ++g) wv[g] = w.value(p, g);
        for (int g = 0; g < modes; ++g) {
            const auto& acts = cs.actions(n, g);
            for (int i = 0; i < static_cast<int>(acts.size()); ++i) {
                const Action& a = acts[i];
                double r = delta * wv[g] - a.cost;
                if (a.speed != 0.0) {
                    const int edge = p.is_junction() ? a.branch : p.edge;
                    r -= a.speed * w.slope(p, g, edge, a.speed > 0.0 ? 1 : -1);
                }
                double jump = 0.0;
                for (int g2 = 0; g2 < modes; ++g2)
                    if (a.q[g2] != 0.0) jump += a.q[g2] * (wv[g2] - wv[g]);
                r -= a.rate * jump;
                const int s = cs.state(n, g);
                if (r > out.per_state[s]) out.per_state[s] = r;
                if (r > out.max_violation) {
                    out.max_violation = r;
                    out.witness_node = n;
                    out.witness_mode = g;
                    out.witness_action = i;
                }
            }
        }
    }
    return out;
}

}  // namespace pdmpnet
