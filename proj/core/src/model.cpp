#include "pdmpnet/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pdmpnet {

namespace {

bool same_vec(const Vec& x, const Vec& y) {
    if (x.size() == 0 || y.size() == 0) {
        const double nx = x.size() ? x.norm() : 0.0;
        const double ny = y.size() ? y.norm() : 0.0;
        return nx == 0.0 && ny == 0.0;
    }
    return x.size() == y.size() && x == y;
}

bool on_segment(const ControlSegment& s, const Vec& a, double tol) {
    const Vec d = s.hi - s.lo;
    const double len2 = d.squaredNorm();
    if (len2 == 0.0) return (a - s.lo).norm() <= tol;
    const double t = std::clamp((a - s.lo).dot(d) / len2, 0.0, 1.0);
    return (a - (s.lo + t * d)).norm() <= tol;
}

}  // namespace

bool Control::operator==(const Control& o) const { return same_vec(a, o.a) && same_vec(b, o.b); }

bool EdgeControlSet::contains(const Vec& a, double tol) const {
    for (const auto& s : segments)
        if (s.lo.size() == a.size() && on_segment(s, a, tol)) return true;
    for (const auto* d : {&plus, &minus, &zero, &endpoint})
        if (d->has_value() && (*d)->size() == a.size() && ((**d) - a).norm() <= tol) return true;
    return false;
}

std::vector<Vec> EdgeControlSet::sample(int n_a) const {
    std::vector<Vec> out;
    auto push = [&](const Vec& v) {
        for (const auto& w : out)
            if ((w - v).norm() <= 1e-12) return;
        out.push_back(v);
    };
    for (const auto* d : {&plus, &minus, &zero, &endpoint})
        if (d->has_value()) push(**d);
    for (const auto& s : segments) {
        if (n_a <= 1) {
            push(0.5 * (s.lo + s.hi));
            continue;
        }
        for (int i = 0; i < n_a; ++i) {
            const double t = static_cast<double>(i) / (n_a - 1);
            push(s.lo + t * (s.hi - s.lo));
        }
    }
    return out;
}

bool EdgeControlSet::operator==(const EdgeControlSet& o) const {
    if (segments.size() != o.segments.size()) return false;
    for (std::size_t i = 0; i < segments.size(); ++i)
        if (!(same_vec(segments[i].lo, o.segments[i].lo) && same_vec(segments[i].hi, o.segments[i].hi)))
            return false;
    auto eq = [](const std::optional<Vec>& x, const std::optional<Vec>& y) {
        if (x.has_value() != y.has_value()) return false;
        return !x.has_value() || same_vec(*x, *y);
    };
    return eq(plus, o.plus) && eq(minus, o.minus) && eq(zero, o.zero) && eq(endpoint, o.endpoint);
}

// ---------------------------------------------------------------- Dynamics

bool Dynamics::admissible(const NetworkPoint& p, int mode, const Control& c) const {
    if (mode < 0 || mode >= num_modes()) return false;
    if (c.a.size() != control_dim()) return false;
    const auto& net = network();
    if (!net.contains(p)) return false;
    const bool has_b = c.b.size() > 0;
    if (has_b) {
        if (c.b.size() != net.ambient_dim()) return false;
        if (c.b.norm() > 1.0 + 1e-12) return false;
        if (shake_radius() == 0.0 && c.b.norm() > 0.0) return false;
    }
    auto b_parallel = [&](int k) {
        if (!has_b) return true;
        const Vec& e = net.direction(k);
        return (c.b - c.b.dot(e) * e).norm() <= 1e-12;
    };
    if (!p.is_junction()) return edge_controls(mode, p.edge).contains(c.a) && b_parallel(p.edge);
    for (int k = 0; k < net.num_edges(); ++k)
        if (edge_controls(mode, k).contains(c.a) && b_parallel(k)) return true;
    return false;
}

Coefficients Dynamics::evaluate(const NetworkPoint& p, int mode, const Control& c) const {
    if (!admissible(p, mode, c)) {
        std::ostringstream os;
        os << "control not in the admissible set at edge " << p.edge << " coord " << p.coord
           << " mode " << mode;
        throw InadmissibleControl(os.str());
    }
    Coefficients out;
    out.drift = drift_raw(p, mode, c);
    out.rate = rate_raw(p, mode, c);
    jump_row_raw(p, mode, c, out.qrow);
    out.cost = cost_raw(p, mode, c);
    return out;
}

double Dynamics::edge_speed(const NetworkPoint& p, int mode, const Control& c) const {
    return drift_raw(p, mode, c).dot(network().direction(p.edge));
}

JunctionExit Dynamics::junction_exit(int mode, const Control& c) const {
    const Vec f = drift_raw(NetworkPoint::junction(), mode, c);
    const double n = f.norm();
    if (n <= 1e-14) return {};
    const int k = network().edge_with_direction(f / n);
    if (k < 0) throw LeftNetwork("drift at the junction points along no edge");
    return {k, n};
}

Control Dynamics::zero_control() const {
    Control c(Vec::Zero(control_dim()));
    if (shake_radius() > 0.0) c.b = Vec::Zero(network().ambient_dim());
    return c;
}

// ---------------------------------------------------------------- PdmpModel

PdmpModel::PdmpModel(std::string name, std::shared_ptr<const Network> net, ModeSpace modes,
                     int control_dim, std::shared_ptr<const CoefficientField> field, double delta,
                     std::vector<std::vector<EdgeControlSet>> controls, ModelConstants constants)
    : name_(std::move(name)),
      net_(std::move(net)),
      modes_(std::move(modes)),
      control_dim_(control_dim),
      field_(std::move(field)),
      delta_(delta),
      controls_(std::move(controls)),
      constants_(constants) {
    if (!(delta_ > 0.0)) throw BadParameter("discount must be positive");
    if (static_cast<int>(controls_.size()) != modes_.size())
        throw BadParameter("control sets must be given for every mode");
    for (const auto& row : controls_)
        if (static_cast<int>(row.size()) != net_->num_edges())
            throw BadParameter("control sets must be given for every edge");
    if (static_cast<int>(modes_.active.size()) != net_->num_edges())
        throw BadParameter("activity partition must cover every edge");
}

void PdmpModel::reject_shake(const Control& c) const {
    if (c.shaken()) throw InadmissibleControl("unshaken model evaluated with a shaking component");
}

Vec PdmpModel::drift_raw(const NetworkPoint& p, int mode, const Control& c) const {
    reject_shake(c);
    return field_->drift(net_->embed(p), mode, c.a);
}
double PdmpModel::rate_raw(const NetworkPoint& p, int mode, const Control& c) const {
    reject_shake(c);
    return field_->rate(net_->embed(p), mode, c.a);
}
double PdmpModel::cost_raw(const NetworkPoint& p, int mode, const Control& c) const {
    reject_shake(c);
    return field_->cost(net_->embed(p), mode, c.a);
}
void PdmpModel::jump_row_raw(const NetworkPoint& p, int mode, const Control& c,
                             std::vector<double>& row) const {
    reject_shake(c);
    field_->jump_row(net_->embed(p), mode, c.a, row);
}

std::shared_ptr<PdmpModel> PdmpModel::with_constants(const ModelConstants& c) const {
    auto m = std::make_shared<PdmpModel>(*this);
    m->constants_ = c;
    return m;
}

// ---------------------------------------------------------------- ShakenModel

ShakenModel::ShakenModel(std::shared_ptr<const PdmpModel> base, double rho)
    : base_(std::move(base)), rho_(rho) {}

Vec ShakenModel::shifted(const NetworkPoint& p, const Control& c) const {
    Vec x = base_->network().embed(p);
    if (c.b.size() > 0) x += rho_ * c.b;
    return x;
}

Vec ShakenModel::drift_raw(const NetworkPoint& p, int mode, const Control& c) const {
    return base_->field().drift(shifted(p, c), mode, c.a);
}
double ShakenModel::rate_raw(const NetworkPoint& p, int mode, const Control& c) const {
    return base_->field().rate(shifted(p, c), mode, c.a);
}
double ShakenModel::cost_raw(const NetworkPoint& p, int mode, const Control& c) const {
    return base_->field().cost(shifted(p, c), mode, c.a);
}
void ShakenModel::jump_row_raw(const NetworkPoint& p, int mode, const Control& c,
                               std::vector<double>& row) const {
    base_->field().jump_row(shifted(p, c), mode, c.a, row);
}

std::shared_ptr<const ShakenModel> shake(std::shared_ptr<const PdmpModel> model, double rho) {
    const double eps = model->network().epsilon();
    if (eps <= 0.0) throw BadRho("shaking requires a model on an extended network");
    if (!(rho > 0.0) || rho > eps * (1.0 + 1e-12))
        throw BadRho("shaking radius must lie in (0, epsilon]");
    return std::make_shared<ShakenModel>(std::move(model), rho);
}

// ---------------------------------------------------------------- scales

double ShakingScales::omega(double t, double r) const {
    return std::exp(lip_f * t) * (r + std::max(2.0 * rho_ext, 4.0 * r_prime) * lip_f * t);
}

ShakingScales shaking_scales(const Dynamics& model, double eps) {
    const auto& k = model.constants();
    const double delta = model.discount();
    if (!(eps > 0.0) || !(eps < 1.0)) throw BadEpsilon("epsilon must lie in (0,1)");
    if (!(k.f_bound > 0.0)) throw BadEpsilon("drift bound must be positive");
    const double q = eps * delta / (2.0 * k.f_bound);
    if (q >= 1.0) throw BadEpsilon("epsilon*delta/(2|f|_0) must be below 1");
    ShakingScales s;
    s.epsilon = eps;
    s.lip_f = k.lip_f;
    s.f_bound = k.f_bound;
    s.t_eps = -std::log(q) / delta;
    s.rho_base = 0.25 * k.eta * std::exp(-k.lip_f * s.t_eps);
    s.radius_active = s.rho_base * s.rho_base;
    s.radius_inactive = std::pow(s.rho_base, 2.0 / (1.0 - k.kappa));
    const double expo = 1.0 + 2.0 * k.lip_f / ((1.0 - k.kappa) * delta);
    s.rho_ext = -std::pow(eps, expo) / std::log(eps);
    s.r_prime = 0.5 * s.rho_ext;
    s.phi = (k.f_bound / ((1.0 - k.kappa) * k.beta) + 1.0) *
            std::pow(s.omega(s.t_eps, s.r_prime), 1.0 - k.kappa);
    return s;
}

}  // namespace pdmpnet
