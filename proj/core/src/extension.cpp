#include <algorithm>
#include <cmath>

#include "pdmpnet/audit.hpp"
#include "pdmpnet/model.hpp"

namespace pdmpnet {

namespace {

/// Coefficients of a base model continued to the extended network: frozen at
/// e_j beyond the original edges; on the fictive branch behind an
/// antipode-free edge, mirrored for inactive modes and frozen at O for active
/// ones (the rate, kernel and cost are frozen at O there).
class ExtendedField : public CoefficientField {
public:
    ExtendedField(std::shared_ptr<const CoefficientField> base, std::shared_ptr<const Network> net,
                  ModeSpace modes)
        : base_(std::move(base)), net_(std::move(net)), modes_(std::move(modes)) {}

    int num_modes() const override { return base_->num_modes(); }

    Vec drift(const Vec& x, int mode, const Vec& a) const override {
        const auto loc = locate(x);
        switch (loc.kind) {
            case Kind::Base:
                return base_->drift(loc.eff, mode, a);
            case Kind::Fictive:
                if (modes_.is_active(loc.edge, mode)) return base_->drift(zero(), mode, a);
                return -base_->drift(loc.mirror, mode, a);
        }
        return {};
    }
    double rate(const Vec& x, int mode, const Vec& a) const override {
        return base_->rate(coef_point(x), mode, a);
    }
    void jump_row(const Vec& x, int mode, const Vec& a, std::vector<double>& row) const override {
        base_->jump_row(coef_point(x), mode, a, row);
    }
    double cost(const Vec& x, int mode, const Vec& a) const override {
        return base_->cost(coef_point(x), mode, a);
    }

private:
    enum class Kind { Base, Fictive };
    struct Located {
        Kind kind = Kind::Base;
        int edge = -1;
        Vec eff;     ///< evaluation point for the base branch
        Vec mirror;  ///< reflected point for the fictive branch
    };

    Vec zero() const { return Vec::Zero(net_->ambient_dim()); }

    Located locate(const Vec& x) const {
        Located out;
        const double r = x.norm();
        if (r < 1e-14) {
            out.eff = zero();
            return out;
        }
        const Vec dir = x / r;
        for (int j = 0; j < net_->num_edges(); ++j)
            if ((dir - net_->direction(j)).norm() < 1e-9) {
                out.edge = j;
                out.eff = (r <= net_->length(j)) ? x : Vec(net_->direction(j) * net_->length(j));
                return out;
            }
        for (int j = 0; j < net_->antipode_free_count(); ++j)
            if ((dir + net_->direction(j)).norm() < 1e-9) {
                out.kind = Kind::Fictive;
                out.edge = j;
                out.mirror = std::min(r, net_->length(j)) * net_->direction(j);
                return out;
            }
        throw BadParameter("extended coefficients evaluated off the network lines");
    }

    Vec coef_point(const Vec& x) const {
        const auto loc = locate(x);
        return loc.kind == Kind::Base ? loc.eff : zero();
    }

    std::shared_ptr<const CoefficientField> base_;
    std::shared_ptr<const Network> net_;
    ModeSpace modes_;
};

}  // namespace

std::shared_ptr<const PdmpModel> extend_dynamics(const PdmpModel& model,
                                                 std::shared_ptr<const ExtendedNetwork> xnet) {
    if (xnet->base_ptr().get() != &model.network()) {
        // Accept structurally identical bases too.
        const auto& b = xnet->base();
        bool same = b.num_edges() == model.network().num_edges();
        for (int j = 0; same && j < b.num_edges(); ++j)
            same = (b.direction(j) - model.network().direction(j)).norm() < 1e-12;
        if (!same) throw MissingPrecondition("extended network does not extend the model network");
    }
    const auto report = audit_assumptions(model, 200, 0);
    for (const char* name : {"Ab'", "B"})
        if (!report.passed(name))
            throw MissingPrecondition(std::string("assumption ") + name + " failed the audit");

    const int m_free = model.network().antipode_free_count();
    ModeSpace modes = model.modes();
    for (int j = 0; j < m_free; ++j) modes.active.push_back(model.modes().active[j]);

    auto controls = model.all_controls();
    for (int g = 0; g < modes.size(); ++g)
        for (int j = 0; j < m_free; ++j) {
            const auto& src = model.edge_controls(g, j);
            EdgeControlSet cs;
            cs.segments = src.segments;
            cs.zero = src.zero;
            if (modes.is_active(j, g)) {
                // Drift is frozen at f(O,a): pushing along -e_j leaves O on the
                // fictive branch; pushing along +e_j returns to O.
                cs.plus = src.minus;
                cs.minus = src.plus;
                cs.endpoint = src.plus;
            } else {
                cs.minus = src.minus;
                cs.endpoint = src.minus;
            }
            controls[g].push_back(cs);
        }
    auto field = std::make_shared<ExtendedField>(model.field_ptr(), model.network_ptr(), model.modes());
    return std::make_shared<PdmpModel>(model.name() + "+ext", xnet, modes, model.control_dim(), field,
                                       model.discount(), controls, model.constants());
}

}  // namespace pdmpnet
