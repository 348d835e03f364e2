#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pdmpnet/network.hpp"

namespace pdmpnet {

/// A control value.  `a` lives in the control space A; `b` is the optional
/// shaking direction (an ambient vector with |b| <= 1 parallel to the current
/// edge).  An empty `b` means no shaking.
struct Control {
    Vec a;
    Vec b;

    Control() = default;
    explicit Control(Vec a_) : a(std::move(a_)) {}
    Control(Vec a_, Vec b_) : a(std::move(a_)), b(std::move(b_)) {}

    bool shaken() const { return b.size() > 0 && b.norm() > 0.0; }
    bool operator==(const Control& o) const;
};

/// Output of one coefficient evaluation.
struct Coefficients {
    Vec drift;
    double rate = 0.0;
    std::vector<double> qrow;
    double cost = 0.0;
};

/// Closed segment [lo, hi] in the control space.
struct ControlSegment {
    Vec lo;
    Vec hi;
};

/// Finite description of A^{γ,j}: a union of closed segments plus the
/// distinguished controls (inward/outward push, null control, endpoint
/// return control) whenever the model provides them.
struct EdgeControlSet {
    std::vector<ControlSegment> segments;
    std::optional<Vec> plus;
    std::optional<Vec> minus;
    std::optional<Vec> zero;
    std::optional<Vec> endpoint;

    bool contains(const Vec& a, double tol = 1e-12) const;
    /// Distinguished controls first, then n_a uniformly placed points per
    /// segment; duplicates (within 1e-12) removed.
    std::vector<Vec> sample(int n_a) const;
    /// Uniformly random member (segment chosen proportionally to count).
    template <class Uniform01>
    Vec random(Uniform01&& u) const {
        const auto& s = segments.at(static_cast<std::size_t>(u() * segments.size()) % segments.size());
        const double t = u();
        return s.lo + t * (s.hi - s.lo);
    }
    bool operator==(const EdgeControlSet& o) const;
};

/// Finite mode set and the active/inactive partition per edge.
struct ModeSpace {
    std::vector<std::string> labels;
    /// active[edge][mode]
    std::vector<std::vector<bool>> active;

    int size() const { return static_cast<int>(labels.size()); }
    bool is_active(int edge, int mode) const { return active.at(edge).at(mode); }
};

/// Constants declared by the model author, verified by audit_assumptions.
struct ModelConstants {
    double beta = 0.0;
    double eta = 0.5;
    double kappa = 0.0;
    double f_bound = 0.0;       ///< |f|_0
    double lambda_bound = 0.0;  ///< |λ|_0
    double l_bound = 0.0;       ///< |l|_0
    double c_a1 = 0.0;          ///< one-sided Lipschitz constant of f
    double lip_f = 0.0;
    double lip_l = 0.0;
    double lip_lambda = 0.0;
    double lip_q = 0.0;
};

/// Coefficients as functions of an ambient point.
class CoefficientField {
public:
    virtual ~CoefficientField() = default;
    virtual int num_modes() const = 0;
    virtual Vec drift(const Vec& x, int mode, const Vec& a) const = 0;
    virtual double rate(const Vec& x, int mode, const Vec& a) const = 0;
    virtual void jump_row(const Vec& x, int mode, const Vec& a, std::vector<double>& row) const = 0;
    virtual double cost(const Vec& x, int mode, const Vec& a) const = 0;
};

/// Direction taken by a drift at the junction.
struct JunctionExit {
    int edge = JUNCTION;  ///< JUNCTION when the drift vanishes
    double speed = 0.0;
};

/// Controlled switched dynamics on a (possibly extended) star network.
class Dynamics {
public:
    virtual ~Dynamics() = default;

    virtual const Network& network() const = 0;
    virtual std::shared_ptr<const Network> network_ptr() const = 0;
    virtual const ModeSpace& modes() const = 0;
    virtual double discount() const = 0;
    virtual const ModelConstants& constants() const = 0;
    virtual int control_dim() const = 0;
    virtual const EdgeControlSet& edge_controls(int mode, int edge) const = 0;
    virtual double shake_radius() const { return 0.0; }
    virtual std::string name() const = 0;

    /// Coefficients without admissibility checks.
    virtual Vec drift_raw(const NetworkPoint& p, int mode, const Control& c) const = 0;
    virtual double rate_raw(const NetworkPoint& p, int mode, const Control& c) const = 0;
    virtual double cost_raw(const NetworkPoint& p, int mode, const Control& c) const = 0;
    virtual void jump_row_raw(const NetworkPoint& p, int mode, const Control& c,
                              std::vector<double>& row) const = 0;

    /// Checked evaluation; throws InadmissibleControl.
    Coefficients evaluate(const NetworkPoint& p, int mode, const Control& c) const;
    bool admissible(const NetworkPoint& p, int mode, const Control& c) const;
    /// Scalar drift along the edge of p (p not the junction).
    double edge_speed(const NetworkPoint& p, int mode, const Control& c) const;
    /// Where a drift at O leads; throws LeftNetwork if it is not along an edge.
    JunctionExit junction_exit(int mode, const Control& c) const;
    int num_modes() const { return modes().size(); }
    /// A zero control of the right dimensions (b sized if shaken).
    Control zero_control() const;
};

/// The characteristic triple plus cost, discount and control geometry.
class PdmpModel : public Dynamics {
public:
    PdmpModel(std::string name, std::shared_ptr<const Network> net, ModeSpace modes, int control_dim,
              std::shared_ptr<const CoefficientField> field, double delta,
              std::vector<std::vector<EdgeControlSet>> controls, ModelConstants constants);

    const Network& network() const override { return *net_; }
    std::shared_ptr<const Network> network_ptr() const override { return net_; }
    const ModeSpace& modes() const override { return modes_; }
    double discount() const override { return delta_; }
    const ModelConstants& constants() const override { return constants_; }
    int control_dim() const override { return control_dim_; }
    const EdgeControlSet& edge_controls(int mode, int edge) const override {
        return controls_.at(mode).at(edge);
    }
    std::string name() const override { return name_; }
    const CoefficientField& field() const { return *field_; }
    std::shared_ptr<const CoefficientField> field_ptr() const { return field_; }
    const std::vector<std::vector<EdgeControlSet>>& all_controls() const { return controls_; }

    Vec drift_raw(const NetworkPoint& p, int mode, const Control& c) const override;
    double rate_raw(const NetworkPoint& p, int mode, const Control& c) const override;
    double cost_raw(const NetworkPoint& p, int mode, const Control& c) const override;
    void jump_row_raw(const NetworkPoint& p, int mode, const Control& c,
                      std::vector<double>& row) const override;

    /// Copy with some declared constants replaced.
    std::shared_ptr<PdmpModel> with_constants(const ModelConstants& c) const;

private:
    void reject_shake(const Control& c) const;

    std::string name_;
    std::shared_ptr<const Network> net_;
    ModeSpace modes_;
    int control_dim_;
    std::shared_ptr<const CoefficientField> field_;
    double delta_;
    std::vector<std::vector<EdgeControlSet>> controls_;
    ModelConstants constants_;
};

/// Coefficients shifted by ρ·b: f^ρ(x,a,b) = f(x + ρb, a), and likewise for
/// the rate, kernel and cost.
class ShakenModel : public Dynamics {
public:
    ShakenModel(std::shared_ptr<const PdmpModel> base, double rho);

    const PdmpModel& base() const { return *base_; }
    std::shared_ptr<const PdmpModel> base_ptr() const { return base_; }
    double rho() const { return rho_; }

    const Network& network() const override { return base_->network(); }
    std::shared_ptr<const Network> network_ptr() const override { return base_->network_ptr(); }
    const ModeSpace& modes() const override { return base_->modes(); }
    double discount() const override { return base_->discount(); }
    const ModelConstants& constants() const override { return base_->constants(); }
    int control_dim() const override { return base_->control_dim(); }
    const EdgeControlSet& edge_controls(int mode, int edge) const override {
        return base_->edge_controls(mode, edge);
    }
    double shake_radius() const override { return rho_; }
    std::string name() const override { return base_->name() + "+shaken"; }

    Vec drift_raw(const NetworkPoint& p, int mode, const Control& c) const override;
    double rate_raw(const NetworkPoint& p, int mode, const Control& c) const override;
    double cost_raw(const NetworkPoint& p, int mode, const Control& c) const override;
    void jump_row_raw(const NetworkPoint& p, int mode, const Control& c,
                      std::vector<double>& row) const override;

private:
    Vec shifted(const NetworkPoint& p, const Control& c) const;

    std::shared_ptr<const PdmpModel> base_;
    double rho_;
};

/// The built-in three-road traffic example.  `q_self` mixes a self-transition
/// weight into the jump kernel; it is 0 for the genuine model and exists only
/// to plant kernel defects in tests.
std::shared_ptr<const PdmpModel> traffic3_model(double l0, double lambda0, double delta,
                                                double q_self = 0.0);

/// Mirrored / frozen extension of the coefficients to the extended network.
std::shared_ptr<const PdmpModel> extend_dynamics(const PdmpModel& model,
                                                 std::shared_ptr<const ExtendedNetwork> xnet);

std::shared_ptr<const ShakenModel> shake(std::shared_ptr<const PdmpModel> model, double rho);

/// Time and radius scales of the projection lemmas.
struct ShakingScales {
    double epsilon = 0.0;
    // base-network lemma
    double t_eps = 0.0;
    double rho_base = 0.0;    ///< (η/4)·exp(−Lip(f)·t_ε)
    double radius_active = 0.0;    ///< ρ² (κ treated as 0)
    double radius_inactive = 0.0;  ///< ρ^{2/(1−κ)}
    // extended-network lemma
    double rho_ext = 0.0;  ///< −ε^{1+2Lip(f)/((1−κ)δ)}/ln ε
    double r_prime = 0.0;  ///< ρ_ext/2
    double phi = 0.0;      ///< (|f|_0/((1−κ)β)+1)·ω_ε(t_ε; r')^{1−κ}
    double lip_f = 0.0;
    double f_bound = 0.0;

    /// ω_ε(t; r) = e^{Lip(f)t}(r + max(2ρ_ext, 4r')·Lip(f)·t)
    double omega(double t, double r) const;
    /// The guaranteed deviation bound of the extended lemma.
    double extended_bound() const { return omega(t_eps, phi); }
};

ShakingScales shaking_scales(const Dynamics& model, double eps);

}  // namespace pdmpnet
