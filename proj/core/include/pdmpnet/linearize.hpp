#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pdmpnet/hjb.hpp"
#include "pdmpnet/lp.hpp"

namespace pdmpnet {

// ---------------------------------------------------------------- test functions

/// Function of (position, mode) with one-sided derivatives along edges.
class TestFunction {
public:
    virtual ~TestFunction() = default;
    virtual double value(const NetworkPoint& p, int mode) const = 0;
    /// Derivative along the direction of `edge` at p (p on that edge or at O);
    /// `sign` is the direction of motion, used by non-smooth functions.
    virtual double slope(const NetworkPoint& p, int mode, int edge, int sign) const = 0;
};

/// Piecewise-linear interpolant of a grid field plus a constant; slopes are
/// one-sided differences in the direction of motion.
class GridTestFunction : public TestFunction {
public:
    explicit GridTestFunction(ValueField v, double shift = 0.0) : v_(std::move(v)), shift_(shift) {}
    double value(const NetworkPoint& p, int mode) const override;
    double slope(const NetworkPoint& p, int mode, int edge, int sign) const override;

private:
    ValueField v_;
    double shift_;
};

class ConstantTestFunction : public TestFunction {
public:
    explicit ConstantTestFunction(double c) : c_(c) {}
    double value(const NetworkPoint&, int) const override { return c_; }
    double slope(const NetworkPoint&, int, int, int) const override { return 0.0; }

private:
    double c_;
};

// ---------------------------------------------------------------- mollification

/// Composite-trapezoid quadrature of the bump kernel c·exp(−1/(1−u²)) on
/// [−1, 1]: nodes, value weights (mass 1) and derivative weights (first
/// moment −1, so affine inputs are differentiated exactly).
struct BumpKernel {
    std::vector<double> nodes;
    std::vector<double> weights;
    std::vector<double> dweights;

    double mass() const;
};

const BumpKernel& bump_kernel();  ///< 64 nodes

/// Convolution of an extended-network field with the bump kernel of half
/// width `width`, along the line of one base edge.
class MollifiedField {
public:
    MollifiedField(std::shared_ptr<const ValueField> v_ext, int edge, double width);

    int edge() const { return edge_; }
    double width() const { return width_; }
    /// Length of the base edge.
    double length() const;
    /// Value and derivative at coordinate s ∈ [0, length] of the edge.
    double value(double s, int mode) const;
    double slope(double s, int mode) const;

private:
    double sample(double s, int mode) const;

    std::shared_ptr<const ValueField> v_;
    int edge_;
    double width_;
};

/// One mollified field per base edge.  Throws MarginViolated if the kernel
/// stencil leaves the extended network (width larger than the extension).
std::vector<MollifiedField> mollify_edgewise(std::shared_ptr<const ValueField> v_ext, double width);

/// Measured inputs of the junction correction.
struct SubsolutionDiagnostics {
    double sup_gap = 0.0;  ///< sup over base nodes of |v_shaken − v|
    double modulus = 0.0;  ///< empirical modulus of v at the mollification width
    double omega() const { return sup_gap + modulus; }
};

SubsolutionDiagnostics subsolution_diagnostics(const ValueField& restricted, const ValueField& v, double width);

/// Per-edge mollified fields aligned at the junction and shifted down by the
/// jump-term correction 4(|λ|_0/δ)·ω.
class SmoothSubsolution : public TestFunction {
public:
    SmoothSubsolution(std::vector<MollifiedField> fields, std::vector<double> junction_values, double omega,
                      double correction);

    double value(const NetworkPoint& p, int mode) const override;
    double slope(const NetworkPoint& p, int mode, int edge, int sign) const override;

    const std::vector<MollifiedField>& fields() const { return fields_; }
    /// Value at O per mode (after alignment and correction).
    const std::vector<double>& junction_values() const { return junction_; }
    double omega() const { return omega_; }
    double correction() const { return correction_; }
    /// Largest sampled |slope| over edges, modes and 201 points per edge.
    double lipschitz_estimate() const;

private:
    std::vector<MollifiedField> fields_;
    std::vector<double> junction_;
    double omega_;
    double correction_;
};

SmoothSubsolution assemble_subsolution(std::vector<MollifiedField> fields, const Dynamics& base,
                                       const SubsolutionDiagnostics& diag);

struct SubsolutionCheck {
    double max_violation = 0.0;  ///< max positive part over nodes and discrete controls
    int witness_node = -1;
    int witness_mode = -1;
    int witness_action = -1;
    std::vector<double> per_state;  ///< max over controls, per state (may be negative)

    nlohmann::json to_json() const;
};

/// Evaluates δw − ⟨f, Dw⟩ − l − λΣQ(w(·,γ') − w) at every node of the
/// control set's grid and every discrete control there.
SubsolutionCheck check_subsolution(const DiscreteControlSet& cs, const TestFunction& w);

// ---------------------------------------------------------------- occupation LP

/// Occupation-measure LP of the discrete decision process of a scheme: one
/// column per (state, discrete control), one row per hat function (node,
/// mode), plus the total-mass row (the last row).
struct OccupationLP {
    std::shared_ptr<const DiscreteControlSet> controls;
    NetworkPoint x;
    int mode = 0;
    std::vector<std::pair<int, int>> columns;  ///< (state, action index)
    std::vector<int> first_column;             ///< per state
    LinearProgram lp;

    int num_rows() const { return static_cast<int>(lp.A.rows()); }
    int num_columns() const { return static_cast<int>(columns.size()); }
    /// Column of (state, action), or -1.
    int column(int state, int action) const;
};

OccupationLP build_occupation_lp(std::shared_ptr<const DiscreteControlSet> cs, const NetworkPoint& x, int mode);

/// Raises SchemeMismatch unless `v` was produced on the same scheme.
void require_same_scheme(const DiscreteControlSet& cs, const ValueField& v);

struct DualityRow {
    NetworkPoint x;
    int mode = 0;
    double delta_v = 0.0;  ///< δ·v_solver(x, γ)
    double primal = 0.0;
    double dual = 0.0;
    double gap_primal_dual = 0.0;
    double gap_value = 0.0;        ///< |primal − δ·v_solver|
    double dual_violation = 0.0;   ///< max violation of the dual constraints (discrete subsolution witness)
    long pivots = 0;
    std::vector<double> phi;  ///< dual values of the hat rows (the discrete test function)
    double eta = 0.0;         ///< dual value of the mass row
};

struct DualityReport {
    std::vector<DualityRow> rows;
    std::string to_csv() const;
    /// Rows with their dual certificates (η and the φ values per state).
    nlohmann::json to_json() const;
};

DualityReport duality_report(std::shared_ptr<const DiscreteControlSet> cs, const ValueField& v,
                             const std::vector<std::pair<NetworkPoint, int>>& points, const LpOptions& opt = {});

// ---------------------------------------------------------------- occupation measures

struct OccupationAtom {
    int state = 0;
    int action = 0;
    double weight = 0.0;
    double stderr_ = 0.0;
};

/// Discounted occupation measure δ·E∫_0^T e^{−δt} 1{(X,Γ,α) ∈ ·} dt, binned to
/// grid nodes by hat weights and to the nearest discrete control there.
struct OccupationMeasure {
    std::shared_ptr<const DiscreteControlSet> controls;
    NetworkPoint start;
    int start_mode = 0;
    std::vector<OccupationAtom> atoms;  ///< sorted by (state, action)
    double mass = 0.0;
    double deficit = 0.0;  ///< e^{−δT}
    double horizon = 0.0;
    int n_paths = 0;
    /// Per path, the atoms it charged (for row-wise standard errors).
    std::vector<std::vector<std::pair<int, double>>> path_atoms;

    nlohmann::json to_json() const;
};

OccupationMeasure mc_occupation(std::shared_ptr<const DiscreteControlSet> cs, const NetworkPoint& x, int mode,
                                const Policy& policy, int n_paths, double T, std::uint64_t seed,
                                double h_sim = 1e-3);

struct FeasibilityRow {
    int row = 0;
    double residual = 0.0;  ///< (A μ − b)_row, rows scaled by h
    double stderr_ = 0.0;
    double tolerance = 0.0;
};

struct FeasibilityReport {
    std::vector<FeasibilityRow> rows;
    double max_excess = 0.0;  ///< max(|residual| − tolerance), ≤ 0 when feasible
    int worst_row = -1;
    bool feasible() const { return max_excess <= 0.0; }
};

/// Row residuals of a simulated measure in the LP (hat rows multiplied by h),
/// against 3·stderr + Δx·(|f|_0 + |λ|_0 + δ) (and the deficit on the mass row).
FeasibilityReport occupation_feasibility(const OccupationLP& lp, const OccupationMeasure& mu);

struct AdjointResidual {
    double residual = 0.0;
    double stderr_ = 0.0;
    double truncation = 0.0;  ///< δ·e^{−δT}·2|φ|_0 bound
    double binning = 0.0;     ///< Σ weight·(oscillation of the integrand over the neighbouring nodes)
    double tolerance() const { return 3.0 * stderr_ + truncation + binning; }
};

/// |Σ weight·(𝒰^a φ − δ(φ − φ(x, γ)))| at the measure's start (x, γ), with
/// the generator evaluated on the supplied φ at the atom nodes.
std::vector<AdjointResidual> adjoint_identity_check(const OccupationMeasure& mu,
                                                    const std::vector<const TestFunction*>& phis,
                                                    const std::vector<double>& sup_norms);

}  // namespace pdmpnet
