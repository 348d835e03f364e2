#include "pdmpnet/lp.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace pdmpnet {

namespace {

/// Revised simplex on [A | I] with artificial columns n..n+m-1.
class Simplex {
public:
    Simplex(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const LpOptions& opt)
        : A_(A), b_(b), opt_(opt), m_(static_cast<int>(A.rows())), n_(static_cast<int>(A.cols())) {
        basis_.resize(m_);
        for (int i = 0; i < m_; ++i) basis_[i] = n_ + i;
        in_basis_.assign(n_ + m_, -1);
        for (int i = 0; i < m_; ++i) in_basis_[n_ + i] = i;
        binv_ = Eigen::MatrixXd::Identity(m_, m_);
        xb_ = b_;
    }

    Eigen::VectorXd column(int j) const {
        if (j < n_) return A_.col(j);
        Eigen::VectorXd e = Eigen::VectorXd::Zero(m_);
        e(j - n_) = 1.0;
        return e;
    }

    /// Optimizes the given costs (size n+m); artificials never enter.
    void optimize(const Eigen::VectorXd& cost) {
        const double ctol = 1e-11 * (1.0 + cost.head(n_).cwiseAbs().maxCoeff());
        int degenerate = 0;
        bool bland = false;
        while (true) {
            if (pivots_ >= opt_.max_pivots) throw IterationLimit("simplex pivot limit reached");
            Eigen::VectorXd cb(m_);
            for (int i = 0; i < m_; ++i) cb(i) = cost(basis_[i]);
            const Eigen::RowVectorXd y = cb.transpose() * binv_;
            const Eigen::RowVectorXd d = cost.head(n_).transpose() - y * A_;
            int q = -1;
            double best = -ctol;
            for (int j = 0; j < n_; ++j) {
                if (in_basis_[j] >= 0 || !(d(j) < -ctol)) continue;
                if (bland) {
                    q = j;
                    break;
                }
                if (d(j) < best) {
                    best = d(j);
                    q = j;
                }
            }
            if (q < 0) return;
            const Eigen::VectorXd u = binv_ * A_.col(q);
            // Harris two-pass ratio test: bound the step with a small primal
            // tolerance, then take the largest pivot element (or, under Bland,
            // the smallest basic index) among the rows blocking within it.
            const double piv_tol = std::max(kPivotTol, kRelPivotTol * u.cwiseAbs().maxCoeff());
            double theta_max = kBig;
            for (int i = 0; i < m_; ++i)
                if (u(i) > piv_tol) theta_max = std::min(theta_max, (std::max(xb_(i), 0.0) + kPrimalTol) / u(i));
            int r = -1;
            double theta = kBig;
            for (int i = 0; i < m_; ++i) {
                if (u(i) <= piv_tol) continue;
                const double t = std::max(xb_(i), 0.0) / u(i);
                if (t > theta_max) continue;
                const bool better = r < 0 || (bland ? basis_[i] < basis_[r] : u(i) > u(r));
                if (better) {
                    r = i;
                    theta = t;
                }
            }
            if (r < 0) throw Unbounded("objective is unbounded below");
            pivot(r, q, u);
            if (theta <= 1e-14) {
                if (++degenerate >= opt_.degenerate_switch) bland = true;
            } else {
                degenerate = 0;
                bland = false;
            }
        }
    }

    void pivot(int r, int q, const Eigen::VectorXd& u) {
        const double theta = std::max(xb_(r), 0.0) / u(r);
        xb_ -= theta * u;
        xb_(r) = theta;
        const Eigen::RowVectorXd row = binv_.row(r) / u(r);
        for (int i = 0; i < m_; ++i)
            if (i != r && u(i) != 0.0) binv_.row(i) -= u(i) * row;
        binv_.row(r) = row;
        in_basis_[basis_[r]] = -1;
        basis_[r] = q;
        in_basis_[q] = r;
        if (++pivots_ % opt_.refactor_every == 0) refactor();
    }

    void refactor() {
        Eigen::MatrixXd B(m_, m_);
        for (int i = 0; i < m_; ++i) B.col(i) = column(basis_[i]);
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
        binv_ = lu.inverse();
        xb_ = binv_ * b_;
        for (int i = 0; i < m_; ++i)
            if (xb_(i) < 0.0 && xb_(i) > -10.0 * kPrimalTol) xb_(i) = 0.0;
    }

    /// Pivots basic artificials out where possible; returns the number of
    /// rows left with a basic artificial (redundant rows).
    int drive_out_artificials() {
        int redundant = 0;
        for (int r = 0; r < m_; ++r) {
            if (basis_[r] < n_) continue;
            const Eigen::RowVectorXd row = binv_.row(r) * A_;
            int q = -1;
            double best = std::max(1e-9, kRelPivotTol * row.cwiseAbs().maxCoeff());
            for (int j = 0; j < n_; ++j)
                if (in_basis_[j] < 0 && std::abs(row(j)) > best) {
                    best = std::abs(row(j));
                    q = j;
                }
            if (q < 0) {
                ++redundant;
                continue;
            }
            const Eigen::VectorXd u = binv_ * A_.col(q);
            // Degenerate pivot (x_r = 0); a negative pivot element is fine here.
            const double theta = xb_(r) / u(r);
            xb_ -= theta * u;
            xb_(r) = theta;
            const Eigen::RowVectorXd prow = binv_.row(r) / u(r);
            for (int i = 0; i < m_; ++i)
                if (i != r && u(i) != 0.0) binv_.row(i) -= u(i) * prow;
            binv_.row(r) = prow;
            in_basis_[basis_[r]] = -1;
            basis_[r] = q;
            in_basis_[q] = r;
            ++pivots_;
        }
        refactor();
        return redundant;
    }

    static constexpr double kBig = 1e300;
    static constexpr double kPivotTol = 1e-9;
    static constexpr double kRelPivotTol = 1e-7;
    static constexpr double kPrimalTol = 1e-9;

    const Eigen::MatrixXd& A_;
    Eigen::VectorXd b_;
    LpOptions opt_;
    int m_, n_;
    std::vector<int> basis_, in_basis_;
    Eigen::MatrixXd binv_;
    Eigen::VectorXd xb_;
    long pivots_ = 0;
};

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, const LpOptions& opt) {
    const int m = static_cast<int>(lp.A.rows());
    const int n = static_cast<int>(lp.A.cols());
    if (lp.b.size() != m || lp.c.size() != n) throw BadParameter("LP dimensions do not match");
    if (m == 0) throw BadParameter("LP without constraints");
    // Rows with negative right-hand side are negated so that the artificial
    // basis is feasible.
    Eigen::VectorXd sign = Eigen::VectorXd::Ones(m);
    for (int i = 0; i < m; ++i)
        if (lp.b(i) < 0.0) sign(i) = -1.0;
    const Eigen::MatrixXd A = sign.asDiagonal() * lp.A;
    const Eigen::VectorXd b = sign.asDiagonal() * lp.b;

    Simplex sx(A, b, opt);
    Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(n + m);
    phase1.tail(m).setOnes();
    sx.optimize(phase1);
    sx.refactor();
    double infeas = 0.0;
    for (int i = 0; i < m; ++i)
        if (sx.basis_[i] >= n) infeas += std::max(sx.xb_(i), 0.0);
    if (infeas > opt.feasibility_tol * (1.0 + b.cwiseAbs().sum()))
        throw Infeasible("phase one ended with artificial mass " + std::to_string(infeas));
    LpSolution sol;
    sol.redundant_rows = sx.drive_out_artificials();

    Eigen::VectorXd phase2 = Eigen::VectorXd::Zero(n + m);
    phase2.head(n) = lp.c;
    sx.optimize(phase2);
    sx.refactor();

    sol.pivots = sx.pivots_;
    sol.primal = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < m; ++i)
        if (sx.basis_[i] < n) sol.primal(sx.basis_[i]) = std::max(sx.xb_(i), 0.0);
    Eigen::VectorXd cb(m);
    for (int i = 0; i < m; ++i) cb(i) = phase2(sx.basis_[i]);
    const Eigen::VectorXd y = (cb.transpose() * sx.binv_).transpose();
    sol.dual = sign.asDiagonal() * y;
    sol.objective = lp.c.dot(sol.primal);
    sol.dual_objective = lp.b.dot(sol.dual);
    sol.primal_residual = (lp.A * sol.primal - lp.b).cwiseAbs().maxCoeff();
    const Eigen::VectorXd d = lp.c - lp.A.transpose() * sol.dual;
    sol.dual_infeasibility = std::max(0.0, -d.minCoeff());
    sol.complementary_slackness = sol.primal.dot(d.cwiseAbs());
    return sol;
}

}  // namespace pdmpnet
