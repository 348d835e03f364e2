#pragma once

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <vector>

#include "pdmpnet/errors.hpp"

namespace pdmpnet {

using Vec = Eigen::VectorXd;

/// Tag used in NetworkPoint::edge for the junction O.
inline constexpr int JUNCTION = -1;

/// Canonicalization tolerance at the junction and at edge endpoints.
inline constexpr double kCanonTol = 1e-12;

/// A position on a star network: edge index (0-based) and the nonnegative
/// coordinate along that edge's direction.  The junction is always
/// represented as {JUNCTION, 0}.
struct NetworkPoint {
    int edge = JUNCTION;
    double coord = 0.0;

    static NetworkPoint junction() { return {}; }
    /// Builds a point and canonicalizes |coord| < 1e-12 to the junction.
    static NetworkPoint on(int edge, double coord);

    bool is_junction() const { return edge == JUNCTION; }
    bool operator==(const NetworkPoint& o) const { return edge == o.edge && coord == o.coord; }
};

/// Common geometry of the base and extended star networks.  Every edge is a
/// segment [0, length] along a unit direction, all glued at the origin.
class Network {
public:
    virtual ~Network() = default;

    int ambient_dim() const { return dim_; }
    int num_edges() const { return static_cast<int>(dirs_.size()); }
    const Vec& direction(int j) const { return dirs_.at(j); }
    double length(int j) const { return lengths_.at(j); }
    /// Edge whose direction is the negative of edge j, or -1.
    int antipode(int j) const { return antipode_.at(j); }
    /// Number of edges of the underlying base network.
    virtual int num_base_edges() const { return num_edges(); }
    /// Number of base edges without an antipode (they come first).
    int antipode_free_count() const { return m_free_; }
    /// True for fictive edges of an extended network.
    virtual bool is_fictive(int /*j*/) const { return false; }
    /// Base edge an edge descends from (identity for non-fictive edges).
    virtual int source_edge(int j) const { return j; }
    /// Extension length (0 for a base network).
    virtual double epsilon() const { return 0.0; }

    Vec embed(const NetworkPoint& p) const;
    /// Canonical form: junction snapping and endpoint snapping within 1e-12.
    NetworkPoint canonical(NetworkPoint p) const;
    bool contains(const NetworkPoint& p, double tol = 1e-9) const;
    /// Edge index with the given unit direction (within 1e-9), or -1.
    int edge_with_direction(const Vec& dir) const;
    /// True if p is at the far end of its edge.
    bool at_endpoint(const NetworkPoint& p) const;

protected:
    int dim_ = 0;
    int m_free_ = 0;
    std::vector<Vec> dirs_;
    std::vector<double> lengths_;
    std::vector<int> antipode_;
};

class StarNetwork : public Network {
public:
    /// Normalizes directions, detects antipodal pairs and orders the edges
    /// antipode-free first, then in input order.
    static std::shared_ptr<const StarNetwork> make(const std::vector<Vec>& directions);
};

class ExtendedNetwork : public Network {
public:
    /// Base edges become [0, 1+eps]; each antipode-free edge j gets a fictive
    /// edge with direction -e_j and length eps, indexed num_base_edges()+j.
    static std::shared_ptr<const ExtendedNetwork> make(std::shared_ptr<const Network> base,
                                                       double eps);

    const Network& base() const { return *base_; }
    std::shared_ptr<const Network> base_ptr() const { return base_; }
    int num_base_edges() const override { return base_->num_edges(); }
    bool is_fictive(int j) const override { return j >= base_->num_edges(); }
    int source_edge(int j) const override {
        return is_fictive(j) ? j - base_->num_edges() : j;
    }
    double epsilon() const override { return eps_; }
    /// The network with all extensions removed.
    std::shared_ptr<const Network> restrict() const { return base_; }
    /// True if p lies in the closure of the base network.
    bool in_base(const NetworkPoint& p, double tol = 1e-12) const;

private:
    std::shared_ptr<const Network> base_;
    double eps_ = 0.0;
};

/// Shortest path length through the network.
double geodesic_distance(const NetworkPoint& p, const NetworkPoint& q);

/// A Euclidean-nearest network point; ties go to the lowest edge index, then
/// to the coordinate closest to 0.
NetworkPoint project_to_network(const Vec& y, const Network& net);

/// Allowed signed tangent directions at p.
std::vector<Vec> tangent_cone(const Network& net, const NetworkPoint& p);

std::shared_ptr<const ExtendedNetwork> extend(std::shared_ptr<const Network> net, double eps);

/// Signed coordinate of p on the straight line carrying edge `line_edge`
/// (positive along that edge, negative on the opposite ray); nullopt if p is
/// not on that line.
std::optional<double> line_coordinate(const Network& net, const NetworkPoint& p, int line_edge);

/// Point at signed coordinate s on the line of `line_edge`; nullopt if the
/// opposite ray is not part of the network or s is out of range.
std::optional<NetworkPoint> point_on_line(const Network& net, int line_edge, double s);

}  // namespace pdmpnet
