#include "pdmpnet/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace pdmpnet {

NetworkPoint NetworkPoint::on(int edge, double coord) {
    if (edge == JUNCTION || std::abs(coord) < kCanonTol) return junction();
    return {edge, coord};
}

Vec Network::embed(const NetworkPoint& p) const {
    if (p.is_junction()) return Vec::Zero(dim_);
    return p.coord * dirs_.at(p.edge);
}

NetworkPoint Network::canonical(NetworkPoint p) const {
    if (p.is_junction() || std::abs(p.coord) < kCanonTol) return NetworkPoint::junction();
    const double len = lengths_.at(p.edge);
    if (std::abs(p.coord - len) < kCanonTol) p.coord = len;
    return p;
}

bool Network::contains(const NetworkPoint& p, double tol) const {
    if (p.is_junction()) return true;
    if (p.edge < 0 || p.edge >= num_edges()) return false;
    return p.coord >= -tol && p.coord <= lengths_[p.edge] + tol;
}

int Network::edge_with_direction(const Vec& dir) const {
    if (dir.size() != dim_) return -1;
    for (int j = 0; j < num_edges(); ++j)
        if ((dirs_[j] - dir).norm() < 1e-9) return j;
    return -1;
}

bool Network::at_endpoint(const NetworkPoint& p) const {
    return !p.is_junction() && std::abs(p.coord - lengths_.at(p.edge)) < kCanonTol;
}

std::shared_ptr<const StarNetwork> StarNetwork::make(const std::vector<Vec>& directions) {
    if (directions.size() < 2) throw BadDimension("a star network needs at least two edges");
    const auto dim = directions.front().size();
    if (dim < 2) throw BadDimension("ambient dimension must be at least 2");
    std::vector<Vec> unit;
    for (const auto& d : directions) {
        if (d.size() != dim) throw BadDimension("mixed direction dimensions");
        const double n = d.norm();
        if (!(n > 0.0) || !std::isfinite(n)) throw BadDimension("zero or non-finite direction");
        unit.push_back(d / n);
    }
    for (std::size_t i = 0; i < unit.size(); ++i)
        for (std::size_t k = i + 1; k < unit.size(); ++k)
            if ((unit[i] - unit[k]).norm() < 1e-9) {
                std::ostringstream os;
                os << "directions " << i << " and " << k << " coincide";
                throw DuplicateDirection(os.str());
            }
    auto has_antipode = [&](std::size_t i) {
        for (std::size_t k = 0; k < unit.size(); ++k)
            if (k != i && (unit[i] + unit[k]).norm() < 1e-9) return true;
        return false;
    };
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < unit.size(); ++i)
        if (!has_antipode(i)) order.push_back(i);
    const int m_free = static_cast<int>(order.size());
    for (std::size_t i = 0; i < unit.size(); ++i)
        if (has_antipode(i)) order.push_back(i);

    auto net = std::make_shared<StarNetwork>();
    net->dim_ = static_cast<int>(dim);
    net->m_free_ = m_free;
    for (auto i : order) {
        net->dirs_.push_back(unit[i]);
        net->lengths_.push_back(1.0);
    }
    // Snap exact antipodes so that e_j' = -e_j holds to rounding.
    net->antipode_.assign(order.size(), -1);
    for (int j = 0; j < net->num_edges(); ++j)
        for (int k = 0; k < net->num_edges(); ++k)
            if (j != k && (net->dirs_[j] + net->dirs_[k]).norm() < 1e-9) {
                net->antipode_[j] = k;
                if (k > j) net->dirs_[k] = -net->dirs_[j];
            }
    return net;
}

std::shared_ptr<const ExtendedNetwork> ExtendedNetwork::make(std::shared_ptr<const Network> base,
                                                             double eps) {
    if (!(eps > 0.0) || !(eps < 1.0)) throw BadEpsilon("extension length must lie in (0,1)");
    if (base->epsilon() != 0.0) throw BadEpsilon("cannot extend an extended network");
    auto net = std::make_shared<ExtendedNetwork>();
    net->base_ = base;
    net->eps_ = eps;
    net->dim_ = base->ambient_dim();
    net->m_free_ = base->antipode_free_count();
    const int n = base->num_edges();
    for (int j = 0; j < n; ++j) {
        net->dirs_.push_back(base->direction(j));
        net->lengths_.push_back(base->length(j) + eps);
        net->antipode_.push_back(base->antipode(j));
    }
    for (int j = 0; j < base->antipode_free_count(); ++j) {
        net->dirs_.push_back(-base->direction(j));
        net->lengths_.push_back(eps);
        net->antipode_.push_back(j);
        net->antipode_[j] = n + j;
    }
    return net;
}

bool ExtendedNetwork::in_base(const NetworkPoint& p, double tol) const {
    if (p.is_junction()) return true;
    if (is_fictive(p.edge)) return false;
    return p.coord <= base_->length(p.edge) + tol;
}

double geodesic_distance(const NetworkPoint& p, const NetworkPoint& q) {
    const NetworkPoint a = NetworkPoint::on(p.edge, p.coord);
    const NetworkPoint b = NetworkPoint::on(q.edge, q.coord);
    if (a.is_junction()) return b.coord;
    if (b.is_junction()) return a.coord;
    if (a.edge == b.edge) return std::abs(a.coord - b.coord);
    return a.coord + b.coord;
}

NetworkPoint project_to_network(const Vec& y, const Network& net) {
    if (y.size() != net.ambient_dim()) throw BadDimension("point dimension mismatch");
    double best = std::numeric_limits<double>::infinity();
    NetworkPoint arg = NetworkPoint::junction();
    for (int j = 0; j < net.num_edges(); ++j) {
        const double t = std::clamp(y.dot(net.direction(j)), 0.0, net.length(j));
        const double d = (y - t * net.direction(j)).norm();
        // Edges are scanned in index order and only a strict improvement
        // replaces the incumbent, so ties keep the lowest edge index.  The
        // projection onto one segment is unique, so the second tie-break
        // (coordinate closest to 0) only matters at the junction, which is
        // canonicalized anyway.
        if (d < best - 1e-12) {
            best = d;
            arg = NetworkPoint::on(j, t);
        }
    }
    return net.canonical(arg);
}

std::vector<Vec> tangent_cone(const Network& net, const NetworkPoint& p) {
    std::vector<Vec> out;
    const NetworkPoint c = net.canonical(p);
    if (c.is_junction()) {
        for (int j = 0; j < net.num_edges(); ++j) out.push_back(net.direction(j));
    } else if (net.at_endpoint(c)) {
        out.push_back(-net.direction(c.edge));
    } else {
        out.push_back(net.direction(c.edge));
        out.push_back(-net.direction(c.edge));
    }
    return out;
}

std::shared_ptr<const ExtendedNetwork> extend(std::shared_ptr<const Network> net, double eps) {
    return ExtendedNetwork::make(std::move(net), eps);
}

std::optional<double> line_coordinate(const Network& net, const NetworkPoint& p, int line_edge) {
    if (p.is_junction()) return 0.0;
    if (p.edge == line_edge) return p.coord;
    if (net.antipode(line_edge) == p.edge) return -p.coord;
    return std::nullopt;
}

std::optional<NetworkPoint> point_on_line(const Network& net, int line_edge, double s) {
    if (std::abs(s) < kCanonTol) return NetworkPoint::junction();
    if (s > 0) {
        if (s > net.length(line_edge) + 1e-12) return std::nullopt;
        return net.canonical({line_edge, std::min(s, net.length(line_edge))});
    }
    const int k = net.antipode(line_edge);
    if (k < 0 || -s > net.length(k) + 1e-12) return std::nullopt;
    return net.canonical({k, std::min(-s, net.length(k))});
}

}  // namespace pdmpnet
