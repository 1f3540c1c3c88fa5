#pragma once

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "sfv/interval.hpp"
#include "sfv/network.hpp"
#include "sfv/property.hpp"

namespace sfv {

/// Regular evaluation grid with linspace semantics: box endpoints are always
/// on the grid. Pinned dimensions contribute a single point.
struct GridSpec {
    std::size_t points_per_dim = 2;
    Box box;
    std::size_t budget = 100000000;  // hard cap on total evaluations

    GridSpec(std::size_t p, Box b) : points_per_dim(p), box(std::move(b)) {
        if (points_per_dim < 2) throw std::invalid_argument("grid needs at least 2 points per dimension");
    }

    std::size_t total_points() const {
        std::size_t total = 1;
        for (const Interval& iv : box.dims) {
            const std::size_t p = iv.width() > 0.0 ? points_per_dim : 1;
            if (total > std::numeric_limits<std::size_t>::max() / p) return std::numeric_limits<std::size_t>::max();
            total *= p;
        }
        return total;
    }
};

namespace detail {

template <typename Fn>
void for_each_grid_point(const GridSpec& g, Fn&& fn) {
    if (g.total_points() > g.budget)
        throw std::runtime_error("grid budget exceeded: " + std::to_string(g.total_points()) +
                                 " points > cap " + std::to_string(g.budget));
    const std::size_t dim = g.box.size();
    std::vector<std::size_t> counts(dim), idx(dim, 0);
    for (std::size_t d = 0; d < dim; ++d)
        counts[d] = g.box.dims[d].width() > 0.0 ? g.points_per_dim : 1;
    std::vector<double> x(dim);
    auto coord = [&](std::size_t d, std::size_t i) {
        const Interval& iv = g.box.dims[d];
        if (counts[d] == 1) return iv.lo;
        if (i + 1 == counts[d]) return iv.hi;
        return iv.lo + iv.width() * static_cast<double>(i) / static_cast<double>(counts[d] - 1);
    };
    for (std::size_t d = 0; d < dim; ++d) x[d] = coord(d, 0);
    while (true) {
        fn(x);
        std::size_t d = 0;
        while (d < dim) {
            if (++idx[d] < counts[d]) {
                x[d] = coord(d, idx[d]);
                break;
            }
            idx[d] = 0;
            x[d] = coord(d, 0);
            ++d;
        }
        if (d == dim) break;
    }
}

}  // namespace detail

/// Fraction of grid points satisfying the assertion. Brute-force ground
/// truth for desk-scale rate checks.
inline double grid_rate(const Network& net, const DecisionProperty& prop, const GridSpec& g) {
    prop.assertion.validate(net.output_dim());
    if (g.box.size() != net.input_dim())
        throw std::invalid_argument("grid_rate: box dim != network input dim");
    std::size_t sat = 0, total = 0;
    detail::for_each_grid_point(g, [&](const std::vector<double>& x) {
        if (prop.assertion.satisfied_by(net.forward(x))) ++sat;
        ++total;
    });
    return static_cast<double>(sat) / static_cast<double>(total);
}

/// Per-output [min, max] over the grid. Empirical, so tagged Sampled.
inline OutputBounds grid_bounds(const Network& net, const Box& box, const GridSpec& g) {
    if (g.box.size() != net.input_dim() || box.size() != net.input_dim())
        throw std::invalid_argument("grid_bounds: box dim != network input dim");
    std::vector<double> lo(net.output_dim(), std::numeric_limits<double>::infinity());
    std::vector<double> hi(net.output_dim(), -std::numeric_limits<double>::infinity());
    detail::for_each_grid_point(g, [&](const std::vector<double>& x) {
        const auto y = net.forward(x);
        for (std::size_t j = 0; j < y.size(); ++j) {
            lo[j] = std::min(lo[j], y[j]);
            hi[j] = std::max(hi[j], y[j]);
        }
    });
    OutputBounds b;
    b.provenance = Provenance::Sampled;
    for (std::size_t j = 0; j < lo.size(); ++j) b.outs.push_back(Interval(lo[j], hi[j]));
    return b;
}

inline OutputBounds grid_bounds(const Network& net, const GridSpec& g) {
    return grid_bounds(net, g.box, g);
}

}  // namespace sfv
