#pragma once

// Shared fixtures for the test suites: seeded random networks, analytic
// crossing networks, and an independent straight-line forward evaluator
// used as an oracle against Network::forward.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "sfv/interval.hpp"
#include "sfv/network.hpp"
#include "sfv/property.hpp"
#include "sfv/verifier.hpp"

namespace sfv_test {

inline sfv::Network make_random_net(std::uint64_t seed, const std::vector<std::size_t>& dims,
                                    double scale = 1.0) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<sfv::Layer> layers;
    for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
        sfv::Layer l;
        const double s = scale / std::sqrt(static_cast<double>(dims[k]));
        l.activation = (k + 2 == dims.size()) ? sfv::Activation::Identity : sfv::Activation::ReLU;
        for (std::size_t r = 0; r < dims[k + 1]; ++r) {
            std::vector<double> row(dims[k]);
            for (double& w : row) w = s * dist(gen);
            l.weights.push_back(std::move(row));
            l.bias.push_back(0.1 * s * dist(gen));
        }
        layers.push_back(std::move(l));
    }
    return sfv::Network(std::move(layers));
}

/// Independent evaluator: plain nested loops over the raw layer data,
/// written without reference to Network::forward.
inline std::vector<double> reference_forward(const sfv::Network& net, const std::vector<double>& x) {
    std::vector<double> v = x;
    for (const sfv::Layer& layer : net.layers()) {
        std::vector<double> w(layer.bias);
        for (std::size_t r = 0; r < layer.weights.size(); ++r)
            for (std::size_t c = 0; c < layer.weights[r].size(); ++c)
                w[r] += layer.weights[r][c] * v[c];
        if (layer.activation == sfv::Activation::ReLU)
            for (double& e : w)
                if (e < 0) e = 0;
        v = std::move(w);
    }
    return v;
}

inline sfv::Box unit_box(std::size_t dim) {
    return sfv::Box(std::vector<sfv::Interval>(dim, sfv::Interval(0.0, 1.0)));
}

/// y0 = x, y1 = 0.5 on one input; the property y1 < y0 holds exactly on
/// (0.5, 1].
inline sfv::Network crossing_net_1d() {
    sfv::Layer l;
    l.weights = {{1.0}, {0.0}};
    l.bias = {0.0, 0.5};
    l.activation = sfv::Activation::Identity;
    return sfv::Network({l});
}

inline sfv::DecisionProperty crossing_prop_1d() {
    sfv::DecisionProperty p;
    p.name = "crossing_1d";
    p.input_box = unit_box(1);
    p.assertion = {1, {0}, sfv::DominanceMode::AllOf};
    return p;
}

/// y0 = x0 + x1, y1 = 1 on the unit square; y0 < y1 holds exactly below the
/// diagonal, area 1/2.
inline sfv::Network crossing_net_2d() {
    sfv::Layer l;
    l.weights = {{1.0, 1.0}, {0.0, 0.0}};
    l.bias = {0.0, 1.0};
    l.activation = sfv::Activation::Identity;
    return sfv::Network({l});
}

inline sfv::DecisionProperty crossing_prop_2d() {
    sfv::DecisionProperty p;
    p.name = "crossing_2d";
    p.input_box = unit_box(2);
    p.assertion = {0, {1}, sfv::DominanceMode::AllOf};
    return p;
}

inline sfv::Network constant_net(const std::vector<double>& outputs, std::size_t input_dim = 2) {
    sfv::Layer l;
    for (double b : outputs) {
        l.weights.push_back(std::vector<double>(input_dim, 0.0));
        l.bias.push_back(b);
    }
    l.activation = sfv::Activation::Identity;
    return sfv::Network({l});
}

inline sfv::Network identity_net(std::size_t dim = 2) {
    sfv::Layer l;
    for (std::size_t r = 0; r < dim; ++r) {
        std::vector<double> row(dim, 0.0);
        row[r] = 1.0;
        l.weights.push_back(std::move(row));
        l.bias.push_back(0.0);
    }
    l.activation = sfv::Activation::Identity;
    return sfv::Network({l});
}

inline std::vector<double> random_point_in(const sfv::Box& box, std::mt19937_64& gen) {
    std::vector<double> x(box.size());
    for (std::size_t d = 0; d < box.size(); ++d) {
        std::uniform_real_distribution<double> dist(box.dims[d].lo, box.dims[d].hi);
        x[d] = dist(gen);
    }
    return x;
}

}  // namespace sfv_test
