#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

#include "sfv/network.hpp"

namespace sfv {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    Interval() = default;
    Interval(double lo_, double hi_) : lo(lo_), hi(hi_) {
        if (!std::isfinite(lo) || !std::isfinite(hi))
            throw std::invalid_argument("interval endpoints must be finite");
        if (lo > hi)
            throw std::invalid_argument("interval [" + std::to_string(lo) + ", " + std::to_string(hi) +
                                        "] has lo > hi");
    }

    double width() const { return hi - lo; }
    double mid() const { return lo + 0.5 * (hi - lo); }
    bool contains(double x) const { return lo <= x && x <= hi; }
    bool contains(const Interval& o) const { return lo <= o.lo && o.hi <= hi; }
    bool operator==(const Interval& o) const { return lo == o.lo && hi == o.hi; }
};

/// Axis-aligned input box, one interval per network input.
struct Box {
    std::vector<Interval> dims;

    Box() = default;
    explicit Box(std::vector<Interval> d) : dims(std::move(d)) {
        if (dims.empty()) throw std::invalid_argument("box must have at least one dimension");
    }

    std::size_t size() const { return dims.size(); }
    bool contains(const std::vector<double>& x) const {
        if (x.size() != dims.size()) return false;
        for (std::size_t i = 0; i < dims.size(); ++i)
            if (!dims[i].contains(x[i])) return false;
        return true;
    }
    bool contains(const Box& o) const {
        if (o.size() != size()) return false;
        for (std::size_t i = 0; i < dims.size(); ++i)
            if (!dims[i].contains(o.dims[i])) return false;
        return true;
    }
    std::vector<double> center() const {
        std::vector<double> c(dims.size());
        for (std::size_t i = 0; i < dims.size(); ++i) c[i] = dims[i].mid();
        return c;
    }
};

enum class Provenance { Formal, Sampled };

struct OutputBounds {
    std::vector<Interval> outs;
    Provenance provenance = Provenance::Formal;
};

struct SamplingConfig {
    std::size_t n = 20;
    std::uint64_t seed = 0;
    bool include_vertices = false;

    void validate() const {
        if (n < 2) throw std::invalid_argument("sampling config requires n >= 2");
    }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Small deterministic PRNG; state evolution is platform independent, unlike
/// std::uniform_real_distribution.
struct Rng {
    std::uint64_t state;
    explicit Rng(std::uint64_t seed) : state(seed) {}
    std::uint64_t next_u64() {
        state = splitmix64(state);
        return state;
    }
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
    double next_in(const Interval& iv) { return iv.lo + next_unit() * (iv.hi - iv.lo); }
    std::size_t next_index(std::size_t n) { return static_cast<std::size_t>(next_u64() % n); }
};

}  // namespace detail

/// Content hash of a box, mixed into per-subarea RNG seeds so sampling is
/// deterministic regardless of traversal or thread scheduling.
inline std::uint64_t box_hash(const Box& box) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        h = detail::splitmix64(h ^ bits);
    };
    for (const Interval& iv : box.dims) {
        mix(iv.lo);
        mix(iv.hi);
    }
    return h;
}

/// Sound interval image of x -> W x + b over per-input intervals.
inline std::vector<Interval> affine_image(const std::vector<std::vector<double>>& weights,
                                          const std::vector<double>& bias,
                                          const std::vector<Interval>& in) {
    if (weights.size() != bias.size())
        throw std::invalid_argument("affine_image: weight rows != bias length");
    std::vector<Interval> out;
    out.reserve(weights.size());
    for (std::size_t r = 0; r < weights.size(); ++r) {
        const auto& row = weights[r];
        if (row.size() != in.size())
            throw std::invalid_argument("affine_image: weight row " + std::to_string(r) + " has " +
                                        std::to_string(row.size()) + " entries, input has " +
                                        std::to_string(in.size()));
        double lo = bias[r], hi = bias[r];
        for (std::size_t k = 0; k < row.size(); ++k) {
            const double a = row[k] * in[k].lo;
            const double b = row[k] * in[k].hi;
            lo += std::min(a, b);
            hi += std::max(a, b);
        }
        out.push_back(Interval(lo, hi));
    }
    return out;
}

inline std::vector<Interval> relu_image(const std::vector<Interval>& in) {
    std::vector<Interval> out;
    out.reserve(in.size());
    for (const Interval& iv : in) out.push_back(Interval(std::max(iv.lo, 0.0), std::max(iv.hi, 0.0)));
    return out;
}

/// Layer-by-layer interval propagation. Sound over-approximation of the
/// reachable output set.
inline OutputBounds propagate_formal(const Network& net, const Box& box) {
    if (box.size() != net.input_dim())
        throw std::invalid_argument("propagate_formal: box dim " + std::to_string(box.size()) +
                                    " != network input dim " + std::to_string(net.input_dim()));
    std::vector<Interval> cur = box.dims;
    for (const Layer& layer : net.layers()) {
        cur = affine_image(layer.weights, layer.bias, cur);
        if (layer.activation == Activation::ReLU) cur = relu_image(cur);
    }
    return OutputBounds{std::move(cur), Provenance::Formal};
}

/// Sample points for a subarea: cfg.n uniform i.i.d. draws, preceded by the
/// box vertices when requested and affordable. The random draws are nested
/// in n for a fixed seed.
inline std::vector<std::vector<double>> sample_points(const Box& box, const SamplingConfig& cfg) {
    cfg.validate();
    std::vector<std::vector<double>> pts;
    pts.reserve(cfg.n);
    const std::size_t dim = box.size();
    if (cfg.include_vertices && dim < 63 && (std::uint64_t{1} << dim) <= cfg.n) {
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << dim); ++mask) {
            std::vector<double> v(dim);
            for (std::size_t d = 0; d < dim; ++d)
                v[d] = (mask >> d) & 1 ? box.dims[d].hi : box.dims[d].lo;
            pts.push_back(std::move(v));
        }
    }
    detail::Rng rng(detail::splitmix64(cfg.seed) ^ box_hash(box));
    for (std::size_t s = 0; s < cfg.n; ++s) {
        std::vector<double> v(dim);
        for (std::size_t d = 0; d < dim; ++d) v[d] = rng.next_in(box.dims[d]);
        pts.push_back(std::move(v));
    }
    return pts;
}

/// Semi-formal bound estimation: componentwise min/max of forward values at
/// sampled points. Under-approximates the true reachable hull.
inline OutputBounds propagate_sampled(const Network& net, const Box& box, const SamplingConfig& cfg) {
    if (box.size() != net.input_dim())
        throw std::invalid_argument("propagate_sampled: box dim " + std::to_string(box.size()) +
                                    " != network input dim " + std::to_string(net.input_dim()));
    const auto pts = sample_points(box, cfg);
    std::vector<double> lo(net.output_dim(), std::numeric_limits<double>::infinity());
    std::vector<double> hi(net.output_dim(), -std::numeric_limits<double>::infinity());
    for (const auto& p : pts) {
        const auto y = net.forward(p);
        for (std::size_t j = 0; j < y.size(); ++j) {
            lo[j] = std::min(lo[j], y[j]);
            hi[j] = std::max(hi[j], y[j]);
        }
    }
    std::vector<Interval> outs;
    outs.reserve(lo.size());
    for (std::size_t j = 0; j < lo.size(); ++j) outs.push_back(Interval(lo[j], hi[j]));
    return OutputBounds{std::move(outs), Provenance::Sampled};
}

inline double bound_width(const OutputBounds& b, std::size_t j) {
    if (j >= b.outs.size())
        throw std::out_of_range("bound_width: output index " + std::to_string(j) + " out of range");
    return b.outs[j].width();
}

}  // namespace sfv
