#pragma once

#include <atomic>
#include <chrono>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "sfv/interval.hpp"
#include "sfv/network.hpp"
#include "sfv/property.hpp"

namespace sfv {

enum class Backend { Formal, Sampled, Hybrid };
enum class SplitStrategy { Random, WidestDim, RoundRobin };
enum class MixedLeafPolicy { Unknown, ProportionalBySamples };

struct VerifierConfig {
    Backend backend = Backend::Formal;
    SamplingConfig sampling{};
    std::size_t max_depth = 12;
    double min_width = 1e-6;
    SplitStrategy split_strategy = SplitStrategy::Random;
    std::size_t split_arity = 2;
    std::uint64_t rng_seed = 0;
    MixedLeafPolicy mixed_leaf_policy = MixedLeafPolicy::Unknown;
    std::size_t threads = 1;
    bool collect_tree = false;
    std::size_t max_counterexamples = 1000;

    /// Per-backend defaults: the formal mode must not claim undecided mass,
    /// the estimating modes assign it proportionally at the resolution floor.
    static VerifierConfig defaults_for(Backend b) {
        VerifierConfig cfg;
        cfg.backend = b;
        cfg.mixed_leaf_policy =
            b == Backend::Formal ? MixedLeafPolicy::Unknown : MixedLeafPolicy::ProportionalBySamples;
        return cfg;
    }

    void validate() const {
        if (min_width <= 0.0) throw std::invalid_argument("min_width must be positive");
        if (split_arity < 2) throw std::invalid_argument("split_arity must be at least 2");
        sampling.validate();
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["backend"] = backend == Backend::Formal ? "formal" : backend == Backend::Sampled ? "sampled" : "hybrid";
        j["samples"] = sampling.n;
        j["sample_seed"] = sampling.seed;
        j["include_vertices"] = sampling.include_vertices;
        j["max_depth"] = max_depth;
        j["min_width"] = min_width;
        j["split"] = split_strategy == SplitStrategy::Random      ? "random"
                     : split_strategy == SplitStrategy::WidestDim ? "widest"
                                                                  : "roundrobin";
        j["split_arity"] = split_arity;
        j["seed"] = rng_seed;
        j["mixed_leaf_policy"] =
            mixed_leaf_policy == MixedLeafPolicy::Unknown ? "unknown" : "proportional";
        j["threads"] = threads;
        return j;
    }
};

struct SubareaNode {
    Box box;
    std::size_t depth = 0;
    Verdict verdict;
    std::vector<SubareaNode> children;  // empty iff leaf

    bool is_leaf() const { return children.empty(); }
};

struct LeafCounts {
    std::size_t proved = 0;
    std::size_t denied = 0;
    std::size_t unknown = 0;
};

struct VerificationReport {
    std::string property;
    double safe_rate = 0.0;
    double violation_rate = 0.0;
    double unknown_rate = 0.0;
    LeafCounts leaves;
    std::vector<std::vector<double>> counterexamples;
    std::size_t propagations = 0;
    double wall_time_s = 0.0;
    VerifierConfig config;
    std::shared_ptr<SubareaNode> tree;  // populated only when config.collect_tree

    nlohmann::json to_json(bool include_timing = true) const {
        nlohmann::json j;
        j["property"] = property;
        j["safe_rate"] = safe_rate;
        j["violation_rate"] = violation_rate;
        j["unknown_rate"] = unknown_rate;
        j["leaves"] = {{"proved", leaves.proved}, {"denied", leaves.denied}, {"unknown", leaves.unknown}};
        j["counterexamples"] = counterexamples;
        j["propagations"] = propagations;
        if (include_timing) j["wall_time_s"] = wall_time_s;
        j["config"] = config.to_json();
        return j;
    }

    static std::string csv_header() {
        return "property,safe_rate,violation_rate,unknown_rate,leaves_proved,leaves_denied,"
               "leaves_unknown,counterexamples,propagations,wall_time_s";
    }

    std::string csv_row() const {
        std::ostringstream os;
        os.precision(12);
        os << property << "," << safe_rate << "," << violation_rate << "," << unknown_rate << ","
           << leaves.proved << "," << leaves.denied << "," << leaves.unknown << ","
           << counterexamples.size() << "," << propagations << "," << wall_time_s;
        return os.str();
    }
};

/// Split a box into `arity` equal slices along dimension `dim`. Slices share
/// cut points exactly, so their union is the input box.
inline std::vector<Box> split_box_along(const Box& box, std::size_t dim, std::size_t arity) {
    if (dim >= box.size()) throw std::out_of_range("split dimension out of range");
    const Interval& iv = box.dims[dim];
    if (iv.width() <= 0.0) throw std::invalid_argument("cannot split a degenerate dimension");
    std::vector<double> cuts(arity + 1);
    cuts.front() = iv.lo;
    cuts.back() = iv.hi;
    for (std::size_t i = 1; i < arity; ++i)
        cuts[i] = std::min(iv.lo + iv.width() * static_cast<double>(i) / static_cast<double>(arity), iv.hi);
    std::vector<Box> out;
    out.reserve(arity);
    for (std::size_t i = 0; i < arity; ++i) {
        Box child = box;
        child.dims[dim] = Interval(cuts[i], cuts[i + 1]);
        out.push_back(std::move(child));
    }
    return out;
}

inline std::size_t choose_split_dim(const Box& box, SplitStrategy strategy, std::size_t depth,
                                    detail::Rng& rng, const std::vector<bool>& splittable) {
    std::vector<std::size_t> candidates;
    for (std::size_t d = 0; d < box.size(); ++d)
        if (splittable[d]) candidates.push_back(d);
    if (candidates.empty()) throw std::invalid_argument("all dimensions degenerate, cannot split");
    switch (strategy) {
        case SplitStrategy::Random:
            return candidates[rng.next_index(candidates.size())];
        case SplitStrategy::RoundRobin:
            return candidates[depth % candidates.size()];
        case SplitStrategy::WidestDim:
        default: {
            std::size_t best = candidates.front();
            for (std::size_t d : candidates)
                if (box.dims[d].width() > box.dims[best].width()) best = d;
            return best;
        }
    }
}

inline std::vector<Box> split_box(const Box& box, SplitStrategy strategy, std::size_t arity,
                                  detail::Rng& rng, std::size_t depth = 0) {
    std::vector<bool> splittable(box.size());
    for (std::size_t d = 0; d < box.size(); ++d) splittable[d] = box.dims[d].width() > 0.0;
    return split_box_along(box, choose_split_dim(box, strategy, depth, rng, splittable), arity);
}

namespace detail {

/// Volume over the dimensions that are non-degenerate at the root; pinned
/// dimensions carry no measure and are never split.
inline double masked_volume(const Box& box, const std::vector<bool>& measured) {
    double v = 1.0;
    for (std::size_t d = 0; d < box.size(); ++d)
        if (measured[d]) v *= box.dims[d].width();
    return v;
}

enum class NodeOutcome { Proved, Denied, Unknown, Mixed };

struct NodeEval {
    NodeOutcome outcome = NodeOutcome::Unknown;
    std::optional<std::vector<double>> witness;
    std::size_t satisfied = 0;  // sample tallies, Mixed leaves
    std::size_t total = 0;
    std::size_t propagations = 0;
};

struct NodeWork {
    Box box;
    std::size_t depth = 0;
    SubareaNode* tree_node = nullptr;
};

class Engine {
public:
    Engine(const Network& net, const DecisionProperty& prop, const VerifierConfig& cfg)
        : net_(net), prop_(prop), cfg_(cfg) {
        cfg_.validate();
        prop_.assertion.validate(net_.output_dim());
        if (prop_.input_box.size() != net_.input_dim())
            throw std::invalid_argument("property \"" + prop_.name + "\" has box dim " +
                                        std::to_string(prop_.input_box.size()) +
                                        " but network input dim is " + std::to_string(net_.input_dim()));
        measured_.resize(prop_.input_box.size());
        for (std::size_t d = 0; d < measured_.size(); ++d)
            measured_[d] = prop_.input_box.dims[d].width() > 0.0;
    }

    VerificationReport run() {
        const auto t0 = std::chrono::steady_clock::now();
        VerificationReport report;
        report.property = prop_.name;
        report.config = cfg_;

        const double root_volume = masked_volume(prop_.input_box, measured_);
        // A fully pinned box is a single point; the empty product gives it
        // measure 1 so rates stay defined.
        std::shared_ptr<SubareaNode> tree;
        if (cfg_.collect_tree) {
            tree = std::make_shared<SubareaNode>();
            tree->box = prop_.input_box;
        }

        std::vector<NodeWork> frontier{{prop_.input_box, 0, tree.get()}};
        double safe = 0.0, violation = 0.0, unknown = 0.0;
        while (!frontier.empty()) {
            std::vector<NodeEval> evals = evaluate_frontier(frontier);
            std::vector<NodeWork> next;
            for (std::size_t i = 0; i < frontier.size(); ++i) {
                NodeWork& w = frontier[i];
                NodeEval& ev = evals[i];
                report.propagations += ev.propagations;
                const double vol = masked_volume(w.box, measured_);
                const bool at_floor = w.depth >= cfg_.max_depth || !splittable_exists(w.box);
                if (ev.outcome == NodeOutcome::Proved) {
                    safe += vol;
                    ++report.leaves.proved;
                    set_verdict(w, VerdictKind::Proved, std::nullopt);
                } else if (ev.outcome == NodeOutcome::Denied) {
                    violation += vol;
                    ++report.leaves.denied;
                    if (ev.witness && report.counterexamples.size() < cfg_.max_counterexamples)
                        report.counterexamples.push_back(*ev.witness);
                    set_verdict(w, VerdictKind::Denied, ev.witness);
                } else if (!at_floor) {
                    expand(w, next);
                } else if (cfg_.mixed_leaf_policy == MixedLeafPolicy::ProportionalBySamples) {
                    auto [sat, tot] = floor_tally(w.box, ev);
                    safe += vol * static_cast<double>(sat) / static_cast<double>(tot);
                    violation += vol * static_cast<double>(tot - sat) / static_cast<double>(tot);
                    ++report.leaves.unknown;
                    set_verdict(w, VerdictKind::Unknown, std::nullopt);
                } else {
                    unknown += vol;
                    ++report.leaves.unknown;
                    set_verdict(w, VerdictKind::Unknown, std::nullopt);
                }
            }
            frontier = std::move(next);
        }

        report.safe_rate = safe / root_volume;
        report.violation_rate = violation / root_volume;
        report.unknown_rate = unknown / root_volume;
        report.tree = tree;
        report.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return report;
    }

private:
    bool splittable_exists(const Box& box) const {
        for (std::size_t d = 0; d < box.size(); ++d)
            if (measured_[d] && box.dims[d].width() >= cfg_.min_width) return true;
        return false;
    }

    void set_verdict(NodeWork& w, VerdictKind kind, const std::optional<std::vector<double>>& witness) {
        if (w.tree_node) w.tree_node->verdict = Verdict{kind, witness};
    }

    void expand(NodeWork& w, std::vector<NodeWork>& next) {
        std::vector<bool> splittable(w.box.size());
        for (std::size_t d = 0; d < w.box.size(); ++d)
            splittable[d] = measured_[d] && w.box.dims[d].width() >= cfg_.min_width;
        Rng rng(splitmix64(cfg_.rng_seed ^ 0x5eedULL) ^ box_hash(w.box));
        const std::size_t dim = choose_split_dim(w.box, cfg_.split_strategy, w.depth, rng, splittable);
        auto children = split_box_along(w.box, dim, cfg_.split_arity);
        if (w.tree_node) {
            w.tree_node->children.resize(children.size());
            for (std::size_t c = 0; c < children.size(); ++c) {
                w.tree_node->children[c].box = children[c];
                w.tree_node->children[c].depth = w.depth + 1;
            }
        }
        for (std::size_t c = 0; c < children.size(); ++c)
            next.push_back({std::move(children[c]), w.depth + 1,
                            w.tree_node ? &w.tree_node->children[c] : nullptr});
    }

    /// Sample tally for a resolution-floor leaf. Backends that already
    /// sampled reuse their tally; the formal backend draws one here.
    std::pair<std::size_t, std::size_t> floor_tally(const Box& box, const NodeEval& ev) const {
        if (ev.total > 0) return {ev.satisfied, ev.total};
        std::size_t sat = 0;
        const auto pts = sample_points(box, cfg_.sampling);
        for (const auto& p : pts)
            if (prop_.assertion.satisfied_by(net_.forward(p))) ++sat;
        return {sat, pts.size()};
    }

    std::vector<NodeEval> evaluate_frontier(const std::vector<NodeWork>& frontier) const {
        std::vector<NodeEval> evals(frontier.size());
        const std::size_t workers = std::max<std::size_t>(1, std::min(cfg_.threads, frontier.size()));
        if (workers == 1) {
            for (std::size_t i = 0; i < frontier.size(); ++i)
                evals[i] = evaluate_node(frontier[i].box);
            return evals;
        }
        std::atomic<std::size_t> cursor{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t t = 0; t < workers; ++t)
            pool.emplace_back([&] {
                for (std::size_t i = cursor.fetch_add(1); i < frontier.size(); i = cursor.fetch_add(1))
                    evals[i] = evaluate_node(frontier[i].box);
            });
        for (auto& th : pool) th.join();
        return evals;
    }

    NodeEval evaluate_node(const Box& box) const {
        if (cfg_.backend == Backend::Formal) return evaluate_formal(box);
        return evaluate_sampling(box, cfg_.backend == Backend::Hybrid);
    }

    NodeEval evaluate_formal(const Box& box) const {
        NodeEval ev;
        ev.propagations = 1;
        const Verdict v = check_dominance(propagate_formal(net_, box), prop_.assertion);
        if (v.kind == VerdictKind::Proved) {
            ev.outcome = NodeOutcome::Proved;
        } else if (v.kind == VerdictKind::Denied) {
            // d <= a on the deciding winners: every point violates, the
            // center serves as a concrete witness.
            ev.outcome = NodeOutcome::Denied;
            ev.witness = box.center();
        }
        return ev;
    }

    NodeEval evaluate_sampling(const Box& box, bool hybrid) const {
        NodeEval ev;
        ev.propagations = 1;
        const auto pts = sample_points(box, cfg_.sampling);
        std::vector<double> lo(net_.output_dim(), std::numeric_limits<double>::infinity());
        std::vector<double> hi(net_.output_dim(), -std::numeric_limits<double>::infinity());
        std::optional<std::vector<double>> violating;
        for (const auto& p : pts) {
            const auto y = net_.forward(p);
            for (std::size_t j = 0; j < y.size(); ++j) {
                lo[j] = std::min(lo[j], y[j]);
                hi[j] = std::max(hi[j], y[j]);
            }
            if (prop_.assertion.satisfied_by(y))
                ++ev.satisfied;
            else if (!violating)
                violating = p;
        }
        ev.total = pts.size();
        OutputBounds bounds;
        bounds.provenance = Provenance::Sampled;
        for (std::size_t j = 0; j < lo.size(); ++j) bounds.outs.push_back(Interval(lo[j], hi[j]));

        if (check_dominance(bounds, prop_.assertion).kind == VerdictKind::Proved) {
            if (!hybrid) {
                ev.outcome = NodeOutcome::Proved;
                return ev;
            }
            // A sampled "proved" only counts as safe once formal bounds
            // confirm it.
            ++ev.propagations;
            if (check_dominance(propagate_formal(net_, box), prop_.assertion).kind == VerdictKind::Proved) {
                ev.outcome = NodeOutcome::Proved;
                return ev;
            }
            ev.outcome = NodeOutcome::Unknown;
            return ev;
        }
        if (ev.satisfied == 0 && violating) {
            ev.outcome = NodeOutcome::Denied;
            ev.witness = violating;
        }
        return ev;
    }

    const Network& net_;
    DecisionProperty prop_;
    VerifierConfig cfg_;
    std::vector<bool> measured_;
};

}  // namespace detail

/// Verify one property by iterative bisection of its input box, producing
/// safe/violation/unknown rates over the box's volume.
inline VerificationReport verify(const Network& net, const DecisionProperty& prop,
                                 const VerifierConfig& cfg) {
    return detail::Engine(net, prop, cfg).run();
}

struct AggregateRates {
    double safe_rate = 0.0;
    double violation_rate = 0.0;
    double unknown_rate = 0.0;
    std::size_t properties = 0;
};

inline AggregateRates aggregate(const std::vector<VerificationReport>& reports) {
    if (reports.empty()) throw std::invalid_argument("aggregate: no reports");
    AggregateRates agg;
    for (const auto& r : reports) {
        agg.safe_rate += r.safe_rate;
        agg.violation_rate += r.violation_rate;
        agg.unknown_rate += r.unknown_rate;
    }
    const auto n = static_cast<double>(reports.size());
    agg.safe_rate /= n;
    agg.violation_rate /= n;
    agg.unknown_rate /= n;
    agg.properties = reports.size();
    return agg;
}

/// Pointwise Monte-Carlo estimate of the satisfying fraction, no bounding.
inline double informal_rate(const Network& net, const DecisionProperty& prop, std::size_t n,
                            std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("informal_rate: n must be at least 1");
    prop.assertion.validate(net.output_dim());
    detail::Rng rng(detail::splitmix64(seed));
    std::size_t sat = 0;
    std::vector<double> x(prop.input_box.size());
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t d = 0; d < x.size(); ++d) x[d] = rng.next_in(prop.input_box.dims[d]);
        if (prop.assertion.satisfied_by(net.forward(x))) ++sat;
    }
    return static_cast<double>(sat) / static_cast<double>(n);
}

}  // namespace sfv
