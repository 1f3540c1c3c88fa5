#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sfv/interval.hpp"
#include "sfv/network.hpp"

namespace sfv {

enum class DominanceMode { AllOf, AnyOf };

/// Assertion that output `loser` is strictly below every (AllOf) or at least
/// one (AnyOf) output in `winners`, for all inputs in the box under test.
struct DominanceAssertion {
    std::size_t loser = 0;
    std::vector<std::size_t> winners;
    DominanceMode mode = DominanceMode::AllOf;

    void validate(std::size_t output_dim) const {
        if (winners.empty()) throw std::invalid_argument("assertion has an empty winner set");
        for (std::size_t w : winners) {
            if (w == loser)
                throw std::invalid_argument("assertion y_" + std::to_string(loser) + " < y_" +
                                            std::to_string(loser) + " is contradictory");
            if (w >= output_dim)
                throw std::out_of_range("winner index " + std::to_string(w) + " out of range");
        }
        if (loser >= output_dim)
            throw std::out_of_range("loser index " + std::to_string(loser) + " out of range");
    }

    bool satisfied_by(const std::vector<double>& outputs) const {
        if (mode == DominanceMode::AllOf) {
            for (std::size_t w : winners)
                if (!(outputs[loser] < outputs[w])) return false;
            return true;
        }
        for (std::size_t w : winners)
            if (outputs[loser] < outputs[w]) return true;
        return false;
    }
};

struct DecisionProperty {
    std::string name;
    Box input_box;
    DominanceAssertion assertion;
};

enum class VerdictKind { Proved, Denied, Unknown };

struct Verdict {
    VerdictKind kind = VerdictKind::Unknown;
    std::optional<std::vector<double>> witness;  // concrete violating input, Denied only
};

/// Decide a dominance assertion from output bounds alone. Strict comparison
/// throughout: bound contact is Unknown, not Proved. Sampled bounds never
/// yield Denied; denial from sampling goes through a concrete witness.
inline Verdict check_dominance(const OutputBounds& bounds, const DominanceAssertion& a) {
    a.validate(bounds.outs.size());
    const Interval& loser = bounds.outs[a.loser];
    bool all_proved = true, any_proved = false;
    bool all_denied = true, any_denied = false;
    for (std::size_t w : a.winners) {
        const Interval& win = bounds.outs[w];
        const bool proved = loser.hi < win.lo;   // b < c
        const bool denied = win.hi <= loser.lo;  // d <= a, winner never above loser
        all_proved &= proved;
        any_proved |= proved;
        all_denied &= denied;
        any_denied |= denied;
    }
    const bool proved = a.mode == DominanceMode::AllOf ? all_proved : any_proved;
    const bool denied = a.mode == DominanceMode::AllOf ? any_denied : all_denied;
    if (proved) return Verdict{VerdictKind::Proved, std::nullopt};
    if (denied && bounds.provenance == Provenance::Formal) return Verdict{VerdictKind::Denied, std::nullopt};
    return Verdict{VerdictKind::Unknown, std::nullopt};
}

/// Search the subarea's sample set for a concrete input violating the
/// assertion. One such point denies the property on the subarea.
inline std::optional<std::vector<double>> sample_counterexample(const Network& net, const Box& box,
                                                               const DominanceAssertion& a,
                                                               const SamplingConfig& cfg) {
    a.validate(net.output_dim());
    for (const auto& p : sample_points(box, cfg))
        if (!a.satisfied_by(net.forward(p))) return p;
    return std::nullopt;
}

inline DecisionProperty property_from_json(const nlohmann::json& jp) {
    DecisionProperty prop;
    prop.name = jp.at("name").get<std::string>();
    std::vector<Interval> dims;
    for (const auto& jd : jp.at("box")) {
        if (!jd.is_array() || jd.size() != 2)
            throw std::runtime_error("property \"" + prop.name + "\": box entries must be [lo, hi] pairs");
        dims.push_back(Interval(jd[0].get<double>(), jd[1].get<double>()));
    }
    prop.input_box = Box(std::move(dims));
    prop.assertion.loser = jp.at("loser").get<std::size_t>();
    prop.assertion.winners = jp.at("winners").get<std::vector<std::size_t>>();
    const std::string mode = jp.value("mode", "all_of");
    if (mode == "all_of")
        prop.assertion.mode = DominanceMode::AllOf;
    else if (mode == "any_of")
        prop.assertion.mode = DominanceMode::AnyOf;
    else
        throw std::runtime_error("property \"" + prop.name + "\": unknown mode \"" + mode + "\"");
    if (prop.assertion.winners.empty())
        throw std::runtime_error("property \"" + prop.name + "\": empty winner set");
    for (std::size_t w : prop.assertion.winners)
        if (w == prop.assertion.loser)
            throw std::runtime_error("property \"" + prop.name + "\": loser y_" +
                                     std::to_string(prop.assertion.loser) + " cannot be its own winner");
    return prop;
}

/// Property files hold either one property object or an array of them.
inline std::vector<DecisionProperty> parse_properties(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open property file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": JSON parse error: " + e.what());
    }
    std::vector<DecisionProperty> props;
    try {
        if (j.is_array())
            for (const auto& jp : j) props.push_back(property_from_json(jp));
        else
            props.push_back(property_from_json(j));
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    return props;
}

}  // namespace sfv
