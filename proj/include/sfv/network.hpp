#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace sfv {

enum class Activation { ReLU, Identity };

/// Fully-connected layer: y = act(W x + b). Rows of `weights` index outputs.
struct Layer {
    std::vector<std::vector<double>> weights;
    std::vector<double> bias;
    Activation activation = Activation::ReLU;

    std::size_t out_dim() const { return weights.size(); }
    std::size_t in_dim() const { return weights.empty() ? 0 : weights.front().size(); }
};

/// NNet-style input normalization constants. Kept as metadata: the verified
/// input box lives in the file's normalized coordinates, so forward() does
/// not apply these.
struct InputNormalization {
    std::vector<double> mins;
    std::vector<double> maxes;
    std::vector<double> means;   // last entry normalizes the outputs
    std::vector<double> ranges;  // same layout as means
};

class Network {
public:
    explicit Network(std::vector<Layer> layers,
                     std::optional<InputNormalization> norm = std::nullopt)
        : layers_(std::move(layers)), normalization_(std::move(norm)) {
        validate();
    }

    std::size_t input_dim() const { return layers_.front().in_dim(); }
    std::size_t output_dim() const { return layers_.back().out_dim(); }
    const std::vector<Layer>& layers() const { return layers_; }
    const std::optional<InputNormalization>& normalization() const { return normalization_; }

    std::vector<double> forward(const std::vector<double>& x) const {
        if (x.size() != input_dim())
            throw std::invalid_argument("forward: input has " + std::to_string(x.size()) +
                                        " entries, network expects " + std::to_string(input_dim()));
        std::vector<double> cur = x;
        std::vector<double> next;
        for (const Layer& layer : layers_) {
            next.assign(layer.out_dim(), 0.0);
            for (std::size_t r = 0; r < layer.out_dim(); ++r) {
                double acc = layer.bias[r];
                const auto& row = layer.weights[r];
                for (std::size_t c = 0; c < row.size(); ++c) acc += row[c] * cur[c];
                if (layer.activation == Activation::ReLU && acc < 0.0) acc = 0.0;
                next[r] = acc;
            }
            cur.swap(next);
        }
        return cur;
    }

private:
    void validate() const {
        if (layers_.empty()) throw std::invalid_argument("network has no layers");
        for (std::size_t k = 0; k < layers_.size(); ++k) {
            const Layer& l = layers_[k];
            if (l.weights.empty()) throw std::invalid_argument("layer " + std::to_string(k) + " is empty");
            const std::size_t cols = l.weights.front().size();
            if (cols == 0) throw std::invalid_argument("layer " + std::to_string(k) + " has zero inputs");
            for (const auto& row : l.weights) {
                if (row.size() != cols)
                    throw std::invalid_argument("layer " + std::to_string(k) + " has ragged weight rows");
                for (double w : row)
                    if (!std::isfinite(w))
                        throw std::invalid_argument("layer " + std::to_string(k) + " has non-finite weight");
            }
            if (l.bias.size() != l.weights.size())
                throw std::invalid_argument("layer " + std::to_string(k) + ": bias length " +
                                            std::to_string(l.bias.size()) + " != weight rows " +
                                            std::to_string(l.weights.size()));
            for (double b : l.bias)
                if (!std::isfinite(b))
                    throw std::invalid_argument("layer " + std::to_string(k) + " has non-finite bias");
            if (k > 0 && cols != layers_[k - 1].out_dim())
                throw std::invalid_argument("layer " + std::to_string(k) + " input dim " +
                                            std::to_string(cols) + " != previous output dim " +
                                            std::to_string(layers_[k - 1].out_dim()));
        }
        if (layers_.back().activation != Activation::Identity)
            throw std::invalid_argument("last layer must use linear activation");
    }

    std::vector<Layer> layers_;
    std::optional<InputNormalization> normalization_;
};

enum class NetworkFormat { Json, NNet };

namespace detail {

inline Activation parse_activation(const std::string& s, std::size_t layer_idx) {
    if (s == "relu") return Activation::ReLU;
    if (s == "linear") return Activation::Identity;
    throw std::runtime_error("layer " + std::to_string(layer_idx) + ": unsupported activation \"" + s +
                             "\" (only dense relu/linear layers are supported)");
}

inline std::vector<double> parse_csv_line(const std::string& line) {
    std::vector<double> out;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        // trim
        const auto b = tok.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const auto e = tok.find_last_not_of(" \t\r");
        out.push_back(std::stod(tok.substr(b, e - b + 1)));
    }
    return out;
}

inline std::string next_data_line(std::istream& in, const std::string& path) {
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("//", 0) == 0) continue;
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        return line;
    }
    throw std::runtime_error(path + ": unexpected end of file");
}

}  // namespace detail

inline Network load_network_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open network file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": JSON parse error: " + e.what());
    }
    if (!j.contains("layers") || !j["layers"].is_array() || j["layers"].empty())
        throw std::runtime_error(path + ": missing non-empty \"layers\" array");
    std::vector<Layer> layers;
    std::size_t idx = 0;
    for (const auto& jl : j["layers"]) {
        if (jl.contains("type") && jl["type"].get<std::string>() != "dense")
            throw std::runtime_error(path + ": layer " + std::to_string(idx) +
                                     " has unsupported type \"" + jl["type"].get<std::string>() +
                                     "\" (only dense layers are supported)");
        Layer l;
        l.weights = jl.at("weights").get<std::vector<std::vector<double>>>();
        l.bias = jl.at("bias").get<std::vector<double>>();
        l.activation = detail::parse_activation(jl.at("activation").get<std::string>(), idx);
        layers.push_back(std::move(l));
        ++idx;
    }
    Network net(std::move(layers));
    if (j.contains("input_dim") && j["input_dim"].get<std::size_t>() != net.input_dim())
        throw std::runtime_error(path + ": declared input_dim " +
                                 std::to_string(j["input_dim"].get<std::size_t>()) +
                                 " != first layer input dim " + std::to_string(net.input_dim()));
    return net;
}

inline Network load_network_nnet(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open network file: " + path);
    try {
        auto header = detail::parse_csv_line(detail::next_data_line(in, path));
        if (header.size() < 4) throw std::runtime_error(path + ": malformed NNet header");
        const auto num_layers = static_cast<std::size_t>(header[0]);
        const auto input_size = static_cast<std::size_t>(header[1]);
        const auto output_size = static_cast<std::size_t>(header[2]);
        auto sizes_d = detail::parse_csv_line(detail::next_data_line(in, path));
        if (sizes_d.size() != num_layers + 1)
            throw std::runtime_error(path + ": layer-size line has " + std::to_string(sizes_d.size()) +
                                     " entries, expected " + std::to_string(num_layers + 1));
        std::vector<std::size_t> sizes;
        for (double s : sizes_d) sizes.push_back(static_cast<std::size_t>(s));
        if (sizes.front() != input_size || sizes.back() != output_size)
            throw std::runtime_error(path + ": layer sizes disagree with declared input/output dims");
        detail::next_data_line(in, path);  // symmetric flag, unused
        InputNormalization norm;
        norm.mins = detail::parse_csv_line(detail::next_data_line(in, path));
        norm.maxes = detail::parse_csv_line(detail::next_data_line(in, path));
        norm.means = detail::parse_csv_line(detail::next_data_line(in, path));
        norm.ranges = detail::parse_csv_line(detail::next_data_line(in, path));
        if (norm.mins.size() != input_size || norm.maxes.size() != input_size)
            throw std::runtime_error(path + ": input min/max lines must have one entry per input");

        std::vector<Layer> layers;
        for (std::size_t k = 0; k < num_layers; ++k) {
            Layer l;
            l.activation = (k + 1 == num_layers) ? Activation::Identity : Activation::ReLU;
            const std::size_t rows = sizes[k + 1], cols = sizes[k];
            for (std::size_t r = 0; r < rows; ++r) {
                auto row = detail::parse_csv_line(detail::next_data_line(in, path));
                if (row.size() != cols)
                    throw std::runtime_error(path + ": layer " + std::to_string(k) + " weight row " +
                                             std::to_string(r) + " has " + std::to_string(row.size()) +
                                             " entries, expected " + std::to_string(cols));
                l.weights.push_back(std::move(row));
            }
            for (std::size_t r = 0; r < rows; ++r) {
                auto b = detail::parse_csv_line(detail::next_data_line(in, path));
                if (b.size() != 1)
                    throw std::runtime_error(path + ": layer " + std::to_string(k) +
                                             " bias line must hold one value");
                l.bias.push_back(b.front());
            }
            layers.push_back(std::move(l));
        }
        return Network(std::move(layers), std::move(norm));
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

inline Network load_network(const std::string& path, NetworkFormat format) {
    return format == NetworkFormat::Json ? load_network_json(path) : load_network_nnet(path);
}

inline nlohmann::json network_to_json(const Network& net) {
    nlohmann::json j;
    j["input_dim"] = net.input_dim();
    j["layers"] = nlohmann::json::array();
    for (const Layer& l : net.layers()) {
        nlohmann::json jl;
        jl["weights"] = l.weights;
        jl["bias"] = l.bias;
        jl["activation"] = l.activation == Activation::ReLU ? "relu" : "linear";
        j["layers"].push_back(std::move(jl));
    }
    return j;
}

inline void save_network_json(const Network& net, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write network file: " + path);
    out << network_to_json(net).dump(2) << "\n";
}

inline void save_network_nnet(const Network& net, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write network file: " + path);
    out.precision(17);
    const auto& layers = net.layers();
    std::size_t max_size = net.input_dim();
    for (const Layer& l : layers) max_size = std::max(max_size, l.out_dim());
    out << "// network exported in NNet text format\n";
    out << layers.size() << "," << net.input_dim() << "," << net.output_dim() << "," << max_size << ",\n";
    out << net.input_dim();
    for (const Layer& l : layers) out << "," << l.out_dim();
    out << ",\n0,\n";
    auto write_row = [&out](const std::vector<double>& v) {
        for (std::size_t i = 0; i < v.size(); ++i) out << v[i] << ",";
        out << "\n";
    };
    const auto& norm = net.normalization();
    const std::size_t n_in = net.input_dim();
    write_row(norm ? norm->mins : std::vector<double>(n_in, 0.0));
    write_row(norm ? norm->maxes : std::vector<double>(n_in, 1.0));
    write_row(norm ? norm->means : std::vector<double>(n_in + 1, 0.0));
    write_row(norm ? norm->ranges : std::vector<double>(n_in + 1, 1.0));
    for (const Layer& l : layers) {
        for (const auto& row : l.weights) write_row(row);
        for (double b : l.bias) out << b << ",\n";
    }
}

}  // namespace sfv
