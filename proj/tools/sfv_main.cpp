#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sfv/interval.hpp"
#include "sfv/network.hpp"
#include "sfv/oracle.hpp"
#include "sfv/property.hpp"
#include "sfv/verifier.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
    std::string network_path;
    std::string format = "json";
    std::vector<std::string> prop_paths;
    std::string backend = "formal";
    std::size_t samples = 20;
    std::size_t max_depth = 12;
    double min_width = 1e-6;
    std::string split = "random";
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::size_t threads = 1;
    std::string out_dir = ".";
    std::string report_format = "json";
    std::string leaf_policy;  // empty = backend default
};

sfv::Backend parse_backend(const std::string& s) {
    if (s == "formal") return sfv::Backend::Formal;
    if (s == "sampled") return sfv::Backend::Sampled;
    if (s == "hybrid") return sfv::Backend::Hybrid;
    throw std::runtime_error("unknown backend: " + s);
}

sfv::SplitStrategy parse_split(const std::string& s) {
    if (s == "random") return sfv::SplitStrategy::Random;
    if (s == "widest") return sfv::SplitStrategy::WidestDim;
    if (s == "roundrobin") return sfv::SplitStrategy::RoundRobin;
    throw std::runtime_error("unknown split strategy: " + s);
}

sfv::VerifierConfig make_config(const Options& opt) {
    auto cfg = sfv::VerifierConfig::defaults_for(parse_backend(opt.backend));
    cfg.sampling.n = opt.samples;
    cfg.sampling.seed = opt.seed;
    cfg.sampling.include_vertices = true;
    cfg.max_depth = opt.max_depth;
    cfg.min_width = opt.min_width;
    cfg.split_strategy = parse_split(opt.split);
    cfg.rng_seed = opt.seed;
    cfg.threads = opt.threads;
    if (opt.leaf_policy == "unknown")
        cfg.mixed_leaf_policy = sfv::MixedLeafPolicy::Unknown;
    else if (opt.leaf_policy == "proportional")
        cfg.mixed_leaf_policy = sfv::MixedLeafPolicy::ProportionalBySamples;
    else if (!opt.leaf_policy.empty())
        throw std::runtime_error("unknown leaf policy: " + opt.leaf_policy);
    return cfg;
}

sfv::Network load_net(const Options& opt) {
    if (opt.format != "json" && opt.format != "nnet")
        throw std::runtime_error("unknown network format: " + opt.format);
    return sfv::load_network(opt.network_path,
                             opt.format == "json" ? sfv::NetworkFormat::Json : sfv::NetworkFormat::NNet);
}

std::vector<sfv::DecisionProperty> load_props(const Options& opt) {
    std::vector<sfv::DecisionProperty> props;
    for (const auto& p : opt.prop_paths) {
        auto batch = sfv::parse_properties(p);
        props.insert(props.end(), batch.begin(), batch.end());
    }
    if (props.empty()) throw std::runtime_error("no properties loaded; pass --props");
    return props;
}

sfv::Box parse_box(const std::string& s) {
    std::vector<sfv::Interval> dims;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        const auto colon = tok.find(':');
        if (colon == std::string::npos)
            throw std::runtime_error("box dimension \"" + tok + "\" is not lo:hi");
        dims.push_back(sfv::Interval(std::stod(tok.substr(0, colon)), std::stod(tok.substr(colon + 1))));
    }
    return sfv::Box(std::move(dims));
}

void apply_manifest(Options& opt, const std::string& path, const CLI::App* cmd) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open manifest: " + path);
    json j;
    in >> j;
    auto cli_set = [cmd](const std::string& flag) {
        auto* o = cmd->get_option_no_throw(flag);
        return o != nullptr && o->count() > 0;
    };
    // precedence: CLI flags > manifest > defaults
    if (j.contains("network") && !cli_set("--network")) opt.network_path = j["network"];
    if (j.contains("format") && !cli_set("--format")) opt.format = j["format"];
    if (j.contains("props") && !cli_set("--props"))
        opt.prop_paths = j["props"].get<std::vector<std::string>>();
    if (j.contains("out") && !cli_set("--out")) opt.out_dir = j["out"];
    if (j.contains("report") && !cli_set("--report")) opt.report_format = j["report"];
    if (j.contains("config")) {
        const json& c = j["config"];
        if (c.contains("backend") && !cli_set("--backend")) opt.backend = c["backend"];
        if (c.contains("samples") && !cli_set("--samples")) opt.samples = c["samples"];
        if (c.contains("max_depth") && !cli_set("--max-depth")) opt.max_depth = c["max_depth"];
        if (c.contains("min_width") && !cli_set("--min-width")) opt.min_width = c["min_width"];
        if (c.contains("split") && !cli_set("--split")) opt.split = c["split"];
        if (c.contains("seed") && !cli_set("--seed")) {
            opt.seed = c["seed"];
            opt.seed_set = true;
        }
        if (c.contains("threads") && !cli_set("--threads")) opt.threads = c["threads"];
        if (c.contains("leaf_policy") && !cli_set("--leaf-policy")) opt.leaf_policy = c["leaf_policy"];
    }
}

void finish_seed(Options& opt, const CLI::App* cmd) {
    auto* o = cmd->get_option_no_throw("--seed");
    if ((o == nullptr || o->count() == 0) && !opt.seed_set) {
        if (const char* env = std::getenv("SFV_SEED")) opt.seed = std::strtoull(env, nullptr, 10);
    }
}

void add_common(CLI::App* cmd, Options& opt, std::string& manifest) {
    cmd->add_option("--manifest", manifest, "run manifest JSON");
    cmd->add_option("--network", opt.network_path, "network file");
    cmd->add_option("--format", opt.format, "network format: json|nnet");
    cmd->add_option("--props", opt.prop_paths, "property file(s)");
    cmd->add_option("--backend", opt.backend, "bound backend: formal|sampled|hybrid");
    cmd->add_option("--samples", opt.samples, "samples per subarea");
    cmd->add_option("--max-depth", opt.max_depth, "bisection depth limit");
    cmd->add_option("--min-width", opt.min_width, "per-dimension width floor");
    cmd->add_option("--split", opt.split, "split strategy: random|widest|roundrobin");
    cmd->add_option("--seed", opt.seed, "RNG seed (SFV_SEED env as fallback)");
    cmd->add_option("--threads", opt.threads, "worker thread cap");
    cmd->add_option("--out", opt.out_dir, "output directory");
    cmd->add_option("--report", opt.report_format, "report format: json|csv");
    cmd->add_option("--leaf-policy", opt.leaf_policy, "resolution-floor policy: unknown|proportional");
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

int cmd_verify(const Options& opt) {
    const auto net = load_net(opt);
    const auto props = load_props(opt);
    const auto cfg = make_config(opt);
    fs::create_directories(opt.out_dir);

    std::vector<sfv::VerificationReport> reports;
    for (const auto& prop : props) {
        auto rep = sfv::verify(net, prop, cfg);
        write_text(fs::path(opt.out_dir) / (prop.name + ".report.json"), rep.to_json().dump(2) + "\n");
        std::cout << prop.name << ": safe=" << rep.safe_rate << " violation=" << rep.violation_rate
                  << " unknown=" << rep.unknown_rate << " (leaves p/d/u " << rep.leaves.proved << "/"
                  << rep.leaves.denied << "/" << rep.leaves.unknown << ", " << rep.wall_time_s << "s)\n";
        reports.push_back(std::move(rep));
    }
    const auto agg = sfv::aggregate(reports);
    json jagg;
    jagg["safe_rate"] = agg.safe_rate;
    jagg["violation_rate"] = agg.violation_rate;
    jagg["unknown_rate"] = agg.unknown_rate;
    jagg["properties"] = agg.properties;
    jagg["config"] = cfg.to_json();
    write_text(fs::path(opt.out_dir) / "aggregate.json", jagg.dump(2) + "\n");

    std::ostringstream csv;
    csv << sfv::VerificationReport::csv_header() << "\n";
    for (const auto& r : reports) csv << r.csv_row() << "\n";
    csv.precision(12);
    csv << "AGGREGATE," << agg.safe_rate << "," << agg.violation_rate << "," << agg.unknown_rate
        << ",,,,,,\n";
    write_text(fs::path(opt.out_dir) / "aggregate.csv", csv.str());

    std::cout << "aggregate: safe=" << agg.safe_rate << " violation=" << agg.violation_rate
              << " unknown=" << agg.unknown_rate << "\n";

    bool any_violation = false, any_unknown = false;
    for (const auto& r : reports) {
        any_violation |= r.violation_rate > 0.0;
        any_unknown |= r.unknown_rate > 0.0;
    }
    if (any_violation) return 1;
    if (any_unknown) return 2;
    return 0;
}

int cmd_bounds(const Options& opt, const std::string& box_spec) {
    const auto net = load_net(opt);
    const auto box = parse_box(box_spec);
    const auto cfg = make_config(opt);
    sfv::OutputBounds b;
    if (cfg.backend == sfv::Backend::Formal)
        b = sfv::propagate_formal(net, box);
    else
        b = sfv::propagate_sampled(net, box, cfg.sampling);
    std::cout.precision(12);
    for (std::size_t j = 0; j < b.outs.size(); ++j)
        std::cout << "y" << j << ": [" << b.outs[j].lo << ", " << b.outs[j].hi << "]\n";
    return 0;
}

struct BenchRow {
    std::string backend, property;
    std::string rep;
    double rate = 0.0, unknown = 0.0, width = std::nan("");
    std::size_t samples = 0, propagations = 0;
    double wall_time_s = 0.0;
};

void append_csv(std::ostringstream& csv, const BenchRow& r) {
    csv << r.backend << "," << r.property << "," << r.rep << "," << r.rate << "," << r.unknown << ",";
    if (std::isnan(r.width))
        csv << "";
    else
        csv << r.width;
    csv << "," << r.samples << "," << r.propagations << "," << r.wall_time_s << "\n";
}

int cmd_bench(const Options& opt, const std::vector<std::string>& backends, std::size_t reps,
              std::size_t informal_samples) {
    const auto net = load_net(opt);
    const auto props = load_props(opt);
    fs::create_directories(opt.out_dir);

    std::ostringstream csv;
    csv.precision(12);
    csv << "backend,property,rep,rate,unknown,bound_width_max,samples,propagations,wall_time_s\n";

    for (const auto& backend : backends) {
        for (const auto& prop : props) {
            std::vector<BenchRow> rows;
            for (std::size_t rep = 0; rep < reps; ++rep) {
                BenchRow row;
                row.backend = backend;
                row.property = prop.name;
                row.rep = std::to_string(rep);
                if (backend == "informal") {
                    const auto t0 = std::chrono::steady_clock::now();
                    row.rate = sfv::informal_rate(net, prop, informal_samples, opt.seed + rep);
                    row.wall_time_s =
                        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                    row.samples = informal_samples;
                } else {
                    Options o = opt;
                    o.backend = backend;
                    auto cfg = make_config(o);
                    cfg.rng_seed = opt.seed + rep;
                    cfg.sampling.seed = opt.seed + rep;
                    const auto r = sfv::verify(net, prop, cfg);
                    row.rate = r.safe_rate;
                    row.unknown = r.unknown_rate;
                    row.propagations = r.propagations;
                    row.samples = cfg.sampling.n;
                    row.wall_time_s = r.wall_time_s;
                    const auto root = cfg.backend == sfv::Backend::Formal
                                          ? sfv::propagate_formal(net, prop.input_box)
                                          : sfv::propagate_sampled(net, prop.input_box, cfg.sampling);
                    double w = 0.0;
                    for (std::size_t j = 0; j < root.outs.size(); ++j)
                        w = std::max(w, sfv::bound_width(root, j));
                    row.width = w;
                }
                append_csv(csv, row);
                rows.push_back(std::move(row));
            }
            if (reps > 1) {
                auto stat = [&rows](auto get) {
                    double mean = 0.0;
                    for (const auto& r : rows) mean += get(r);
                    mean /= static_cast<double>(rows.size());
                    double var = 0.0;
                    for (const auto& r : rows) var += (get(r) - mean) * (get(r) - mean);
                    var /= static_cast<double>(rows.size() - 1);
                    return std::pair{mean, std::sqrt(var)};
                };
                const auto [rm, rs] = stat([](const BenchRow& r) { return r.rate; });
                const auto [tm, ts] = stat([](const BenchRow& r) { return r.wall_time_s; });
                BenchRow mean = rows.front();
                mean.rep = "mean";
                mean.rate = rm;
                mean.wall_time_s = tm;
                append_csv(csv, mean);
                BenchRow sd = rows.front();
                sd.rep = "stddev";
                sd.rate = rs;
                sd.unknown = 0.0;
                sd.width = std::nan("");
                sd.wall_time_s = ts;
                append_csv(csv, sd);
            }
        }
    }
    write_text(fs::path(opt.out_dir) / "bench.csv", csv.str());
    std::cout << csv.str();
    return 0;
}

int cmd_oracle(const Options& opt, std::size_t points) {
    const auto net = load_net(opt);
    const auto props = load_props(opt);
    std::cout.precision(12);
    for (const auto& prop : props) {
        sfv::GridSpec g(points, prop.input_box);
        std::cout << prop.name << ": grid_rate=" << sfv::grid_rate(net, prop, g) << "\n";
        const auto b = sfv::grid_bounds(net, g);
        for (std::size_t j = 0; j < b.outs.size(); ++j)
            std::cout << "  y" << j << ": [" << b.outs[j].lo << ", " << b.outs[j].hi << "]\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sfv: safety-rate verification of feed-forward ReLU decision policies"};
    app.require_subcommand(1);

    Options opt;
    std::string manifest, box_spec;
    std::vector<std::string> backends{"formal", "sampled"};
    std::size_t reps = 1, informal_samples = 100000, grid_points = 101;

    auto* verify_cmd = app.add_subcommand("verify", "verify properties and emit rate reports");
    add_common(verify_cmd, opt, manifest);

    auto* bench_cmd = app.add_subcommand("bench", "compare backends: rates, widths, wall time");
    add_common(bench_cmd, opt, manifest);
    bench_cmd->add_option("--backends", backends, "backends to compare (formal|sampled|hybrid|informal)");
    bench_cmd->add_option("--reps", reps, "repetitions per backend");
    bench_cmd->add_option("--informal-samples", informal_samples, "sample count for the informal baseline");

    auto* bounds_cmd = app.add_subcommand("bounds", "print output bounds for a box");
    add_common(bounds_cmd, opt, manifest);
    bounds_cmd->add_option("--box", box_spec, "input box as lo:hi,lo:hi,...")->required();

    auto* oracle_cmd = app.add_subcommand("oracle", "brute-force grid rates and bounds");
    add_common(oracle_cmd, opt, manifest);
    oracle_cmd->add_option("--points", grid_points, "grid points per dimension");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 64;
    }

    CLI::App* cmd = app.get_subcommands().front();
    try {
        if (!manifest.empty()) apply_manifest(opt, manifest, cmd);
        finish_seed(opt, cmd);
        if (opt.network_path.empty()) throw std::runtime_error("no network given; pass --network");
        if (cmd == verify_cmd) return cmd_verify(opt);
        if (cmd == bench_cmd) return cmd_bench(opt, backends, reps, informal_samples);
        if (cmd == bounds_cmd) return cmd_bounds(opt, box_spec);
        if (cmd == oracle_cmd) return cmd_oracle(opt, grid_points);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
