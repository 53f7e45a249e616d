#include "charl/cli.hpp"

#include "charl/classifier.hpp"
#include "charl/discovery.hpp"
#include "charl/parallel.hpp"
#include "charl/pipeline.hpp"
#include "charl/rules.hpp"
#include "charl/synth.hpp"
#include "charl/trace.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <unistd.h>

#include <CLI11.hpp>

namespace charl::cli {

namespace fs = std::filesystem;

namespace {

/// Bad or missing inputs detected before any work starts.
class UsageError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string config;
    std::string data;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::size_t threads = 0;
    bool verbose = false;
    std::string graphs;
    std::string rulebase;
    std::string predictions;
    std::string grid;
    std::string model;
    std::size_t length = 10000;
};

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

nlohmann::json read_json(const fs::path& path) {
    try {
        return nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

void require_file(const std::string& path, const char* flag) {
    if (path.empty()) throw UsageError(std::string(flag) + " is required");
    if (!fs::is_regular_file(path)) throw UsageError(std::string(flag) + ": no such file: " + path);
}

void require_dir(const std::string& path, const char* flag) {
    if (path.empty()) throw UsageError(std::string(flag) + " is required");
    if (!fs::is_directory(path)) throw UsageError(std::string(flag) + ": no such directory: " + path);
}

fs::path output_dir(const Options& o) {
    if (o.out.empty()) throw UsageError("--out is required");
    fs::create_directories(o.out);
    return o.out;
}

PipelineConfig load_config(const Options& o) {
    PipelineConfig c;
    if (!o.config.empty()) {
        require_file(o.config, "--config");
        try {
            c = config_from_json(read_json(o.config));
        } catch (const DataError& e) {
            throw ConfigError(e.what());
        }
    }
    if (o.seed) c.seed = *o.seed;
    c.validate();
    return c;
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

std::vector<CategoricalTrace> load_data(const Options& o, const PipelineConfig& c) {
    require_dir(o.data, "--data");
    return load_trace_dir(o.data, c.num_categories);
}

LabeledDataset train_part(const std::vector<CategoricalTrace>& traces, const PipelineConfig& c) {
    const auto split = chrono_split(traces, c.train_fraction, c.segment_length);
    return build_dataset(split.train, c.segment_length, c.hop);
}

void log(const Options& o, std::ostream& err, const std::string& msg) {
    if (o.verbose) err << msg << '\n';
}

nlohmann::json graphs_json(const std::vector<ClassGraph>& graphs) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& g : graphs) arr.push_back(to_json(g));
    return arr;
}

void write_rulebase(const fs::path& dir, const RuleBase& rb) {
    write_atomic(dir / "rulebase.json", dump(to_json(rb)));
    std::ostringstream listing;
    write_rule_listing(listing, rb);
    write_atomic(dir / "rules.txt", listing.str());
}

void write_report(const fs::path& dir, const EvaluationReport& report) {
    write_atomic(dir / "report.json", dump(to_json(report)));
    write_atomic(dir / "confusion.txt", confusion_table(report));
}

int cmd_synth(const Options& o, std::ostream& out, std::ostream& err) {
    PlantedModel model = default_planted_model();
    if (!o.model.empty()) {
        require_file(o.model, "--model");
        model = planted_model_from_json(read_json(o.model));
    }
    model.validate();
    const auto dir = output_dir(o);
    const std::uint64_t seed = o.seed.value_or(0);
    const auto traces = synthesize(model, o.length, seed);
    for (const auto& t : traces) {
        std::ostringstream csv;
        write_trace(t, csv);
        write_atomic(dir / (activity_of(t) + ".csv"), csv.str());
    }
    write_atomic(dir / "model.json", dump(to_json(model)));
    log(o, err, "wrote " + std::to_string(traces.size()) + " traces");
    out << traces.size() << " traces written to " << dir.string() << '\n';
    return ok;
}

int cmd_discover(const Options& o, std::ostream& out, std::ostream& err) {
    const auto config = load_config(o);
    const auto traces = load_data(o, config);
    const auto dir = output_dir(o);
    const auto train = train_part(traces, config);
    log(o, err, "discovering over " + std::to_string(train.segments.size()) + " training segments");
    const auto graphs = discover_graphs(train, config);
    std::vector<ClassGraph> kept, filtered;
    for (const auto& g : graphs) {
        kept.push_back(prune(g, config.prune_threshold));
        filtered.push_back(prune(g, config.filter_threshold));
    }
    write_atomic(dir / "graphs.json", dump(graphs_json(kept)));
    write_atomic(dir / "graphs_filtered.json", dump(graphs_json(filtered)));
    for (const auto& g : kept) out << g.activity << ": " << g.links.size() << " links\n";
    return ok;
}

int cmd_extract(const Options& o, std::ostream& out, std::ostream&) {
    const auto config = load_config(o);
    require_file(o.graphs, "--graphs");
    const auto traces = load_data(o, config);
    const auto dir = output_dir(o);
    std::vector<ClassGraph> graphs;
    for (const auto& g : read_json(o.graphs)) graphs.push_back(prune(class_graph_from_json(g), config.prune_threshold));
    const auto rb = fit_rulebase(train_part(traces, config), graphs, config);
    write_rulebase(dir, rb);
    out << rb.total_rules() << " rules across " << rb.activities.size() << " activities\n";
    return ok;
}

int cmd_classify(const Options& o, std::ostream& out, std::ostream&) {
    const auto config = load_config(o);
    require_file(o.rulebase, "--rulebase");
    const auto traces = load_data(o, config);
    const auto dir = output_dir(o);
    const auto rb = rulebase_from_json(read_json(o.rulebase));
    const auto data = build_dataset(traces, config.segment_length, config.classifier_stride);
    auto predictions = classify(rb, data, config.scoring());
    if (config.vote_window > 1) predictions = majority_vote(predictions, config.vote_window);
    write_atomic(dir / "predictions.json", dump(to_json(predictions)));
    out << predictions.size() << " segments classified\n";
    return ok;
}

int cmd_evaluate(const Options& o, std::ostream& out, std::ostream&) {
    require_file(o.predictions, "--predictions");
    if (!o.rulebase.empty()) require_file(o.rulebase, "--rulebase");
    const auto dir = output_dir(o);
    const auto predictions = predictions_from_json(read_json(o.predictions));
    std::vector<std::string> activities;
    if (!o.rulebase.empty()) activities = rulebase_from_json(read_json(o.rulebase)).activities;
    const auto add = [&](const std::string& a) {
        if (std::find(activities.begin(), activities.end(), a) == activities.end()) activities.push_back(a);
    };
    for (const auto& p : predictions) add(p.label);
    for (const auto& p : predictions) add(p.predicted);
    const auto report = tally(activities, predictions);
    write_report(dir, report);
    out << confusion_table(report);
    return ok;
}

int cmd_search(const Options& o, std::ostream& out, std::ostream& err) {
    const auto config = load_config(o);
    std::vector<PipelineConfig> grid;
    if (!o.grid.empty()) {
        require_file(o.grid, "--grid");
        try {
            grid = expand_grid(config, read_json(o.grid));
        } catch (const DataError& e) {
            throw ConfigError(e.what());
        }
    } else {
        grid = default_grid(config);
    }
    const auto traces = load_data(o, config);
    const auto dir = output_dir(o);
    log(o, err, "searching " + std::to_string(grid.size()) + " configurations");
    GraphCache cache;
    const auto result = search(traces, grid, &cache);
    log(o, err, "discovery ran " + std::to_string(cache.discovery_calls()) + " times");
    write_atomic(dir / "search.json", dump(to_json(result)));
    write_rulebase(dir, result.best.rulebase);
    write_report(dir, result.best.report);
    out << "best accuracy " << result.best.report.accuracy << " (configuration " << result.best_index << " of "
        << grid.size() << ")\n";
    return ok;
}

int cmd_run(const Options& o, std::ostream& out, std::ostream& err) {
    const auto config = load_config(o);
    const auto traces = load_data(o, config);
    const auto dir = output_dir(o);
    PipelineHooks hooks;
    if (o.verbose) hooks.on_stage = [&](std::string_view stage) { err << "stage " << stage << '\n'; };
    const auto result = run_pipeline(traces, config, nullptr, hooks);
    write_atomic(dir / "graphs.json", dump(graphs_json(result.graphs)));
    write_atomic(dir / "graphs_filtered.json", dump(graphs_json(result.filtered_graphs)));
    write_rulebase(dir, result.rulebase);
    write_atomic(dir / "predictions.json", dump(to_json(result.predictions)));
    write_report(dir, result.report);
    out << confusion_table(result.report);
    return ok;
}

}  // namespace

void write_atomic(const fs::path& path, const std::string& contents) {
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw DataError("cannot write " + tmp.string());
        f << contents;
        f.flush();
        if (!f) {
            f.close();
            fs::remove(tmp);
            throw DataError("cannot write " + tmp.string());
        }
    }
    fs::rename(tmp, path);
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Causal temporal-logic activity classifier over categorical latent traces", "charl"};
    app.require_subcommand(1, 1);
    Options o;

    std::uint64_t seed = 0;
    auto* seed_opt = app.add_option("--seed", seed, "Random seed (overrides the config)");
    app.add_option("--config", o.config, "Pipeline config JSON");
    app.add_option("--data", o.data, "Directory of latent-trace CSV files");
    app.add_option("--out", o.out, "Output directory");
    app.add_option("--threads", o.threads, "Worker threads (default: CHARL_THREADS or all cores)");
    app.add_flag("--verbose,-v", o.verbose, "Progress on stderr");
    app.fallthrough();

    auto* synth = app.add_subcommand("synth", "Generate planted synthetic traces");
    synth->add_option("--model", o.model, "Planted model JSON (default: built-in four-activity model)");
    synth->add_option("--length", o.length, "Steps per activity")->check(CLI::PositiveNumber);
    auto* discover = app.add_subcommand("discover", "Discover class graphs on the training split");
    auto* extract = app.add_subcommand("extract", "Class graphs to rule base");
    extract->add_option("--graphs", o.graphs, "graphs.json from discover");
    auto* classify_cmd = app.add_subcommand("classify", "Classify segments with a rule base");
    classify_cmd->add_option("--rulebase", o.rulebase, "rulebase.json");
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Score predictions against their labels");
    evaluate_cmd->add_option("--predictions", o.predictions, "predictions.json from classify");
    evaluate_cmd->add_option("--rulebase", o.rulebase, "Optional rule base fixing the activity order");
    auto* search_cmd = app.add_subcommand("search", "Grid search over pipeline configurations");
    search_cmd->add_option("--grid", o.grid, "JSON object of field -> list of values");
    auto* run = app.add_subcommand("run", "Split, discover, extract and evaluate");

    std::vector<std::string> argv_store{"charl"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : argv_store) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return usage_error;
    }
    if (*seed_opt) o.seed = seed;
    if (o.threads > 0) set_thread_count(o.threads);

    try {
        if (*synth) return cmd_synth(o, out, err);
        if (*discover) return cmd_discover(o, out, err);
        if (*extract) return cmd_extract(o, out, err);
        if (*classify_cmd) return cmd_classify(o, out, err);
        if (*evaluate_cmd) return cmd_evaluate(o, out, err);
        if (*search_cmd) return cmd_search(o, out, err);
        if (*run) return cmd_run(o, out, err);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return usage_error;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return usage_error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return data_error;
    }
    return usage_error;
}

}  // namespace charl::cli
