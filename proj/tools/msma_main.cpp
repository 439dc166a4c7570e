// msma: multi-sensor multi-agent fusion simulator CLI.
//
// Subcommands: simulate, matrix, export-labels, eval.
// Exit codes: 0 success, 2 configuration error, 3 runtime error.

#include "msma/errors.hpp"
#include "msma/harness.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace {

msma::EgoModel ego_from_string(const std::string& s) {
    if (s == "local") return msma::EgoModel::kLocal;
    if (s == "track-fusion") return msma::EgoModel::kFusionAtTracking;
    if (s == "ddf") return msma::EgoModel::kFusionPostTracking;
    throw msma::ValidationError("unknown ego model: " + s);
}

msma::TopologyModel::Kind topology_from_string(const std::string& s) {
    if (s == "none") return msma::TopologyModel::Kind::kNoCorrelation;
    if (s == "minor") return msma::TopologyModel::Kind::kMinorCorrelation;
    if (s == "major") return msma::TopologyModel::Kind::kMajorCorrelation;
    throw msma::ValidationError("unknown topology: " + s);
}

std::vector<std::string> scenario_files_in(const std::string& dir) {
    std::vector<std::string> out;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") {
            out.push_back(entry.path().string());
        }
    }
    std::sort(out.begin(), out.end());
    if (out.empty()) throw msma::ValidationError("no .json scenarios found in " + dir);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-sensor multi-agent fusion simulator"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "run one scenario and write metrics");
    std::string sim_scenario, sim_ego = "local", sim_topology = "none", sim_out;
    std::int64_t sim_seed = -1;
    bool sim_log_frames = false, sim_log_messages = false;
    double sim_crosstalk = -1.0;
    int sim_latency = 0;
    sim->add_option("--scenario", sim_scenario, "scenario JSON file")->required();
    sim->add_option("--ego", sim_ego, "ego model: local|track-fusion|ddf");
    sim->add_option("--topology", sim_topology, "network topology: none|minor|major");
    sim->add_option("--seed", sim_seed, "override the scenario seed");
    sim->add_option("--out", sim_out, "output directory")->required();
    sim->add_flag("--log-frames", sim_log_frames, "write frames.jsonl");
    sim->add_flag("--log-messages", sim_log_messages, "write messages.jsonl");
    sim->add_option("--crosstalk", sim_crosstalk, "override crosstalk probability");
    sim->add_option("--latency", sim_latency, "message latency in ticks");

    // matrix
    auto* matrix = app.add_subcommand("matrix", "run the 3x3 ego-model x topology matrix");
    std::string matrix_dir, matrix_out;
    int matrix_seeds = 1;
    matrix->add_option("--scenarios", matrix_dir, "directory of scenario JSON files")->required();
    matrix->add_option("--seeds", matrix_seeds, "number of paired seeds (1..N)");
    matrix->add_option("--out", matrix_out, "output directory")->required();

    // export-labels
    auto* exp = app.add_subcommand("export-labels", "export depth images and visibility labels");
    std::string exp_scenario, exp_out;
    exp->add_option("--scenario", exp_scenario, "scenario JSON file")->required();
    exp->add_option("--out", exp_out, "output directory")->required();

    // eval
    auto* ev = app.add_subcommand("eval", "re-evaluate a frames.jsonl log");
    std::string ev_frames, ev_config;
    ev->add_option("--frames", ev_frames, "frames.jsonl file")->required();
    ev->add_option("--config", ev_config, "evaluation config JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 2;
    }

    try {
        if (sim->parsed()) {
            msma::RunSpec spec;
            spec.scenario_path = sim_scenario;
            spec.ego_model = ego_from_string(sim_ego);
            spec.topology = topology_from_string(sim_topology);
            if (sim_seed >= 0) spec.seed_override = static_cast<std::uint64_t>(sim_seed);
            spec.out_dir = sim_out;
            spec.log_frames = sim_log_frames;
            spec.log_messages = sim_log_messages;
            if (sim_crosstalk >= 0.0) spec.crosstalk_override = sim_crosstalk;
            spec.latency_ticks = sim_latency;
            const msma::RunResult result = msma::run(spec);
            std::cout << "wrote " << result.written_files.size() << " file(s) to " << sim_out
                      << "\n";
            if (result.metrics.map) {
                std::cout << "mAP " << *result.metrics.map << "\n";
            } else {
                std::cout << "mAP undefined (no in-gate ground truth)\n";
            }
        } else if (matrix->parsed()) {
            const auto scenarios = scenario_files_in(matrix_dir);
            const msma::MatrixResult result =
                msma::run_matrix(scenarios, matrix_seeds, matrix_out);
            std::cout << msma::matrix_to_text(result);
        } else if (exp->parsed()) {
            const msma::ScenarioConfig cfg = msma::load_scenario_file(exp_scenario);
            const auto written = msma::export_labels(cfg, exp_out);
            std::cout << "wrote " << written.size() << " file(s) to " << exp_out << "\n";
        } else if (ev->parsed()) {
            std::ifstream in(ev_config);
            if (!in) throw msma::ParseError("cannot open eval config: " + ev_config);
            nlohmann::json doc;
            try {
                doc = nlohmann::json::parse(in);
            } catch (const nlohmann::json::parse_error& e) {
                throw msma::ParseError(std::string("eval config is not valid JSON: ") + e.what());
            }
            msma::EvalParams eval;
            double tick_rate = 10.0;
            if (doc.contains("range_gate")) eval.range_gate = doc["range_gate"].get<double>();
            if (doc.contains("burn_in")) eval.burn_in = doc["burn_in"].get<double>();
            if (doc.contains("match_distance")) {
                eval.match_distance = doc["match_distance"].get<double>();
            }
            if (doc.contains("tick_rate")) tick_rate = doc["tick_rate"].get<double>();
            const msma::RunMetrics metrics = msma::evaluate_frames(ev_frames, eval, tick_rate);
            std::cout << msma::metrics_to_json(metrics, nullptr, 0);
        }
    } catch (const msma::ParseError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const msma::ValidationError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
