#pragma once

#include "msma/evaluation.hpp"
#include "msma/network.hpp"
#include "msma/scenario.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace msma {

// ============================================================
// Simulation driver, experiment matrix, exports
// ============================================================

struct RunSpec {
    std::string scenario_path;
    EgoModel ego_model = EgoModel::kLocal;
    TopologyModel::Kind topology = TopologyModel::Kind::kNoCorrelation;
    std::optional<std::uint64_t> seed_override;
    std::string out_dir;  // empty: nothing is written
    bool log_frames = false;
    bool log_messages = false;
    std::optional<double> crosstalk_override;  // overrides the topology default
    int latency_ticks = 0;
};

// Line-oriented sinks for the newline-delimited frame and message logs.
using LineSink = std::function<void(const std::string&)>;

// Lockstep simulation: world update, per-agent sensing and tracking, network
// routing (infrastructure crosstalk first, then reports to the ego), ego
// fusion per the selected model, evaluation past burn-in. Outputs are a pure
// function of (config, ego model, topology, latency).
RunMetrics run_in_memory(const ScenarioConfig& cfg, EgoModel ego_model,
                         const TopologyModel& topology, int latency_ticks,
                         const LineSink* frame_sink = nullptr,
                         const LineSink* message_sink = nullptr);

struct RunResult {
    RunMetrics metrics;
    std::uint64_t seed = 0;
    std::vector<std::string> written_files;
};

// Loads the scenario, runs it, and writes metrics.json / metrics.csv plus the
// optional frames.jsonl / messages.jsonl into spec.out_dir.
RunResult run(const RunSpec& spec);

struct MatrixRun {
    std::string scenario;
    std::uint64_t seed = 0;
    double map = 0.0;
};

struct MatrixCell {
    EgoModel ego_model;
    TopologyModel::Kind topology;
    std::vector<MatrixRun> runs;  // scenario-major, then seed
    double map_mean = 0.0;
    double map_stderr = 0.0;
};

struct MatrixResult {
    std::vector<std::string> scenarios;
    int n_seeds = 0;
    std::vector<MatrixCell> cells;  // 3 ego models x 3 topologies

    const MatrixCell& cell(EgoModel ego, TopologyModel::Kind topo) const;
};

// Full 3x3 experiment matrix over the given scenarios with seeds 1..n_seeds.
// Seeds are paired across cells: the sensing streams depend only on
// (seed, agent, tick), so a cell-to-cell mAP delta is attributable to the
// fusion pipeline and topology. Cells run concurrently, capped by the
// MSMA_THREADS environment variable.
MatrixResult run_matrix(const std::vector<std::string>& scenario_paths, int n_seeds,
                        const std::string& out_dir);

// Dataset export: per sensor per tick, a binary depth image ("MSMD" header)
// and a JSON labels file holding the visible objects (occlusion NONE or
// PARTIAL) with boxes in the sensor frame.
std::vector<std::string> export_labels(const ScenarioConfig& cfg, const std::string& out_dir);

// Re-evaluates a frames.jsonl log under the given evaluation parameters.
RunMetrics evaluate_frames(const std::string& frames_path, const EvalParams& eval,
                           double tick_rate);

std::string metrics_to_json(const RunMetrics& metrics, const RunSpec* spec,
                            std::uint64_t seed);
std::string metrics_to_csv(const RunMetrics& metrics);
std::string matrix_to_json(const MatrixResult& m);
std::string matrix_to_text(const MatrixResult& m);

}  // namespace msma
