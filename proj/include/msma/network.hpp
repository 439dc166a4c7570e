#pragma once

#include "msma/fusion.hpp"
#include "msma/rng.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace msma {

// ============================================================
// Correlated sensor-network message passing
// ============================================================

// The three network topologies: infrastructure agents always report to the
// ego; with probability infra_crosstalk_probability per ordered pair per
// tick, they also share with each other, which is what injects platform
// correlations into the data the ego later receives.
struct TopologyModel {
    enum class Kind { kNoCorrelation, kMinorCorrelation, kMajorCorrelation };

    Kind kind = Kind::kNoCorrelation;
    double infra_crosstalk_probability = 0.0;

    static TopologyModel make(Kind kind);
    void validate() const;
};

const char* to_string(TopologyModel::Kind k);

struct Message {
    std::string sender_id;
    std::string receiver_id;
    std::int64_t tick_sent = 0;
    std::vector<RemoteTrack> payload;  // confirmed tracks only
};

// Directed crosstalk edges drawn for one tick: for each ordered
// infrastructure pair (i, j), i sends to j with the topology's probability.
// Draw order is fixed (sender-major over the given agent order), so the
// number of uniforms consumed per tick is independent of the outcomes.
std::vector<std::pair<int, int>> crosstalk_plan(int n_infra, const TopologyModel& topology,
                                                RngStream& rng);

// One tick of routing with immediate delivery: always one message from every
// infrastructure agent to the ego, plus the drawn crosstalk edges. Payloads
// are taken from `payloads` (aligned with infra_ids). Messages are returned
// in delivery order: crosstalk first, then the ego-bound reports.
std::vector<Message> route_tick(std::span<const std::string> infra_ids, const std::string& ego_id,
                                std::span<const std::vector<RemoteTrack>> payloads,
                                const TopologyModel& topology, std::int64_t tick, RngStream& rng);

// Delay queue for nonzero-latency configurations; with latency 0 a message
// sent at tick t is deliverable at tick t.
class MessageQueue {
public:
    explicit MessageQueue(int latency_ticks = 0) : latency_(latency_ticks) {}

    void send(Message m);
    std::vector<Message> take_delivered(const std::string& receiver, std::int64_t tick);

private:
    int latency_;
    std::vector<std::pair<std::int64_t, Message>> pending_;  // (deliver_at, message)
};

// Infrastructure-side crosstalk absorption: payloads are pushed through the
// naive detection-level path, which is precisely what makes the absorbed
// information correlated with what this agent later transmits.
void ingest_crosstalk(Tracker& tracker, std::span<const Message> messages);

}  // namespace msma
