#include "msma/network.hpp"

#include "msma/errors.hpp"

#include <algorithm>

namespace msma {

TopologyModel TopologyModel::make(Kind kind) {
    TopologyModel t;
    t.kind = kind;
    switch (kind) {
        case Kind::kNoCorrelation: t.infra_crosstalk_probability = 0.0; break;
        case Kind::kMinorCorrelation: t.infra_crosstalk_probability = 0.1; break;
        case Kind::kMajorCorrelation: t.infra_crosstalk_probability = 0.8; break;
    }
    return t;
}

void TopologyModel::validate() const {
    if (infra_crosstalk_probability < 0.0 || infra_crosstalk_probability > 1.0) {
        throw ValidationError("infra_crosstalk_probability must be in [0, 1]");
    }
}

const char* to_string(TopologyModel::Kind k) {
    switch (k) {
        case TopologyModel::Kind::kNoCorrelation: return "none";
        case TopologyModel::Kind::kMinorCorrelation: return "minor";
        case TopologyModel::Kind::kMajorCorrelation: return "major";
    }
    return "none";
}

std::vector<std::pair<int, int>> crosstalk_plan(int n_infra, const TopologyModel& topology,
                                                RngStream& rng) {
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n_infra; ++i) {
        for (int j = 0; j < n_infra; ++j) {
            if (i == j) continue;
            const double u = rng.uniform();
            if (u < topology.infra_crosstalk_probability) edges.emplace_back(i, j);
        }
    }
    return edges;
}

std::vector<Message> route_tick(std::span<const std::string> infra_ids, const std::string& ego_id,
                                std::span<const std::vector<RemoteTrack>> payloads,
                                const TopologyModel& topology, std::int64_t tick, RngStream& rng) {
    std::vector<Message> out;
    const auto edges = crosstalk_plan(static_cast<int>(infra_ids.size()), topology, rng);
    for (const auto& [i, j] : edges) {
        out.push_back(Message{infra_ids[i], infra_ids[j], tick, payloads[i]});
    }
    for (std::size_t i = 0; i < infra_ids.size(); ++i) {
        out.push_back(Message{infra_ids[i], ego_id, tick, payloads[i]});
    }
    return out;
}

void MessageQueue::send(Message m) {
    pending_.emplace_back(m.tick_sent + latency_, std::move(m));
}

std::vector<Message> MessageQueue::take_delivered(const std::string& receiver, std::int64_t tick) {
    std::vector<Message> out;
    auto it = pending_.begin();
    while (it != pending_.end()) {
        if (it->first <= tick && it->second.receiver_id == receiver) {
            out.push_back(std::move(it->second));
            it = pending_.erase(it);
        } else {
            ++it;
        }
    }
    return out;
}

void ingest_crosstalk(Tracker& tracker, std::span<const Message> messages) {
    for (const Message& m : messages) {
        fuse_at_tracking(tracker, m.payload, m.sender_id, m.tick_sent);
    }
}

}  // namespace msma
