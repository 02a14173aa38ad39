#pragma once

#include <cstdint>
#include <stdexcept>

#include "fanflow/ingest.hpp"
#include "fanflow/month.hpp"

namespace fanflow {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Monthly fan dynamics for one segment. Active fans move by the categorical
// draw {drop, switch within segment, cross to the other segment, stay};
// inactive fans re-activate into their home segment with prob `recapture`.
struct SegmentParams {
    uint32_t creators = 8;
    uint32_t fans = 200;
    double activity = 0.9;        // probability a fan starts the window active
    double switch_within = 0.10;  // move weights; stay = 1 - (drop+switch+leak)
    double cross_leak = 0.02;
    double drop = 0.20;
    double recapture = 0.30;
    double msg_geom_p = 0.5;      // messages per (channel, month) ~ 1 + Geometric(p)
    double cochat_prob = 0.4;     // chance of also chatting on a neighbor channel
    uint32_t cochat_radius = 2;   // ring distance of eligible co-chat neighbors
};

struct SynthConfig {
    uint64_t seed = 1;
    MonthKey start{2023, 1};
    uint32_t months = 6;
    SegmentParams agency;
    SegmentParams independent;

    void validate() const;
};

struct SynthOutput {
    EventTable events;  // canonical order: (ts, user, channel)
    Roster roster;
};

// Fully deterministic for a given config; every fan draws from its own
// counter-based substream, so generation order cannot leak into the output.
SynthOutput generate(const SynthConfig& config);

}  // namespace fanflow
