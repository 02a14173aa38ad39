#include "fanflow/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <string>
#include <vector>

namespace fanflow {

namespace {

// SplitMix64 finalizer over a keyed counter. Stable across platforms and
// thread counts; each fan owns an independent substream.
struct SubstreamRng {
    uint64_t key;
    uint64_t counter = 0;

    static uint64_t mix(uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    uint64_t next() { return mix(key + 0x632be59bd9b4e019ULL * ++counter); }
    double u01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    uint32_t below(uint32_t n) { return static_cast<uint32_t>(next() % n); }
};

SubstreamRng fan_stream(uint64_t seed, uint64_t fan_gid) {
    return SubstreamRng{SubstreamRng::mix(seed ^ SubstreamRng::mix(fan_gid + 0x51ed2701ULL))};
}

// 1 + Geometric(p) via Bernoulli trials, capped; integer-only so the draw is
// bit-stable everywhere.
uint32_t draw_messages(SubstreamRng& rng, double p) {
    uint32_t extra = 0;
    while (extra < 64 && rng.u01() >= p) ++extra;
    return 1 + extra;
}

void check_prob(double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0))
        throw ConfigError(std::string("synth: ") + name + " must be in [0,1]");
}

void check_segment(const SegmentParams& s, const char* label) {
    if (s.creators < 1) throw ConfigError(std::string("synth: ") + label + ": creators >= 1");
    check_prob(s.activity, "activity");
    check_prob(s.switch_within, "switch_within");
    check_prob(s.cross_leak, "cross_leak");
    check_prob(s.drop, "drop");
    check_prob(s.recapture, "recapture");
    check_prob(s.cochat_prob, "cochat_prob");
    if (s.drop + s.switch_within + s.cross_leak > 1.0 + 1e-12)
        throw ConfigError(std::string("synth: ") + label +
                          ": drop + switch_within + cross_leak must leave a stay weight >= 0");
    if (!(s.msg_geom_p > 0.0 && s.msg_geom_p <= 1.0))
        throw ConfigError(std::string("synth: ") + label + ": msg_geom_p must be in (0,1]");
    if (s.cochat_radius < 1)
        throw ConfigError(std::string("synth: ") + label + ": cochat_radius >= 1");
    if (s.switch_within > 0.0 && s.creators < 2)
        throw ConfigError(std::string("synth: ") + label + ": switching needs >= 2 creators");
}

struct RawEvent {
    int64_t ts;
    uint32_t user_gid;
    uint32_t channel_gid;
    uint32_t count;
};

std::string channel_token(bool agency, uint32_t idx) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s_%04u", agency ? "agency" : "indie", idx);
    return buf;
}

std::string fan_token(bool agency, uint32_t idx) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "fan_%c_%06u", agency ? 'a' : 'i', idx);
    return buf;
}

}  // namespace

void SynthConfig::validate() const {
    if (months < 1) throw ConfigError("synth: months >= 1");
    check_segment(agency, "agency");
    check_segment(independent, "independent");
}

SynthOutput generate(const SynthConfig& config) {
    config.validate();

    SynthOutput out;
    // Channel gids: agency channels first, then independent.
    const uint32_t n_ag = config.agency.creators;
    const uint32_t n_in = config.independent.creators;
    for (uint32_t c = 0; c < n_ag; ++c)
        out.roster.entries.push_back({channel_token(true, c), Affiliation::Agency, "", ""});
    for (uint32_t c = 0; c < n_in; ++c)
        out.roster.entries.push_back({channel_token(false, c), Affiliation::Independent, "", ""});
    out.roster.rebuild_index();

    auto seg_of = [&](bool agency) -> const SegmentParams& {
        return agency ? config.agency : config.independent;
    };
    auto channel_gid = [&](bool agency, uint32_t idx) { return agency ? idx : n_ag + idx; };

    std::vector<int64_t> month_start(config.months + 1);
    for (uint32_t m = 0; m <= config.months; ++m)
        month_start[m] = month_start_epoch(config.start.plus(m));

    std::vector<RawEvent> events;
    const uint32_t total_fans = config.agency.fans + config.independent.fans;

    for (uint32_t gid = 0; gid < total_fans; ++gid) {
        const bool home_agency = gid < config.agency.fans;
        const SegmentParams& home = seg_of(home_agency);
        SubstreamRng rng = fan_stream(config.seed, gid);

        bool active = rng.u01() < home.activity;
        bool cur_agency = home_agency;
        uint32_t oshi = rng.below(home.creators);

        for (uint32_t m = 0; m < config.months; ++m) {
            if (active) {
                const SegmentParams& seg = seg_of(cur_agency);
                const double x = rng.u01();
                if (x < seg.drop) {
                    active = false;
                } else if (x < seg.drop + seg.switch_within) {
                    uint32_t other = rng.below(seg.creators - 1);
                    oshi = other >= oshi ? other + 1 : other;
                } else if (x < seg.drop + seg.switch_within + seg.cross_leak) {
                    cur_agency = !cur_agency;
                    oshi = rng.below(seg_of(cur_agency).creators);
                }
            } else if (rng.u01() < home.recapture) {
                active = true;
                cur_agency = home_agency;
                oshi = rng.below(home.creators);
            }
            if (!active) continue;

            const SegmentParams& seg = seg_of(cur_agency);
            uint32_t channels[2];
            uint32_t msgs[2];
            uint32_t n_channels = 1;
            channels[0] = oshi;
            msgs[0] = draw_messages(rng, seg.msg_geom_p);
            if (seg.creators > 1 && rng.u01() < seg.cochat_prob) {
                uint32_t radius = std::min(seg.cochat_radius, seg.creators - 1);
                uint32_t offset = 1 + rng.below(radius);
                uint32_t neighbor = rng.below(2) ? (oshi + offset) % seg.creators
                                                 : (oshi + seg.creators - offset) % seg.creators;
                if (neighbor != oshi) {
                    channels[1] = neighbor;
                    msgs[1] = draw_messages(rng, seg.msg_geom_p);
                    n_channels = 2;
                }
            }

            const int64_t start = month_start[m];
            const int64_t span = month_start[m + 1] - start;
            for (uint32_t ci = 0; ci < n_channels; ++ci) {
                const uint32_t total = msgs[ci];
                const int64_t spacing = span / total;  // total <= 65, so >= ~40000
                for (uint32_t k = 0; k < total; ++k) {
                    // One event per message, except the first two messages of
                    // a burst of >= 4 merge into one n=2 event so the count
                    // field sees real use. Slot-spaced timestamps keep every
                    // (user, channel, ts) distinct within the month.
                    uint32_t count = (k == 0 && total >= 4) ? 2 : 1;
                    int64_t jitter =
                        spacing > 1 ? static_cast<int64_t>(rng.next() % static_cast<uint64_t>(spacing)) : 0;
                    int64_t ts = start + spacing * k + jitter;
                    events.push_back({ts, gid, channel_gid(cur_agency, channels[ci]), count});
                    if (count == 2) ++k;
                }
            }
        }
    }

    std::sort(events.begin(), events.end(), [](const RawEvent& a, const RawEvent& b) {
        if (a.ts != b.ts) return a.ts < b.ts;
        if (a.user_gid != b.user_gid) return a.user_gid < b.user_gid;
        return a.channel_gid < b.channel_gid;
    });

    out.events.events.reserve(events.size());
    for (const RawEvent& e : events) {
        const bool agency_fan = e.user_gid < config.agency.fans;
        uint32_t local = agency_fan ? e.user_gid : e.user_gid - config.agency.fans;
        uint32_t u = out.events.users.intern(fan_token(agency_fan, local));
        uint32_t c = out.events.channels.intern(out.roster.entries[e.channel_gid].channel);
        out.events.events.push_back({u, c, e.ts, e.count});
    }
    return out;
}

}  // namespace fanflow
