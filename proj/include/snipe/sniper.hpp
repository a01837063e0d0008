#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "snipe/machine.hpp"

namespace snipe {

struct SniperError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// How the attacker evicts the victim's line once the moment arrives:
// FLUSH flushes the target line directly (shared-memory setting), ACCESS
// reloads the anchor line of the staged eviction set (no sharing needed).
enum class ShootMethod : uint8_t { FLUSH, ACCESS };

struct EvictionSet {
    uint64_t target_addr = 0;
    std::vector<uint64_t> addrs;  // one per L3 way; [0] is the anchor A
};

// L3-set-congruent addresses with tags distinct from the target's.
EvictionSet build_eviction_set(const CacheGeometry& geo, uint64_t target_addr,
                               uint64_t tag_base = 0x9000);

// An order over `lines` in which every access misses the private caches of
// `core` (so each is served by L3), assuming the accesses are issued
// back-to-back. Throws SniperError("NO_ORDER_FOUND") if none exists.
std::vector<uint64_t> plru_aware_order(const CacheHierarchy& h, uint32_t core,
                                       const std::vector<uint64_t>& lines);

// Median detection-to-target distance turned into a wait time. The distance
// must leave room for the shot to land: below `floor` the ACCESS method
// cannot make it (throws SniperError("WINDOW_TOO_EARLY")).
Cycles stakeout_wait(std::vector<Cycles> detection_to_target, ShootMethod method,
                     Cycles shoot_latency, Cycles floor = 250);

// Multiplicative-decrease / additive-increase controller on the wait time,
// driven by the observed probe miss rate.
Cycles adapt_wait_time(Cycles wait, double miss_rate, double target_rate = 0.07,
                       Cycles wait_min = 0, Cycles wait_max = 1000000);

struct Observation {
    Cycles armed_at = 0;         // staging complete, transaction spinning
    Cycles abort_at = kNever;    // abort delivery time
    AbortReason reason = AbortReason::SPONTANEOUS;
    Cycles shot_at = kNever;     // when the eviction became effective
    Cycles wait_used = 0;
    bool probed = false;
    bool accessed = false;       // probe missed: the victim reloaded its line
    bool staging_broken = false;
};

struct SniperConfig {
    EvictionSet evset;                       // detection set, armed in the tx
    std::optional<EvictionSet> shot_evset;   // shot/probe set; defaults to evset
    ShootMethod method = ShootMethod::ACCESS;
    bool hold_fire = false;            // stakeout mode: observe aborts, never shoot
    bool shoot_on_spontaneous = false; // treat any abort as a detection
    Cycles wait_time = 0;          // abort delivery -> shot issue
    Cycles recovery_delay = 400;   // shot -> probe
    Cycles rearm_holdoff = 0;      // probe -> next staging
    uint64_t max_observations = UINT64_MAX;
    bool adaptive_wait = false;
    double target_miss_rate = 0.07;
    Cycles wait_min = 0;
    Cycles wait_max = 100000;
    uint32_t adapt_window = 50;    // probes per controller update
    int stage_retries = 6;
};

class AttackerProcess : public Process {
public:
    explicit AttackerProcess(const SniperConfig& cfg, uint32_t core = 1);

    void step(Machine& m) override;

    const std::vector<Observation>& observations() const { return obs_; }
    Cycles wait_time() const { return wait_; }
    uint64_t staging_failures() const { return staging_failures_; }

private:
    enum class State { PURGE, STAGE, SPIN, SHOOT, PROBE };

    const EvictionSet& shot_set() const {
        return cfg_.shot_evset ? *cfg_.shot_evset : cfg_.evset;
    }

    void do_purge(Machine& m);
    void do_stage(Machine& m);
    bool stage_shot_set(Machine& m, Cycles& dur);
    void do_spin(Machine& m);
    void do_shoot(Machine& m);
    void do_probe(Machine& m);
    void on_abort(Machine& m);
    void finish_observation(Machine& m, Cycles extra_delay);

    SniperConfig cfg_;
    State state_ = State::PURGE;
    Transaction tx_;
    Observation cur_;
    std::vector<Observation> obs_;
    Cycles wait_;
    int purge_passes_ = 0;
    int stage_attempts_ = 0;
    uint64_t staging_failures_ = 0;
    uint32_t window_accessed_ = 0, window_total_ = 0;
};

// ---------------------------------------------------------------------------
// Flush+reload probe loop on a single shared line.

struct FlushReloadConfig {
    uint64_t target_addr = 0;
    uint32_t wait_limit = 20;   // busy-wait iterations between flush and reload
    Cycles wait_unit = 100;     // cycles per iteration
    Cycles wait_jitter = 0;     // uniform extra wait, models loop timing noise
    uint64_t seed = 1;
    uint64_t max_probes = UINT64_MAX;
};

struct ReloadEvent {
    Cycles flushed_at = 0;
    Cycles reloaded_at = 0;  // completion time of the reload
    Level level = Level::MEM;
};

class FlushReloadAttacker : public Process {
public:
    explicit FlushReloadAttacker(const FlushReloadConfig& cfg, uint32_t core = 1);

    void step(Machine& m) override;

    const std::vector<ReloadEvent>& events() const { return events_; }

private:
    FlushReloadConfig cfg_;
    bool reload_phase_ = false;
    Cycles flushed_at_ = 0;
    std::mt19937_64 rng_;
    std::vector<ReloadEvent> events_;
};

}  // namespace snipe
