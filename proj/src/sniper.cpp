#include "snipe/sniper.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace snipe {

EvictionSet build_eviction_set(const CacheGeometry& geo, uint64_t target_addr,
                               uint64_t tag_base) {
    const PhysicalAddress pa{target_addr};
    const uint64_t set = pa.set_index(geo.l3);
    const uint64_t target_tag = pa.tag(geo.l3);
    EvictionSet ev;
    ev.target_addr = target_addr;
    uint64_t tag = tag_base;
    while (ev.addrs.size() < geo.l3.ways) {
        if (tag != target_tag)
            ev.addrs.push_back(PhysicalAddress::compose(geo.l3, tag, set).raw);
        ++tag;
    }
    return ev;
}

namespace {

// Shadow of one core's private caches, deep enough to predict which level
// serves the next back-to-back access.
struct PrivateShadow {
    const CacheHierarchy* h;
    uint32_t core;
    std::map<uint64_t, PlruSet> l1, l2;

    PlruSet& set1(uint64_t idx) {
        auto it = l1.find(idx);
        if (it == l1.end()) it = l1.emplace(idx, h->l1_set(core, idx)).first;
        return it->second;
    }
    PlruSet& set2(uint64_t idx) {
        auto it = l2.find(idx);
        if (it == l2.end()) it = l2.emplace(idx, h->l2_set(core, idx)).first;
        return it->second;
    }

    bool resident(uint64_t addr) {
        const auto& g = h->geometry();
        const PhysicalAddress pa{addr};
        return set1(pa.set_index(g.l1)).find(pa.tag(g.l1)).has_value() ||
               set2(pa.set_index(g.l2)).find(pa.tag(g.l2)).has_value();
    }
    void fill(uint64_t addr) {
        const auto& g = h->geometry();
        const PhysicalAddress pa{addr};
        set2(pa.set_index(g.l2)).insert(pa.tag(g.l2));
        set1(pa.set_index(g.l1)).insert(pa.tag(g.l1));
    }
};

bool order_dfs(PrivateShadow& shadow, std::vector<uint64_t>& remaining,
               std::vector<uint64_t>& out) {
    if (remaining.empty()) return true;
    for (size_t i = 0; i < remaining.size(); ++i) {
        const uint64_t addr = remaining[i];
        if (shadow.resident(addr)) continue;
        PrivateShadow saved = shadow;
        shadow.fill(addr);
        out.push_back(addr);
        remaining.erase(remaining.begin() + i);
        if (order_dfs(shadow, remaining, out)) return true;
        remaining.insert(remaining.begin() + i, addr);
        out.pop_back();
        shadow = std::move(saved);
    }
    return false;
}

}  // namespace

std::vector<uint64_t> plru_aware_order(const CacheHierarchy& h, uint32_t core,
                                       const std::vector<uint64_t>& lines) {
    for (uint64_t addr : lines)
        if (!h.resident_l3(addr))
            throw SniperError("NO_ORDER_FOUND: line not resident in L3");
    PrivateShadow shadow{&h, core, {}, {}};
    std::vector<uint64_t> remaining = lines, out;
    if (!order_dfs(shadow, remaining, out))
        throw SniperError("NO_ORDER_FOUND: no private-miss order exists");
    return out;
}

Cycles stakeout_wait(std::vector<Cycles> detection_to_target, ShootMethod method,
                     Cycles shoot_latency, Cycles floor) {
    if (detection_to_target.empty())
        throw std::invalid_argument("stakeout requires at least one sample");
    auto mid = detection_to_target.begin() + detection_to_target.size() / 2;
    std::nth_element(detection_to_target.begin(), mid, detection_to_target.end());
    const Cycles median = *mid;
    if (method == ShootMethod::ACCESS && median < floor)
        throw SniperError("WINDOW_TOO_EARLY: detection-to-target distance too short");
    return median > shoot_latency ? median - shoot_latency : 0;
}

Cycles adapt_wait_time(Cycles wait, double miss_rate, double target_rate,
                       Cycles wait_min, Cycles wait_max) {
    if (miss_rate > target_rate)
        wait = static_cast<Cycles>(std::llround(wait * 0.98));
    else if (miss_rate < 0.5 * target_rate)
        wait += 10;
    return std::clamp(wait, wait_min, wait_max);
}

// ---------------------------------------------------------------------------

AttackerProcess::AttackerProcess(const SniperConfig& cfg, uint32_t core)
    : Process("sniper", core, 1), cfg_(cfg), wait_(cfg.wait_time) {
    if (cfg_.evset.addrs.size() < 2)
        throw std::invalid_argument("eviction set needs at least two lines");
    next_time = 0;
}

void AttackerProcess::step(Machine& m) {
    switch (state_) {
        case State::PURGE: do_purge(m); break;
        case State::STAGE: do_stage(m); break;
        case State::SPIN: do_spin(m); break;
        case State::SHOOT: do_shoot(m); break;
        case State::PROBE: do_probe(m); break;
    }
}

void AttackerProcess::do_purge(Machine& m) {
    Cycles dur = 0;
    uint32_t misses = 0;
    const bool two_sets = cfg_.shot_evset.has_value();
    for (uint64_t addr : cfg_.evset.addrs) {
        const auto o = m.access(addr, core());
        dur += o.cost_cycles;
        misses += o.level_hit == Level::MEM;
    }
    if (two_sets)
        for (uint64_t addr : shot_set().addrs) {
            const auto o = m.access(addr, core());
            dur += o.cost_cycles;
            misses += o.level_hit == Level::MEM;
        }
    if (misses == 0) {
        // Set content is ours; drop it so the refill starts from an empty
        // set with the anchor claiming way 0.
        for (uint64_t addr : cfg_.evset.addrs) {
            m.flush(addr);
            dur += m.config().geometry.l3.latency;
        }
        if (two_sets)
            for (uint64_t addr : shot_set().addrs) {
                m.flush(addr);
                dur += m.config().geometry.l3.latency;
            }
        purge_passes_ = 0;
        state_ = State::STAGE;
    } else if (++purge_passes_ > cfg_.stage_retries * 4) {
        throw SniperError("STAGING_BROKEN: purge failed to converge");
    }
    next_time = m.now() + dur;
}

// Bring the (non-transactional) shot set to the staged age profile: anchor
// young, the rest one step older.
bool AttackerProcess::stage_shot_set(Machine& m, Cycles& dur) {
    for (uint64_t addr : shot_set().addrs) {
        const auto o = m.access(addr, core());
        dur += o.cost_cycles;
    }
    std::vector<uint64_t> rest(shot_set().addrs.begin() + 1, shot_set().addrs.end());
    try {
        for (uint64_t addr : plru_aware_order(m.hierarchy(), core(), rest)) {
            const auto o = m.access(addr, core());
            dur += o.cost_cycles;
            if (o.level_hit != Level::L3) return false;
        }
    } catch (const SniperError&) {
        return false;
    }
    return true;
}

void AttackerProcess::do_stage(Machine& m) {
    Cycles dur = 0;
    if (cfg_.shot_evset && !stage_shot_set(m, dur)) {
        ++staging_failures_;
        if (++stage_attempts_ > cfg_.stage_retries)
            throw SniperError("STAGING_BROKEN: could not stage the eviction set");
        state_ = State::PURGE;
        next_time = m.now() + dur;
        return;
    }
    m.tx_begin(tx_, this);
    bool ok = true;
    for (uint64_t addr : cfg_.evset.addrs) {
        const auto o = m.tx_read(tx_, addr, core());
        dur += o.cost_cycles;
        if (!tx_.active()) ok = false;
    }

    if (ok) {
        std::vector<uint64_t> rest(cfg_.evset.addrs.begin() + 1, cfg_.evset.addrs.end());
        try {
            for (uint64_t addr : plru_aware_order(m.hierarchy(), core(), rest)) {
                const auto o = m.tx_read(tx_, addr, core());
                dur += o.cost_cycles;
                if (o.level_hit != Level::L3 || !tx_.active()) {
                    ok = false;
                    break;
                }
            }
        } catch (const SniperError&) {
            ok = false;
        }
    }

    if (!ok) {
        m.tx_end(tx_);
        ++staging_failures_;
        if (++stage_attempts_ > cfg_.stage_retries)
            throw SniperError("STAGING_BROKEN: could not stage the eviction set");
        state_ = State::PURGE;
        next_time = m.now() + dur;
        return;
    }

    stage_attempts_ = 0;
    cur_ = {};
    cur_.armed_at = m.now() + dur;
    cur_.wait_used = wait_;
    state_ = State::SPIN;
    next_time = std::max(m.now() + dur, tx_.spontaneous_deadline());
    if (tx_.spontaneous_deadline() == kNever) next_time = kNever;
}

void AttackerProcess::do_spin(Machine& m) {
    if (!tx_.abort_info() && tx_.active() &&
        tx_.spontaneous_deadline() <= m.now())
        m.tx_abort_spontaneous(tx_);
    if (tx_.abort_info()) {
        on_abort(m);
        return;
    }
    next_time = tx_.spontaneous_deadline();  // keep sleeping until woken
}

void AttackerProcess::on_abort(Machine& m) {
    const AbortInfo info = *tx_.abort_info();
    cur_.abort_at = info.timestamp;
    cur_.reason = info.reason;
    m.tx_end(tx_);
    const bool treat_as_detection =
        info.reason == AbortReason::READ_SET_EVICTED || cfg_.shoot_on_spontaneous;
    if (treat_as_detection && !cfg_.hold_fire) {
        state_ = State::SHOOT;
        next_time = std::max(m.now(), info.timestamp) + wait_;
    } else {
        finish_observation(m, cfg_.rearm_holdoff);
    }
}

void AttackerProcess::do_shoot(Machine& m) {
    Cycles dur = 0;
    const EvictionSet& shot = shot_set();
    if (cfg_.method == ShootMethod::ACCESS) {
        const auto o = m.access(shot.addrs[0], core());
        dur = o.cost_cycles;
        cur_.shot_at = m.now() + o.cost_cycles;
        // A clean shot reloads the anchor from memory and displaces a line
        // that is not part of the staged set.
        if (o.level_hit != Level::MEM || !o.evicted_l3_line) {
            cur_.staging_broken = true;
        } else {
            for (uint64_t addr : shot.addrs)
                if (*o.evicted_l3_line == line_of(addr)) cur_.staging_broken = true;
        }
    } else {
        m.flush(shot.target_addr);
        dur = m.config().geometry.l3.latency;
        cur_.shot_at = m.now();
    }
    state_ = State::PROBE;
    next_time = m.now() + dur + cfg_.recovery_delay;
}

void AttackerProcess::do_probe(Machine& m) {
    const auto o = m.access(shot_set().addrs[1], core());
    cur_.probed = true;
    cur_.accessed = o.level_hit == Level::MEM;
    if (cfg_.adaptive_wait) {
        ++window_total_;
        window_accessed_ += cur_.accessed;
        if (window_total_ >= cfg_.adapt_window) {
            wait_ = adapt_wait_time(wait_, double(window_accessed_) / window_total_,
                                    cfg_.target_miss_rate, cfg_.wait_min, cfg_.wait_max);
            window_total_ = window_accessed_ = 0;
        }
    }
    finish_observation(m, o.cost_cycles + cfg_.rearm_holdoff);
}

void AttackerProcess::finish_observation(Machine& m, Cycles extra_delay) {
    obs_.push_back(cur_);
    cur_ = {};
    purge_passes_ = 0;
    if (obs_.size() >= cfg_.max_observations) {
        next_time = kNever;
        return;
    }
    state_ = State::PURGE;
    next_time = m.now() + extra_delay;
}

// ---------------------------------------------------------------------------

FlushReloadAttacker::FlushReloadAttacker(const FlushReloadConfig& cfg, uint32_t core)
    : Process("flush-reload", core, 1), cfg_(cfg), rng_(cfg.seed ^ 0xf12e10ad) {
    next_time = 0;
}

void FlushReloadAttacker::step(Machine& m) {
    if (!reload_phase_) {
        m.flush(cfg_.target_addr);
        flushed_at_ = m.now();
        reload_phase_ = true;
        Cycles jitter = 0;
        if (cfg_.wait_jitter)
            jitter = std::uniform_int_distribution<Cycles>(0, cfg_.wait_jitter)(rng_);
        next_time = m.now() + m.config().geometry.l3.latency +
                    Cycles(cfg_.wait_limit) * cfg_.wait_unit + jitter;
        return;
    }
    const auto o = m.access(cfg_.target_addr, core());
    events_.push_back({flushed_at_, m.now() + o.cost_cycles, o.level_hit});
    reload_phase_ = false;
    next_time = events_.size() >= cfg_.max_probes ? kNever : m.now() + o.cost_cycles;
}

}  // namespace snipe
