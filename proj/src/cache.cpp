#include "snipe/cache.hpp"

#include <algorithm>

namespace snipe {

const char* level_name(Level l) {
    switch (l) {
        case Level::L1: return "L1";
        case Level::L2: return "L2";
        case Level::L3: return "L3";
        case Level::MEM: return "MEM";
    }
    return "?";
}

static bool power_of_two(uint32_t v) { return v != 0 && (v & (v - 1)) == 0; }

void CacheGeometry::validate() const {
    for (const auto* g : {&l1, &l2, &l3}) {
        if (!power_of_two(g->sets))
            throw std::invalid_argument("cache sets must be a power of two");
        if (g->ways < 1) throw std::invalid_argument("cache ways must be >= 1");
    }
    const uint64_t c1 = uint64_t(l1.sets) * l1.ways;
    const uint64_t c2 = uint64_t(l2.sets) * l2.ways;
    const uint64_t c3 = uint64_t(l3.sets) * l3.ways;
    if (c3 < c2 || c3 < c1)
        throw std::invalid_argument("L3 capacity must dominate L1 and L2 for inclusivity");
    if (l3_insert_age > 3) throw std::invalid_argument("l3_insert_age must be 0..3");
}

uint32_t CacheGeometry::latency_of(Level l) const {
    switch (l) {
        case Level::L1: return l1.latency;
        case Level::L2: return l2.latency;
        case Level::L3: return l3.latency;
        case Level::MEM: return mem_latency;
    }
    return 0;
}

// ---------------------------------------------------------------------------

PlruSet::PlruSet(uint32_t ways) : lines_(ways) {
    levels_ = 0;
    while ((1u << levels_) < ways) ++levels_;
    if ((1u << levels_) != ways)
        throw std::invalid_argument("PLRU ways must be a power of two");
}

std::optional<uint32_t> PlruSet::find(uint64_t tag) const {
    for (uint32_t w = 0; w < ways(); ++w)
        if (lines_[w].valid && lines_[w].tag == tag) return w;
    return std::nullopt;
}

std::optional<uint32_t> PlruSet::free_way() const {
    for (uint32_t w = 0; w < ways(); ++w)
        if (!lines_[w].valid) return w;
    return std::nullopt;
}

uint32_t PlruSet::select_victim() const {
    if (auto f = free_way()) return *f;
    // Walk the node bits root to leaf: 1 goes right, 0 goes left.
    uint32_t node = 0;  // breadth-first index
    uint32_t way = 0;
    for (uint32_t lvl = 0; lvl < levels_; ++lvl) {
        const uint32_t bit = (bits_ >> node) & 1u;
        way = (way << 1) | bit;
        node = 2 * node + 1 + bit;
    }
    return way;
}

void PlruSet::touch(uint32_t way) {
    if (way >= ways()) throw std::out_of_range("PLRU way out of range");
    uint32_t node = 0;
    for (uint32_t lvl = 0; lvl < levels_; ++lvl) {
        // Direction the way lives in at this node: high bit first.
        const uint32_t dir = (way >> (levels_ - 1 - lvl)) & 1u;
        // Point the node away from the touched way.
        if (dir)
            bits_ &= ~(1u << node);
        else
            bits_ |= (1u << node);
        node = 2 * node + 1 + dir;
    }
}

uint32_t PlruSet::insert(uint64_t tag) {
    if (auto f = free_way()) {
        lines_[*f] = {tag, true};
        return *f;  // linear fill, bits untouched
    }
    const uint32_t way = select_victim();
    lines_[way] = {tag, true};
    touch(way);  // replacement switches the nodes that pointed to it
    return way;
}

// ---------------------------------------------------------------------------

std::optional<uint32_t> L3Set::find(uint64_t tag) const {
    for (uint32_t w = 0; w < ways(); ++w)
        if (lines_[w].valid && lines_[w].tag == tag) return w;
    return std::nullopt;
}

std::optional<uint32_t> L3Set::free_way() const {
    for (uint32_t w = 0; w < ways(); ++w)
        if (!lines_[w].valid) return w;
    return std::nullopt;
}

void L3Set::on_hit(uint32_t way) {
    auto& l = lines_[way];
    if (hit_update_ == L3HitUpdate::RESET_ZERO)
        l.age = 0;
    else if (l.age > 0)
        --l.age;
}

uint32_t L3Set::select_victim() {
    uint8_t max_age = 0;
    for (const auto& l : lines_) {
        if (!l.valid) throw std::logic_error("select_victim on non-full set");
        max_age = std::max(max_age, l.age);
    }
    if (max_age < 3) {
        const uint8_t delta = static_cast<uint8_t>(3 - max_age);
        for (auto& l : lines_) l.age = static_cast<uint8_t>(std::min(3, l.age + delta));
    }
    for (uint32_t w = 0; w < ways(); ++w)
        if (lines_[w].age == 3) return w;
    throw std::logic_error("aging produced no age-3 line");
}

void L3Set::insert(uint64_t tag, uint32_t way) {
    lines_[way] = {tag, true, static_cast<uint8_t>(insert_age_)};
}

// ---------------------------------------------------------------------------

CacheHierarchy::CacheHierarchy(const CacheGeometry& geo, uint32_t n_cores)
    : geo_(geo), n_cores_(n_cores) {
    geo_.validate();
    l1_.resize(n_cores);
    l2_.resize(n_cores);
    for (uint32_t c = 0; c < n_cores; ++c) {
        l1_[c].assign(geo_.l1.sets, PlruSet(geo_.l1.ways));
        l2_[c].assign(geo_.l2.sets, PlruSet(geo_.l2.ways));
    }
    l3_.assign(geo_.l3.sets, L3Set(geo_.l3.ways, geo_.l3_insert_age, geo_.l3_hit_update));
}

Level CacheHierarchy::lookup_level(uint64_t addr, uint32_t core) const {
    const PhysicalAddress pa{addr};
    if (l1_[core][pa.set_index(geo_.l1)].find(pa.tag(geo_.l1))) return Level::L1;
    if (l2_[core][pa.set_index(geo_.l2)].find(pa.tag(geo_.l2))) return Level::L2;
    if (l3_[pa.set_index(geo_.l3)].find(pa.tag(geo_.l3))) return Level::L3;
    return Level::MEM;
}

bool CacheHierarchy::resident_l3(uint64_t addr) const {
    const PhysicalAddress pa{addr};
    return l3_[pa.set_index(geo_.l3)].find(pa.tag(geo_.l3)).has_value();
}

bool CacheHierarchy::resident_private(uint64_t addr, uint32_t core) const {
    const Level l = lookup_level(addr, core);
    return l == Level::L1 || l == Level::L2;
}

void CacheHierarchy::fill_private(uint64_t addr, uint32_t core) {
    const PhysicalAddress pa{addr};
    l2_[core][pa.set_index(geo_.l2)].insert(pa.tag(geo_.l2));
    l1_[core][pa.set_index(geo_.l1)].insert(pa.tag(geo_.l1));
}

void CacheHierarchy::back_invalidate(uint64_t l3_line) {
    const PhysicalAddress pa{addr_of_line(l3_line)};
    for (uint32_t c = 0; c < n_cores_; ++c) {
        auto& s1 = l1_[c][pa.set_index(geo_.l1)];
        if (auto w = s1.find(pa.tag(geo_.l1))) s1.invalidate(*w);
        auto& s2 = l2_[c][pa.set_index(geo_.l2)];
        if (auto w = s2.find(pa.tag(geo_.l2))) s2.invalidate(*w);
    }
}

AccessOutcome CacheHierarchy::access(uint64_t addr, uint32_t core) {
    const PhysicalAddress pa{addr};
    auto& s1 = l1_[core][pa.set_index(geo_.l1)];
    if (auto w = s1.find(pa.tag(geo_.l1))) {
        s1.touch(*w);
        return {Level::L1, std::nullopt, geo_.l1.latency};
    }
    auto& s2 = l2_[core][pa.set_index(geo_.l2)];
    if (auto w = s2.find(pa.tag(geo_.l2))) {
        s2.touch(*w);
        s1.insert(pa.tag(geo_.l1));
        return {Level::L2, std::nullopt, geo_.l2.latency};
    }
    auto& s3 = l3_[pa.set_index(geo_.l3)];
    if (auto w = s3.find(pa.tag(geo_.l3))) {
        s3.on_hit(*w);
        fill_private(addr, core);
        return {Level::L3, std::nullopt, geo_.l3.latency};
    }
    // Full miss: fill all three levels.
    std::optional<uint64_t> evicted;
    uint32_t way;
    if (auto f = s3.free_way()) {
        way = *f;
    } else {
        way = s3.select_victim();
        const auto& old = s3.line(way);
        const uint64_t old_line =
            (old.tag << __builtin_ctz(geo_.l3.sets)) | pa.set_index(geo_.l3);
        evicted = old_line;
        back_invalidate(old_line);
    }
    s3.insert(pa.tag(geo_.l3), way);
    fill_private(addr, core);
    return {Level::MEM, evicted, geo_.mem_latency};
}

void CacheHierarchy::flush(uint64_t addr) {
    const PhysicalAddress pa{addr};
    auto& s3 = l3_[pa.set_index(geo_.l3)];
    if (auto w = s3.find(pa.tag(geo_.l3))) s3.invalidate(*w);
    for (uint32_t c = 0; c < n_cores_; ++c) {
        auto& s1 = l1_[c][pa.set_index(geo_.l1)];
        if (auto w = s1.find(pa.tag(geo_.l1))) s1.invalidate(*w);
        auto& s2 = l2_[c][pa.set_index(geo_.l2)];
        if (auto w = s2.find(pa.tag(geo_.l2))) s2.invalidate(*w);
    }
}

bool CacheHierarchy::inclusive() const {
    for (uint32_t c = 0; c < n_cores_; ++c) {
        for (uint64_t s = 0; s < geo_.l1.sets; ++s)
            for (uint32_t w = 0; w < geo_.l1.ways; ++w) {
                const auto& l = l1_[c][s].line(w);
                if (!l.valid) continue;
                const uint64_t line = (l.tag << __builtin_ctz(geo_.l1.sets)) | s;
                if (!resident_l3(addr_of_line(line))) return false;
            }
        for (uint64_t s = 0; s < geo_.l2.sets; ++s)
            for (uint32_t w = 0; w < geo_.l2.ways; ++w) {
                const auto& l = l2_[c][s].line(w);
                if (!l.valid) continue;
                const uint64_t line = (l.tag << __builtin_ctz(geo_.l2.sets)) | s;
                if (!resident_l3(addr_of_line(line))) return false;
            }
    }
    return true;
}

}  // namespace snipe
