#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace snipe {

// Cache lines are fixed at 64 bytes throughout.
inline constexpr uint32_t kLineSize = 64;
inline constexpr uint32_t kLineShift = 6;

inline constexpr uint64_t line_of(uint64_t addr) { return addr >> kLineShift; }
inline constexpr uint64_t addr_of_line(uint64_t line) { return line << kLineShift; }

enum class Level : uint8_t { L1, L2, L3, MEM };

const char* level_name(Level l);

struct LevelGeometry {
    uint32_t sets = 0;   // power of two
    uint32_t ways = 0;
    uint32_t latency = 0;  // hit cost in cycles
    bool operator==(const LevelGeometry&) const = default;
};

// How an L3 hit updates the line's age. AGE_DOWN is the default: a hit
// moves the line one step younger. RESET_ZERO is kept as a policy hook.
enum class L3HitUpdate : uint8_t { AGE_DOWN, RESET_ZERO };

struct CacheGeometry {
    LevelGeometry l1{64, 8, 4};
    LevelGeometry l2{1024, 4, 12};
    LevelGeometry l3{1024, 12, 40};
    uint32_t mem_latency = 200;
    uint32_t l3_insert_age = 2;
    L3HitUpdate l3_hit_update = L3HitUpdate::AGE_DOWN;

    void validate() const;  // throws std::invalid_argument
    uint32_t latency_of(Level l) const;
    bool operator==(const CacheGeometry&) const = default;
};

// Decomposition of a raw address for one cache level.
struct PhysicalAddress {
    uint64_t raw = 0;

    uint32_t offset() const { return static_cast<uint32_t>(raw & (kLineSize - 1)); }
    uint64_t set_index(const LevelGeometry& g) const { return line_of(raw) & (g.sets - 1); }
    uint64_t tag(const LevelGeometry& g) const { return line_of(raw) >> __builtin_ctz(g.sets); }

    // Inverse of (tag, set_index) for a given level; offset 0.
    static PhysicalAddress compose(const LevelGeometry& g, uint64_t tag, uint64_t set_index) {
        return PhysicalAddress{addr_of_line((tag << __builtin_ctz(g.sets)) | set_index)};
    }
};

struct AccessOutcome {
    Level level_hit = Level::MEM;
    std::optional<uint64_t> evicted_l3_line;  // line id displaced from L3, if any
    uint32_t cost_cycles = 0;
};

// ---------------------------------------------------------------------------
// Tree pseudo-LRU set (L1/L2)

struct PlruLine {
    uint64_t tag = 0;
    bool valid = false;
    bool operator==(const PlruLine&) const = default;
};

class PlruSet {
public:
    PlruSet() = default;
    explicit PlruSet(uint32_t ways);

    uint32_t ways() const { return static_cast<uint32_t>(lines_.size()); }
    const PlruLine& line(uint32_t way) const { return lines_[way]; }
    uint32_t bits() const { return bits_; }
    void set_bits(uint32_t b) { bits_ = b; }

    std::optional<uint32_t> find(uint64_t tag) const;
    std::optional<uint32_t> free_way() const;  // lowest-index invalid way

    // Root-to-leaf walk over the node bits; free ways take priority and are
    // claimed linearly without consulting the bits.
    uint32_t select_victim() const;

    // Flip every node on the way's path to point away from it.
    void touch(uint32_t way);

    // Install into a free way (no bit update) or replace the PLRU victim
    // (counts as a touch). Returns the way used.
    uint32_t insert(uint64_t tag);

    void invalidate(uint32_t way) { lines_[way].valid = false; }

    bool operator==(const PlruSet&) const = default;

private:
    std::vector<PlruLine> lines_;
    uint32_t levels_ = 0;
    uint32_t bits_ = 0;  // node bits, root first, breadth-first
};

// ---------------------------------------------------------------------------
// Quad-age L3 set

struct L3Line {
    uint64_t tag = 0;
    bool valid = false;
    uint8_t age = 0;  // 0..3
    bool operator==(const L3Line&) const = default;
};

class L3Set {
public:
    L3Set() = default;
    L3Set(uint32_t ways, uint32_t insert_age, L3HitUpdate hit_update)
        : lines_(ways), insert_age_(insert_age), hit_update_(hit_update) {}

    uint32_t ways() const { return static_cast<uint32_t>(lines_.size()); }
    const L3Line& line(uint32_t way) const { return lines_[way]; }
    L3Line& mutable_line(uint32_t way) { return lines_[way]; }

    std::optional<uint32_t> find(uint64_t tag) const;
    std::optional<uint32_t> free_way() const;

    void on_hit(uint32_t way);

    // Set must be full. Ages every line by the minimal amount that puts some
    // line at age 3 (saturating), then returns the lowest such way.
    uint32_t select_victim();

    void insert(uint64_t tag, uint32_t way);

    void invalidate(uint32_t way) { lines_[way].valid = false; }

    bool operator==(const L3Set&) const = default;

private:
    std::vector<L3Line> lines_;
    uint32_t insert_age_ = 2;
    L3HitUpdate hit_update_ = L3HitUpdate::AGE_DOWN;
};

// ---------------------------------------------------------------------------
// Three-level inclusive hierarchy: shared L3, per-core private L1/L2.

class CacheHierarchy {
public:
    explicit CacheHierarchy(const CacheGeometry& geo, uint32_t n_cores = 2);

    const CacheGeometry& geometry() const { return geo_; }
    uint32_t cores() const { return n_cores_; }

    AccessOutcome access(uint64_t addr, uint32_t core);
    void flush(uint64_t addr);  // invalidate at every level, every core

    bool resident_l3(uint64_t addr) const;
    bool resident_private(uint64_t addr, uint32_t core) const;
    Level lookup_level(uint64_t addr, uint32_t core) const;  // no state change

    const L3Set& l3_set(uint64_t set_index) const { return l3_[set_index]; }
    const PlruSet& l1_set(uint32_t core, uint64_t set_index) const {
        return l1_[core][set_index];
    }
    const PlruSet& l2_set(uint32_t core, uint64_t set_index) const {
        return l2_[core][set_index];
    }

    // Full-state audit: every line valid in a private cache is valid in L3.
    bool inclusive() const;

    bool operator==(const CacheHierarchy&) const = default;

private:
    void fill_private(uint64_t addr, uint32_t core);
    void back_invalidate(uint64_t l3_line);

    CacheGeometry geo_;
    uint32_t n_cores_;
    std::vector<std::vector<PlruSet>> l1_, l2_;  // [core][set]
    std::vector<L3Set> l3_;
};

}  // namespace snipe
