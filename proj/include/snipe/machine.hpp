#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "snipe/cache.hpp"

namespace snipe {

using Cycles = uint64_t;
inline constexpr Cycles kNever = std::numeric_limits<Cycles>::max();

struct TxError : std::logic_error {
    using std::logic_error::logic_error;
};

enum class AbortReason : uint8_t { READ_SET_EVICTED, SPONTANEOUS };

struct AbortInfo {
    AbortReason reason;
    Cycles timestamp;  // delivery time
};

class Process;

// One hardware transaction. The read set tracks L3 line identities; an
// eviction of any of them aborts the transaction with no cache rollback.
class Transaction {
public:
    bool active() const { return active_; }
    const std::set<uint64_t>& read_set() const { return read_set_; }
    const std::optional<AbortInfo>& abort_info() const { return abort_info_; }
    Cycles spontaneous_deadline() const { return spont_deadline_; }

private:
    friend class Machine;
    bool active_ = false;
    std::set<uint64_t> read_set_;
    std::optional<AbortInfo> abort_info_;
    Cycles spont_deadline_ = kNever;
    Process* waiter_ = nullptr;
};

struct TraceEvent {
    Cycles cycle;
    int process_id;
    char event_kind;  // 'a' access, 'f' flush, 'b' tx begin, 'x' abort
    uint64_t set_index;
    Level level_hit;
};

// A scheduled actor. next_time is the cycle of its next step; the machine
// drives steps in global time order, ties broken by ascending priority.
class Process {
public:
    Process(std::string name, uint32_t core, int priority)
        : name_(std::move(name)), core_(core), priority_(priority) {}
    virtual ~Process() = default;

    virtual void step(class Machine& m) = 0;

    const std::string& name() const { return name_; }
    uint32_t core() const { return core_; }
    int priority() const { return priority_; }
    Cycles next_time = kNever;
    int id = -1;  // assigned at registration

private:
    std::string name_;
    uint32_t core_;
    int priority_;
};

struct MachineConfig {
    CacheGeometry geometry;
    uint32_t cores = 3;
    Cycles abort_delivery_latency = 180;
    double spontaneous_rate = 0.0;  // abort hazard per cycle inside a transaction
    uint64_t seed = 1;
    size_t trace_limit = 1u << 20;
};

class Machine {
public:
    explicit Machine(const MachineConfig& cfg);

    Cycles now() const { return now_; }
    CacheHierarchy& hierarchy() { return hier_; }
    const CacheHierarchy& hierarchy() const { return hier_; }
    const MachineConfig& config() const { return cfg_; }

    // Plain access outside any transaction. Any L3 eviction it causes is
    // checked against every active transaction's read set.
    AccessOutcome access(uint64_t addr, uint32_t core);
    void flush(uint64_t addr);

    void tx_begin(Transaction& tx, Process* waiter = nullptr);
    AccessOutcome tx_read(Transaction& tx, uint64_t addr, uint32_t core);
    // Force a spontaneous abort now (used once the armed deadline passes).
    void tx_abort_spontaneous(Transaction& tx);
    void tx_end(Transaction& tx);  // commit path; clears the read set

    void add_process(Process* p);
    // Execute steps in time order until every process is past end_time.
    void run_until(Cycles end_time);

    const std::vector<TraceEvent>& trace() const { return trace_; }
    void clear_trace() { trace_.clear(); }

private:
    void note_eviction(uint64_t l3_line, Cycles effective_at);
    void record(char kind, uint64_t addr, Level level);

    MachineConfig cfg_;
    CacheHierarchy hier_;
    Cycles now_ = 0;
    std::vector<Process*> processes_;
    std::vector<Transaction*> active_tx_;
    std::vector<TraceEvent> trace_;
    std::mt19937_64 rng_;
    int current_pid_ = -1;
};

}  // namespace snipe
