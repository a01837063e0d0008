#include "snipe/machine.hpp"

#include <algorithm>
#include <cmath>

namespace snipe {

Machine::Machine(const MachineConfig& cfg)
    : cfg_(cfg), hier_(cfg.geometry, cfg.cores), rng_(cfg.seed ^ 0x6d616368696e65ull) {}

void Machine::record(char kind, uint64_t addr, Level level) {
    if (trace_.size() >= cfg_.trace_limit) return;
    trace_.push_back({now_, current_pid_, kind,
                      PhysicalAddress{addr}.set_index(cfg_.geometry.l3), level});
}

void Machine::note_eviction(uint64_t l3_line, Cycles effective_at) {
    for (Transaction* tx : active_tx_) {
        if (!tx->active_) continue;
        if (tx->read_set_.count(l3_line) == 0) continue;
        tx->active_ = false;
        tx->abort_info_ = AbortInfo{AbortReason::READ_SET_EVICTED,
                                    effective_at + cfg_.abort_delivery_latency};
        if (tx->waiter_ && tx->waiter_->next_time > tx->abort_info_->timestamp)
            tx->waiter_->next_time = tx->abort_info_->timestamp;
    }
    std::erase_if(active_tx_, [](Transaction* t) { return !t->active_; });
}

AccessOutcome Machine::access(uint64_t addr, uint32_t core) {
    AccessOutcome out = hier_.access(addr, core);
    record('a', addr, out.level_hit);
    if (out.evicted_l3_line) note_eviction(*out.evicted_l3_line, now_ + out.cost_cycles);
    return out;
}

void Machine::flush(uint64_t addr) {
    const bool was_l3 = hier_.resident_l3(addr);
    hier_.flush(addr);
    record('f', addr, Level::MEM);
    if (was_l3) note_eviction(line_of(addr), now_);
}

void Machine::tx_begin(Transaction& tx, Process* waiter) {
    if (tx.active_) throw TxError("TX_NESTED: transaction already active");
    tx.active_ = true;
    tx.read_set_.clear();
    tx.abort_info_.reset();
    tx.waiter_ = waiter;
    tx.spont_deadline_ = kNever;
    if (cfg_.spontaneous_rate > 0) {
        std::exponential_distribution<double> d(cfg_.spontaneous_rate);
        tx.spont_deadline_ = now_ + static_cast<Cycles>(std::llround(d(rng_)));
    }
    active_tx_.push_back(&tx);
    record('b', 0, Level::MEM);
}

AccessOutcome Machine::tx_read(Transaction& tx, uint64_t addr, uint32_t core) {
    if (!tx.active_) throw TxError("TX_INACTIVE: read outside an active transaction");
    AccessOutcome out = access(addr, core);
    if (tx.active_)  // the read itself may have aborted us via an eviction
        tx.read_set_.insert(line_of(addr));
    return out;
}

void Machine::tx_abort_spontaneous(Transaction& tx) {
    if (!tx.active_) return;
    tx.active_ = false;
    tx.abort_info_ = AbortInfo{AbortReason::SPONTANEOUS, now_};
    std::erase(active_tx_, &tx);
    record('x', 0, Level::MEM);
}

void Machine::tx_end(Transaction& tx) {
    tx.active_ = false;
    tx.read_set_.clear();
    std::erase(active_tx_, &tx);
}

void Machine::add_process(Process* p) {
    p->id = static_cast<int>(processes_.size());
    processes_.push_back(p);
}

void Machine::run_until(Cycles end_time) {
    while (true) {
        Process* next = nullptr;
        for (Process* p : processes_) {
            if (p->next_time == kNever) continue;
            if (!next || p->next_time < next->next_time ||
                (p->next_time == next->next_time && p->priority() < next->priority()))
                next = p;
        }
        if (!next || next->next_time > end_time) break;
        now_ = std::max(now_, next->next_time);
        current_pid_ = next->id;
        next->step(*this);
        current_pid_ = -1;
    }
    now_ = std::max(now_, end_time);
}

}  // namespace snipe
