#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "snipe/machine.hpp"

namespace snipe {

// One step of a victim program: either a memory access with a base cost
// (stalls for deeper levels are added at run time) or pure compute cycles.
struct ScriptStep {
    bool is_access = false;
    uint64_t addr = 0;
    uint32_t base_cycles = 0;
};

struct AccessScript {
    std::vector<ScriptStep> steps;
    size_t access_count() const;
    Cycles warm_cycles() const;  // total base cycles, i.e. every access hits L1
};

// ---------------------------------------------------------------------------
// Reference AES-128 (byte-oriented SubBytes table implementation).

class Aes128 {
public:
    using Block = std::array<uint8_t, 16>;

    static const std::array<uint8_t, 256>& sbox();

    explicit Aes128(const Block& key);

    Block encrypt(const Block& plaintext) const;

    // SubBytes inputs per round (rounds 1..10 at indices 0..9), 16 bytes each.
    std::array<Block, 10> sub_bytes_inputs(const Block& plaintext) const;

    const std::array<Block, 11>& round_keys() const { return round_keys_; }

private:
    Block encrypt_internal(const Block& plaintext, std::array<Block, 10>* inputs) const;
    std::array<Block, 11> round_keys_;
};

// ---------------------------------------------------------------------------
// AES S-Box victim: per round, 4 prefetch accesses then 16 table lookups.

struct AesTiming {
    uint32_t prefetch_base = 1;
    uint32_t lookup_base = 3;
    uint32_t round_gap = 6;       // work between the prefetch stage and the lookups
    uint32_t final_pad = 20;      // output handling after round 10
    uint32_t prelast_pad = 8;     // nominal slack before the last round
    double jitter_sigma = 5.0;    // per-encryption spread on the slack, clamped
};

struct CiphertextRecord {
    Aes128::Block plaintext{};
    Aes128::Block ciphertext{};
    Cycles start = 0;
    Cycles end = 0;
};

class AesVictim {
public:
    AesVictim(const Aes128::Block& key, uint64_t sbox_region_base, uint32_t table_choice,
              const AesTiming& timing = {});

    uint64_t table_base() const { return table_base_; }
    uint64_t line_addr(uint32_t line) const { return table_base_ + uint64_t(line) * kLineSize; }
    const Aes128& cipher() const { return cipher_; }
    const AesTiming& timing() const { return timing_; }
    uint32_t table_choice() const { return table_choice_; }

    struct Emitted {
        Aes128::Block ciphertext{};
        AccessScript script;
        size_t last_round_first_step = 0;   // index of round 10's first prefetch
        size_t last_round_first_lookup = 0; // index of round 10's first lookup
    };
    Emitted encrypt_script(const Aes128::Block& plaintext, std::mt19937_64& rng) const;

private:
    Aes128 cipher_;
    uint64_t table_base_;
    uint32_t table_choice_;
    AesTiming timing_;
};

// P(fixed line untouched by the remaining last-round lookups when evicted
// just before lookup k) = 0.75^(17-k), k in 1..16.
double aes_last_round_nonaccess_prob(int k);

// Monte Carlo estimate over random (key, plaintext) pairs; index k in 1..16.
std::array<double, 17> aes_last_round_nonaccess_mc(uint64_t seed, int trials,
                                                   uint32_t line = 0);

// ---------------------------------------------------------------------------
// wolfSSL-style always-square-always-multiply exponentiation victim.

struct RsaTiming {
    uint32_t code_base = 10;
    uint32_t data_base = 10;
    uint32_t copy_gap = 30;       // work between the operand loads and the copy
    uint32_t red_slices = 8;      // spread accesses inside each reduce
    uint32_t red_slice_pad = 270;
    Cycles period = 24000;        // target distance between multiply windows
};

class RsaVictim {
public:
    RsaVictim(std::vector<uint8_t> exponent_bits_msb_first, uint64_t r0, uint64_t r1,
              uint64_t r2, uint64_t mul_code, uint64_t red_code,
              const RsaTiming& timing = {});

    const std::vector<uint8_t>& exponent() const { return bits_; }
    uint64_t r0() const { return r0_; }
    uint64_t r1() const { return r1_; }
    uint64_t mul_code() const { return mul_code_; }
    const RsaTiming& timing() const { return timing_; }

    struct Emitted {
        AccessScript script;
        std::vector<size_t> window_first_step;  // per bit: index of the mul-code access
    };
    Emitted decrypt_script() const;

    static std::vector<uint8_t> random_exponent(size_t bits, uint64_t seed);

private:
    std::vector<uint8_t> bits_;
    uint64_t r0_, r1_, r2_, mul_code_, red_code_;
    RsaTiming timing_;
};

// ---------------------------------------------------------------------------
// Server: runs one victim script per client request at randomized arrivals.

struct ServerConfig {
    Cycles arrival_mean = 500 * 3800;  // 500 us at 3.8 GHz
    Cycles arrival_jitter = 0;         // gaussian sigma, cycles
    uint64_t ops_count = 1;
    uint64_t monitored_line = 0;       // ground truth records accesses to this line
    uint64_t seed = 1;
};

struct GroundTruthRun {
    Cycles start = 0;
    Cycles end = 0;
    bool done = false;
    Aes128::Block plaintext{};
    Aes128::Block ciphertext{};
    Cycles last_round_start = 0;
    Cycles last_round_lookups_start = 0;
    std::vector<std::pair<Cycles, Level>> monitored_accesses;  // completion time
};

struct RsaWindowTruth {
    Cycles start = 0;
    uint8_t bit = 0;
};

class ServerProcess : public Process {
public:
    ServerProcess(const AesVictim& victim, const ServerConfig& cfg, uint32_t core = 0);
    ServerProcess(const RsaVictim& victim, const ServerConfig& cfg, uint32_t core = 0);

    void step(Machine& m) override;

    const std::vector<GroundTruthRun>& runs() const { return runs_; }
    const std::vector<RsaWindowTruth>& windows() const { return windows_; }
    uint64_t completed() const { return completed_; }

private:
    void schedule_next(Cycles from);
    void begin_run(Machine& m);

    const AesVictim* aes_ = nullptr;
    const RsaVictim* rsa_ = nullptr;
    ServerConfig cfg_;
    std::mt19937_64 rng_;
    uint64_t completed_ = 0;
    bool running_ = false;
    AccessScript script_;
    size_t step_idx_ = 0;
    size_t marker_last_round_ = 0, marker_last_lookup_ = 0;
    std::vector<size_t> window_marks_;
    size_t wi_ = 0;  // next window marker within the current run
    std::vector<GroundTruthRun> runs_;
    std::vector<RsaWindowTruth> windows_;
};

}  // namespace snipe
