#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "snipe/machine.hpp"

namespace snipe {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat key=value run configuration. One struct covers every scenario; the
// scenario field selects which knobs are used.
struct SimConfig {
    std::string scenario = "aes_noiseless";
    uint64_t seed = 1;
    std::string out_dir = "out";

    // machine
    uint32_t cores = 3;
    Cycles abort_delivery_latency = 180;
    double spontaneous_rate = 0.0;

    // geometry
    uint32_t l1_sets = 64, l1_ways = 8, l1_latency = 4;
    uint32_t l2_sets = 1024, l2_ways = 4, l2_latency = 12;
    uint32_t l3_sets = 1024, l3_ways = 12, l3_latency = 40;
    uint32_t mem_latency = 200;
    uint32_t l3_insert_age = 2;
    std::string l3_hit_update = "age_down";  // or reset_zero

    // victim
    std::string victim_key = "2b7e151628aed2a6abf7158809cf4f3c";
    uint64_t ops = 4000;
    Cycles arrival_mean = 20000;
    Cycles arrival_jitter = 0;
    double aes_jitter_sigma = 0.0;
    uint32_t rsa_bits = 2048;

    // attacker
    std::string shoot_method = "access";
    Cycles wait_time = 0;        // 0 = derive via stakeout (AES scenario)
    uint32_t stakeout_runs = 30;
    Cycles shoot_margin = 4;     // land the eviction this early in the gap
    Cycles recovery_delay = 400;
    Cycles rearm_holdoff = 0;
    bool adaptive_wait = false;
    double target_miss_rate = 0.07;

    // tsx_calibration
    uint64_t calib_trials = 10000;
    Cycles calib_window = 10000;
    double calib_detect_target = 0.97;

    // flush_reload_sweep
    std::string fr_wait_limits = "1,2,3,5,8,12,16,20,24,30,40,60,90,150";
    Cycles fr_wait_unit = 100;
    uint32_t fr_windows = 200;

    MachineConfig machine_config() const;  // validates and converts
    void validate() const;                 // throws ConfigError

    // Every key with its current value, in declaration order.
    std::vector<std::pair<std::string, std::string>> items() const;
};

// Apply "key=value" text. Unknown keys and malformed values are rejected
// with a CONFIG_INVALID diagnostic naming the offender.
void apply_config_line(SimConfig& cfg, const std::string& line);

// Parse a config file (key=value per line, '#' comments, blank lines ok).
SimConfig load_config_file(const std::string& path);

void apply_overrides(SimConfig& cfg, const std::vector<std::string>& overrides);

}  // namespace snipe
