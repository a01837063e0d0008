#include "snipe/victims.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace snipe {

size_t AccessScript::access_count() const {
    size_t n = 0;
    for (const auto& s : steps) n += s.is_access;
    return n;
}

Cycles AccessScript::warm_cycles() const {
    Cycles c = 0;
    for (const auto& s : steps) c += s.base_cycles;
    return c;
}

// ---------------------------------------------------------------------------
// AES-128 reference

namespace {

constexpr std::array<uint8_t, 256> kSbox = {
    0x63, 0x7c, 0x77, 0x7b, 0xf2, 0x6b, 0x6f, 0xc5, 0x30, 0x01, 0x67, 0x2b,
    0xfe, 0xd7, 0xab, 0x76, 0xca, 0x82, 0xc9, 0x7d, 0xfa, 0x59, 0x47, 0xf0,
    0xad, 0xd4, 0xa2, 0xaf, 0x9c, 0xa4, 0x72, 0xc0, 0xb7, 0xfd, 0x93, 0x26,
    0x36, 0x3f, 0xf7, 0xcc, 0x34, 0xa5, 0xe5, 0xf1, 0x71, 0xd8, 0x31, 0x15,
    0x04, 0xc7, 0x23, 0xc3, 0x18, 0x96, 0x05, 0x9a, 0x07, 0x12, 0x80, 0xe2,
    0xeb, 0x27, 0xb2, 0x75, 0x09, 0x83, 0x2c, 0x1a, 0x1b, 0x6e, 0x5a, 0xa0,
    0x52, 0x3b, 0xd6, 0xb3, 0x29, 0xe3, 0x2f, 0x84, 0x53, 0xd1, 0x00, 0xed,
    0x20, 0xfc, 0xb1, 0x5b, 0x6a, 0xcb, 0xbe, 0x39, 0x4a, 0x4c, 0x58, 0xcf,
    0xd0, 0xef, 0xaa, 0xfb, 0x43, 0x4d, 0x33, 0x85, 0x45, 0xf9, 0x02, 0x7f,
    0x50, 0x3c, 0x9f, 0xa8, 0x51, 0xa3, 0x40, 0x8f, 0x92, 0x9d, 0x38, 0xf5,
    0xbc, 0xb6, 0xda, 0x21, 0x10, 0xff, 0xf3, 0xd2, 0xcd, 0x0c, 0x13, 0xec,
    0x5f, 0x97, 0x44, 0x17, 0xc4, 0xa7, 0x7e, 0x3d, 0x64, 0x5d, 0x19, 0x73,
    0x60, 0x81, 0x4f, 0xdc, 0x22, 0x2a, 0x90, 0x88, 0x46, 0xee, 0xb8, 0x14,
    0xde, 0x5e, 0x0b, 0xdb, 0xe0, 0x32, 0x3a, 0x0a, 0x49, 0x06, 0x24, 0x5c,
    0xc2, 0xd3, 0xac, 0x62, 0x91, 0x95, 0xe4, 0x79, 0xe7, 0xc8, 0x37, 0x6d,
    0x8d, 0xd5, 0x4e, 0xa9, 0x6c, 0x56, 0xf4, 0xea, 0x65, 0x7a, 0xae, 0x08,
    0xba, 0x78, 0x25, 0x2e, 0x1c, 0xa6, 0xb4, 0xc6, 0xe8, 0xdd, 0x74, 0x1f,
    0x4b, 0xbd, 0x8b, 0x8a, 0x70, 0x3e, 0xb5, 0x66, 0x48, 0x03, 0xf6, 0x0e,
    0x61, 0x35, 0x57, 0xb9, 0x86, 0xc1, 0x1d, 0x9e, 0xe1, 0xf8, 0x98, 0x11,
    0x69, 0xd9, 0x8e, 0x94, 0x9b, 0x1e, 0x87, 0xe9, 0xce, 0x55, 0x28, 0xdf,
    0x8c, 0xa1, 0x89, 0x0d, 0xbf, 0xe6, 0x42, 0x68, 0x41, 0x99, 0x2d, 0x0f,
    0xb0, 0x54, 0xbb, 0x16};

uint8_t xtime(uint8_t x) { return static_cast<uint8_t>((x << 1) ^ ((x >> 7) * 0x1b)); }

}  // namespace

const std::array<uint8_t, 256>& Aes128::sbox() { return kSbox; }

Aes128::Aes128(const Block& key) {
    round_keys_[0] = key;
    static constexpr uint8_t rcon[10] = {0x01, 0x02, 0x04, 0x08, 0x10,
                                         0x20, 0x40, 0x80, 0x1b, 0x36};
    for (int r = 1; r <= 10; ++r) {
        Block& prev = round_keys_[r - 1];
        Block& k = round_keys_[r];
        // First word: rotate/substitute the previous last word, add rcon.
        k[0] = prev[0] ^ kSbox[prev[13]] ^ rcon[r - 1];
        k[1] = prev[1] ^ kSbox[prev[14]];
        k[2] = prev[2] ^ kSbox[prev[15]];
        k[3] = prev[3] ^ kSbox[prev[12]];
        for (int i = 4; i < 16; ++i) k[i] = prev[i] ^ k[i - 4];
    }
}

Aes128::Block Aes128::encrypt_internal(const Block& plaintext,
                                       std::array<Block, 10>* inputs) const {
    Block s = plaintext;
    for (int i = 0; i < 16; ++i) s[i] ^= round_keys_[0][i];
    for (int round = 1; round <= 10; ++round) {
        if (inputs) (*inputs)[round - 1] = s;
        // SubBytes
        for (auto& b : s) b = kSbox[b];
        // ShiftRows (column-major state layout: s[4c+r] = row r, column c)
        Block t = s;
        for (int r = 1; r < 4; ++r)
            for (int c = 0; c < 4; ++c) t[4 * c + r] = s[4 * ((c + r) & 3) + r];
        s = t;
        if (round < 10) {
            // MixColumns
            for (int c = 0; c < 4; ++c) {
                uint8_t* col = &s[4 * c];
                const uint8_t a0 = col[0], a1 = col[1], a2 = col[2], a3 = col[3];
                const uint8_t x = a0 ^ a1 ^ a2 ^ a3;
                col[0] = static_cast<uint8_t>(a0 ^ x ^ xtime(a0 ^ a1));
                col[1] = static_cast<uint8_t>(a1 ^ x ^ xtime(a1 ^ a2));
                col[2] = static_cast<uint8_t>(a2 ^ x ^ xtime(a2 ^ a3));
                col[3] = static_cast<uint8_t>(a3 ^ x ^ xtime(a3 ^ a0));
            }
        }
        for (int i = 0; i < 16; ++i) s[i] ^= round_keys_[round][i];
    }
    return s;
}

Aes128::Block Aes128::encrypt(const Block& plaintext) const {
    return encrypt_internal(plaintext, nullptr);
}

std::array<Aes128::Block, 10> Aes128::sub_bytes_inputs(const Block& plaintext) const {
    std::array<Block, 10> inputs{};
    encrypt_internal(plaintext, &inputs);
    return inputs;
}

// ---------------------------------------------------------------------------
// AES victim script

AesVictim::AesVictim(const Aes128::Block& key, uint64_t sbox_region_base,
                     uint32_t table_choice, const AesTiming& timing)
    : cipher_(key),
      table_base_(sbox_region_base + uint64_t(table_choice) * 256),
      table_choice_(table_choice),
      timing_(timing) {
    if (sbox_region_base % 256 != 0)
        throw std::invalid_argument("sbox region base must be 256-byte aligned");
}

AesVictim::Emitted AesVictim::encrypt_script(const Aes128::Block& plaintext,
                                             std::mt19937_64& rng) const {
    Emitted out;
    const auto inputs = cipher_.sub_bytes_inputs(plaintext);
    out.ciphertext = cipher_.encrypt(plaintext);
    auto& steps = out.script.steps;

    for (int round = 1; round <= 10; ++round) {
        if (round == 10) {
            // Per-encryption slack before the last round.
            std::normal_distribution<double> n(0.0, timing_.jitter_sigma);
            const double raw = timing_.jitter_sigma > 0 ? n(rng) : 0.0;
            const long pad = std::clamp<long>(
                timing_.prelast_pad + std::lround(raw), 0, 23);
            if (pad > 0)
                steps.push_back({false, 0, static_cast<uint32_t>(pad)});
            out.last_round_first_step = steps.size();
        }
        for (uint32_t l = 0; l < 4; ++l)
            steps.push_back({true, line_addr(l), timing_.prefetch_base});
        steps.push_back({false, 0, timing_.round_gap});
        if (round == 10) out.last_round_first_lookup = steps.size();
        for (uint8_t b : inputs[round - 1])
            steps.push_back({true, table_base_ + b, timing_.lookup_base});
    }
    steps.push_back({false, 0, timing_.final_pad});
    return out;
}

double aes_last_round_nonaccess_prob(int k) {
    if (k < 1 || k > 16)
        throw std::domain_error("last-round lookup index must be in 1..16");
    return std::pow(0.75, 17 - k);
}

std::array<double, 17> aes_last_round_nonaccess_mc(uint64_t seed, int trials,
                                                   uint32_t line) {
    std::mt19937_64 rng(seed);
    std::array<uint64_t, 17> hits{};
    for (int t = 0; t < trials; ++t) {
        Aes128::Block key{}, pt{};
        for (auto& b : key) b = static_cast<uint8_t>(rng());
        for (auto& b : pt) b = static_cast<uint8_t>(rng());
        const auto inputs = Aes128(key).sub_bytes_inputs(pt);
        const auto& last = inputs[9];
        // Walking k downward: untouched by k..16 iff untouched by k+1..16
        // and lookup k itself avoids the line.
        bool clean = true;
        for (int k = 16; k >= 1; --k) {
            clean = clean && (last[k - 1] >> 6) != line;
            hits[k] += clean;
        }
    }
    std::array<double, 17> p{};
    for (int k = 1; k <= 16; ++k) p[k] = double(hits[k]) / trials;
    return p;
}

// ---------------------------------------------------------------------------
// RSA victim script

RsaVictim::RsaVictim(std::vector<uint8_t> exponent_bits_msb_first, uint64_t r0,
                     uint64_t r1, uint64_t r2, uint64_t mul_code, uint64_t red_code,
                     const RsaTiming& timing)
    : bits_(std::move(exponent_bits_msb_first)),
      r0_(r0),
      r1_(r1),
      r2_(r2),
      mul_code_(mul_code),
      red_code_(red_code),
      timing_(timing) {
    if (bits_.empty()) throw std::invalid_argument("empty exponent");
}

RsaVictim::Emitted RsaVictim::decrypt_script() const {
    Emitted out;
    auto& steps = out.script.steps;
    const auto& t = timing_;

    auto pad = [&](uint32_t c) {
        if (c > 0) steps.push_back({false, 0, c});
    };
    auto load = [&](uint64_t addr, uint32_t base) { steps.push_back({true, addr, base}); };
    auto reduce = [&](uint64_t operand) {
        load(red_code_, t.code_base);
        for (uint32_t i = 0; i < t.red_slices; ++i) {
            pad(t.red_slice_pad);
            load(operand, t.data_base);
        }
    };

    for (uint8_t bit : bits_) {
        const size_t window_start = steps.size();
        const uint64_t target = bit ? r1_ : r0_;
        out.window_first_step.push_back(window_start);

        // mul(R[e_i], R[0], R[1]): same line sequence for either bit value.
        load(mul_code_, t.code_base);
        load(r0_, t.data_base);
        load(r1_, t.data_base);
        pad(t.copy_gap);
        load(target, t.data_base);
        reduce(target);

        // sqr(R[2], R[e_i]) runs through the same multiply code path.
        load(mul_code_, t.code_base);
        load(target, t.data_base);
        pad(t.copy_gap);
        load(r2_, t.data_base);
        reduce(r2_);

        // Stretch the window to the fixed period.
        Cycles used = 0;
        for (size_t i = window_start; i < steps.size(); ++i) used += steps[i].base_cycles;
        if (used < t.period) pad(static_cast<uint32_t>(t.period - used));
    }
    return out;
}

std::vector<uint8_t> RsaVictim::random_exponent(size_t bits, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<uint8_t> e(bits);
    for (auto& b : e) b = rng() & 1;
    if (!e.empty()) e[0] = 1;
    return e;
}

// ---------------------------------------------------------------------------
// Server process

ServerProcess::ServerProcess(const AesVictim& victim, const ServerConfig& cfg,
                             uint32_t core)
    : Process("aes-server", core, 0), aes_(&victim), cfg_(cfg), rng_(cfg.seed) {
    schedule_next(0);
}

ServerProcess::ServerProcess(const RsaVictim& victim, const ServerConfig& cfg,
                             uint32_t core)
    : Process("rsa-server", core, 0), rsa_(&victim), cfg_(cfg), rng_(cfg.seed) {
    schedule_next(0);
}

void ServerProcess::schedule_next(Cycles from) {
    double gap = static_cast<double>(cfg_.arrival_mean);
    if (cfg_.arrival_jitter > 0) {
        std::normal_distribution<double> n(0.0, static_cast<double>(cfg_.arrival_jitter));
        gap += n(rng_);
    }
    next_time = from + static_cast<Cycles>(std::max(1.0, gap));
}

void ServerProcess::begin_run(Machine& m) {
    GroundTruthRun run;
    run.start = m.now();
    if (aes_) {
        for (auto& b : run.plaintext) b = static_cast<uint8_t>(rng_());
        auto emitted = aes_->encrypt_script(run.plaintext, rng_);
        run.ciphertext = emitted.ciphertext;
        script_ = std::move(emitted.script);
        marker_last_round_ = emitted.last_round_first_step;
        marker_last_lookup_ = emitted.last_round_first_lookup;
    } else {
        auto emitted = rsa_->decrypt_script();
        script_ = std::move(emitted.script);
        window_marks_ = std::move(emitted.window_first_step);
        wi_ = 0;
    }
    runs_.push_back(std::move(run));
    running_ = true;
    step_idx_ = 0;
}

void ServerProcess::step(Machine& m) {
    if (!running_) begin_run(m);
    GroundTruthRun& run = runs_.back();

    if (step_idx_ >= script_.steps.size()) {
        run.end = m.now();
        run.done = true;
        running_ = false;
        ++completed_;
        if (completed_ >= cfg_.ops_count)
            next_time = kNever;
        else
            schedule_next(m.now());
        return;
    }

    if (aes_) {
        if (step_idx_ == marker_last_round_) run.last_round_start = m.now();
        if (step_idx_ == marker_last_lookup_) run.last_round_lookups_start = m.now();
    } else if (wi_ < window_marks_.size() && step_idx_ == window_marks_[wi_]) {
        windows_.push_back({m.now(), rsa_->exponent()[wi_]});
        ++wi_;
    }

    const ScriptStep& st = script_.steps[step_idx_++];
    Cycles dur = st.base_cycles;
    if (st.is_access) {
        const AccessOutcome o = m.access(st.addr, core());
        if (o.level_hit != Level::L1) dur += o.cost_cycles;
        if (line_of(st.addr) == cfg_.monitored_line)
            run.monitored_accesses.push_back({m.now() + dur, o.level_hit});
    }
    next_time = m.now() + dur;
}

}  // namespace snipe
