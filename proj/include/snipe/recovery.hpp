#pragma once

#include <array>
#include <bitset>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "snipe/machine.hpp"

namespace snipe {

struct RecoveryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// AES last-round key hypotheses: per byte position a candidate set plus an
// additive score used when observations are noisy.

class KeyHypothesisSet {
public:
    KeyHypothesisSet();

    size_t candidates(int byte_pos) const;
    bool alive(int byte_pos, uint8_t value) const { return alive_[byte_pos][value]; }
    void eliminate(int byte_pos, uint8_t value) { alive_[byte_pos][value] = false; }

    double score(int byte_pos, uint8_t value) const { return scores_[byte_pos][value]; }
    void add_score(int byte_pos, uint8_t value, double s) { scores_[byte_pos][value] += s; }

    // Remaining brute-force work: sum over bytes of log2(candidate count).
    double key_search_space() const;

    // 0 when `value` has the strictly best score at its position.
    size_t rank(int byte_pos, uint8_t value) const;

    std::array<uint8_t, 16> best_key() const;

private:
    std::array<std::bitset<256>, 16> alive_;
    std::array<std::array<double, 256>, 16> scores_{};
};

// A noiseless "table line untouched during the last round" observation:
// every key byte that would have required a lookup into `line` is ruled out.
void aes_eliminate(KeyHypothesisSet& hyp, const std::array<uint8_t, 16>& ciphertext,
                   uint32_t line);

// Noisy variant: penalize the implicated candidates instead of killing them.
void aes_score_nonaccess(KeyHypothesisSet& hyp,
                         const std::array<uint8_t, 16>& ciphertext, uint32_t line,
                         double penalty = 1.0);

// Walk the AES-128 key schedule backwards from the round-10 key.
std::array<uint8_t, 16> invert_last_round_key(const std::array<uint8_t, 16>& k10);

// ---------------------------------------------------------------------------
// RSA exponent decoding from timed window observations.

struct RsaObservation {
    Cycles at = 0;      // when the probe result was obtained
    bool accessed = false;
};

struct RsaDecodeResult {
    std::vector<uint8_t> bits;
    size_t voted_windows = 0;   // windows with at least one observation
    size_t missing_windows = 0;
    size_t discarded = 0;       // observations outside the alignment tolerance
};

// Assign observations to exponent-bit windows on a fixed period anchored at
// t0 and majority-vote each bit. Throws RecoveryError("EMPTY_TRACE") when
// there is nothing to decode.
RsaDecodeResult rsa_decode(const std::vector<RsaObservation>& obs, size_t n_bits,
                           Cycles t0, Cycles period, double align_tolerance = 0.1);

// ---------------------------------------------------------------------------
// Detection quality against ground truth.

struct DetectionStats {
    size_t true_positives = 0;
    size_t false_positives = 0;
    size_t false_negatives = 0;
    double precision() const;
    double recall() const;
};

// Greedy one-to-one matching of detection times to truth times.
DetectionStats match_detections(std::vector<Cycles> detections,
                                std::vector<Cycles> truth, Cycles tolerance);

size_t bit_errors(const std::vector<uint8_t>& a, const std::vector<uint8_t>& b);

}  // namespace snipe
