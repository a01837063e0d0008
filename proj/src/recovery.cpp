#include "snipe/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "snipe/victims.hpp"

namespace snipe {

KeyHypothesisSet::KeyHypothesisSet() {
    for (auto& b : alive_) b.set();
}

size_t KeyHypothesisSet::candidates(int byte_pos) const {
    return alive_[byte_pos].count();
}

double KeyHypothesisSet::key_search_space() const {
    double bits = 0;
    for (const auto& b : alive_) {
        const size_t n = b.count();
        if (n == 0) throw RecoveryError("all candidates eliminated for a key byte");
        bits += std::log2(double(n));
    }
    return bits;
}

size_t KeyHypothesisSet::rank(int byte_pos, uint8_t value) const {
    size_t r = 0;
    for (int v = 0; v < 256; ++v)
        if (v != value && alive_[byte_pos][v] &&
            scores_[byte_pos][v] >= scores_[byte_pos][value])
            ++r;
    return r;
}

std::array<uint8_t, 16> KeyHypothesisSet::best_key() const {
    std::array<uint8_t, 16> key{};
    for (int i = 0; i < 16; ++i) {
        double best = -1e300;
        for (int v = 0; v < 256; ++v)
            if (alive_[i][v] && scores_[i][v] > best) {
                best = scores_[i][v];
                key[i] = static_cast<uint8_t>(v);
            }
    }
    return key;
}

namespace {

// Key bytes implied by "some lookup into `line` produced ciphertext byte c".
template <typename Fn>
void for_each_implicated(uint8_t ct_byte, uint32_t line, Fn&& fn) {
    const auto& sbox = Aes128::sbox();
    for (uint32_t j = line * 64; j < line * 64 + 64; ++j)
        fn(static_cast<uint8_t>(ct_byte ^ sbox[j]));
}

}  // namespace

void aes_eliminate(KeyHypothesisSet& hyp, const std::array<uint8_t, 16>& ciphertext,
                   uint32_t line) {
    for (int i = 0; i < 16; ++i)
        for_each_implicated(ciphertext[i], line,
                            [&](uint8_t k) { hyp.eliminate(i, k); });
}

void aes_score_nonaccess(KeyHypothesisSet& hyp,
                         const std::array<uint8_t, 16>& ciphertext, uint32_t line,
                         double penalty) {
    for (int i = 0; i < 16; ++i)
        for_each_implicated(ciphertext[i], line,
                            [&](uint8_t k) { hyp.add_score(i, k, -penalty); });
}

std::array<uint8_t, 16> invert_last_round_key(const std::array<uint8_t, 16>& k10) {
    static constexpr uint8_t rcon[10] = {0x01, 0x02, 0x04, 0x08, 0x10,
                                         0x20, 0x40, 0x80, 0x1b, 0x36};
    const auto& sbox = Aes128::sbox();
    std::array<uint8_t, 16> k = k10;
    for (int r = 10; r >= 1; --r) {
        std::array<uint8_t, 16> prev{};
        for (int i = 15; i >= 4; --i) prev[i] = k[i] ^ k[i - 4];
        prev[0] = k[0] ^ sbox[prev[13]] ^ rcon[r - 1];
        prev[1] = k[1] ^ sbox[prev[14]];
        prev[2] = k[2] ^ sbox[prev[15]];
        prev[3] = k[3] ^ sbox[prev[12]];
        k = prev;
    }
    return k;
}

// ---------------------------------------------------------------------------

RsaDecodeResult rsa_decode(const std::vector<RsaObservation>& obs, size_t n_bits,
                           Cycles t0, Cycles period, double align_tolerance) {
    if (obs.empty()) throw RecoveryError("EMPTY_TRACE: no observations to decode");
    if (n_bits == 0 || period == 0)
        throw std::invalid_argument("rsa_decode needs a bit count and a period");

    const double tol = align_tolerance * double(period);
    std::vector<int> votes(n_bits, 0);
    std::vector<bool> seen(n_bits, false);
    RsaDecodeResult res;

    // Window durations accumulate small stalls, so align each observation
    // to the previous accepted one instead of an absolute grid.
    std::vector<RsaObservation> sorted = obs;
    std::sort(sorted.begin(), sorted.end(),
              [](const RsaObservation& a, const RsaObservation& b) { return a.at < b.at; });

    // Effective period: windows run longer than nominal by their stall
    // cycles, and a stale nominal period makes residuals grow without
    // bound across detection gaps. Median of the single-window sample
    // gaps rejects outliers, then a trimmed mean around it recovers the
    // true average spacing.
    double period_hat = double(period);
    std::vector<double> gaps;
    for (size_t i = 1; i < sorted.size(); ++i) {
        const double d = double(sorted[i].at) - double(sorted[i - 1].at);
        if (d > 0.5 * double(period) && d < 1.5 * double(period)) gaps.push_back(d);
    }
    if (gaps.size() >= 8) {
        std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
        const double med = gaps[gaps.size() / 2];
        double sum = 0;
        size_t n = 0;
        for (double d : gaps)
            if (std::abs(d - med) <= 0.05 * med) {
                sum += d;
                ++n;
            }
        if (n) period_hat = sum / double(n);
    }

    double anchor_t = double(t0);
    long long anchor_w = 0;
    for (const auto& o : sorted) {
        const double rel = double(o.at) - anchor_t;
        const long long k = std::llround(rel / period_hat);
        const long long w = anchor_w + k;
        if (w < 0 || w >= static_cast<long long>(n_bits) ||
            std::abs(rel - double(k) * period_hat) > tol) {
            ++res.discarded;
            continue;
        }
        votes[w] += o.accessed ? 1 : -1;
        seen[w] = true;
        anchor_t = double(o.at);
        anchor_w = w;
    }

    res.bits.resize(n_bits, 0);
    for (size_t w = 0; w < n_bits; ++w) {
        if (!seen[w]) {
            ++res.missing_windows;
            continue;
        }
        ++res.voted_windows;
        res.bits[w] = votes[w] > 0 ? 1 : 0;
    }
    return res;
}

// ---------------------------------------------------------------------------

double DetectionStats::precision() const {
    const size_t d = true_positives + false_positives;
    return d ? double(true_positives) / d : 0.0;
}

double DetectionStats::recall() const {
    const size_t d = true_positives + false_negatives;
    return d ? double(true_positives) / d : 0.0;
}

DetectionStats match_detections(std::vector<Cycles> detections,
                                std::vector<Cycles> truth, Cycles tolerance) {
    std::sort(detections.begin(), detections.end());
    std::sort(truth.begin(), truth.end());
    DetectionStats st;
    size_t i = 0, j = 0;
    while (i < detections.size() && j < truth.size()) {
        const Cycles d = detections[i], t = truth[j];
        const Cycles gap = d > t ? d - t : t - d;
        if (gap <= tolerance) {
            ++st.true_positives;
            ++i;
            ++j;
        } else if (d < t) {
            ++st.false_positives;
            ++i;
        } else {
            ++st.false_negatives;
            ++j;
        }
    }
    st.false_positives += detections.size() - i;
    st.false_negatives += truth.size() - j;
    return st;
}

size_t bit_errors(const std::vector<uint8_t>& a, const std::vector<uint8_t>& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("bit_errors requires equal-length sequences");
    size_t n = 0;
    for (size_t i = 0; i < a.size(); ++i) n += a[i] != b[i];
    return n;
}

}  // namespace snipe
