#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace localcoin {

// All monetary amounts are fixed-point milli-localcoins so conservation
// checks are exact integer arithmetic.
using Amount = std::int64_t;

// Simulation timestamps in milliseconds.
using TimeMs = std::int64_t;

using UserId = std::uint64_t;

constexpr Amount kMilli = 1;
constexpr Amount kCoin = 1000;

// Content digests are 256 bits. The algorithm behind digest() is pinned by
// this constant so stored logs and golden files stay stable.
inline constexpr const char* kDigestAlgorithm = "sha256";

struct Digest {
    std::array<std::uint8_t, 32> bytes{};

    auto operator<=>(const Digest&) const = default;

    bool is_zero() const {
        for (auto b : bytes)
            if (b != 0) return false;
        return true;
    }

    std::string hex() const {
        static const char* k = "0123456789abcdef";
        std::string s;
        s.reserve(64);
        for (auto b : bytes) {
            s.push_back(k[b >> 4]);
            s.push_back(k[b & 0xf]);
        }
        return s;
    }

    // Short prefix, handy for logs.
    std::string hex8() const { return hex().substr(0, 8); }

    static std::optional<Digest> from_hex(const std::string& s) {
        if (s.size() != 64) return std::nullopt;
        Digest d;
        auto nib = [](char c) -> int {
            if (c >= '0' && c <= '9') return c - '0';
            if (c >= 'a' && c <= 'f') return c - 'a' + 10;
            if (c >= 'A' && c <= 'F') return c - 'A' + 10;
            return -1;
        };
        for (size_t i = 0; i < 32; ++i) {
            int hi = nib(s[2 * i]), lo = nib(s[2 * i + 1]);
            if (hi < 0 || lo < 0) return std::nullopt;
            d.bytes[i] = static_cast<std::uint8_t>((hi << 4) | lo);
        }
        return d;
    }
};

struct DigestHash {
    size_t operator()(const Digest& d) const {
        size_t h;
        static_assert(sizeof(h) <= 32);
        __builtin_memcpy(&h, d.bytes.data(), sizeof(h));
        return h;
    }
};

// Normalized coordinates in the unit-square service area.
struct Location {
    double x = 0.0;
    double y = 0.0;

    bool operator==(const Location&) const = default;
};

inline double distance(const Location& a, const Location& b) {
    double dx = a.x - b.x, dy = a.y - b.y;
    return std::sqrt(dx * dx + dy * dy);
}

// A signed statement that `signer` vouches for `payload`. Stands in for a
// digital signature; genuineness is a framework guarantee checked against
// the scenario's attestation registry, never by cryptography.
struct Attestation {
    UserId signer = 0;
    Digest payload;
    TimeMs timestamp = 0;

    auto operator<=>(const Attestation&) const = default;
};

// The two-round payment message. Field layout on the wire is fixed; see
// docs/message_format.md.
struct Transaction {
    UserId sender = 0;
    UserId receiver = 0;
    std::vector<Digest> inputs;     // digests of the spent transactions
    Amount amount_to_receiver = 0;  // o_j
    Amount change = 0;              // o_i, back to the sender
    Amount tx_fee = 0;              // trf, to the first notifier
    Amount block_fee = 0;           // bf, shared by the verifier set
    Amount balance_note = 0;        // b_i, informational only
    TimeMs timestamp = 0;
    std::uint64_t seq = 0;   // sender-local sequence number
    Digest nonce;            // distinguishes otherwise identical transactions
    Attestation sender_attestation;

    bool is_genesis() const { return inputs.empty(); }

    bool operator==(const Transaction&) const = default;
};

// Sum of all declared outputs except the informational balance note.
inline Amount total_outputs(const Transaction& tx) {
    return tx.amount_to_receiver + tx.change + tx.tx_fee + tx.block_fee;
}

// Conservation: the inputs must pay for every output. b_i is informational
// and excluded. Genesis transactions (empty inputs) are exempt; they are
// minted only by scenario bootstrap.
struct ConservationError {
    std::string message;
};

inline bool check_conservation(const Transaction& tx,
                               const std::vector<Amount>& input_values) {
    if (input_values.size() != tx.inputs.size())
        throw ConservationError{"input value list does not match input count"};
    Amount in = 0;
    for (Amount v : input_values) in += v;
    return in == total_outputs(tx);
}

inline bool amounts_non_negative(const Transaction& tx) {
    return tx.amount_to_receiver >= 0 && tx.change >= 0 && tx.tx_fee >= 0 &&
           tx.block_fee >= 0;
}

// Acknowledgement emitted by the receiver once enough trusted co-signers
// vouched for the transaction. Names the user who gets the transaction fee.
struct Ack {
    Digest tx;
    UserId receiver = 0;
    UserId fee_recipient = 0;  // the first notifier
    Attestation attestation;

    bool operator==(const Ack&) const = default;
};

struct VerifierEntry {
    UserId user = 0;
    Location location;
    Attestation attestation;
    bool flagged_false = false;  // location claim rejected by a later hop
};

// Block under construction: BS transaction pairs plus the verifier lists
// accumulated while the message floods. The distance vector always has BS
// entries, one per transaction.
struct BlockProposal {
    Digest id;  // digest of (builder, tx set, build tick)
    std::vector<Transaction> transactions;
    std::vector<Ack> acks;
    std::vector<std::vector<VerifierEntry>> per_tx_verifiers;
    std::vector<double> distance_vector;
    std::vector<bool> conflict_zeroed;  // entry zeroed by the timestamp rule
    UserId builder = 0;
    Location builder_location;
    TimeMs built_at = 0;
};

struct Block {
    Digest id;  // digest over the contained transaction digests only
    std::vector<Transaction> transactions;
    std::vector<Ack> acks;
    // Final fee-sharing verifier set per transaction (the first mVu).
    std::vector<std::vector<VerifierEntry>> verifiers;
    // Per transaction, the blocks holding its input transactions.
    std::vector<std::vector<Digest>> parent_pointers;
    std::int64_t child_pointer_count = 0;
    TimeMs created_at = 0;
};

struct ProtocolParams {
    int mTr = 0;          // trusted co-signers required before an ack
    int BS = 1;           // transactions per block
    int mVu = 1;          // verifiers required per transaction
    double aVd = 0.0;     // minimum average verifier distance
    double r_cov = 0.1;   // normalized broadcast coverage radius
    // Algorithm-literal variant uses trusted(t) > mTr instead of >= mTr.
    bool strict_threshold = false;
};

inline bool params_valid(const ProtocolParams& p, std::string* why = nullptr) {
    auto fail = [&](const char* m) {
        if (why) *why = m;
        return false;
    };
    if (p.mTr < 0) return fail("mTr must be >= 0");
    if (p.BS < 1) return fail("BS must be >= 1");
    if (p.mVu < 1) return fail("mVu must be >= 1");
    if (p.aVd < 0.0 || p.aVd > 1.4142135623730951) return fail("aVd out of [0, sqrt(2)]");
    if (!(p.r_cov > 0.0) || p.r_cov > 1.0) return fail("r_cov out of (0, 1]");
    return true;
}

// Mean Euclidean distance over all unordered pairs.
struct GeometryError {
    std::string message;
};

inline double average_pairwise_distance(const std::vector<Location>& pts) {
    if (pts.size() < 2)
        throw GeometryError{"average_pairwise_distance needs at least 2 points"};
    double sum = 0.0;
    size_t n = pts.size();
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j) sum += distance(pts[i], pts[j]);
    return sum / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
}

}  // namespace localcoin
