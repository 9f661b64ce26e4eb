#pragma once

#include <cstring>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "localcoin/types.hpp"

namespace localcoin {

using Bytes = std::vector<std::uint8_t>;

inline Digest digest(std::span<const std::uint8_t> content) {
    Digest d;
    unsigned int len = 0;
    if (EVP_Digest(content.data(), content.size(), d.bytes.data(), &len,
                   EVP_sha256(), nullptr) != 1 ||
        len != 32)
        throw std::runtime_error("digest computation failed");
    return d;
}

inline Digest digest(const Bytes& content) {
    return digest(std::span<const std::uint8_t>(content.data(), content.size()));
}

inline Digest digest(const std::string& content) {
    return digest(std::span<const std::uint8_t>(
        reinterpret_cast<const std::uint8_t*>(content.data()), content.size()));
}

namespace wire {

// Little-endian fixed-width writer/reader. Field order follows the type
// declarations; the byte-offset table lives in docs/message_format.md.

inline void put_u64(Bytes& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_i64(Bytes& out, std::int64_t v) {
    put_u64(out, static_cast<std::uint64_t>(v));
}

inline void put_digest(Bytes& out, const Digest& d) {
    out.insert(out.end(), d.bytes.begin(), d.bytes.end());
}

struct Reader {
    std::span<const std::uint8_t> buf;
    size_t pos = 0;

    bool need(size_t n) const { return pos + n <= buf.size(); }

    std::uint64_t u64() {
        if (!need(8)) throw std::runtime_error("wire: truncated u64");
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(buf[pos + i]) << (8 * i);
        pos += 8;
        return v;
    }

    std::int64_t i64() { return static_cast<std::int64_t>(u64()); }

    Digest dig() {
        if (!need(32)) throw std::runtime_error("wire: truncated digest");
        Digest d;
        std::memcpy(d.bytes.data(), buf.data() + pos, 32);
        pos += 32;
        return d;
    }

    bool done() const { return pos == buf.size(); }
};

inline void put_attestation(Bytes& out, const Attestation& a) {
    put_u64(out, a.signer);
    put_digest(out, a.payload);
    put_i64(out, a.timestamp);
}

inline Attestation get_attestation(Reader& r) {
    Attestation a;
    a.signer = r.u64();
    a.payload = r.dig();
    a.timestamp = r.i64();
    return a;
}

}  // namespace wire

constexpr size_t kTransactionFixedBytes = 160;
constexpr size_t kInputBytes = 32;
constexpr size_t kAckBytes = 96;

// |output| == 32 * |inputs| + 160, always.
inline Bytes serialize_transaction(const Transaction& tx) {
    Bytes out;
    out.reserve(kTransactionFixedBytes + kInputBytes * tx.inputs.size());
    wire::put_u64(out, tx.sender);
    wire::put_u64(out, tx.receiver);
    wire::put_u64(out, tx.inputs.size());
    for (const auto& in : tx.inputs) wire::put_digest(out, in);
    wire::put_i64(out, tx.amount_to_receiver);
    wire::put_i64(out, tx.change);
    wire::put_i64(out, tx.tx_fee);
    wire::put_i64(out, tx.block_fee);
    wire::put_i64(out, tx.balance_note);
    wire::put_i64(out, tx.timestamp);
    wire::put_u64(out, tx.seq);
    wire::put_digest(out, tx.nonce);
    wire::put_attestation(out, tx.sender_attestation);
    return out;
}

inline std::optional<Transaction> deserialize_transaction(
    std::span<const std::uint8_t> buf) {
    wire::Reader r{buf};
    try {
        Transaction tx;
        tx.sender = r.u64();
        tx.receiver = r.u64();
        std::uint64_t n = r.u64();
        if (n > (buf.size() - 24) / kInputBytes) return std::nullopt;
        tx.inputs.reserve(n);
        for (std::uint64_t i = 0; i < n; ++i) tx.inputs.push_back(r.dig());
        tx.amount_to_receiver = r.i64();
        tx.change = r.i64();
        tx.tx_fee = r.i64();
        tx.block_fee = r.i64();
        tx.balance_note = r.i64();
        tx.timestamp = r.i64();
        tx.seq = r.u64();
        tx.nonce = r.dig();
        tx.sender_attestation = wire::get_attestation(r);
        if (!r.done()) return std::nullopt;
        return tx;
    } catch (const std::runtime_error&) {
        return std::nullopt;
    }
}

// Identity of a transaction is the hash of its full wire form.
inline Digest tx_digest(const Transaction& tx) {
    return digest(serialize_transaction(tx));
}

// What the sender attests: the transaction with its attestation zeroed.
inline Digest tx_core_digest(const Transaction& tx) {
    Transaction t = tx;
    t.sender_attestation = Attestation{};
    return digest(serialize_transaction(t));
}

inline Bytes serialize_ack(const Ack& a) {
    Bytes out;
    out.reserve(kAckBytes);
    wire::put_digest(out, a.tx);
    wire::put_u64(out, a.receiver);
    wire::put_u64(out, a.fee_recipient);
    wire::put_attestation(out, a.attestation);
    return out;
}

inline std::optional<Ack> deserialize_ack(std::span<const std::uint8_t> buf) {
    if (buf.size() != kAckBytes) return std::nullopt;
    wire::Reader r{buf};
    Ack a;
    a.tx = r.dig();
    a.receiver = r.u64();
    a.fee_recipient = r.u64();
    a.attestation = wire::get_attestation(r);
    return a;
}

inline Digest ack_digest(const Ack& a) { return digest(serialize_ack(a)); }

// Block identity covers the contained transaction digests only, so that
// simultaneous create messages for the same content collapse to one block.
inline Digest block_content_digest(const std::vector<Digest>& tx_digests) {
    Bytes out;
    out.reserve(8 + 32 * tx_digests.size());
    wire::put_u64(out, tx_digests.size());
    for (const auto& d : tx_digests) wire::put_digest(out, d);
    return digest(out);
}

}  // namespace localcoin
