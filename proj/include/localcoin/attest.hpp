#pragma once

#include <set>
#include <stdexcept>
#include <tuple>

#include "localcoin/serialize.hpp"
#include "localcoin/types.hpp"

namespace localcoin {

struct ForgeryError : std::logic_error {
    using std::logic_error::logic_error;
};

// Framework stand-in for digital signatures. Only the node currently being
// driven by the simulator may mint attestations under its own id; everything
// else is a forgery and is refused. Handlers check genuineness of received
// attestations against the registry, so a hand-built Attestation value is
// dropped on arrival.
class AttestationRegistry {
public:
    static constexpr UserId kNobody = ~0ULL;

    void begin_acting(UserId id) { acting_ = id; }
    void end_acting() { acting_ = kNobody; }
    UserId acting() const { return acting_; }

    Attestation attest(UserId signer, const Digest& payload, TimeMs ts) {
        if (signer != acting_)
            throw ForgeryError("attestation mint refused: not acting as this user");
        Attestation a{signer, payload, ts};
        minted_.insert(key(a));
        return a;
    }

    // Scenario bootstrap (genesis endowments) mints outside any node turn.
    Attestation bootstrap_attest(UserId signer, const Digest& payload, TimeMs ts) {
        Attestation a{signer, payload, ts};
        minted_.insert(key(a));
        return a;
    }

    bool valid(const Attestation& a) const { return minted_.count(key(a)) > 0; }

private:
    static std::tuple<UserId, Digest, TimeMs> key(const Attestation& a) {
        return {a.signer, a.payload, a.timestamp};
    }

    UserId acting_ = kNobody;
    std::set<std::tuple<UserId, Digest, TimeMs>> minted_;
};

// Scoped acting guard so a thrown handler cannot leave the registry
// impersonating a node.
class ActingScope {
public:
    ActingScope(AttestationRegistry& reg, UserId id) : reg_(reg) { reg_.begin_acting(id); }
    ~ActingScope() { reg_.end_acting(); }
    ActingScope(const ActingScope&) = delete;
    ActingScope& operator=(const ActingScope&) = delete;

private:
    AttestationRegistry& reg_;
};

}  // namespace localcoin
