#pragma once

#include <variant>
#include <vector>

#include "localcoin/types.hpp"

namespace localcoin {

// Transaction flood message. Co-signatures accumulate on the envelope as
// trusted users vouch for the payment; the serialized transaction itself
// never changes, which keeps the wire-size law exact.
struct TxMessage {
    Transaction tx;
    std::vector<Attestation> co_signatures;
};

struct AckMessage {
    Ack ack;
};

struct ProposalMessage {
    BlockProposal proposal;
};

struct BlockMessage {
    Block block;
};

// Double-spend alert carrying both digests; the earlier-stamped transaction
// is the survivor.
struct AlertMessage {
    Digest earlier_tx;
    Digest later_tx;
    UserId reporter = 0;
};

struct SyncRequest {
    UserId requester = 0;
    UserId target = 0;
    TimeMs since = 0;
};

struct SyncResponse {
    UserId requester = 0;
    UserId target = 0;
    std::vector<Block> blocks;
    std::vector<Digest> deleted;
};

using Payload = std::variant<TxMessage, AckMessage, ProposalMessage, BlockMessage,
                             AlertMessage, SyncRequest, SyncResponse>;

// A broadcast in flight. relayer_location is the location the forwarder
// claims; honest nodes stamp their true position, colluders may lie.
struct Envelope {
    Payload payload;
    UserId relayer = 0;
    Location relayer_location;
    std::uint64_t sent_tick = 0;
};

}  // namespace localcoin
