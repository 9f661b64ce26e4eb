// Minimal single-node driving rig for protocol handler tests: a registry,
// trust graph and outbox without the full simulator loop.
#pragma once

#include <vector>

#include "localcoin/localcoin.hpp"

namespace harness {

using namespace localcoin;

struct Rig {
    ProtocolParams params;
    AttestationRegistry registry;
    BlockRegistry blocks;
    TrustGraph trust;
    EventLog log;
    std::vector<Envelope> outbox;
    std::uint64_t tick = 1;
    std::uint64_t messages_sent = 0;

    NodeEnv env() {
        NodeEnv e;
        e.params = &params;
        e.registry = &registry;
        e.blocks = &blocks;
        e.trust = &trust;
        e.log = &log;
        e.outbox = &outbox;
        e.tick = tick;
        e.now_ms = static_cast<TimeMs>(tick) * 1000;
        e.messages_sent = &messages_sent;
        return e;
    }

    NodeState make_node(UserId id, Location loc = {0.5, 0.5}) {
        NodeState n;
        n.id = id;
        n.location = loc;
        trust.try_emplace(id);
        return n;
    }

    void befriend(NodeState& a, NodeState& b) {
        a.trusted_network.insert(b.id);
        b.trusted_network.insert(a.id);
        trust[a.id].insert(b.id);
        trust[b.id].insert(a.id);
    }

    // One-way trust: `who` trusts `whom`.
    void trusts(NodeState& who, UserId whom) {
        who.trusted_network.insert(whom);
        trust[who.id].insert(whom);
    }

    template <typename F>
    auto act(NodeState& n, F&& fn) {
        NodeEnv e = env();
        ActingScope scope(registry, n.id);
        return fn(n, e);
    }

    void deliver(NodeState& to, Payload payload, UserId from, Location from_loc) {
        act(to, [&](NodeState& n, NodeEnv& e) {
            n.on_receive(e, Envelope{std::move(payload), from, from_loc, tick});
        });
    }

    // Deliver every staged envelope to each listed node, one round.
    void flood_round(std::vector<NodeState*> nodes) {
        std::vector<Envelope> batch;
        batch.swap(outbox);
        ++tick;
        for (const auto& e : batch)
            for (NodeState* n : nodes)
                if (n->id != e.relayer)
                    deliver(*n, e.payload, e.relayer, e.relayer_location);
    }

    // Endow users with verified starting funds via a bootstrap block.
    Block genesis(std::vector<NodeState*> nodes, Amount amount) {
        Block b;
        std::vector<Digest> tds;
        for (NodeState* n : nodes) {
            Transaction tx;
            tx.sender = n->id;
            tx.receiver = n->id;
            tx.amount_to_receiver = amount;
            tx.timestamp = 0;
            Bytes nb;
            wire::put_u64(nb, 0x67ULL);
            wire::put_u64(nb, n->id);
            tx.nonce = digest(nb);
            tx.sender_attestation =
                registry.bootstrap_attest(n->id, tx_core_digest(tx), 0);
            b.transactions.push_back(tx);
            tds.push_back(tx_digest(tx));
        }
        std::sort(tds.begin(), tds.end());
        b.id = block_content_digest(tds);
        b.acks.resize(b.transactions.size());
        for (size_t i = 0; i < b.transactions.size(); ++i) {
            b.acks[i].tx = tx_digest(b.transactions[i]);
            b.acks[i].receiver = b.transactions[i].receiver;
            b.acks[i].fee_recipient = b.transactions[i].receiver;
        }
        b.verifiers.resize(b.transactions.size());
        b.parent_pointers.resize(b.transactions.size());
        b.created_at = 0;
        blocks.canonical(b);
        blocks.mark_genesis(b.id);
        for (NodeState* n : nodes)
            act(*n, [&](NodeState& nd, NodeEnv& e) { nd.apply_block(e, b); });
        return b;
    }

    // Count staged envelopes of a given payload alternative.
    template <typename T>
    int staged() const {
        int c = 0;
        for (const auto& e : outbox)
            if (std::holds_alternative<T>(e.payload)) ++c;
        return c;
    }

    template <typename T>
    const T* last_staged() const {
        for (auto it = outbox.rbegin(); it != outbox.rend(); ++it)
            if (auto* p = std::get_if<T>(&it->payload)) return p;
        return nullptr;
    }
};

}  // namespace harness
