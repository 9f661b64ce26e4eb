#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "localcoin/attest.hpp"
#include "localcoin/chain.hpp"
#include "localcoin/event_log.hpp"
#include "localcoin/messages.hpp"
#include "localcoin/serialize.hpp"
#include "localcoin/types.hpp"

namespace localcoin {

inline Digest ack_core_digest(const Ack& a) {
    Ack t = a;
    t.attestation = Attestation{};
    return digest(serialize_ack(t));
}

// Equal split of a block fee among the fee-sharing verifiers; the remainder
// goes one milli at a time to the lowest user ids so the economy stays
// closed under integer division.
inline std::map<UserId, Amount> split_block_fee(Amount bf,
                                                const std::vector<UserId>& users) {
    std::map<UserId, Amount> shares;
    if (users.empty() || bf <= 0) return shares;
    std::vector<UserId> sorted = users;
    std::sort(sorted.begin(), sorted.end());
    Amount q = bf / static_cast<Amount>(sorted.size());
    Amount r = bf % static_cast<Amount>(sorted.size());
    for (size_t i = 0; i < sorted.size(); ++i)
        shares[sorted[i]] += q + (static_cast<Amount>(i) < r ? 1 : 0);
    return shares;
}

enum class NodeRole { honest, colluder, attacker };

enum class ColluderPolicy {
    forward_all,           // relay every message, never flag conflicts
    suppress_cross_region  // relay nothing: a silent band creates the cut
};

// Receiver-side record for a payment awaiting enough trusted co-signers.
struct PendingRecord {
    static constexpr UserId kNoNotifier = ~0ULL;
    UserId first_notifier = kNoNotifier;
    std::set<UserId> trusted_signers;
    bool acked = false;

    int trusted_count() const { return static_cast<int>(trusted_signers.size()); }
};

enum class TxStatus { pending, verified, spent };

struct TxRecord {
    Transaction tx;
    TxStatus status = TxStatus::pending;
    std::set<UserId> co_signers;
    std::vector<Attestation> co_signatures;
    bool disputed = false;  // lost a double-spend tiebreak; never relayed again
    bool have_ack = false;
    Ack ack;
    std::uint64_t stored_tick = 0;
    std::uint64_t ack_seen_tick = 0;
};

struct ProposalState {
    BlockProposal copy;  // best-merged view of the flooding proposal
    bool created = false;
    std::uint64_t first_seen_tick = 0;
    std::uint64_t last_relay_tick = ~0ULL;
};

using TrustGraph = std::map<UserId, std::set<UserId>>;

// Canonical block contents per id. Simultaneous create messages for the
// same transaction set collapse onto whichever registered first, so every
// node settles identical fee assignments.
class BlockRegistry {
public:
    const Block& canonical(const Block& b) {
        auto [it, fresh] = blocks_.try_emplace(b.id, b);
        (void)fresh;
        return it->second;
    }

    bool known(const Digest& id) const { return blocks_.count(id) > 0; }

    const std::map<Digest, Block>& all() const { return blocks_; }

    void mark_genesis(const Digest& id) { genesis_.insert(id); }
    bool is_genesis(const Digest& id) const { return genesis_.count(id) > 0; }

private:
    std::map<Digest, Block> blocks_;
    std::set<Digest> genesis_;
};

// Everything a node handler needs from the simulator for one turn.
struct NodeEnv {
    const ProtocolParams* params = nullptr;
    AttestationRegistry* registry = nullptr;
    BlockRegistry* blocks = nullptr;
    const TrustGraph* trust = nullptr;
    EventLog* log = nullptr;
    std::vector<Envelope>* outbox = nullptr;
    std::uint64_t tick = 0;
    TimeMs now_ms = 0;
    std::uint64_t* messages_sent = nullptr;
    // Trace replay has no radio geometry; location plausibility checks are
    // meaningless there and stay off.
    bool trace_mode = false;

    bool trusts(UserId who, UserId whom) const {
        auto it = trust->find(who);
        return it != trust->end() && it->second.count(whom) > 0;
    }
};

class NodeState {
public:
    UserId id = 0;
    Location location;
    NodeRole role = NodeRole::honest;
    ColluderPolicy policy = ColluderPolicy::forward_all;
    int region_side = 0;  // suppress_cross_region membership marker

    std::set<UserId> trusted_network;

    std::map<Digest, TxRecord> tx_db;
    std::map<Digest, PendingRecord> pending_list;
    chain::ChainView chain;

    Amount balance() const {
        Amount sum = 0;
        for (const auto& [d, v] : my_entitlements_) sum += v;
        return sum;
    }

    const std::map<Digest, Amount>& entitlements() const { return my_entitlements_; }

    std::uint64_t seq_counter = 0;
    TimeMs last_update_ms = 0;

    // ---- outbound -------------------------------------------------------

    void emit(NodeEnv& env, Payload payload) {
        env.outbox->push_back(Envelope{std::move(payload), id, location, env.tick});
        if (env.messages_sent) ++*env.messages_sent;
    }

    // Create and broadcast a payment. Fails without emitting anything when
    // the verified unspent balance cannot cover amount plus fees.
    std::optional<Digest> send(NodeEnv& env, UserId receiver, Amount amount,
                               Amount trf, Amount bf, const Digest& nonce) {
        Amount need = amount + trf + bf;
        std::vector<Digest> chosen;
        Amount gathered = 0;
        for (const auto& [d, v] : my_entitlements_) {
            if (v <= 0) continue;
            if (pending_claims_.count({d, id})) continue;  // already promised
            chosen.push_back(d);
            gathered += v;
            if (gathered >= need) break;
        }
        if (gathered < need) {
            env.log->add(env.tick, static_cast<std::int64_t>(id), event_kind::tx_refused,
                         {}, std::to_string(receiver), amount);
            return std::nullopt;
        }
        Transaction tx;
        tx.sender = id;
        tx.receiver = receiver;
        tx.inputs = chosen;
        tx.amount_to_receiver = amount;
        tx.change = gathered - need;
        tx.tx_fee = trf;
        tx.block_fee = bf;
        tx.balance_note = balance();
        tx.timestamp = env.now_ms;
        tx.seq = seq_counter++;
        tx.nonce = nonce;
        tx.sender_attestation = env.registry->attest(id, tx_core_digest(tx), env.now_ms);
        Digest d = tx_digest(tx);

        TxRecord rec;
        rec.tx = tx;
        rec.stored_tick = env.tick;
        tx_db[d] = rec;
        for (const auto& in : chosen) pending_claims_[{in, id}] = d;
        log_tx_created(env, tx, d, event_kind::tx_created);
        emit(env, TxMessage{tx, {}});
        return d;
    }

    // Adversarial variant: spends the given inputs regardless of local
    // claims (the attacker reuses the same input across fakes).
    Digest send_unchecked(NodeEnv& env, UserId receiver, Amount amount, Amount trf,
                          Amount bf, const std::vector<Digest>& inputs, Amount declared_in,
                          const Digest& nonce) {
        Transaction tx;
        tx.sender = id;
        tx.receiver = receiver;
        tx.inputs = inputs;
        tx.amount_to_receiver = amount;
        tx.change = declared_in - amount - trf - bf;
        tx.tx_fee = trf;
        tx.block_fee = bf;
        tx.balance_note = balance();
        tx.timestamp = env.now_ms;
        tx.seq = seq_counter++;
        tx.nonce = nonce;
        tx.sender_attestation = env.registry->attest(id, tx_core_digest(tx), env.now_ms);
        Digest d = tx_digest(tx);
        TxRecord rec;
        rec.tx = tx;
        rec.stored_tick = env.tick;
        tx_db[d] = rec;
        log_tx_created(env, tx, d, event_kind::fake_created);
        emit(env, TxMessage{tx, {}});
        return d;
    }

    // ---- inbound --------------------------------------------------------

    void on_receive(NodeEnv& env, const Envelope& e) {
        if (role == NodeRole::colluder && policy == ColluderPolicy::suppress_cross_region) {
            // Silent membrane: store nothing, relay nothing.
            return;
        }
        std::visit(
            [&](const auto& msg) { handle(env, msg, e.relayer, e.relayer_location); },
            e.payload);
    }

    // Advice from the simulator that the radio neighborhood changed; this is
    // what keeps store-carry-forward going after the initial flood.
    void on_contacts_changed(NodeEnv& env, const std::vector<UserId>& gained) {
        if (gained.empty()) return;
        if (role == NodeRole::colluder && policy == ColluderPolicy::suppress_cross_region)
            return;
        for (auto& [d, rec] : tx_db) {
            if (rec.status != TxStatus::pending || rec.disputed) continue;
            if (relay_tick_.count(d) && relay_tick_[d] == env.tick) continue;
            relay_tick_[d] = env.tick;
            emit(env, TxMessage{rec.tx, rec.co_signatures});
            if (rec.have_ack) emit(env, AckMessage{rec.ack});
        }
        for (auto& [pid, st] : proposals_) {
            if (st.created || env.tick - st.first_seen_tick > kProposalTtlTicks) continue;
            if (st.last_relay_tick == env.tick) continue;
            st.last_relay_tick = env.tick;
            emit(env, ProposalMessage{st.copy});
        }
        for (UserId peer : gained) {
            if (!trusted_network.count(peer)) continue;
            auto it = last_sync_tick_.find(peer);
            if (it != last_sync_tick_.end() && env.tick - it->second < kSyncCooldownTicks)
                continue;
            last_sync_tick_[peer] = env.tick;
            env.log->add(env.tick, static_cast<std::int64_t>(id), event_kind::sync_request,
                         {}, std::to_string(peer), last_update_ms);
            emit(env, SyncRequest{id, peer, last_update_ms});
        }
    }

    // Collect BS acked-but-unverified pairs, oldest first, and float a block
    // proposal. No-op below the threshold.
    void build_block(NodeEnv& env) {
        const int BS = env.params->BS;
        std::vector<std::pair<std::pair<std::uint64_t, Digest>, const TxRecord*>> eligible;
        for (const auto& [d, rec] : tx_db)
            if (rec.status == TxStatus::pending && rec.have_ack && !rec.disputed)
                eligible.push_back({{rec.ack_seen_tick, d}, &rec});
        if (static_cast<int>(eligible.size()) < BS) return;
        std::sort(eligible.begin(), eligible.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        eligible.resize(BS);

        std::vector<Digest> tds;
        for (const auto& [k, rec] : eligible) tds.push_back(k.second);
        std::vector<Digest> sorted = tds;
        std::sort(sorted.begin(), sorted.end());
        Digest set_id = block_content_digest(sorted);
        if (built_sets_.count(set_id)) return;
        built_sets_.insert(set_id);

        BlockProposal p;
        {
            Bytes ident;
            wire::put_u64(ident, id);
            wire::put_digest(ident, set_id);
            wire::put_u64(ident, env.tick);
            p.id = digest(ident);
        }
        p.builder = id;
        p.builder_location = location;
        p.built_at = env.now_ms;
        for (const auto& [k, rec] : eligible) {
            p.transactions.push_back(rec->tx);
            p.acks.push_back(rec->ack);
            std::vector<VerifierEntry> entries;
            if (can_validate(rec->tx))
                entries.push_back(
                    {id, location, env.registry->attest(id, k.second, env.now_ms), false});
            p.per_tx_verifiers.push_back(std::move(entries));
            p.distance_vector.push_back(0.0);
            p.conflict_zeroed.push_back(false);
        }
        env.log->add(env.tick, static_cast<std::int64_t>(id), event_kind::proposal_built,
                     p.id.hex(), {}, BS);
        auto& st = proposals_[p.id];
        st.copy = p;
        st.first_seen_tick = env.tick;
        st.last_relay_tick = env.tick;
        emit(env, ProposalMessage{p});
        try_create_block(env, st);
    }

    // ---- direct protocol operations (also used by tests) -----------------

    bool apply_block(NodeEnv& env, const Block& incoming) {
        const Block& b = env.blocks->canonical(incoming);
        if (chain.contains(b.id)) return false;
        bool genesis = env.blocks->is_genesis(b.id);
        if (!genesis && !block_passes_gates(env, b)) return false;

        // A block that spends an input some applied transaction already
        // consumed is a double spend; alert and refuse it.
        for (const auto& tx : b.transactions) {
            Digest d = tx_digest(tx);
            for (const auto& in : tx.inputs) {
                auto it = consumed_.find({in, tx.sender});
                if (it != consumed_.end() && it->second != d) {
                    env.log->add(env.tick, static_cast<std::int64_t>(id),
                                 event_kind::block_rejected, b.id.hex(), d.hex(), 0);
                    alert(env, it->second, d);
                    return false;
                }
            }
        }

        for (size_t i = 0; i < b.transactions.size(); ++i) {
            const Transaction& tx = b.transactions[i];
            Digest d = tx_digest(tx);
            auto [rit, learned] = tx_db.try_emplace(d);
            TxRecord& rec = rit->second;
            if (learned) {
                rec.tx = tx;  // first sight of this transaction is the block
                rec.stored_tick = env.tick;
                env.log->add(env.tick, static_cast<std::int64_t>(id),
                             event_kind::tx_stored, d.hex(), {}, 0);
            }
            rec.status = TxStatus::verified;
            rec.disputed = false;
            if (i < b.acks.size()) {
                rec.have_ack = true;
                rec.ack = b.acks[i];
            }
            for (const auto& in : tx.inputs) {
                consumed_[{in, tx.sender}] = d;
                pending_claims_.erase({in, tx.sender});
                if (tx.sender == id) my_entitlements_.erase(in);
            }
            credit_entitlements(env, b, i, d);
            pending_list.erase(d);
        }
        chain.insert_block(b);
        last_update_ms = std::max(last_update_ms, b.created_at);
        env.log->add(env.tick, static_cast<std::int64_t>(id), event_kind::block_applied,
                     b.id.hex(), {}, static_cast<std::int64_t>(b.transactions.size()));
        garbage_collect(env, b);
        return true;
    }

    // Receiver-side processing of a payment addressed to this node.
    void process(NodeEnv& env, const Digest& d, UserId from) {
        auto rit = tx_db.find(d);
        if (rit == tx_db.end() || rit->second.disputed) return;
        TxRecord& rec = rit->second;
        if (rec.status != TxStatus::pending) return;
        PendingRecord& pr = pending_list[d];
        if (pr.first_notifier == PendingRecord::kNoNotifier) pr.first_notifier = from;
        for (UserId s : rec.co_signers)
            if (trusted_network.count(s)) pr.trusted_signers.insert(s);
        const int mTr = env.params->mTr;
        bool met = env.params->strict_threshold ? pr.trusted_count() > mTr
                                                : pr.trusted_count() >= mTr;
        if (met && !pr.acked) {
            pr.acked = true;
            Ack a;
            a.tx = d;
            a.receiver = id;
            a.fee_recipient = pr.first_notifier;
            a.attestation = env.registry->attest(id, ack_core_digest(a), env.now_ms);
            rec.have_ack = true;
            rec.ack = a;
            rec.ack_seen_tick = env.tick;
            env.log->add(env.tick, static_cast<std::int64_t>(id), event_kind::ack_emitted,
                         d.hex(), std::to_string(a.fee_recipient), 0);
            emit(env, AckMessage{a});
        }
    }

    void garbage_collect(NodeEnv& env, const Block& b) {
        std::set<Digest> touched;
        for (const auto& tx : b.transactions)
            for (const auto& in : tx.inputs) touched.insert(in);
        for (const auto& in : touched) {
            if (!fully_consumed(in)) continue;
            auto it = tx_db.find(in);
            if (it != tx_db.end()) it->second.status = TxStatus::spent;
            std::int64_t removed = chain.consume_tx(in);
            if (removed > 0)
                env.log->add(env.tick, static_cast<std::int64_t>(id), event_kind::gc_links,
                             in.hex(), {}, removed);
        }
        bool progress = true;
        while (progress) {
            progress = false;
            for (const Digest& cand : chain.orphan_candidates()) {
                const Block* blk = chain.find(cand);
                if (!blk) continue;
                bool all_spent = true;
                for (const auto& tx : blk->transactions)
                    if (!fully_consumed(tx_digest(tx))) {
                        all_spent = false;
                        break;
                    }
                if (!all_spent) continue;
                env.log->add(env.tick, static_cast<std::int64_t>(id),
                             event_kind::gc_block_deleted, cand.hex(), {}, 0);
                deleted_log_.push_back({env.now_ms, cand});
                chain.remove_block(cand);
                progress = true;
                break;
            }
        }
    }

    // ---- inspection ------------------------------------------------------

    bool holds_tx(const Digest& d) const { return tx_db.count(d) > 0; }

    TxStatus status_of(const Digest& d) const {
        auto it = tx_db.find(d);
        return it == tx_db.end() ? TxStatus::pending : it->second.status;
    }

    bool acked(const Digest& d) const {
        auto it = pending_list.find(d);
        return it != pending_list.end() && it->second.acked;
    }

    // Spendable value of `user` in verified transaction `in`, judged from
    // this node's stores; nullopt when it cannot resolve the transaction.
    std::optional<Amount> entitlement_of(const Digest& in, UserId user) const {
        const Digest* home = chain.block_of_tx(in);
        if (!home) return std::nullopt;
        const Block* blk = chain.find(*home);
        if (!blk) return std::nullopt;
        for (size_t i = 0; i < blk->transactions.size(); ++i) {
            const Transaction& tx = blk->transactions[i];
            if (tx_digest(tx) != in) continue;
            Amount v = 0;
            if (tx.receiver == user) v += tx.amount_to_receiver;
            if (tx.sender == user) v += tx.change;
            if (i < blk->acks.size() && blk->acks[i].fee_recipient == user)
                v += tx.tx_fee;
            if (tx.block_fee > 0 && i < blk->verifiers.size()) {
                std::vector<UserId> vs;
                for (const auto& e : blk->verifiers[i]) vs.push_back(e.user);
                auto shares = split_block_fee(tx.block_fee, vs);
                if (auto s = shares.find(user); s != shares.end()) v += s->second;
            }
            return v;
        }
        return std::nullopt;
    }

    // True when this node can price every input and the sums do not add up.
    // Nodes missing the parent blocks cannot judge and stay neutral.
    bool detects_conservation_failure(const Transaction& tx) const {
        if (tx.is_genesis()) return false;
        Amount total = 0;
        for (const auto& in : tx.inputs) {
            auto v = entitlement_of(in, tx.sender);
            if (!v) return false;
            total += *v;
        }
        return total != total_outputs(tx) || !amounts_non_negative(tx);
    }

    bool can_validate(const Transaction& tx) const {
        if (tx.is_genesis()) return false;
        Amount total = 0;
        for (const auto& in : tx.inputs) {
            auto v = entitlement_of(in, tx.sender);
            if (!v) return false;
            auto c = consumed_.find({in, tx.sender});
            if (c != consumed_.end()) return false;
            total += *v;
        }
        return amounts_non_negative(tx) && total == total_outputs(tx);
    }

    const std::map<Digest, ProposalState>& proposals() const { return proposals_; }
    std::map<Digest, ProposalState>& proposals() { return proposals_; }

    const std::vector<std::pair<TimeMs, Digest>>& deleted_log() const {
        return deleted_log_;
    }

private:
    static constexpr std::uint64_t kProposalTtlTicks = 240;
    static constexpr std::uint64_t kSyncCooldownTicks = 60;

    void log_tx_created(NodeEnv& env, const Transaction& tx, const Digest& d,
                        const char* kind) {
        env.log->add(env.tick, static_cast<std::int64_t>(id), kind, d.hex(),
                     std::to_string(tx.receiver), tx.amount_to_receiver);
        for (const auto& in : tx.inputs)
            env.log->add(env.tick, static_cast<std::int64_t>(id), event_kind::tx_input,
                         d.hex(), in.hex(), 0);
        env.log->add(env.tick, static_cast<std::int64_t>(id), event_kind::tx_stored,
                     d.hex(), {}, 0);
    }

    void alert(NodeEnv& env, const Digest& earlier, const Digest& later) {
        auto key = std::make_pair(earlier, later);
        if (alerted_.count(key)) return;
        alerted_.insert(key);
        env.log->add(env.tick, static_cast<std::int64_t>(id), event_kind::ds_alert,
                     earlier.hex(), later.hex(), 0);
        emit(env, AlertMessage{earlier, later, id});
    }

    // ---- handlers --------------------------------------------------------

    void handle(NodeEnv& env, const TxMessage& msg, UserId from, const Location&) {
        const Transaction& tx = msg.tx;
        if (tx.is_genesis()) return;  // genesis exists only via bootstrap
        if (!amounts_non_negative(tx)) return;
        Digest core = tx_core_digest(tx);
        const Attestation& sa = tx.sender_attestation;
        if (sa.signer != tx.sender || sa.payload != core || !env.registry->valid(sa))
            return;  // malformed or forged: drop silently
        std::set<UserId> incoming_signers;
        std::vector<Attestation> incoming_atts;
        for (const auto& a : msg.co_signatures) {
            if (a.payload != core || !env.registry->valid(a)) continue;
            if (incoming_signers.insert(a.signer).second) incoming_atts.push_back(a);
        }
        Digest d = tx_digest(tx);

        auto it = tx_db.find(d);
        if (it != tx_db.end()) {
            TxRecord& rec = it->second;
            bool novel = false;
            for (size_t i = 0; i < incoming_atts.size(); ++i)
                if (rec.co_signers.insert(incoming_atts[i].signer).second) {
                    rec.co_signatures.push_back(incoming_atts[i]);
                    novel = true;
                }
            if (id == tx.receiver) {
                process(env, d, from);
            } else if (novel && rec.status == TxStatus::pending && !rec.disputed) {
                auto rt = relay_tick_.find(d);
                if (rt == relay_tick_.end() || rt->second != env.tick) {
                    relay_tick_[d] = env.tick;
                    emit(env, TxMessage{rec.tx, rec.co_signatures});
                }
            }
            return;
        }

        bool honest_checks = role == NodeRole::honest;
        if (honest_checks && detects_conservation_failure(tx)) {
            env.log->add(env.tick, static_cast<std::int64_t>(id), event_kind::tx_invalid,
                         d.hex(), {}, 0);
            return;  // provably does not add up: drop and do not forward
        }
        if (honest_checks) {
            for (const auto& in : tx.inputs) {
                auto c = consumed_.find({in, tx.sender});
                if (c != consumed_.end() && c->second != d) {
                    env.log->add(env.tick, static_cast<std::int64_t>(id),
                                 event_kind::tx_conflict, d.hex(), c->second.hex(), 0);
                    return;  // spends an input an applied block already consumed
                }
                auto p = pending_claims_.find({in, tx.sender});
                if (p != pending_claims_.end() && p->second != d) {
                    auto other = tx_db.find(p->second);
                    env.log->add(env.tick, static_cast<std::int64_t>(id),
                                 event_kind::tx_conflict, d.hex(), p->second.hex(), 0);
                    if (other != tx_db.end() && tx.timestamp < other->second.tx.timestamp) {
                        // Earlier stamp survives; the stored one is disputed.
                        other->second.disputed = true;
                    } else {
                        return;  // arriving copy is the later one: drop it
                    }
                }
            }
        }

        TxRecord rec;
        rec.tx = tx;
        rec.co_signers = incoming_signers;
        rec.co_signatures = incoming_atts;
        rec.stored_tick = env.tick;
        for (const auto& in : tx.inputs) pending_claims_[{in, tx.sender}] = d;
        tx_db[d] = std::move(rec);
        env.log->add(env.tick, static_cast<std::int64_t>(id), event_kind::tx_stored,
                     d.hex(), {}, 0);
        if (auto oa = orphan_acks_.find(d); oa != orphan_acks_.end()) {
            TxRecord& r = tx_db[d];
            r.have_ack = true;
            r.ack = oa->second;
            r.ack_seen_tick = env.tick;
            orphan_acks_.erase(oa);
        }

        if (id == tx.receiver) {
            process(env, d, from);
            return;
        }

        TxRecord& stored = tx_db[d];
        bool in_receiver_tn = env.trusts(tx.receiver, id);
        bool colluder_help = role != NodeRole::honest && tx.sender != id;
        if ((in_receiver_tn && (can_validate(tx) || colluder_help)) ||
            (trusted_network.count(from) &&
             (incoming_signers.count(from) || tx.sender == from))) {
            if (stored.co_signers.insert(id).second)
                stored.co_signatures.push_back(
                    env.registry->attest(id, core, env.now_ms));
        }
        relay_tick_[d] = env.tick;
        emit(env, TxMessage{stored.tx, stored.co_signatures});
    }

    void handle(NodeEnv& env, const AckMessage& msg, UserId, const Location&) {
        const Ack& a = msg.ack;
        if (a.attestation.signer != a.receiver ||
            a.attestation.payload != ack_core_digest(a) ||
            !env.registry->valid(a.attestation))
            return;
        bool fresh_for_me = false;
        auto it = tx_db.find(a.tx);
        if (it == tx_db.end()) {
            fresh_for_me = orphan_acks_.emplace(a.tx, a).second;
        } else if (!it->second.have_ack) {
            it->second.have_ack = true;
            it->second.ack = a;
            it->second.ack_seen_tick = env.tick;
            fresh_for_me = true;
        }
        if (fresh_for_me && ack_relayed_.insert(a.tx).second)
            emit(env, AckMessage{a});
    }

    void handle(NodeEnv& env, const ProposalMessage& msg, UserId from,
                const Location& relayer_loc) {
        BlockProposal p = msg.proposal;
        if (p.transactions.size() != p.per_tx_verifiers.size() ||
            p.transactions.size() != p.distance_vector.size() ||
            p.transactions.size() != p.acks.size())
            return;
        if (p.conflict_zeroed.size() != p.transactions.size())
            p.conflict_zeroed.assign(p.transactions.size(), false);
        sanitize_entries(env, p);

        // A relayer whose claimed location is outside this node's coverage
        // radius is lying about where it is; its entries get flagged. Older
        // entries from other signers were stamped hops ago and are not
        // judged here.
        bool liar = false;
        if (!env.trace_mode) {
            liar = distance(location, relayer_loc) > env.params->r_cov + 1e-12;
            for (const auto& entries : p.per_tx_verifiers)
                for (const auto& e : entries)
                    if (e.user == from &&
                        distance(location, e.location) > env.params->r_cov + 1e-12)
                        liar = true;
        }

        auto [sit, fresh] = proposals_.try_emplace(p.id);
        ProposalState& st = sit->second;
        bool changed = false;
        if (fresh) {
            st.copy = p;
            st.first_seen_tick = env.tick;
            changed = true;
        } else {
            changed = merge_proposal(st.copy, p);
        }
        if (liar && role == NodeRole::honest) {
            for (auto& entries : st.copy.per_tx_verifiers)
                for (auto& e : entries)
                    if (e.user == from && !e.flagged_false) {
                        e.flagged_false = true;
                        changed = true;
                        env.log->add(env.tick, static_cast<std::int64_t>(id),
                                     event_kind::entry_flagged, st.copy.id.hex(),
                                     std::to_string(from), 0);
                    }
        }

        for (size_t i = 0; i < st.copy.transactions.size(); ++i) {
            const Transaction& tx = st.copy.transactions[i];
            Digest d = tx_digest(tx);
            if (role == NodeRole::honest && !st.copy.conflict_zeroed[i]) {
                std::optional<Digest> other = conflicting_claim(tx, d);
                if (other) {
                    const TxRecord* orec =
                        tx_db.count(*other) ? &tx_db.at(*other) : nullptr;
                    TimeMs other_ts = orec ? orec->tx.timestamp : 0;
                    if (tx.timestamp > other_ts) {
                        st.copy.conflict_zeroed[i] = true;
                        st.copy.distance_vector[i] = 0.0;
                        alert(env, *other, d);
                        changed = true;
                    } else {
                        if (tx_db.count(*other)) tx_db[*other].disputed = true;
                        alert(env, d, *other);
                    }
                }
            }
            if (st.copy.conflict_zeroed[i]) continue;
            auto rit = tx_db.find(d);
            bool holds_pair = rit != tx_db.end() &&
                              rit->second.status == TxStatus::pending &&
                              rit->second.have_ack && !rit->second.disputed;
            bool already = false;
            for (const auto& e : st.copy.per_tx_verifiers[i])
                if (e.user == id) already = true;
            bool valid_for_me =
                role == NodeRole::honest ? can_validate(tx) : holds_pair;
            if (holds_pair && !already && valid_for_me) {
                st.copy.per_tx_verifiers[i].push_back(
                    {id, location, env.registry->attest(id, d, env.now_ms), false});
                env.log->add(env.tick, static_cast<std::int64_t>(id),
                             event_kind::proposal_attested, st.copy.id.hex(), d.hex(), 0);
                changed = true;
            }
        }
        if (changed) refresh_distances(st.copy);
        if ((changed || fresh) && st.last_relay_tick != env.tick) {
            st.last_relay_tick = env.tick;
            emit(env, ProposalMessage{st.copy});
        }
        try_create_block(env, st);
    }

    void handle(NodeEnv& env, const BlockMessage& msg, UserId, const Location&) {
        if (apply_block(env, msg.block) && block_relayed_.insert(msg.block.id).second)
            emit(env, BlockMessage{env.blocks->canonical(msg.block)});
    }

    void handle(NodeEnv& env, const AlertMessage& msg, UserId, const Location&) {
        if (role != NodeRole::honest) return;
        auto key = std::make_pair(msg.earlier_tx, msg.later_tx);
        if (alerted_.count(key)) return;
        alerted_.insert(key);
        auto it = tx_db.find(msg.later_tx);
        if (it != tx_db.end() && it->second.status == TxStatus::pending)
            it->second.disputed = true;
        for (auto& [pid, st] : proposals_) {
            if (st.created) continue;
            for (size_t i = 0; i < st.copy.transactions.size(); ++i)
                if (tx_digest(st.copy.transactions[i]) == msg.later_tx &&
                    !st.copy.conflict_zeroed[i]) {
                    st.copy.conflict_zeroed[i] = true;
                    st.copy.distance_vector[i] = 0.0;
                }
        }
        emit(env, msg);
    }

    void handle(NodeEnv& env, const SyncRequest& msg, UserId, const Location&) {
        if (msg.target != id) return;
        if (!trusted_network.count(msg.requester)) {
            env.log->add(env.tick, static_cast<std::int64_t>(id), event_kind::sync_refused,
                         {}, std::to_string(msg.requester), 0);
            return;
        }
        SyncResponse resp;
        resp.requester = msg.requester;
        resp.target = id;
        for (const auto& bid : chain.order()) {
            const Block* b = chain.find(bid);
            if (b && b->created_at > msg.since) resp.blocks.push_back(*b);
        }
        for (const auto& [ts, d] : deleted_log_)
            if (ts > msg.since) resp.deleted.push_back(d);
        env.log->add(env.tick, static_cast<std::int64_t>(id), event_kind::sync_served, {},
                     std::to_string(msg.requester),
                     static_cast<std::int64_t>(resp.blocks.size()));
        emit(env, resp);
    }

    void handle(NodeEnv& env, const SyncResponse& msg, UserId, const Location&) {
        if (msg.requester != id) return;
        for (const auto& b : msg.blocks) apply_block(env, b);
        for (const auto& d : msg.deleted) {
            auto it = tx_db.find(d);
            if (it != tx_db.end() && it->second.status == TxStatus::verified)
                it->second.status = TxStatus::spent;
        }
    }

    // ---- internals -------------------------------------------------------

    // Drop verifier entries whose attestations do not check out; forged
    // vouchings never make it into a local copy.
    void sanitize_entries(NodeEnv& env, BlockProposal& p) const {
        for (size_t i = 0; i < p.transactions.size(); ++i) {
            Digest d = tx_digest(p.transactions[i]);
            auto& entries = p.per_tx_verifiers[i];
            entries.erase(std::remove_if(entries.begin(), entries.end(),
                                         [&](const VerifierEntry& e) {
                                             return e.attestation.signer != e.user ||
                                                    e.attestation.payload != d ||
                                                    !env.registry->valid(e.attestation);
                                         }),
                          entries.end());
        }
    }

    static bool merge_proposal(BlockProposal& mine, const BlockProposal& theirs) {
        if (mine.transactions.size() != theirs.transactions.size()) return false;
        bool changed = false;
        for (size_t i = 0; i < mine.transactions.size(); ++i) {
            for (const auto& e : theirs.per_tx_verifiers[i]) {
                auto& entries = mine.per_tx_verifiers[i];
                auto it = std::find_if(entries.begin(), entries.end(),
                                       [&](const VerifierEntry& m) { return m.user == e.user; });
                if (it == entries.end()) {
                    entries.push_back(e);
                    changed = true;
                } else if (e.flagged_false && !it->flagged_false) {
                    it->flagged_false = true;
                    changed = true;
                }
            }
            if (theirs.conflict_zeroed[i] && !mine.conflict_zeroed[i]) {
                mine.conflict_zeroed[i] = true;
                mine.distance_vector[i] = 0.0;
                changed = true;
            }
        }
        return changed;
    }

    static void refresh_distances(BlockProposal& p) {
        for (size_t i = 0; i < p.transactions.size(); ++i) {
            if (p.conflict_zeroed[i]) {
                p.distance_vector[i] = 0.0;
                continue;
            }
            std::vector<Location> locs;
            for (const auto& e : p.per_tx_verifiers[i])
                if (!e.flagged_false) locs.push_back(e.location);
            p.distance_vector[i] = locs.size() >= 2 ? average_pairwise_distance(locs) : 0.0;
        }
    }

    std::optional<Digest> conflicting_claim(const Transaction& tx, const Digest& d) const {
        for (const auto& in : tx.inputs) {
            auto c = consumed_.find({in, tx.sender});
            if (c != consumed_.end() && c->second != d) return c->second;
            auto p = pending_claims_.find({in, tx.sender});
            if (p != pending_claims_.end() && p->second != d) return p->second;
        }
        return std::nullopt;
    }

    void try_create_block(NodeEnv& env, ProposalState& st) {
        if (st.created) return;
        const BlockProposal& p = st.copy;
        const int mVu = env.params->mVu;
        const double aVd = env.params->aVd;
        std::vector<std::vector<VerifierEntry>> live(p.transactions.size());
        for (size_t i = 0; i < p.transactions.size(); ++i) {
            if (p.conflict_zeroed[i]) return;
            for (const auto& e : p.per_tx_verifiers[i])
                if (!e.flagged_false) live[i].push_back(e);
            if (static_cast<int>(live[i].size()) < mVu) return;
            // With a single verifier there is no pair to measure; the
            // distance gate can then only pass when aVd is zero.
            if (live[i].size() >= 2) {
                std::vector<Location> locs;
                for (const auto& e : live[i]) locs.push_back(e.location);
                if (!(average_pairwise_distance(locs) > aVd)) return;
            } else if (aVd > 0.0) {
                return;
            }
        }
        Block b;
        std::vector<Digest> tds;
        for (const auto& tx : p.transactions) tds.push_back(tx_digest(tx));
        std::vector<Digest> sorted = tds;
        std::sort(sorted.begin(), sorted.end());
        b.id = block_content_digest(sorted);
        b.transactions = p.transactions;
        b.acks = p.acks;
        b.created_at = env.now_ms;
        for (size_t i = 0; i < p.transactions.size(); ++i) {
            // The first mVu verifiers fix the fee-sharing set.
            std::vector<VerifierEntry> vs = live[i];
            std::sort(vs.begin(), vs.end(), [](const auto& a, const auto& c) {
                return std::make_pair(a.attestation.timestamp, a.user) <
                       std::make_pair(c.attestation.timestamp, c.user);
            });
            vs.resize(std::min<size_t>(vs.size(), static_cast<size_t>(mVu)));
            b.verifiers.push_back(std::move(vs));
            std::vector<Digest> parents;
            for (const auto& in : p.transactions[i].inputs)
                if (const Digest* home = chain.block_of_tx(in)) parents.push_back(*home);
            b.parent_pointers.push_back(std::move(parents));
        }
        st.created = true;
        env.log->add(env.tick, static_cast<std::int64_t>(id), event_kind::block_created,
                     b.id.hex(), p.id.hex(),
                     static_cast<std::int64_t>(b.transactions.size()));
        for (const auto& td : tds)
            env.log->add(env.tick, static_cast<std::int64_t>(id),
                         event_kind::block_includes, b.id.hex(), td.hex(), 0);
        if (apply_block(env, b)) {
            block_relayed_.insert(b.id);
            emit(env, BlockMessage{env.blocks->canonical(b)});
        }
    }

    bool block_passes_gates(NodeEnv& env, const Block& b) const {
        const int mVu = env.params->mVu;
        const double aVd = env.params->aVd;
        if (b.transactions.size() != b.verifiers.size()) return false;
        for (size_t i = 0; i < b.transactions.size(); ++i) {
            const auto& vs = b.verifiers[i];
            Digest d = tx_digest(b.transactions[i]);
            if (static_cast<int>(vs.size()) < mVu) return false;
            for (const auto& e : vs)
                if (e.flagged_false || e.attestation.signer != e.user ||
                    e.attestation.payload != d || !env.registry->valid(e.attestation))
                    return false;
            if (vs.size() >= 2) {
                std::vector<Location> locs;
                for (const auto& e : vs) locs.push_back(e.location);
                if (!(average_pairwise_distance(locs) > aVd)) return false;
            } else if (aVd > 0.0) {
                return false;
            }
        }
        return true;
    }

    void credit_entitlements(NodeEnv& env, const Block& b, size_t i, const Digest& d) {
        const Transaction& tx = b.transactions[i];
        Amount mine = 0;
        if (tx.receiver == id) mine += tx.amount_to_receiver;
        if (tx.sender == id) mine += tx.change;
        if (i < b.acks.size() && b.acks[i].fee_recipient == id && tx.tx_fee > 0) {
            mine += tx.tx_fee;
            env.log->add(env.tick, static_cast<std::int64_t>(id), event_kind::fee_credit,
                         d.hex(), "trf", tx.tx_fee);
        }
        if (tx.block_fee > 0 && i < b.verifiers.size()) {
            std::vector<UserId> vs;
            for (const auto& e : b.verifiers[i]) vs.push_back(e.user);
            auto shares = split_block_fee(tx.block_fee, vs);
            if (auto s = shares.find(id); s != shares.end() && s->second > 0) {
                mine += s->second;
                env.log->add(env.tick, static_cast<std::int64_t>(id), event_kind::fee_credit,
                             d.hex(), "bf", s->second);
            }
        }
        if (mine > 0) my_entitlements_[d] += mine;
    }

    // A transaction is fully consumed once every user with a positive
    // entitlement in it has spent that entitlement.
    bool fully_consumed(const Digest& in) const {
        const Digest* home = chain.block_of_tx(in);
        if (!home) return false;
        const Block* blk = chain.find(*home);
        if (!blk) return false;
        for (size_t i = 0; i < blk->transactions.size(); ++i) {
            const Transaction& tx = blk->transactions[i];
            if (tx_digest(tx) != in) continue;
            std::set<UserId> entitled;
            if (tx.amount_to_receiver > 0) entitled.insert(tx.receiver);
            if (tx.change > 0) entitled.insert(tx.sender);
            if (tx.tx_fee > 0 && i < blk->acks.size())
                entitled.insert(blk->acks[i].fee_recipient);
            if (tx.block_fee > 0 && i < blk->verifiers.size()) {
                std::vector<UserId> vs;
                for (const auto& e : blk->verifiers[i]) vs.push_back(e.user);
                for (const auto& [u, amt] : split_block_fee(tx.block_fee, vs))
                    if (amt > 0) entitled.insert(u);
            }
            for (UserId u : entitled)
                if (!consumed_.count({in, u})) return false;
            return true;
        }
        return false;
    }

    std::map<Digest, Amount> my_entitlements_;
    std::map<std::pair<Digest, UserId>, Digest> pending_claims_;
    std::map<std::pair<Digest, UserId>, Digest> consumed_;
    std::map<Digest, Ack> orphan_acks_;
    std::set<Digest> ack_relayed_;
    std::set<Digest> block_relayed_;
    std::set<Digest> built_sets_;
    std::map<Digest, std::uint64_t> relay_tick_;
    std::map<Digest, ProposalState> proposals_;
    std::set<std::pair<Digest, Digest>> alerted_;
    std::map<UserId, std::uint64_t> last_sync_tick_;
    std::vector<std::pair<TimeMs, Digest>> deleted_log_;
};

}  // namespace localcoin
