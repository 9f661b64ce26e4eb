#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include "localcoin/serialize.hpp"
#include "localcoin/types.hpp"

namespace localcoin::chain {

struct ChainError {
    std::string message;
};

// Long-term block production: Lambda transaction pairs per time unit yield
// Lambda/BS blocks per time unit.
inline double expected_block_rate(double tx_pair_rate, int BS) {
    if (BS < 1) throw ChainError{"expected_block_rate: BS must be >= 1"};
    return tx_pair_rate / BS;
}

// One block consumes its transactions' inputs and therefore deletes the sum
// of the per-transaction input counts worth of links to past blocks.
inline std::int64_t links_deleted_per_block(const std::vector<int>& input_counts) {
    std::int64_t sum = 0;
    for (int c : input_counts) sum += c;
    return sum;
}

// Pointer graph over stored blocks. child_counts[P] is the number of
// parent-pointer references to P carried by transactions of stored blocks;
// a reference disappears when the transaction holding it is consumed.
// A block whose count reaches zero is an orphan candidate, except the head.
class ChainView {
public:
    const std::map<Digest, Block>& blocks() const { return blocks_; }
    const std::vector<Digest>& order() const { return order_; }

    bool contains(const Digest& id) const { return blocks_.count(id) > 0; }

    std::int64_t child_count(const Digest& id) const {
        auto it = counts_.find(id);
        return it == counts_.end() ? 0 : it->second;
    }

    const Block* find(const Digest& id) const {
        auto it = blocks_.find(id);
        return it == blocks_.end() ? nullptr : &it->second;
    }

    // Which stored block holds this transaction, if any.
    const Digest* block_of_tx(const Digest& tx) const {
        auto it = tx_home_.find(tx);
        return it == tx_home_.end() ? nullptr : &it->second;
    }

    void insert_block(const Block& b) {
        if (contains(b.id)) return;
        blocks_[b.id] = b;
        for (size_t i = 0; i < b.transactions.size(); ++i) {
            Digest td = live_tx_digest(b, i);
            tx_home_[td] = b.id;
            for (const auto& parent : b.parent_pointers[i]) counts_[parent]++;
        }
        // Chain order by (created_at, digest); ties and cross-node apply
        // order both resolve the same way.
        auto pos = std::lower_bound(order_.begin(), order_.end(), b.id,
                                    [&](const Digest& lhs, const Digest& rhs) {
                                        return key_of(lhs) < key_of(rhs);
                                    });
        order_.insert(pos, b.id);
        blocks_[b.id].child_pointer_count = child_count(b.id);
    }

    // The transaction was used as an input of a new block: remove its own
    // parent pointers. Returns the number of links removed.
    std::int64_t consume_tx(const Digest& tx) {
        auto home = tx_home_.find(tx);
        if (home == tx_home_.end()) return 0;
        auto bit = blocks_.find(home->second);
        if (bit == blocks_.end()) return 0;
        Block& b = bit->second;
        std::int64_t removed = 0;
        for (size_t i = 0; i < b.transactions.size(); ++i) {
            if (live_tx_digest(b, i) != tx) continue;
            for (const auto& parent : b.parent_pointers[i]) {
                auto c = counts_.find(parent);
                if (c != counts_.end() && c->second > 0) {
                    c->second--;
                    auto pb = blocks_.find(parent);
                    if (pb != blocks_.end()) pb->second.child_pointer_count = c->second;
                }
                ++removed;
            }
            b.parent_pointers[i].clear();
        }
        return removed;
    }

    Digest head() const {
        if (order_.empty()) throw ChainError{"chain is empty"};
        return order_.back();
    }

    // Blocks with no remaining references, excluding the head.
    std::set<Digest> orphan_candidates() const {
        std::set<Digest> out;
        if (order_.empty()) return out;
        const Digest& hd = order_.back();
        for (const auto& [id, b] : blocks_) {
            if (id == hd) continue;
            if (child_count(id) == 0) out.insert(id);
        }
        return out;
    }

    // Delete a block and relink the order so the successor points past it.
    void remove_block(const Digest& id) {
        auto bit = blocks_.find(id);
        if (bit == blocks_.end()) return;
        const Block& b = bit->second;
        for (size_t i = 0; i < b.transactions.size(); ++i) {
            tx_home_.erase(live_tx_digest(b, i));
            for (const auto& parent : b.parent_pointers[i]) {
                auto c = counts_.find(parent);
                if (c != counts_.end() && c->second > 0) {
                    c->second--;
                    auto pb = blocks_.find(parent);
                    if (pb != blocks_.end()) pb->second.child_pointer_count = c->second;
                }
            }
        }
        counts_.erase(id);
        order_.erase(std::remove(order_.begin(), order_.end(), id), order_.end());
        blocks_.erase(bit);
    }

    // Full recount from stored parent pointers; used by the auditor to check
    // the incremental accounting.
    std::map<Digest, std::int64_t> recompute_child_counts() const {
        std::map<Digest, std::int64_t> fresh;
        for (const auto& [id, b] : blocks_)
            for (const auto& per_tx : b.parent_pointers)
                for (const auto& parent : per_tx) fresh[parent]++;
        return fresh;
    }

    bool counts_consistent() const {
        auto fresh = recompute_child_counts();
        for (const auto& [id, b] : blocks_) {
            std::int64_t want = 0;
            if (auto it = fresh.find(id); it != fresh.end()) want = it->second;
            if (child_count(id) != want) return false;
        }
        return true;
    }

    // Every stored block must stay reachable by walking the order links.
    bool all_reachable_from_head() const {
        return order_.size() == blocks_.size() &&
               std::all_of(order_.begin(), order_.end(),
                           [&](const Digest& d) { return blocks_.count(d) > 0; });
    }

private:
    std::pair<TimeMs, Digest> key_of(const Digest& id) const {
        auto it = blocks_.find(id);
        return {it->second.created_at, id};
    }

    // Digest of the i-th transaction; cached on first use.
    Digest live_tx_digest(const Block& b, size_t i) const {
        auto key = std::make_pair(b.id, i);
        auto it = txd_cache_.find(key);
        if (it != txd_cache_.end()) return it->second;
        Digest d = tx_digest(b.transactions[i]);
        txd_cache_[key] = d;
        return d;
    }

    std::map<Digest, Block> blocks_;
    std::map<Digest, std::int64_t> counts_;
    std::map<Digest, Digest> tx_home_;
    std::vector<Digest> order_;
    mutable std::map<std::pair<Digest, size_t>, Digest> txd_cache_;
};

}  // namespace localcoin::chain
