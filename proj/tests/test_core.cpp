#include <catch2/catch_amalgamated.hpp>

#include "harness.hpp"
#include "localcoin/localcoin.hpp"

using namespace localcoin;

namespace {

Transaction random_tx(Rng& rng, int n_inputs) {
    std::uniform_int_distribution<std::uint64_t> U64;
    std::uniform_int_distribution<int> B(0, 255);
    Transaction tx;
    tx.sender = U64(rng) % 1000;
    tx.receiver = U64(rng) % 1000;
    for (int i = 0; i < n_inputs; ++i) {
        Digest d;
        for (auto& byte : d.bytes) byte = static_cast<std::uint8_t>(B(rng));
        tx.inputs.push_back(d);
    }
    tx.amount_to_receiver = static_cast<Amount>(U64(rng) % 100000);
    tx.change = static_cast<Amount>(U64(rng) % 100000);
    tx.tx_fee = static_cast<Amount>(U64(rng) % 1000);
    tx.block_fee = static_cast<Amount>(U64(rng) % 1000);
    tx.balance_note = static_cast<Amount>(U64(rng) % 100000);
    tx.timestamp = static_cast<TimeMs>(U64(rng) % 1000000);
    tx.seq = U64(rng) % 10000;
    for (auto& byte : tx.nonce.bytes) byte = static_cast<std::uint8_t>(B(rng));
    tx.sender_attestation.signer = tx.sender;
    tx.sender_attestation.timestamp = tx.timestamp;
    tx.sender_attestation.payload = tx_core_digest(tx);
    return tx;
}

}  // namespace

TEST_CASE("transaction wire size is 32k + 160 for k = 0..100") {
    Rng rng(42);
    for (int k = 0; k <= 100; ++k) {
        Transaction tx = random_tx(rng, k);
        REQUIRE(serialize_transaction(tx).size() == 32u * k + 160u);
    }
}

TEST_CASE("worked wire sizes: one input 192, genesis 160, nine inputs 448") {
    Rng rng(7);
    CHECK(serialize_transaction(random_tx(rng, 1)).size() == 192u);
    CHECK(serialize_transaction(random_tx(rng, 0)).size() == 160u);
    auto nine = serialize_transaction(random_tx(rng, 9));
    CHECK(nine.size() == 448u);
    CHECK(nine.size() < 1024u);  // under a kilobyte
}

TEST_CASE("serialization round-trips") {
    Rng rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        Transaction tx = random_tx(rng, trial % 11);
        auto bytes = serialize_transaction(tx);
        auto back = deserialize_transaction(bytes);
        REQUIRE(back.has_value());
        CHECK(*back == tx);
        CHECK(tx_digest(*back) == tx_digest(tx));

        Ack a;
        a.tx = tx_digest(tx);
        a.receiver = tx.receiver;
        a.fee_recipient = tx.sender;
        a.attestation = {tx.receiver, ack_core_digest(a), 123};
        auto ab = serialize_ack(a);
        REQUIRE(ab.size() == kAckBytes);
        auto aback = deserialize_ack(ab);
        REQUIRE(aback.has_value());
        CHECK(*aback == a);
    }
}

TEST_CASE("deserialize rejects truncated and oversized buffers") {
    Rng rng(3);
    Transaction tx = random_tx(rng, 2);
    auto bytes = serialize_transaction(tx);
    bytes.pop_back();
    CHECK_FALSE(deserialize_transaction(bytes).has_value());
    bytes = serialize_transaction(tx);
    bytes.push_back(0);
    CHECK_FALSE(deserialize_transaction(bytes).has_value());
}

TEST_CASE("digest is deterministic and 32 bytes") {
    CHECK(digest(std::string("localcoin")) == digest(std::string("localcoin")));
    // SHA-256 of the empty string is pinned; golden files depend on it.
    CHECK(digest(std::string("")).hex() ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("digest corpus of 1e4 random strings has no collisions") {
    Rng rng(1234);
    std::uniform_int_distribution<int> B(0, 255);
    std::uniform_int_distribution<int> L(0, 56);
    std::set<Digest> seen;
    for (int i = 0; i < 10000; ++i) {
        // Index prefix keeps inputs distinct; any digest repeat is a collision.
        std::string s = std::to_string(i) + ":";
        int len = L(rng);
        for (int j = 0; j < len; ++j) s.push_back(static_cast<char>(B(rng)));
        seen.insert(digest(s));
    }
    CHECK(seen.size() == 10000u);
}

TEST_CASE("one-bit flip changes the digest") {
    Rng rng(5);
    std::uniform_int_distribution<int> B(0, 255);
    for (int trial = 0; trial < 100; ++trial) {
        Bytes data(64);
        for (auto& b : data) b = static_cast<std::uint8_t>(B(rng));
        Digest before = digest(data);
        data[trial % data.size()] ^= 1u << (trial % 8);
        CHECK(digest(data) != before);
    }
}

TEST_CASE("conservation check") {
    Transaction tx;
    tx.inputs.resize(1);
    tx.amount_to_receiver = 7000;
    tx.change = 2000;
    tx.tx_fee = 500;
    tx.block_fee = 500;
    tx.balance_note = 777;  // informational, excluded
    CHECK(check_conservation(tx, {10000}));

    tx.amount_to_receiver = 9000;
    tx.tx_fee = 0;
    tx.block_fee = 0;
    CHECK_FALSE(check_conservation(tx, {10000}));  // over-spend

    Transaction multi;
    multi.inputs.resize(2);
    multi.amount_to_receiver = 10000;
    CHECK(check_conservation(multi, {5000, 5000}));

    CHECK_THROWS_AS(check_conservation(multi, {5000}), ConservationError);
}

TEST_CASE("attestation minting is a capability of the acting node") {
    AttestationRegistry reg;
    Digest payload = digest(std::string("x"));
    {
        ActingScope scope(reg, 5);
        Attestation a = reg.attest(5, payload, 10);
        CHECK(reg.valid(a));
        // Forgery from inside node 5's turn: minting for someone else.
        CHECK_THROWS_AS(reg.attest(7, payload, 10), ForgeryError);
    }
    // Hand-built attestation values are not genuine.
    Attestation fake{5, payload, 10};
    CHECK_FALSE(reg.valid(Attestation{9, payload, 11}));
    CHECK(reg.valid(fake));  // same tuple as the minted one
    CHECK_FALSE(reg.valid(Attestation{5, payload, 11}));
}

TEST_CASE("forged sender attestation is dropped on receipt") {
    harness::Rig rig;
    rig.params.mTr = 0;
    NodeState relay = rig.make_node(1);
    NodeState adversary = rig.make_node(2);

    Transaction tx;
    tx.sender = 3;  // claims to be node 3
    tx.receiver = 1;
    tx.inputs.resize(1);
    tx.amount_to_receiver = 100;
    tx.timestamp = 1;
    // The adversary cannot mint for node 3; it fabricates the value instead.
    tx.sender_attestation = {3, tx_core_digest(tx), 1};
    REQUIRE_FALSE(rig.registry.valid(tx.sender_attestation));

    rig.deliver(relay, TxMessage{tx, {}}, adversary.id, adversary.location);
    CHECK_FALSE(relay.holds_tx(tx_digest(tx)));
    CHECK(rig.outbox.empty());
}

TEST_CASE("forged co-signature is ignored, genuine ones are counted") {
    harness::Rig rig;
    rig.params.mTr = 1;
    NodeState receiver = rig.make_node(0);
    NodeState sender = rig.make_node(1);
    NodeState friend_node = rig.make_node(2);
    rig.befriend(receiver, friend_node);
    rig.genesis({&receiver, &sender, &friend_node}, 10 * kCoin);

    auto d = rig.act(sender, [&](NodeState& n, NodeEnv& e) {
        return n.send(e, receiver.id, 1 * kCoin, 0, 0, digest(std::string("n1")));
    });
    REQUIRE(d.has_value());
    const auto* tmsg = rig.last_staged<TxMessage>();
    REQUIRE(tmsg != nullptr);

    // A forged co-signature claiming to be the trusted friend.
    TxMessage forged = *tmsg;
    forged.co_signatures.push_back(
        Attestation{friend_node.id, tx_core_digest(forged.tx), 1});
    rig.deliver(receiver, forged, sender.id, sender.location);
    CHECK_FALSE(receiver.acked(*d));  // forged vouching did not count

    // The friend genuinely co-signs; now the ack fires.
    rig.deliver(friend_node, *tmsg, sender.id, sender.location);
    const auto* relayed = rig.last_staged<TxMessage>();
    REQUIRE(relayed != nullptr);
    REQUIRE(relayed->co_signatures.size() == 1u);
    rig.deliver(receiver, *relayed, friend_node.id, friend_node.location);
    CHECK(receiver.acked(*d));
}

TEST_CASE("average pairwise distance") {
    CHECK(average_pairwise_distance({{0, 0}, {1, 0}}) == Catch::Approx(1.0));
    CHECK(average_pairwise_distance({{0, 0}, {1, 0}, {0.5, 0}}) ==
          Catch::Approx(2.0 / 3.0));
    CHECK_THROWS_AS(average_pairwise_distance({{0, 0}}), GeometryError);

    // 1000 uniform points against the known unit-square constant 0.5214.
    Rng rng(2024);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<Location> pts;
    for (int i = 0; i < 1000; ++i) pts.push_back({U(rng), U(rng)});
    CHECK(average_pairwise_distance(pts) == Catch::Approx(0.5214).margin(0.01));
}

TEST_CASE("protocol params validation") {
    ProtocolParams p;
    std::string why;
    CHECK(params_valid(p, &why));
    p.BS = 0;
    CHECK_FALSE(params_valid(p, &why));
    p.BS = 1;
    p.r_cov = 0.0;
    CHECK_FALSE(params_valid(p, &why));
    p.r_cov = 0.1;
    p.aVd = 2.0;
    CHECK_FALSE(params_valid(p, &why));
}
