#include <doctest.h>

#include "dpound/envelope.hpp"

using namespace dpound;

namespace {

Envelope make_envelope(std::vector<SealedSection> sealed,
                       PersonalData plain = {}) {
    Envelope env;
    env.id = "MSG-0001";
    env.kind = MsgKind::PaymentInstruction;
    env.sender = "alice-pip";
    env.sender_role = Role::Pip;
    env.receiver = "core";
    env.receiver_role = Role::CentralBankCbdcSystem;
    env.plain = std::move(plain);
    env.sealed = std::move(sealed);
    return env;
}

PersonalDatum name_of(const std::string& subject, const std::string& value) {
    return PersonalDatum{DatumKind::Name, subject, value};
}

} // namespace

TEST_CASE("only the addressed recipient can open a sealed section") {
    KeyDirectory dir;
    dir.register_participant("alice-pip");
    dir.register_participant("bob-pip");
    dir.register_participant("core");

    auto sealed = dir.seal("alice-pip", "bob-pip", {name_of("alice", "Alice")});
    REQUIRE(sealed.ok());
    Envelope env = make_envelope({sealed.value()});

    ExposureLog log;
    auto denied = open_section(dir, log, env, 0, "core",
                               Role::CentralBankCbdcSystem);
    CHECK_FALSE(denied.ok());
    CHECK(denied.error() == Err::NotRecipient);
    CHECK_FALSE(log.exposed("core", DatumKind::Name));

    auto opened = open_section(dir, log, env, 0, "bob-pip", Role::Pip);
    REQUIRE(opened.ok());
    REQUIRE(opened.value().size() == 1);
    CHECK(opened.value()[0].value == "Alice");
    CHECK(log.exposed("bob-pip", DatumKind::Name));
}

TEST_CASE("sealing requires a registered recipient") {
    KeyDirectory dir;
    dir.register_participant("alice-pip");
    auto r = dir.seal("alice-pip", "nobody", {name_of("alice", "Alice")});
    CHECK_FALSE(r.ok());
    CHECK(r.error() == Err::UnknownRecipientKey);
}

TEST_CASE("revocation closes the recipient slot") {
    KeyDirectory dir;
    dir.register_participant("alice-pip");
    dir.register_participant("bob-pip");
    CHECK(dir.has("bob-pip"));
    dir.revoke("bob-pip");
    CHECK_FALSE(dir.has("bob-pip"));
    auto r = dir.seal("alice-pip", "bob-pip", {name_of("a", "A")});
    CHECK_FALSE(r.ok());
}

TEST_CASE("seal and open operations are counted") {
    KeyDirectory dir;
    dir.register_participant("a");
    dir.register_participant("b");
    CHECK(dir.seal_ops() == 0);
    auto s1 = dir.seal("a", "b", {name_of("a", "A")});
    auto s2 = dir.seal("a", "b", {name_of("a", "A")});
    REQUIRE(s1.ok());
    REQUIRE(s2.ok());
    CHECK(dir.seal_ops() == 2);

    Envelope env = make_envelope({s1.value(), s2.value()});
    ExposureLog log;
    CHECK(open_section(dir, log, env, 0, "b", Role::Pip).ok());
    CHECK(open_section(dir, log, env, 1, "b", Role::Pip).ok());
    CHECK(dir.open_ops() == 2);
}

TEST_CASE("plaintext exposure records both ends of the hop") {
    ExposureLog log;
    Envelope env = make_envelope({}, {name_of("alice", "Alice Smith")});
    log.record_plain(env, env.sender, env.sender_role);
    log.record_plain(env, env.receiver, env.receiver_role);
    CHECK(log.exposed("alice-pip", DatumKind::Name));
    CHECK(log.exposed("core", DatumKind::Name));
    CHECK(log.exposed_role(Role::CentralBankCbdcSystem, DatumKind::Name));
    CHECK_FALSE(log.exposed("core", DatumKind::AccountDetails));
}

TEST_CASE("exposure rows deduplicate repeated sightings") {
    ExposureLog log;
    Envelope env = make_envelope({}, {name_of("alice", "Alice")});
    log.record_plain(env, env.receiver, env.receiver_role);
    log.record_plain(env, env.receiver, env.receiver_role);
    CHECK(log.rows().size() == 1);
}

TEST_CASE("a routed but unopened section leaves no trace on the carrier") {
    KeyDirectory dir;
    dir.register_participant("alice-pip");
    dir.register_participant("bob-pip");
    auto sealed = dir.seal("alice-pip", "bob-pip",
                           {name_of("alice", "Alice"),
                            {DatumKind::AccountDetails, "alice", "20-10-01"}});
    REQUIRE(sealed.ok());
    Envelope env = make_envelope({sealed.value()});

    ExposureLog log;
    log.record_plain(env, "core", Role::CentralBankCbdcSystem);
    CHECK_FALSE(log.exposed("core", DatumKind::Name));
    CHECK_FALSE(log.exposed("core", DatumKind::AccountDetails));
}

TEST_CASE("independent reconstruction agrees with the live exposure log") {
    KeyDirectory dir;
    dir.register_participant("alice-pip");
    dir.register_participant("bob-pip");
    dir.register_participant("core");

    ExposureLog log;
    std::vector<Envelope> delivered;
    std::map<ParticipantId, Role> roles{
        {"alice-pip", Role::Pip},
        {"bob-pip", Role::Pip},
        {"core", Role::CentralBankCbdcSystem},
    };

    // hop 1: plaintext name seen by both ends
    Envelope e1 = make_envelope({}, {name_of("alice", "Alice")});
    e1.id = "MSG-0001";
    log.record_plain(e1, e1.sender, e1.sender_role);
    log.record_plain(e1, e1.receiver, e1.receiver_role);
    delivered.push_back(e1);

    // hop 2: sealed to bob, routed through core which cannot open it
    auto sealed = dir.seal("alice-pip", "bob-pip",
                           {{DatumKind::TransactionPurpose, "alice", "rent"}});
    REQUIRE(sealed.ok());
    Envelope e2 = make_envelope({sealed.value()});
    e2.id = "MSG-0002";
    e2.receiver = "bob-pip";
    e2.receiver_role = Role::Pip;
    log.record_plain(e2, e2.sender, e2.sender_role);
    log.record_plain(e2, e2.receiver, e2.receiver_role);
    REQUIRE(open_section(dir, log, e2, 0, "bob-pip", Role::Pip).ok());
    delivered.push_back(e2);

    auto rebuilt = brute_force_exposure(delivered, log.opens(), roles);
    REQUIRE(rebuilt.size() == log.rows().size());
    CHECK(std::equal(rebuilt.begin(), rebuilt.end(), log.rows().begin(),
                     [](const ExposureRow& a, const ExposureRow& b) {
                         return !(a < b) && !(b < a);
                     }));
}
