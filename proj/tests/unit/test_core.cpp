// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#include <doctest.h>

#include "eunomia/core.hpp"

using namespace eunomia;

TEST_CASE("metadata adds five bytes per data packet") {
    WirePacket p;
    p.size_bytes = 1000;
    CHECK(p.wire_bytes() == 1000 + kBaseHeaderBytes + 5);
    CHECK(kReorderMetadataBytes == 5);
}

TEST_CASE("control packet sizes") {
    auto a = make_ack(ConnectionId(1), SeqNum(4));
    auto s = make_sack(ConnectionId(1), SeqNum(4), SeqNum(9));
    auto n = make_nack(ConnectionId(1), SeqNum(4));
    CHECK(a.wire_bytes() == kAckHeaderBytes);
    CHECK(s.wire_bytes() == kAckHeaderBytes + kSackExtraBytes);
    CHECK(n.wire_bytes() == kAckHeaderBytes);
    CHECK(s.sacked->value == 9);
    CHECK(std::string(to_string(n.kind)) == "NACK");
}

TEST_CASE("sack must point past the cumulative sequence") {
    CHECK_THROWS_AS(make_sack(ConnectionId(0), SeqNum(5), SeqNum(5)), std::invalid_argument);
    CHECK_THROWS_AS(make_sack(ConnectionId(0), SeqNum(5), SeqNum(2)), std::invalid_argument);
}

TEST_CASE("sequence arithmetic") {
    SeqNum a(10);
    CHECK(a.next() == SeqNum(11));
    CHECK(a + 5 == SeqNum(15));
    CHECK(SeqNum(15) - a == 5u);
    CHECK(a < SeqNum(11));
}

TEST_CASE("time units") {
    CHECK(ns_to_ps(1.5) == 1500);
    CHECK(ps_to_ns(2500) == doctest::Approx(2.5));
    CHECK(kPsPerMs == 1'000'000'000);
}
