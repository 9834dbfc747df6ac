#include <catch2/catch_amalgamated.hpp>

#include <fstream>

#include "winomem/schedule.hpp"

using namespace winomem;

TEST_CASE("single-row program parses to one LeafAdd", "[schedule]") {
    Schedule s = parse_schedule("1: S1 = A21 + A22 @ X\n");
    REQUIRE(s.ins.size() == 1);
    const auto& in = s.ins[0];
    CHECK(in.tag == Tag::LeafAdd);
    CHECK(in.label == "S1");
    CHECK(in.dst == SlotId::X);
    REQUIRE(in.adds.size() == 2);
    CHECK(in.adds[0].op.slot == SlotId::A21);
    CHECK(in.adds[1].op.slot == SlotId::A22);
    CHECK_FALSE(in.adds[1].scalar.neg);
}

TEST_CASE("contract checks at parse time", "[schedule]") {
    // writing C11 under read-only is legal
    CHECK_NOTHROW(parse_schedule("1: C11 = IP(A11*B11) @ C11\n"));
    // writing A11 under read-only is not
    CHECK_THROWS_AS(parse_schedule("1: A11 = B11 + B12 @ A11\n"),
                    contract_violation_error);
    CHECK_NOTHROW(parse_schedule("contract overwrite-A\n1: A11 = B11 + B12 @ A11\n"));
}

TEST_CASE("labels resolve to the slot of their defining instruction", "[schedule]") {
    Schedule s = parse_schedule(
        "1: S3 = A11 - A21 @ X\n"
        "2: T3 = B22 - B12 @ Y\n"
        "3: P7 = S3*T3 @ C21\n");
    const auto& p7 = s.ins[2];
    REQUIRE(p7.has_product());
    CHECK(p7.prod->lhs.slot == SlotId::X);
    CHECK(p7.prod->rhs.slot == SlotId::Y);
    CHECK(p7.prod->lhs.label == "S3");
    CHECK(p7.tag == Tag::Std2);  // untagged plain product
    CHECK_FALSE(p7.explicit_tag);
}

TEST_CASE("untagged accumulating products dispatch to acc3", "[schedule]") {
    Schedule s = parse_schedule(
        "accumulating true\n"
        "1: U1 = alpha*A12*B21 + beta*C11 @ C11\n");
    const auto& in = s.ins[0];
    CHECK(in.tag == Tag::Acc3);
    REQUIRE(in.adds.size() == 1);
    CHECK(in.adds[0].scalar.sym == ScalarSym::Beta);
    CHECK(dispatch_policy(s, in) == "acc3");
}

TEST_CASE("parse errors carry line numbers", "[schedule]") {
    CHECK_THROWS_AS(parse_schedule("1: S1 = A21 $ A22 @ X\n"), parse_error);
    CHECK_THROWS_AS(parse_schedule("1: S1 = A21 + NOPE @ X\n"), unknown_slot_error);
    CHECK_THROWS_AS(parse_schedule("1: S1 = A21 + A22 @ WAT\n"), unknown_slot_error);
    CHECK_THROWS_AS(parse_schedule("2: S1 = A21 + A22 @ X\n"), parse_error);
    CHECK_THROWS_AS(parse_schedule("1: P = A11*B11 + A12*B21 @ X\n"), parse_error);
}

TEST_CASE("builtin catalog structure", "[schedule]") {
    CHECK_THROWS_AS(builtin("nope"), unknown_schedule_error);
    for (const auto& name : builtin_names()) {
        const Schedule& s = builtin(name);
        INFO(name);
        CHECK(s.name == name);
        // exactly 7 product-bearing instructions per builtin
        CHECK(s.product_count() == 7);
        int finals = 0;
        for (const auto& in : s.ins) finals += in.is_final;
        CHECK(finals == 4);
    }
    CHECK(builtin("std2").ins.size() == 22);
    CHECK(builtin("acc3").ins.size() == 21);
    CHECK(builtin("ip").ins.size() == 22);
    CHECK(builtin("ovl").ins.size() == 22);
    CHECK(builtin("ovl2").ins.size() == 24);
    CHECK(builtin("ovr").ins.size() == 22);
    CHECK(builtin("aclr").ins.size() == 24);
    CHECK(builtin("accr").ins.size() == 24);
    CHECK(builtin("acc2").ins.size() == 24);
    CHECK(builtin("acr").ins.size() == 23);
}

TEST_CASE("builtin spot rows", "[schedule]") {
    SECTION("std2 row 1: S3 = A11 - A21 @ X") {
        const auto& in = builtin("std2").ins[0];
        CHECK(in.label == "S3");
        CHECK(in.dst == SlotId::X);
        CHECK(in.adds[0].op.slot == SlotId::A11);
        CHECK(in.adds[1].op.slot == SlotId::A21);
        CHECK(in.adds[1].scalar.neg);
    }
    SECTION("ip row 9: P5 = IP(S1*T1) @ A11") {
        const auto& in = builtin("ip").ins[8];
        CHECK(in.label == "P5");
        CHECK(in.dst == SlotId::A11);
        CHECK(in.tag == Tag::IP);
        CHECK(in.prod->lhs.label == "S1");
        CHECK(in.prod->rhs.label == "T1");
    }
    SECTION("acc2 row 1: Z1 = C22 - C12 @ C22") {
        const auto& in = builtin("acc2").ins[0];
        CHECK(in.label == "Z1");
        CHECK(in.dst == SlotId::C22);
        CHECK(in.adds[0].op.slot == SlotId::C22);
        CHECK(in.adds[1].op.slot == SlotId::C12);
        CHECK(in.adds[1].scalar.neg);
    }
    SECTION("acc2 row 24 has negative alpha product and unit accumulator") {
        const auto& in = builtin("acc2").ins[23];
        CHECK(in.tag == Tag::AccR);
        CHECK(in.prod->scalar.neg);
        CHECK(in.prod->scalar.sym == ScalarSym::Alpha);
        REQUIRE(in.adds.size() == 1);
        CHECK(in.adds[0].scalar.is_plus_one());
        CHECK(in.adds[0].op.slot == SlotId::C21);
        CHECK(in.is_final);
    }
    SECTION("aclr row 13 carries a negated beta accumulator") {
        const auto& in = builtin("aclr").ins[12];
        CHECK(in.tag == Tag::AcLR);
        CHECK_FALSE(in.prod->scalar.neg);
        CHECK(in.adds[0].scalar.neg);
        CHECK(in.adds[0].scalar.sym == ScalarSym::Beta);
    }
}

TEST_CASE("dispatch policy per the tables", "[schedule]") {
    const Schedule& acc2 = builtin("acc2");
    // row 5: P5 = Acc2(...) -> acc2 (Self-equivalent)
    CHECK(dispatch_policy(acc2, acc2.ins[4]) == "acc2");
    // row 12: untagged plain alpha*A11*B11 -> std2
    CHECK(dispatch_policy(acc2, acc2.ins[11]) == "std2");
    const Schedule& ovr = builtin("ovr");
    // row 7: P7 = IP(S3*T3) -> ip
    CHECK(dispatch_policy(ovr, ovr.ins[6]) == "ip");
    const Schedule& std2 = builtin("std2");
    // row 12: P1 = A11*B11 -> std2 itself
    CHECK(dispatch_policy(std2, std2.ins[11]) == "std2");
}

TEST_CASE("render/parse round trip on all builtins", "[schedule]") {
    for (const auto& name : builtin_names()) {
        const Schedule& s = builtin(name);
        std::string text = render_schedule(s);
        INFO(name);
        Schedule t = parse_schedule(text);
        CHECK(t == s);
        // canonical text is a fixed point
        CHECK(render_schedule(t) == text);
        // and matches the embedded source
        CHECK(text == builtin_source(name));
    }
}

TEST_CASE("canonical fixture files match the catalog", "[schedule]") {
    for (const auto& name : builtin_names()) {
        std::ifstream f(std::string(WINOMEM_FIXTURE_DIR) + "/schedules/" + name +
                        ".sched");
        REQUIRE(f.good());
        std::string content((std::istreambuf_iterator<char>(f)),
                            std::istreambuf_iterator<char>());
        INFO(name);
        CHECK(content == render_schedule(builtin(name)));
    }
}

TEST_CASE("square-only flags per table", "[schedule]") {
    CHECK_FALSE(builtin("std2").square_only);
    CHECK_FALSE(builtin("acc3").square_only);
    CHECK_FALSE(builtin("acr").square_only);
    for (const char* n : {"ip", "ovl", "ovl2", "ovr", "aclr", "accr", "acc2"})
        CHECK(builtin(n).square_only);
}

TEST_CASE("contracts per table", "[schedule]") {
    CHECK(builtin("std2").contract == Contract::ReadOnly);
    CHECK(builtin("acc3").contract == Contract::ReadOnly);
    CHECK(builtin("acc2").contract == Contract::ReadOnly);
    CHECK(builtin("ip").contract == Contract::OverwriteBoth);
    CHECK(builtin("aclr").contract == Contract::OverwriteBoth);
    CHECK(builtin("ovl").contract == Contract::OverwriteA);
    CHECK(builtin("ovl2").contract == Contract::OverwriteA);
    CHECK(builtin("ovr").contract == Contract::OverwriteB);
    CHECK(builtin("accr").contract == Contract::OverwriteB);
    CHECK(builtin("acr").contract == Contract::OverwriteB);
}
