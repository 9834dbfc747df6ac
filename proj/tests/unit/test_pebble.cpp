#include <catch2/catch_amalgamated.hpp>

#include "winomem/drivers.hpp"
#include "winomem/pebble.hpp"
#include "winomem/validate.hpp"

#include "../support/pebble_brute_force.hpp"

using namespace winomem;
using namespace winomem::pebble;

namespace {

using winomem::pebble::testing::BruteForce;

TaskGraph toy_classical() {
    return load_graph(std::string(WINOMEM_FIXTURE_DIR) + "/graphs/classical2x2.graph");
}

TaskGraph toy_chain() {
    std::istringstream is(
        "node x initial\nnode y initial\nnode z initial\n"
        "node s temp\nnode f final\n"
        "edge x s +\nedge y s -\nedge s f +\nedge z f +\n");
    return parse_graph(is);
}

TaskGraph toy_diamond() {
    std::istringstream is(
        "node a initial A\nnode b initial B\n"
        "node p temp\nnode q temp\nnode f final\n"
        "prod p a b\nedge a q +\nedge b q +\nedge p f +\nedge q f -\n");
    return parse_graph(is);
}

}  // namespace

TEST_CASE("winograd task graph structure", "[pebble]") {
    TaskGraph g = build_winograd_graph(false);
    int initials = 0, finals = 0, products = 0;
    for (const auto& n : g.nodes) {
        initials += n.kind == NodeKind::Initial;
        finals += n.kind == NodeKind::Final;
        products += n.is_product;
    }
    CHECK(initials == 8);
    CHECK(finals == 4);
    CHECK(products == 7);

    // U1 has in-edges from P1 and P2, both +
    const Node& u1 = g.nodes[g.find("U1")];
    REQUIRE(u1.sum_in.size() == 2);
    CHECK(g.nodes[u1.sum_in[0].src].id == "P1");
    CHECK(g.nodes[u1.sum_in[1].src].id == "P2");
    CHECK_FALSE(u1.sum_in[0].neg);
    CHECK_FALSE(u1.sum_in[1].neg);
    // U6 has an in-edge from P4 with sign -
    const Node& u6 = g.nodes[g.find("U6")];
    bool found = false;
    for (const auto& e : u6.sum_in)
        if (g.nodes[e.src].id == "P4") {
            CHECK(e.neg);
            found = true;
        }
    CHECK(found);

    TaskGraph acc = build_winograd_graph(true);
    int acc_initials = 0;
    for (const auto& n : acc.nodes) acc_initials += n.kind == NodeKind::Initial;
    CHECK(acc_initials == 12);
    CHECK(acc.accumulate);
    const Node& au1 = acc.nodes[acc.find("U1")];
    CHECK(au1.pair_initial == acc.find("C11in"));
}

TEST_CASE("graph file round trip", "[pebble]") {
    for (bool acc : {false, true}) {
        TaskGraph g = build_winograd_graph(acc);
        std::ostringstream os;
        render_graph(g, os);
        std::istringstream is(os.str());
        TaskGraph h = parse_graph(is);
        REQUIRE(h.nodes.size() == g.nodes.size());
        CHECK(h.accumulate == g.accumulate);
        CHECK(h.num_edges == g.num_edges);
        for (std::size_t i = 0; i < g.nodes.size(); ++i) {
            CHECK(h.nodes[i].id == g.nodes[i].id);
            CHECK(h.nodes[i].kind == g.nodes[i].kind);
            CHECK(h.nodes[i].is_product == g.nodes[i].is_product);
            CHECK(h.nodes[i].pair_initial == g.nodes[i].pair_initial);
        }
    }
    std::istringstream bad("node a initial\nedge a b +\n");
    CHECK_THROWS_AS(parse_graph(bad), graph_error);
    std::istringstream cyc(
        "node a temp\nnode b temp\nnode f final\n"
        "edge a b +\nedge b a +\nedge a f +\n");
    CHECK_THROWS_AS(parse_graph(cyc), graph_error);
}

TEST_CASE("toy graphs: search agrees with brute force for 0..4 extra pebbles",
          "[pebble]") {
    struct Case {
        TaskGraph g;
        OverwritePolicy pol;
        const char* name;
    };
    std::vector<Case> cases;
    cases.push_back({toy_chain(), OverwritePolicy::ReadOnly, "chain"});
    cases.push_back({toy_diamond(), OverwritePolicy::ReadOnly, "diamond readonly"});
    cases.push_back({toy_diamond(), OverwritePolicy::OverwriteBoth, "diamond both"});
    cases.push_back({toy_classical(), OverwritePolicy::ReadOnly, "classical"});
    for (auto& c : cases) {
        bool prev = false;
        for (int extra = 0; extra <= 4; ++extra) {
            SearchLimits lim;
            lim.copy_budget = 0;
            SearchResult r = search(c.g, extra, c.pol, lim);
            REQUIRE(r.outcome != Outcome::TimedOut);
            bool got = r.outcome == Outcome::FoundTrace;
            bool want = BruteForce(c.g, extra, c.pol).feasible();
            INFO(c.name << " extra=" << extra);
            CHECK(got == want);
            // monotonicity: feasibility never degrades with more pebbles
            if (prev) CHECK(got);
            prev = got;
            if (got) CHECK_NOTHROW(replay(c.g, extra, c.pol, r.trace, lim));
        }
    }
}

TEST_CASE("toy classical graph: 1 extra pebble, 12-step trace, runnable schedule",
          "[pebble]") {
    TaskGraph g = toy_classical();
    SearchLimits lim;
    lim.copy_budget = 0;
    CHECK(search(g, 0, OverwritePolicy::ReadOnly, lim).outcome == Outcome::Exhausted);
    SearchResult r = search(g, 1, OverwritePolicy::ReadOnly, lim);
    REQUIRE(r.outcome == Outcome::FoundTrace);
    CHECK(r.trace.steps.size() == 12);
    Schedule s = trace_to_schedule(g, r.trace, 1, OverwritePolicy::ReadOnly, "toy");
    CHECK(s.ins.size() == 12);
    CHECK(validate(s).ok());

    const Modulus mod(65521);
    Matrix A(8, 8, mod), B(8, 8, mod), C(8, 8, mod);
    A.fill_random(21);
    B.fill_random(22);
    Matrix want(8, 8, mod);
    classical_mul(want.view(), A.view(), B.view(), 1, 0, mod);
    run_parsed_schedule(s, A, B, C);
    CHECK(C == want);
}

TEST_CASE("winograd in-place search: overwrite both, zero extra pebbles",
          "[pebble]") {
    TaskGraph g = build_winograd_graph(false);
    SearchResult r = search(g, 0, OverwritePolicy::OverwriteBoth, {});
    REQUIRE(r.outcome == Outcome::FoundTrace);
    CHECK_NOTHROW(replay(g, 0, OverwritePolicy::OverwriteBoth, r.trace, {}));
    Schedule s =
        trace_to_schedule(g, r.trace, 0, OverwritePolicy::OverwriteBoth, "found-ip");
    CHECK(validate(s).ok());
    // fully in place: no temporaries, every product destroys its operands
    CHECK(s.temps.empty());
    for (const auto& in : s.ins)
        if (in.has_product()) CHECK(in.tag == Tag::IP);
    // runs and matches the oracle
    const Modulus mod(65521);
    for (std::size_t n : {4u, 8u, 16u}) {
        Matrix A(n, n, mod), B(n, n, mod), C(n, n, mod);
        A.fill_random(n);
        B.fill_random(n + 1);
        Matrix want(n, n, mod);
        classical_mul(want.view(), A.view(), B.view(), 1, 0, mod);
        CostReport rep = run_parsed_schedule(s, A, B, C);
        REQUIRE(C == want);
        CHECK(rep.peak_extra_words == 0);
    }
}

TEST_CASE("winograd search with read-only inputs and two temporaries", "[pebble]") {
    TaskGraph g = build_winograd_graph(false);
    SearchResult r = search(g, 2, OverwritePolicy::ReadOnly, {});
    REQUIRE(r.outcome == Outcome::FoundTrace);
    Schedule s =
        trace_to_schedule(g, r.trace, 2, OverwritePolicy::ReadOnly, "found-std");
    CHECK(validate(s).ok());
    const Modulus mod(65521);
    Matrix A(8, 8, mod), B(8, 8, mod), C(8, 8, mod);
    A.fill_random(31);
    B.fill_random(32);
    Matrix a0 = A, b0 = B;
    Matrix want(8, 8, mod);
    classical_mul(want.view(), A.view(), B.view(), 1, 0, mod);
    run_parsed_schedule(s, A, B, C);
    CHECK(C == want);
    CHECK(A == a0);
    CHECK(B == b0);
}

TEST_CASE("one-side overwrite with no extra temporary is exhausted", "[pebble]") {
    TaskGraph g = build_winograd_graph(false);
    SearchResult ra = search(g, 0, OverwritePolicy::OverwriteA, {});
    CHECK(ra.outcome == Outcome::Exhausted);
    SearchResult rb = search(g, 0, OverwritePolicy::OverwriteB, {});
    CHECK(rb.outcome == Outcome::Exhausted);
    // with one temporary the one-side overwrite becomes schedulable
    SearchResult r1 = search(g, 1, OverwritePolicy::OverwriteA, {});
    CHECK(r1.outcome == Outcome::FoundTrace);
}

TEST_CASE("search outcome limits", "[pebble]") {
    TaskGraph g = build_winograd_graph(true);
    SearchLimits lim;
    lim.state_cap = 2000;
    SearchResult r = search(g, 2, OverwritePolicy::OverwriteBoth, lim);
    CHECK(r.outcome == Outcome::TimedOut);
}

TEST_CASE("accumulation graph search finds a schedule with overwritable inputs",
          "[pebble]") {
    // 3 temporaries with overwritable inputs is schedulable (more space than
    // the best known two-temporary schedules need)
    TaskGraph g = build_winograd_graph(true);
    SearchLimits lim;
    lim.time_budget_seconds = 120;
    SearchResult r = search(g, 3, OverwritePolicy::OverwriteBoth, lim);
    if (r.outcome == Outcome::FoundTrace) {
        Schedule s = trace_to_schedule(g, r.trace, 3, OverwritePolicy::OverwriteBoth,
                                       "found-acc");
        CHECK(validate(s).ok());
        const Modulus mod(65521);
        Matrix A(8, 8, mod), B(8, 8, mod), C(8, 8, mod);
        A.fill_random(41);
        B.fill_random(42);
        C.fill_random(43);
        Matrix want = C;
        {
            Matrix A2 = A, B2 = B;
            classical_mul(want.view(), A2.view(), B2.view(), 1, 1, mod);
        }
        run_parsed_schedule(s, A, B, C, {.alpha = 1, .beta = 1});
        CHECK(C == want);
    } else {
        WARN("accumulation search did not finish in budget; outcome="
             << static_cast<int>(r.outcome));
    }
}

TEST_CASE("rectangular in-place feasibility precheck", "[pebble]") {
    CHECK(rect_inplace_feasible(8, 4, 4));
    CHECK(rect_inplace_feasible(4, 4, 8));
    CHECK(rect_inplace_feasible(4, 4, 4));
    CHECK_FALSE(rect_inplace_feasible(4, 8, 4));
    CHECK_FALSE(rect_inplace_feasible(2, 4, 8));
}

TEST_CASE("rule 2 partial-accumulation warning counter stays quiet on builtins",
          "[pebble]") {
    TaskGraph g = build_winograd_graph(false);
    SearchResult r = search(g, 0, OverwritePolicy::OverwriteBoth, {});
    CHECK(r.rule2_partial_warnings == 0);
}

// Optional long-running check of the claim that an in-place
// product schedule must overwrite at least four input sub-blocks: every
// overwritable subset of size <= 3 is exhausted. Run explicitly with
//   unit_tests "[long]"
TEST_CASE("in-place schedules need at least four overwritable blocks",
          "[.][long]") {
    TaskGraph g = build_winograd_graph(false);
    std::vector<std::string> inputs = {"A11", "A12", "A21", "A22",
                                       "B11", "B12", "B21", "B22"};
    SearchLimits lim;
    lim.time_budget_seconds = 24 * 3600;
    int checked = 0;
    for (int mask = 0; mask < 256; ++mask) {
        if (__builtin_popcount(mask) > 3) continue;
        std::set<std::string> ow;
        for (int b = 0; b < 8; ++b)
            if ((mask >> b) & 1) ow.insert(inputs[b]);
        SearchResult r = search(g, 0, OverwritePolicy::OverwriteBoth, lim, &ow);
        INFO("overwritable set size " << ow.size());
        REQUIRE(r.outcome == Outcome::Exhausted);
        ++checked;
    }
    CHECK(checked == 93);
}
