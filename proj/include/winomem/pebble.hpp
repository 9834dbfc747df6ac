#pragma once

// Pebble-game schedule search. A computation is a DAG whose nodes are
// program variables (initial / temporary / final) and whose edges point from
// operands to results; a pebble is an allocated memory block. The engine
// applies the five rules
//   0  computing a result / removing edges (sums may be partially executed)
//   1  freeing the pebble of an isolated, non-final node (applied eagerly)
//   2  computing in place / moving a full parent's pebble onto its only child
//   3  computing into a newly assigned free pebble
//   4  copying a computed value into a free pebble, splitting its out-edges
// depth-first with memoization until every final node is full and pebbled on
// an output block, and converts successful traces into executable schedules.
//
// Blocks are uniform (square case) and carry a class: input blocks come from
// initial nodes, output blocks from final nodes (the C quadrants; in
// accumulation graphs each final is paired with the initial C block it must
// end on), and scratch blocks are the extra pebbles. Read-only inputs keep
// their pebbles for good. Rule 2 applies to sum children only: a block
// product cannot write its result over one of its own operands.
//
// With zero free pebbles the searched schedules must be in place at every
// recursion level, so a product is only computable when both operands are
// overwritable and the product is their last use (the recursive call
// destroys them). With free pebbles available, operand-preserving recursive
// calls are also explored; their sub-level temporaries live inside the
// conceded extra memory.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "winomem/schedule.hpp"

namespace winomem::pebble {

struct graph_error : std::runtime_error {
    explicit graph_error(const std::string& w) : std::runtime_error(w) {}
};
struct malformed_trace_error : std::runtime_error {
    explicit malformed_trace_error(const std::string& w) : std::runtime_error(w) {}
};

enum class NodeKind : std::uint8_t { Initial, Temp, Final };
enum class Side : std::uint8_t { None, A, B };

struct SumEdge {
    int src = -1;
    bool neg = false;
    bool beta = false;  // contribution scaled by beta (initial-C edges)
    int edge_id = -1;
};

struct Node {
    std::string id;
    NodeKind kind = NodeKind::Temp;
    Side side = Side::None;
    bool is_product = false;
    int op1 = -1, op2 = -1;          // product operand nodes
    int op1_edge = -1, op2_edge = -1;
    std::vector<SumEdge> sum_in;
    int pair_initial = -1;           // final paired with this initial's block
    std::string target_slot;         // C-quadrant this final lands in
    std::vector<int> out_edges;      // global edge ids with this node as source
};

struct TaskGraph {
    std::vector<Node> nodes;
    bool accumulate = false;
    int num_edges = 0;

    int find(const std::string& id) const {
        for (std::size_t i = 0; i < nodes.size(); ++i)
            if (nodes[i].id == id) return static_cast<int>(i);
        return -1;
    }
    int edge_source(int e) const { return edge_src_[e]; }
    int edge_target(int e) const { return edge_dst_[e]; }

    // Assign edge ids and per-node incidence lists; verify shape.
    void prepare() {
        num_edges = 0;
        edge_src_.clear();
        edge_dst_.clear();
        for (auto& n : nodes) n.out_edges.clear();
        auto new_edge = [&](int src, int dst) {
            if (num_edges >= 64) throw graph_error("more than 64 edges unsupported");
            int id = num_edges++;
            edge_src_.push_back(src);
            edge_dst_.push_back(dst);
            nodes[src].out_edges.push_back(id);
            return id;
        };
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            Node& n = nodes[i];
            if (n.is_product) {
                if (n.op1 < 0 || n.op2 < 0) throw graph_error(n.id + ": bad product");
                if (n.kind == NodeKind::Initial)
                    throw graph_error(n.id + ": initial node with operands");
                n.op1_edge = new_edge(n.op1, static_cast<int>(i));
                n.op2_edge = new_edge(n.op2, static_cast<int>(i));
            }
            for (auto& e : n.sum_in) {
                if (e.src < 0) throw graph_error(n.id + ": bad edge");
                e.edge_id = new_edge(e.src, static_cast<int>(i));
            }
            if (n.kind == NodeKind::Initial && (n.is_product || !n.sum_in.empty()))
                throw graph_error(n.id + ": initial node with in-edges");
        }
        // acyclicity via topological elimination
        std::vector<int> indeg(nodes.size(), 0);
        for (int e = 0; e < num_edges; ++e) ++indeg[edge_dst_[e]];
        std::vector<int> queue;
        for (std::size_t i = 0; i < nodes.size(); ++i)
            if (!indeg[i]) queue.push_back(static_cast<int>(i));
        std::size_t seen = 0;
        while (!queue.empty()) {
            int v = queue.back();
            queue.pop_back();
            ++seen;
            for (int e : nodes[v].out_edges)
                if (--indeg[edge_dst_[e]] == 0) queue.push_back(edge_dst_[e]);
        }
        if (seen != nodes.size()) throw graph_error("task graph has a cycle");
    }

    std::uint64_t in_mask(int v) const {
        std::uint64_t m = 0;
        const Node& n = nodes[v];
        if (n.is_product) m |= (1ull << n.op1_edge) | (1ull << n.op2_edge);
        for (const auto& e : n.sum_in) m |= 1ull << e.edge_id;
        return m;
    }
    std::uint64_t out_mask(int v) const {
        std::uint64_t m = 0;
        for (int e : nodes[v].out_edges) m |= 1ull << e;
        return m;
    }

  private:
    std::vector<int> edge_src_, edge_dst_;
};

// --- block classes -----------------------------------------------------------
// 0 = scratch, 1 = anonymous output, 2+p = output paired with initial p.

inline constexpr int kScratch = 0;
inline constexpr int kOut = 1;

struct PebbleState {
    std::vector<std::int8_t> place;       // node -> block class or -1
    std::vector<std::int8_t> copy_place;  // node -> class of live copy or -1
    std::uint64_t edges = 0;              // remaining edges
    std::uint64_t copy_assigned = 0;      // edges satisfied by the source's copy
    std::vector<std::uint8_t> pool;       // free blocks per class
    std::uint8_t copies_used = 0;

    bool operator==(const PebbleState&) const = default;
};

struct StateHash {
    std::size_t operator()(const PebbleState& s) const {
        std::uint64_t h = 0xcbf29ce484222325ull;
        auto mix = [&](std::uint64_t v) {
            h ^= v;
            h *= 0x100000001b3ull;
        };
        for (auto v : s.place) mix(static_cast<std::uint8_t>(v));
        for (auto v : s.copy_place) mix(static_cast<std::uint8_t>(v));
        mix(s.edges);
        mix(s.copy_assigned);
        for (auto v : s.pool) mix(v);
        mix(s.copies_used);
        return static_cast<std::size_t>(h);
    }
};

// Flat canonical serialization used as the memoization key; one allocation
// per stored state instead of three.
inline std::string pack_state(const PebbleState& s) {
    std::string key;
    key.reserve(s.place.size() + s.copy_place.size() + s.pool.size() + 17);
    for (auto v : s.place) key.push_back(static_cast<char>(v));
    for (auto v : s.copy_place) key.push_back(static_cast<char>(v));
    for (int i = 0; i < 8; ++i)
        key.push_back(static_cast<char>((s.edges >> (8 * i)) & 0xff));
    for (int i = 0; i < 8; ++i)
        key.push_back(static_cast<char>((s.copy_assigned >> (8 * i)) & 0xff));
    for (auto v : s.pool) key.push_back(static_cast<char>(v));
    key.push_back(static_cast<char>(s.copies_used));
    return key;
}

struct TraceStep {
    int rule = 0;
    int node = -1;
    int parent = -1;               // rule 2: the parent whose pebble moves
    std::uint64_t edges_removed = 0;
    int block_class = -1;          // rule 3/4: class taken from the pool
    std::uint64_t copy_edges = 0;  // rule 4: out-edges handed to the copy
    std::vector<int> freed;        // nodes whose primary pebble was reclaimed
    std::vector<int> freed_copies;
};

struct Trace {
    std::vector<TraceStep> steps;
};

struct SearchLimits {
    int copy_budget = 2;
    double time_budget_seconds = 600.0;
    std::size_t state_cap = 8'000'000;
};

enum class Outcome { FoundTrace, Exhausted, TimedOut };

struct SearchResult {
    Outcome outcome = Outcome::Exhausted;
    Trace trace;
    std::uint64_t states = 0;
    std::uint64_t rule2_partial_warnings = 0;
};

// --- rule engine -------------------------------------------------------------

class Game {
  public:
    // `overwritable` optionally lists exactly which initial nodes may be
    // overwritten, overriding the side-based policy (used to probe claims
    // about how many input sub-blocks an in-place schedule must destroy).
    Game(const TaskGraph& g, int free_pebbles, OverwritePolicy policy,
         const SearchLimits& limits,
         const std::set<std::string>* overwritable = nullptr)
        : g_(g), limits_(limits) {
        const std::size_t N = g.nodes.size();
        frozen_.assign(N, false);
        int pairs = 0;
        pair_class_.assign(N, -1);
        for (std::size_t i = 0; i < N; ++i) {
            const Node& n = g.nodes[i];
            if (n.kind == NodeKind::Final && n.pair_initial >= 0 &&
                pair_class_[n.pair_initial] < 0)
                pair_class_[n.pair_initial] = 2 + pairs++;
        }
        for (std::size_t i = 0; i < N; ++i) {
            const Node& n = g.nodes[i];
            if (n.kind == NodeKind::Initial && pair_class_[i] < 0) {
                bool ok;
                if (overwritable) {
                    ok = overwritable->count(n.id) > 0;
                } else {
                    ok = (n.side == Side::A &&
                          (policy == OverwritePolicy::OverwriteA ||
                           policy == OverwritePolicy::OverwriteBoth)) ||
                         (n.side == Side::B &&
                          (policy == OverwritePolicy::OverwriteB ||
                           policy == OverwritePolicy::OverwriteBoth));
                }
                frozen_[i] = !ok;
            }
        }
        num_classes_ = 2 + pairs;
        require_consuming_products_ = free_pebbles == 0;

        init_.place.assign(N, -1);
        init_.copy_place.assign(N, -1);
        init_.pool.assign(num_classes_, 0);
        init_.pool[kScratch] = static_cast<std::uint8_t>(free_pebbles);
        int anonymous_outputs = 0;
        for (std::size_t i = 0; i < N; ++i) {
            const Node& n = g.nodes[i];
            if (n.kind == NodeKind::Initial)
                init_.place[i] = pair_class_[i] >= 0
                                     ? static_cast<std::int8_t>(pair_class_[i])
                                     : static_cast<std::int8_t>(kScratch);
            if (n.kind == NodeKind::Final && n.pair_initial < 0) ++anonymous_outputs;
        }
        init_.pool[kOut] = static_cast<std::uint8_t>(anonymous_outputs);
        for (int e = 0; e < g.num_edges; ++e) init_.edges |= 1ull << e;
        auto_free(init_, nullptr);
    }

    const PebbleState& initial() const { return init_; }
    int num_classes() const { return num_classes_; }
    bool frozen(int v) const { return frozen_[v]; }
    int pair_class_of_initial(int v) const { return pair_class_[v]; }

    // An edge can be consumed only when its source value is complete: the
    // source holds a pebble and has no remaining in-edges (copies are made
    // from full nodes, so a live copy is always complete).
    bool pebbled_source(const PebbleState& s, int edge) const {
        int src = g_.edge_source(edge);
        if (s.copy_assigned & (1ull << edge)) return s.copy_place[src] >= 0;
        return full(s, src);
    }
    bool full(const PebbleState& s, int v) const {
        return s.place[v] >= 0 && (s.edges & g_.in_mask(v)) == 0;
    }
    std::uint64_t remaining_in(const PebbleState& s, int v) const {
        return s.edges & g_.in_mask(v);
    }
    std::uint64_t remaining_out_primary(const PebbleState& s, int v) const {
        return s.edges & g_.out_mask(v) & ~s.copy_assigned;
    }
    std::uint64_t remaining_out_copy(const PebbleState& s, int v) const {
        return s.edges & g_.out_mask(v) & s.copy_assigned;
    }

    bool goal(const PebbleState& s) const {
        for (std::size_t i = 0; i < g_.nodes.size(); ++i) {
            const Node& n = g_.nodes[i];
            if (n.kind != NodeKind::Final) continue;
            if (!full(s, static_cast<int>(i))) return false;
            const int want =
                n.pair_initial >= 0 ? pair_class_[n.pair_initial] : kOut;
            if (s.place[i] != want) return false;
        }
        return true;
    }

    // Eagerly reclaim pebbles of isolated, fully used, non-final nodes
    // (rule 1, applied deterministically after every move).
    void auto_free(PebbleState& s, TraceStep* step) const {
        bool changed = true;
        while (changed) {
            changed = false;
            for (std::size_t i = 0; i < g_.nodes.size(); ++i) {
                int v = static_cast<int>(i);
                const Node& n = g_.nodes[i];
                if (s.copy_place[v] >= 0 && remaining_out_copy(s, v) == 0) {
                    s.pool[s.copy_place[v]]++;
                    s.copy_place[v] = -1;
                    if (step) step->freed_copies.push_back(v);
                    changed = true;
                }
                if (n.kind == NodeKind::Final || frozen_[v]) continue;
                if (s.place[v] >= 0 && remaining_in(s, v) == 0 &&
                    remaining_out_primary(s, v) == 0 &&
                    !(s.copy_place[v] >= 0)) {
                    s.pool[s.place[v]]++;
                    s.place[v] = -1;
                    if (step) step->freed.push_back(v);
                    changed = true;
                }
            }
        }
    }

    struct Move {
        int rule = 0;
        int node = -1;
        int parent = -1;
        std::uint64_t edges = 0;
        int cls = -1;
        std::uint64_t copy_edges = 0;
    };

    std::vector<Move> legal_moves(const PebbleState& s) const {
        std::vector<Move> moves;
        const int N = static_cast<int>(g_.nodes.size());

        // rule 0: partial or full execution into an existing pebble
        for (int v = 0; v < N; ++v) {
            const Node& n = g_.nodes[v];
            if (n.is_product || s.place[v] < 0) continue;
            std::uint64_t sat = 0;
            int cnt = 0;
            for (const auto& e : n.sum_in)
                if ((s.edges >> e.edge_id) & 1 && pebbled_source(s, e.edge_id)) {
                    sat |= 1ull << e.edge_id;
                    ++cnt;
                }
            if (!sat) continue;
            // all nonempty subsets of the satisfiable edges
            std::vector<int> bits;
            for (int e = 0; e < 64; ++e)
                if ((sat >> e) & 1) bits.push_back(e);
            for (std::uint64_t sub = 1; sub < (1ull << cnt); ++sub) {
                std::uint64_t mask = 0;
                for (int b = 0; b < cnt; ++b)
                    if ((sub >> b) & 1) mask |= 1ull << bits[b];
                moves.push_back({0, v, -1, mask, -1, 0});
            }
        }

        // rule 2: move a full parent's pebble onto its single empty sum child
        for (int p = 0; p < N; ++p) {
            if (frozen_[p] || g_.nodes[p].kind == NodeKind::Final) continue;
            if (!full(s, p) || s.copy_place[p] >= 0) continue;
            std::uint64_t outp = remaining_out_primary(s, p);
            if (outp == 0 || (outp & (outp - 1)) != 0) continue;  // exactly one
            if (remaining_out_copy(s, p) != 0) continue;
            int e = std::countr_zero(outp);
            int child = g_.edge_target(e);
            const Node& cn = g_.nodes[child];
            if (cn.is_product || s.place[child] >= 0) continue;
            std::uint64_t rem = remaining_in(s, child);
            bool all_sat = true;
            for (int b = 0; b < 64; ++b)
                if ((rem >> b) & 1 && !pebbled_source(s, b)) all_sat = false;
            if (!all_sat) continue;
            moves.push_back({2, child, p, rem, -1, 0});
        }

        // rule 3: assign a free pebble and compute what is computable
        for (int v = 0; v < N; ++v) {
            const Node& n = g_.nodes[v];
            if (n.kind == NodeKind::Initial || s.place[v] >= 0) continue;
            std::uint64_t mask = 0;
            if (n.is_product) {
                std::uint64_t rem = remaining_in(s, v);
                if (rem != ((1ull << n.op1_edge) | (1ull << n.op2_edge))) continue;
                if (!pebbled_source(s, n.op1_edge) || !pebbled_source(s, n.op2_edge))
                    continue;
                if (require_consuming_products_ &&
                    !consumable_operands(s, v, n))
                    continue;
                mask = rem;
            } else {
                for (const auto& e : n.sum_in)
                    if ((s.edges >> e.edge_id) & 1 && pebbled_source(s, e.edge_id))
                        mask |= 1ull << e.edge_id;
                if (!mask) continue;
            }
            for (int c = 0; c < num_classes_; ++c)
                if (s.pool[c] > 0) moves.push_back({3, v, -1, mask, c, 0});
        }

        // rule 4: copy a computed value, splitting its remaining out-edges
        if (s.copies_used < limits_.copy_budget) {
            for (int v = 0; v < N; ++v) {
                if (!full(s, v) || s.copy_place[v] >= 0) continue;
                std::uint64_t outp = remaining_out_primary(s, v);
                if (!outp) continue;
                std::vector<int> bits;
                for (int e = 0; e < 64; ++e)
                    if ((outp >> e) & 1) bits.push_back(e);
                const int d = static_cast<int>(bits.size());
                for (std::uint64_t sub = 1; sub < (1ull << d); ++sub) {
                    std::uint64_t give = 0;
                    for (int b = 0; b < d; ++b)
                        if ((sub >> b) & 1) give |= 1ull << bits[b];
                    for (int c = 0; c < num_classes_; ++c)
                        if (s.pool[c] > 0)
                            moves.push_back({4, v, -1, 0, c, give});
                }
            }
        }
        return moves;
    }

    // Applies a legal move; records freed pebbles into `step` when given.
    PebbleState apply(const PebbleState& s, const Move& mv, TraceStep* step,
                      std::uint64_t* warnings = nullptr) const {
        PebbleState t = s;
        switch (mv.rule) {
            case 0:
                t.edges &= ~mv.edges;
                break;
            case 2: {
                if (warnings && remaining_in(s, mv.node) != g_.in_mask(mv.node))
                    ++*warnings;
                t.place[mv.node] = t.place[mv.parent];
                t.place[mv.parent] = -1;
                t.edges &= ~mv.edges;
                break;
            }
            case 3:
                t.pool[mv.cls]--;
                t.place[mv.node] = static_cast<std::int8_t>(mv.cls);
                t.edges &= ~mv.edges;
                break;
            case 4:
                t.pool[mv.cls]--;
                t.copy_place[mv.node] = static_cast<std::int8_t>(mv.cls);
                t.copy_assigned |= mv.copy_edges;
                t.copies_used++;
                break;
            default:
                throw malformed_trace_error("bad rule id");
        }
        if (step) {
            step->rule = mv.rule;
            step->node = mv.node;
            step->parent = mv.parent;
            step->edges_removed = mv.edges;
            step->block_class = mv.cls;
            step->copy_edges = mv.copy_edges;
        }
        auto_free(t, step);
        return t;
    }

  private:
    // True when the recursive call backing product v may destroy both
    // operands: each operand block is overwritable and the product consumes
    // its last remaining (primary-assigned) out-edge.
    bool consumable_operands(const PebbleState& s, int v, const Node& n) const {
        for (int op : {n.op1, n.op2}) {
            if (frozen_[op] || g_.nodes[op].kind == NodeKind::Final) return false;
            std::uint64_t rest = remaining_out_primary(s, op) & ~g_.in_mask(v);
            if (rest != 0) return false;
        }
        return true;
    }

    const TaskGraph& g_;
    SearchLimits limits_;
    PebbleState init_;
    std::vector<bool> frozen_;
    std::vector<int> pair_class_;
    int num_classes_ = 2;
    bool require_consuming_products_ = false;
};

// Depth-first search with memoization over canonical states. Deterministic:
// rules in order 0,2,3,4 (rule 1 fires eagerly inside apply), nodes in graph
// order, subsets and pool classes in increasing order.
inline SearchResult search(const TaskGraph& g, int free_pebbles,
                           OverwritePolicy policy, const SearchLimits& limits = {},
                           const std::set<std::string>* overwritable = nullptr) {
    Game game(g, free_pebbles, policy, limits, overwritable);
    SearchResult res;

    struct Frame {
        PebbleState state;
        std::vector<Game::Move> moves;
        std::size_t next = 0;
        TraceStep step;  // the step that produced this state
    };

    std::unordered_set<std::string> visited;
    const auto t0 = std::chrono::steady_clock::now();

    std::vector<Frame> stack;
    stack.push_back({game.initial(), {}, 0, {}});
    stack.back().moves = game.legal_moves(stack.back().state);
    visited.insert(pack_state(stack.back().state));

    if (game.goal(stack.back().state)) {
        res.outcome = Outcome::FoundTrace;
        res.states = 1;
        return res;
    }

    std::uint64_t expansions = 0;
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next >= f.moves.size()) {
            stack.pop_back();
            continue;
        }
        const Game::Move mv = f.moves[f.next++];
        TraceStep step;
        PebbleState nxt = game.apply(f.state, mv, &step, &res.rule2_partial_warnings);
        if (!visited.insert(pack_state(nxt)).second) continue;

        if ((++expansions & 1023) == 0) {
            const double secs =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                    .count();
            if (secs > limits.time_budget_seconds || visited.size() > limits.state_cap) {
                res.outcome = Outcome::TimedOut;
                res.states = visited.size();
                return res;
            }
        }

        if (game.goal(nxt)) {
            res.outcome = Outcome::FoundTrace;
            res.states = visited.size();
            for (auto& fr : stack)
                if (fr.step.node >= 0) res.trace.steps.push_back(fr.step);
            res.trace.steps.push_back(step);
            return res;
        }

        Frame nf;
        nf.state = std::move(nxt);
        nf.step = step;
        nf.moves = game.legal_moves(nf.state);
        stack.push_back(std::move(nf));
    }
    res.outcome = Outcome::Exhausted;
    res.states = visited.size();
    return res;
}

// Replays a trace from the start state, asserting every step is one of the
// legal moves at its point of application; returns the final state.
inline PebbleState replay(const TaskGraph& g, int free_pebbles,
                          OverwritePolicy policy, const Trace& trace,
                          const SearchLimits& limits = {}) {
    Game game(g, free_pebbles, policy, limits);
    PebbleState s = game.initial();
    for (const auto& st : trace.steps) {
        auto moves = game.legal_moves(s);
        bool ok = false;
        for (const auto& mv : moves) {
            if (mv.rule == st.rule && mv.node == st.node && mv.parent == st.parent &&
                mv.edges == st.edges_removed && mv.cls == st.block_class &&
                mv.copy_edges == st.copy_edges) {
                s = game.apply(s, mv, nullptr);
                ok = true;
                break;
            }
        }
        if (!ok)
            throw malformed_trace_error("trace step is not legal at its position");
    }
    if (!game.goal(s)) throw malformed_trace_error("trace does not reach the goal");
    return s;
}

// The rectangular feasibility precondition for fully in-place multiplication:
// blocks of A and B must not exceed the size of a C block.
inline bool rect_inplace_feasible(std::size_t m, std::size_t k, std::size_t n) {
    return k <= std::min(m, n);
}

// --- builtin graphs ----------------------------------------------------------

inline TaskGraph build_winograd_graph(bool accumulate) {
    TaskGraph g;
    g.accumulate = accumulate;
    auto add = [&](const std::string& id, NodeKind kind, Side side = Side::None) {
        Node n;
        n.id = id;
        n.kind = kind;
        n.side = side;
        g.nodes.push_back(n);
        return static_cast<int>(g.nodes.size() - 1);
    };
    int a11 = add("A11", NodeKind::Initial, Side::A);
    int a12 = add("A12", NodeKind::Initial, Side::A);
    int a21 = add("A21", NodeKind::Initial, Side::A);
    int a22 = add("A22", NodeKind::Initial, Side::A);
    int b11 = add("B11", NodeKind::Initial, Side::B);
    int b12 = add("B12", NodeKind::Initial, Side::B);
    int b21 = add("B21", NodeKind::Initial, Side::B);
    int b22 = add("B22", NodeKind::Initial, Side::B);
    int c11 = -1, c12 = -1, c21 = -1, c22 = -1;
    if (accumulate) {
        c11 = add("C11in", NodeKind::Initial);
        c12 = add("C12in", NodeKind::Initial);
        c21 = add("C21in", NodeKind::Initial);
        c22 = add("C22in", NodeKind::Initial);
    }
    auto sum2 = [&](const std::string& id, int s1, bool n1, int s2, bool n2,
                    NodeKind kind = NodeKind::Temp) {
        int v = add(id, kind);
        g.nodes[v].sum_in.push_back({s1, n1, false, -1});
        g.nodes[v].sum_in.push_back({s2, n2, false, -1});
        return v;
    };
    auto prod = [&](const std::string& id, int l, int r) {
        int v = add(id, NodeKind::Temp);
        g.nodes[v].is_product = true;
        g.nodes[v].op1 = l;
        g.nodes[v].op2 = r;
        return v;
    };
    // the 8 additions
    int s1 = sum2("S1", a21, false, a22, false);
    int s2 = sum2("S2", s1, false, a11, true);
    int s3 = sum2("S3", a11, false, a21, true);
    int t1 = sum2("T1", b12, false, b11, true);
    int t2 = sum2("T2", b22, false, t1, true);
    int t3 = sum2("T3", b22, false, b12, true);
    int s4 = sum2("S4", a12, false, s2, true);
    int t4 = sum2("T4", t2, false, b21, true);
    // the 7 recursive multiplications
    int p1 = prod("P1", a11, b11);
    int p2 = prod("P2", a12, b21);
    int p3 = prod("P3", s4, b22);
    int p4 = prod("P4", a22, t4);
    int p5 = prod("P5", s1, t1);
    int p6 = prod("P6", s2, t2);
    int p7 = prod("P7", s3, t3);
    // the 7 final additions
    int u1 = sum2("U1", p1, false, p2, false, NodeKind::Final);
    int u2 = sum2("U2", p1, false, p6, false);
    int u3 = sum2("U3", u2, false, p7, false);
    int u4 = sum2("U4", u2, false, p5, false);
    int u5 = sum2("U5", u4, false, p3, false, NodeKind::Final);
    int u6 = sum2("U6", u3, false, p4, true, NodeKind::Final);
    int u7 = sum2("U7", u3, false, p5, false, NodeKind::Final);
    g.nodes[u1].target_slot = "C11";
    g.nodes[u5].target_slot = "C12";
    g.nodes[u6].target_slot = "C21";
    g.nodes[u7].target_slot = "C22";
    if (accumulate) {
        auto beta_edge = [&](int u, int c) {
            g.nodes[u].sum_in.push_back({c, false, true, -1});
            g.nodes[u].pair_initial = c;
        };
        beta_edge(u1, c11);
        beta_edge(u5, c12);
        beta_edge(u6, c21);
        beta_edge(u7, c22);
    }
    g.prepare();
    return g;
}

// --- graph file format ---------------------------------------------------
// node <id> <initial|temp|final> [A|B]        side for initials
// node <id> final pair=<initial-id>           output block paired in place
// edge <src> <dst> <+|->
// prod <id> <op1> <op2>

inline TaskGraph parse_graph(std::istream& is) {
    TaskGraph g;
    std::string line;
    int lineno = 0;
    std::vector<std::array<std::string, 3>> edges;
    std::vector<std::pair<int, std::string>> pairings;
    while (std::getline(is, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string kw;
        if (!(ls >> kw) || kw[0] == '#') continue;
        if (kw == "node") {
            std::string id, kind, extra;
            ls >> id >> kind;
            Node n;
            n.id = id;
            if (kind == "initial") n.kind = NodeKind::Initial;
            else if (kind == "temp") n.kind = NodeKind::Temp;
            else if (kind == "final") n.kind = NodeKind::Final;
            else throw graph_error("line " + std::to_string(lineno) + ": bad kind");
            while (ls >> extra) {
                if (extra == "A") n.side = Side::A;
                else if (extra == "B") n.side = Side::B;
                else if (extra.rfind("pair=", 0) == 0)
                    pairings.push_back(
                        {static_cast<int>(g.nodes.size()), extra.substr(5)});
                else throw graph_error("line " + std::to_string(lineno) +
                                       ": bad attribute " + extra);
            }
            g.nodes.push_back(n);
        } else if (kw == "edge") {
            std::string s, d, sign;
            if (!(ls >> s >> d >> sign) || (sign != "+" && sign != "-"))
                throw graph_error("line " + std::to_string(lineno) + ": bad edge");
            edges.push_back({s, d, sign});
        } else if (kw == "prod") {
            std::string id, o1, o2;
            if (!(ls >> id >> o1 >> o2))
                throw graph_error("line " + std::to_string(lineno) + ": bad prod");
            edges.push_back({id, o1, "p1"});
            edges.push_back({id, o2, "p2"});
        } else {
            throw graph_error("line " + std::to_string(lineno) + ": unknown keyword " +
                              kw);
        }
    }
    for (const auto& [a, b, t] : edges) {
        if (t == "p1" || t == "p2") {
            int v = g.find(a), o = g.find(b);
            if (v < 0 || o < 0) throw graph_error("prod references unknown node");
            g.nodes[v].is_product = true;
            (t == "p1" ? g.nodes[v].op1 : g.nodes[v].op2) = o;
        } else {
            int s = g.find(a), d = g.find(b);
            if (s < 0 || d < 0) throw graph_error("edge references unknown node");
            g.nodes[d].sum_in.push_back({s, t == "-", false, -1});
        }
    }
    for (const auto& [final_idx, init_id] : pairings) {
        int p = g.find(init_id);
        if (p < 0 || g.nodes[p].kind != NodeKind::Initial)
            throw graph_error("pair= must reference an initial node");
        g.nodes[final_idx].pair_initial = p;
        for (auto& e : g.nodes[final_idx].sum_in)
            if (e.src == p) e.beta = true;
        g.accumulate = true;
    }
    // finals named like C quadrants land there on emission
    for (auto& n : g.nodes)
        if (n.kind == NodeKind::Final && slot_by_name(n.id) &&
            slot_role(*slot_by_name(n.id)) == SlotRole::InoutC)
            n.target_slot = n.id;
    g.prepare();
    return g;
}

inline void render_graph(const TaskGraph& g, std::ostream& os) {
    for (const auto& n : g.nodes) {
        os << "node " << n.id << ' ';
        switch (n.kind) {
            case NodeKind::Initial: os << "initial"; break;
            case NodeKind::Temp: os << "temp"; break;
            case NodeKind::Final: os << "final"; break;
        }
        if (n.side == Side::A) os << " A";
        if (n.side == Side::B) os << " B";
        if (n.pair_initial >= 0) os << " pair=" << g.nodes[n.pair_initial].id;
        os << '\n';
    }
    for (const auto& n : g.nodes) {
        if (n.is_product)
            os << "prod " << n.id << ' ' << g.nodes[n.op1].id << ' '
               << g.nodes[n.op2].id << '\n';
        for (const auto& e : n.sum_in)
            os << "edge " << g.nodes[e.src].id << ' ' << n.id << ' '
               << (e.neg ? '-' : '+') << '\n';
    }
}

inline TaskGraph load_graph(const std::string& spec) {
    if (spec == "builtin:winograd") return build_winograd_graph(false);
    if (spec == "builtin:winograd-acc") return build_winograd_graph(true);
    std::ifstream f(spec);
    if (!f.good()) throw graph_error("cannot open graph file: " + spec);
    return parse_graph(f);
}

// --- trace to schedule ---------------------------------------------------
// Replays a goal trace with concrete block identities and emits an
// executable schedule: input blocks keep their slot names, the blocks the
// finals end on become the C quadrants, scratch blocks become X/Y/Z in order
// of first allocation, and each product is tagged IP/OvL/OvR/Std2 according
// to whether its operand blocks are dead after the call.

namespace detail {

struct EmitTermRef {
    Scalar scalar;
    int block = -1;  // reading this block's current value
};
struct EmitRow {
    std::string label;
    int dst_block = -1;
    bool is_product = false;
    Scalar prod_scalar;
    int lhs_block = -1, rhs_block = -1;
    std::string lhs_label, rhs_label;
    std::vector<EmitTermRef> terms;  // slot terms (incl. accumulator), with labels
    std::vector<std::string> term_labels;
    Tag tag = Tag::LeafAdd;  // products patched later by liveness
};

}  // namespace detail

inline Schedule trace_to_schedule(const TaskGraph& g, const Trace& trace,
                                  int free_pebbles, OverwritePolicy policy,
                                  const std::string& name = "emitted",
                                  const SearchLimits& limits = {}) {
    Game game(g, free_pebbles, policy, limits);
    const int N = static_cast<int>(g.nodes.size());

    // Concrete block identities. Inputs first, then anonymous outputs, then
    // scratch; pools hand out the lowest free id.
    int next_block = 0;
    std::vector<int> node_block(N, -1), node_copy_block(N, -1);
    std::vector<int> block_class;
    std::map<int, std::set<int>> pool;  // class -> free concrete ids
    std::vector<std::string> block_slot_name;  // resolved later for out/scratch
    auto new_block = [&](int cls) {
        block_class.push_back(cls);
        block_slot_name.emplace_back();
        return next_block++;
    };
    std::vector<int> initial_block(N, -1);
    for (int v = 0; v < N; ++v) {
        const Node& n = g.nodes[v];
        if (n.kind != NodeKind::Initial) continue;
        int cls = game.pair_class_of_initial(v) >= 0 ? game.pair_class_of_initial(v)
                                                     : kScratch;
        node_block[v] = new_block(cls);
        initial_block[v] = node_block[v];
        if (game.pair_class_of_initial(v) < 0) {
            // plain input block: named by the initial node
            auto sid = slot_by_name(n.id);
            if (!sid)
                throw malformed_trace_error("initial node " + n.id +
                                            " is not a slot name");
            block_slot_name[node_block[v]] = n.id;
        }
    }
    int out_count = 0;
    for (const auto& n : g.nodes)
        if (n.kind == NodeKind::Final && n.pair_initial < 0) ++out_count;
    for (int i = 0; i < out_count; ++i) pool[kOut].insert(new_block(kOut));
    for (int i = 0; i < free_pebbles; ++i) pool[kScratch].insert(new_block(kScratch));

    auto take_block = [&](int cls) {
        auto& p = pool[cls];
        if (p.empty()) throw malformed_trace_error("pool underflow on replay");
        int id = *p.begin();
        p.erase(p.begin());
        return id;
    };

    // labels currently stored on each block (for readable operand names);
    // paired initial C blocks are labeled by their quadrant slot so the
    // emitted text parses
    std::vector<std::string> block_label(static_cast<std::size_t>(next_block));
    for (int v = 0; v < N; ++v) {
        if (node_block[v] < 0) continue;
        block_label[node_block[v]] = g.nodes[v].id;
        if (game.pair_class_of_initial(v) >= 0) {
            for (int f = 0; f < N; ++f)
                if (g.nodes[f].kind == NodeKind::Final &&
                    g.nodes[f].pair_initial == v && !g.nodes[f].target_slot.empty())
                    block_label[node_block[v]] = g.nodes[f].target_slot;
        }
    }

    std::vector<detail::EmitRow> rows;
    const bool acc_graph = g.accumulate;

    auto edge_info = [&](int eid) {
        // returns (src node, neg, beta) for a sum edge
        for (const auto& n : g.nodes)
            for (const auto& e : n.sum_in)
                if (e.edge_id == eid) return std::tuple<int, bool, bool>{e.src, e.neg, e.beta};
        throw malformed_trace_error("unknown sum edge");
    };
    auto src_block_of_edge = [&](int eid, const PebbleState& s) {
        int src = g.edge_source(eid);
        bool via_copy = (s.copy_assigned >> eid) & 1;
        int b = via_copy ? node_copy_block[src] : node_block[src];
        if (b < 0) throw malformed_trace_error("edge source has no block");
        return b;
    };
    auto term_scalar = [&](bool neg, bool beta) {
        Scalar sc;
        sc.neg = neg;
        if (beta) sc.sym = ScalarSym::Beta;
        return sc;
    };

    // Emit the additive rows realizing removal of `mask` into node v, whose
    // value (possibly partial) lives on block dst. `seed_block` is the
    // block whose current content provides the first contribution (rule 2),
    // or -1 when the destination already holds a partial value (rule 0) or
    // starts empty (rule 3).
    auto emit_sum_rows = [&](int v, int dst, std::uint64_t mask, int seed_block,
                             bool seed_neg, bool dst_has_value,
                             const PebbleState& before) {
        std::vector<detail::EmitRow> out;
        detail::EmitRow row;
        row.label = g.nodes[v].id;
        row.dst_block = dst;
        if (seed_block >= 0) {
            detail::EmitTermRef t;
            t.scalar.neg = seed_neg;
            t.block = seed_block;
            row.terms.push_back(t);
            row.term_labels.push_back(block_label[seed_block]);
        } else if (dst_has_value) {
            detail::EmitTermRef t;
            t.block = dst;
            row.terms.push_back(t);
            row.term_labels.push_back(block_label[dst]);
        }
        for (int e = 0; e < 64; ++e) {
            if (!((mask >> e) & 1)) continue;
            auto [src, neg, beta] = edge_info(e);
            (void)src;
            detail::EmitTermRef t;
            t.scalar = term_scalar(neg, beta);
            t.block = src_block_of_edge(e, before);
            if (row.terms.size() == 2) {
                out.push_back(row);
                row.terms.clear();
                row.term_labels.clear();
                detail::EmitTermRef self;
                self.block = dst;
                row.terms.push_back(self);
                row.term_labels.push_back(row.label);
            }
            row.terms.push_back(t);
            row.term_labels.push_back(block_label[t.block]);
        }
        out.push_back(row);
        for (auto& r : out) rows.push_back(r);
    };

    PebbleState s = game.initial();
    for (const auto& st : trace.steps) {
        // re-derive legality and locate the matching move
        auto moves = game.legal_moves(s);
        const Game::Move* found = nullptr;
        for (const auto& mv : moves)
            if (mv.rule == st.rule && mv.node == st.node && mv.parent == st.parent &&
                mv.edges == st.edges_removed && mv.cls == st.block_class &&
                mv.copy_edges == st.copy_edges) {
                found = &mv;
                break;
            }
        if (!found) throw malformed_trace_error("illegal step during emission");
        const Game::Move mv = *found;
        const Node& n = g.nodes[mv.node];

        if (mv.rule == 0) {
            emit_sum_rows(mv.node, node_block[mv.node], mv.edges, -1, false, true, s);
            block_label[node_block[mv.node]] = n.id;
        } else if (mv.rule == 2) {
            int pb = node_block[mv.parent];
            // the parent's own edge provides the seed term; find it
            std::uint64_t mask = mv.edges;
            int seed_edge = -1;
            for (int e = 0; e < 64; ++e)
                if ((mask >> e) & 1 && g.edge_source(e) == mv.parent &&
                    !((s.copy_assigned >> e) & 1)) {
                    seed_edge = e;
                    break;
                }
            if (seed_edge < 0) throw malformed_trace_error("rule 2 without parent edge");
            auto [src, neg, beta] = edge_info(seed_edge);
            (void)src;
            if (beta) {
                // seed with an explicit beta-scaled self term
                std::uint64_t rest = mask & ~(1ull << seed_edge);
                detail::EmitRow row;
                row.label = n.id;
                row.dst_block = pb;
                detail::EmitTermRef t;
                t.scalar = term_scalar(neg, true);
                t.block = pb;
                row.terms.push_back(t);
                row.term_labels.push_back(block_label[pb]);
                rows.push_back(row);
                node_block[mv.node] = pb;
                node_block[mv.parent] = -1;
                block_label[pb] = n.id;
                if (rest) emit_sum_rows(mv.node, pb, rest, -1, false, true, s);
            } else {
                std::uint64_t rest = mask & ~(1ull << seed_edge);
                node_block[mv.node] = pb;
                node_block[mv.parent] = -1;
                emit_sum_rows(mv.node, pb, rest, pb, neg, false, s);
                block_label[pb] = n.id;
            }
        } else if (mv.rule == 3) {
            int b = take_block(mv.cls);
            node_block[mv.node] = b;
            if (n.is_product) {
                detail::EmitRow row;
                row.label = n.id;
                row.dst_block = b;
                row.is_product = true;
                if (acc_graph) row.prod_scalar.sym = ScalarSym::Alpha;
                row.lhs_block = src_block_of_edge(n.op1_edge, s);
                row.rhs_block = src_block_of_edge(n.op2_edge, s);
                row.lhs_label = block_label[row.lhs_block];
                row.rhs_label = block_label[row.rhs_block];
                rows.push_back(row);
            } else {
                emit_sum_rows(mv.node, b, mv.edges, -1, false, false, s);
            }
            block_label[b] = n.id;
        } else if (mv.rule == 4) {
            int b = take_block(mv.cls);
            node_copy_block[mv.node] = b;
            detail::EmitRow row;
            row.label = n.id + "'";
            row.dst_block = b;
            detail::EmitTermRef t;
            t.block = node_block[mv.node];
            row.terms.push_back(t);
            row.term_labels.push_back(block_label[t.block]);
            rows.push_back(row);
            block_label[b] = row.label;
        }

        TraceStep scratch_step;
        PebbleState nxt = game.apply(s, mv, &scratch_step);
        for (int v : scratch_step.freed) {
            pool[block_class[node_block[v]]].insert(node_block[v]);
            node_block[v] = -1;
        }
        for (int v : scratch_step.freed_copies) {
            pool[block_class[node_copy_block[v]]].insert(node_copy_block[v]);
            node_copy_block[v] = -1;
        }
        s = nxt;
    }
    if (!game.goal(s)) throw malformed_trace_error("trace does not reach the goal");

    // Assign slot names: finals name the out blocks they end on.
    for (int v = 0; v < N; ++v) {
        const Node& n = g.nodes[v];
        if (n.kind != NodeKind::Final) continue;
        std::string slot = n.target_slot;
        if (slot.empty() && n.pair_initial >= 0)
            slot = g.nodes[n.pair_initial].target_slot;
        if (slot.empty())
            throw malformed_trace_error("final " + n.id +
                                        " has no C-quadrant slot for emission");
        block_slot_name[node_block[v]] = slot;
    }
    const char* temp_names[] = {"X", "Y", "Z"};
    int temps_used = 0;
    for (auto& row : rows) {
        std::vector<int> blocks{row.dst_block};
        if (row.is_product) blocks.insert(blocks.end(), {row.lhs_block, row.rhs_block});
        for (auto& t : row.terms) blocks.push_back(t.block);
        for (int b : blocks) {
            if (b < 0 || !block_slot_name[b].empty()) continue;
            if (temps_used >= 3)
                throw malformed_trace_error("more than three scratch blocks in play");
            block_slot_name[b] = temp_names[temps_used++];
        }
    }

    // Liveness-based recursion tags: an operand block may be overwritten by
    // the recursive call iff its value is not read again before being
    // rewritten (input blocks of read-only sides are never overwritable).
    std::vector<bool> block_frozen(block_class.size(), false);
    for (int v = 0; v < N; ++v)
        if (g.nodes[v].kind == NodeKind::Initial && game.frozen(v))
            block_frozen[initial_block[v]] = true;
    std::vector<int> final_blocks;
    for (int v = 0; v < N; ++v)
        if (g.nodes[v].kind == NodeKind::Final) final_blocks.push_back(node_block[v]);
    auto dead_after = [&](int b, std::size_t i) {
        if (block_frozen[b]) return false;
        for (std::size_t j = i + 1; j < rows.size(); ++j) {
            const auto& r = rows[j];
            bool reads = false;
            if (r.is_product) reads = r.lhs_block == b || r.rhs_block == b;
            for (const auto& t : r.terms) reads |= t.block == b;
            if (reads) return false;
            if (r.dst_block == b) return true;  // rewritten before any read
        }
        return std::find(final_blocks.begin(), final_blocks.end(), b) ==
               final_blocks.end();
    };
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto& r = rows[i];
        if (!r.is_product) continue;
        const bool ld = dead_after(r.lhs_block, i);
        const bool rd = dead_after(r.rhs_block, i);
        r.tag = ld && rd ? Tag::IP : ld ? Tag::OvL : rd ? Tag::OvR : Tag::Std2;
    }

    // Materialize the schedule.
    Schedule sched;
    sched.name = name;
    sched.contract = policy;
    sched.accumulating = acc_graph;
    sched.square_only = true;
    std::set<std::string> temps_declared;
    int index = 1;
    for (const auto& r : rows) {
        Instruction in;
        in.index = index++;
        in.label = r.label;
        auto dst = slot_by_name(block_slot_name[r.dst_block]);
        if (!dst) throw malformed_trace_error("unresolved destination block");
        in.dst = *dst;
        if (slot_role(in.dst) == SlotRole::Temporary)
            temps_declared.insert(block_slot_name[r.dst_block]);
        if (r.is_product) {
            in.tag = r.tag;
            in.explicit_tag = true;
            ProductTerm p;
            p.scalar = r.prod_scalar;
            p.lhs = Operand{r.lhs_label, *slot_by_name(block_slot_name[r.lhs_block])};
            p.rhs = Operand{r.rhs_label, *slot_by_name(block_slot_name[r.rhs_block])};
            in.prod = p;
        } else {
            in.tag = Tag::LeafAdd;
            for (std::size_t t = 0; t < r.terms.size(); ++t) {
                AddTerm a;
                a.scalar = r.terms[t].scalar;
                a.op = Operand{r.term_labels[t],
                               *slot_by_name(block_slot_name[r.terms[t].block])};
                in.adds.push_back(a);
            }
        }
        sched.ins.push_back(std::move(in));
    }
    for (const auto& t : temps_declared)
        sched.temps.push_back({*slot_by_name(t), DimExpr::N2, DimExpr::N2});
    // final flags: last write of each C quadrant
    std::map<SlotId, int> last_write;
    for (const auto& in : sched.ins)
        if (slot_role(in.dst) == SlotRole::InoutC) last_write[in.dst] = in.index;
    for (auto& in : sched.ins)
        in.is_final = slot_role(in.dst) == SlotRole::InoutC &&
                      last_write[in.dst] == in.index;
    return sched;
}

}  // namespace winomem::pebble
