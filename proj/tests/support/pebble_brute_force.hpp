#pragma once

// Test-support oracle, deliberately separate from the search engine: a plain
// breadth-first enumeration of all rule applications (no copies) used to
// cross-check search feasibility answers on small graphs.

#include <queue>
#include <set>
#include <sstream>

#include "winomem/pebble.hpp"

namespace winomem::pebble::testing {

// Independent brute-force feasibility enumerator: breadth-first over all
// rule applications (no copies), written directly from the rule definitions
// and kept separate from the search engine on purpose.
class BruteForce {
  public:
    BruteForce(const TaskGraph& g, int extra, OverwritePolicy pol)
        : g_(g), consuming_(extra == 0) {
        const int N = static_cast<int>(g.nodes.size());
        frozen_.assign(N, false);
        pair_cls_.assign(N, -1);
        int pairs = 0;
        for (int v = 0; v < N; ++v)
            if (g.nodes[v].kind == NodeKind::Final && g.nodes[v].pair_initial >= 0 &&
                pair_cls_[g.nodes[v].pair_initial] < 0)
                pair_cls_[g.nodes[v].pair_initial] = 2 + pairs++;
        classes_ = 2 + pairs;
        for (int v = 0; v < N; ++v) {
            const Node& n = g.nodes[v];
            if (n.kind != NodeKind::Initial || pair_cls_[v] >= 0) continue;
            bool ow = (n.side == Side::A && (pol == OverwritePolicy::OverwriteA ||
                                             pol == OverwritePolicy::OverwriteBoth)) ||
                      (n.side == Side::B && (pol == OverwritePolicy::OverwriteB ||
                                             pol == OverwritePolicy::OverwriteBoth));
            frozen_[v] = !ow;
        }
        start_.place.assign(N, -1);
        start_.pool.assign(classes_, 0);
        start_.pool[0] = extra;
        int outs = 0;
        for (int v = 0; v < N; ++v) {
            const Node& n = g.nodes[v];
            if (n.kind == NodeKind::Initial)
                start_.place[v] = pair_cls_[v] >= 0 ? pair_cls_[v] : 0;
            if (n.kind == NodeKind::Final && n.pair_initial < 0) ++outs;
        }
        start_.pool[1] = outs;
        for (int e = 0; e < g.num_edges; ++e) start_.edges |= 1ull << e;
        autofree(start_);
    }

    bool feasible() {
        std::set<std::string> seen;
        std::queue<St> q;
        q.push(start_);
        seen.insert(key(start_));
        while (!q.empty()) {
            St s = q.front();
            q.pop();
            if (goal(s)) return true;
            for (const St& t : successors(s)) {
                std::string k = key(t);
                if (seen.insert(k).second) q.push(t);
            }
        }
        return false;
    }

  private:
    struct St {
        std::vector<int> place;
        std::uint64_t edges = 0;
        std::vector<int> pool;
    };

    std::string key(const St& s) const {
        std::ostringstream os;
        for (int p : s.place) os << p << ',';
        os << '|' << s.edges << '|';
        for (int p : s.pool) os << p << ',';
        return os.str();
    }
    bool isfull(const St& s, int v) const {
        return s.place[v] >= 0 && (s.edges & g_.in_mask(v)) == 0;
    }
    std::uint64_t outrem(const St& s, int v) const { return s.edges & g_.out_mask(v); }
    bool goal(const St& s) const {
        for (std::size_t i = 0; i < g_.nodes.size(); ++i) {
            const Node& n = g_.nodes[i];
            if (n.kind != NodeKind::Final) continue;
            int want = n.pair_initial >= 0 ? pair_cls_[n.pair_initial] : 1;
            if (!isfull(s, static_cast<int>(i)) || s.place[i] != want) return false;
        }
        return true;
    }
    void autofree(St& s) const {
        bool ch = true;
        while (ch) {
            ch = false;
            for (std::size_t v = 0; v < g_.nodes.size(); ++v) {
                if (g_.nodes[v].kind == NodeKind::Final || frozen_[v]) continue;
                if (s.place[v] >= 0 && (s.edges & g_.in_mask(v)) == 0 &&
                    outrem(s, static_cast<int>(v)) == 0) {
                    s.pool[s.place[v]]++;
                    s.place[v] = -1;
                    ch = true;
                }
            }
        }
    }

    std::vector<St> successors(const St& s) const {
        std::vector<St> out;
        const int N = static_cast<int>(g_.nodes.size());
        auto push = [&](St t) {
            autofree(t);
            out.push_back(std::move(t));
        };
        auto src_ok = [&](int e) { return isfull(s, g_.edge_source(e)); };
        for (int v = 0; v < N; ++v) {
            const Node& n = g_.nodes[v];
            // rule 0
            if (!n.is_product && s.place[v] >= 0) {
                std::vector<int> sat;
                for (const auto& e : n.sum_in)
                    if ((s.edges >> e.edge_id) & 1 && src_ok(e.edge_id))
                        sat.push_back(e.edge_id);
                for (std::uint64_t sub = 1; sub < (1ull << sat.size()); ++sub) {
                    St t = s;
                    for (std::size_t b = 0; b < sat.size(); ++b)
                        if ((sub >> b) & 1) t.edges &= ~(1ull << sat[b]);
                    push(std::move(t));
                }
            }
            // rule 2: parent moves onto single empty sum child
            if (!frozen_[v] && g_.nodes[v].kind != NodeKind::Final && isfull(s, v)) {
                std::uint64_t orem = outrem(s, v);
                if (orem && !(orem & (orem - 1))) {
                    int e = 0;
                    while (!((orem >> e) & 1)) ++e;
                    int child = g_.edge_target(e);
                    const Node& cn = g_.nodes[child];
                    if (!cn.is_product && s.place[child] < 0) {
                        std::uint64_t rem = s.edges & g_.in_mask(child);
                        bool ok = true;
                        for (int b = 0; b < 64; ++b)
                            if ((rem >> b) & 1 && !src_ok(b)) ok = false;
                        if (ok) {
                            St t = s;
                            t.place[child] = t.place[v];
                            t.place[v] = -1;
                            t.edges &= ~rem;
                            push(std::move(t));
                        }
                    }
                }
            }
            // rule 3
            if (n.kind != NodeKind::Initial && s.place[v] < 0) {
                std::uint64_t mask = 0;
                bool enabled = false;
                if (n.is_product) {
                    if (src_ok(n.op1_edge) && src_ok(n.op2_edge)) {
                        enabled = true;
                        mask = (1ull << n.op1_edge) | (1ull << n.op2_edge);
                        if (consuming_) {
                            for (int op : {n.op1, n.op2}) {
                                if (frozen_[op] ||
                                    g_.nodes[op].kind == NodeKind::Final)
                                    enabled = false;
                                if ((outrem(s, op) & ~mask) != 0) enabled = false;
                            }
                        }
                    }
                } else {
                    for (const auto& e : n.sum_in)
                        if ((s.edges >> e.edge_id) & 1 && src_ok(e.edge_id))
                            mask |= 1ull << e.edge_id;
                    enabled = mask != 0;
                }
                if (enabled)
                    for (int c = 0; c < classes_; ++c)
                        if (s.pool[c] > 0) {
                            St t = s;
                            t.pool[c]--;
                            t.place[v] = c;
                            t.edges &= ~mask;
                            push(std::move(t));
                        }
            }
        }
        return out;
    }

    const TaskGraph& g_;
    bool consuming_;
    std::vector<bool> frozen_;
    std::vector<int> pair_cls_;
    int classes_ = 2;
    St start_;
};

}  // namespace winomem::pebble::testing
