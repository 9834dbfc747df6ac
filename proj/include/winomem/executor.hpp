#pragma once

// Recursive interpreter: binds a schedule's slots to matrix views, executes
// instructions in order, dispatches recursion variants, enforces the
// overwrite policy by buffer region, and meters costs. Also the
// dynamic-peeling wrapper that extends std2/acc3 to arbitrary dimensions.

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "winomem/meter.hpp"
#include "winomem/ring.hpp"
#include "winomem/schedule.hpp"
#include "winomem/workspace.hpp"

namespace winomem {

inline bool is_pow2(std::size_t x) { return x && (x & (x - 1)) == 0; }

struct MultiplyOptions {
    Elem alpha = 1;
    Elem beta = 0;
    int cutoff = 1;
};

struct ExecCtx {
    Modulus mod;
    int cutoff = 1;
    CostMeter* meter = nullptr;
    Workspace* ws = nullptr;
    OverwritePolicy policy = OverwritePolicy::ReadOnly;
    const Elem* a_origin = nullptr;
    const Elem* b_origin = nullptr;
    const Elem* c_origin = nullptr;
    bool peel = false;
    int depth = 0;

    void check_write(const MatView& v, const char* what) const {
        if (v.origin == a_origin &&
            !(policy == OverwritePolicy::OverwriteA ||
              policy == OverwritePolicy::OverwriteBoth))
            throw contract_error(std::string(what) + ": write into constant A");
        if (v.origin == b_origin &&
            !(policy == OverwritePolicy::OverwriteB ||
              policy == OverwritePolicy::OverwriteBoth))
            throw contract_error(std::string(what) + ": write into constant B");
    }

    Elem resolve(const Scalar& s) const {
        Elem v = 1;
        switch (s.sym) {
            case ScalarSym::One: v = 1; break;
            case ScalarSym::Alpha: v = alpha_v; break;
            case ScalarSym::Beta: v = beta_v; break;
            case ScalarSym::Lit: v = mod.reduce_i64(s.lit); break;
        }
        return s.neg ? mod.neg(v) : v;
    }
    Elem alpha_v = 1;
    Elem beta_v = 0;
};

void run_schedule(const Schedule& s, MatView A, MatView B, MatView C, Elem alpha,
                  Elem beta, ExecCtx ctx);
void peel_multiply(MatView A, MatView B, MatView C, Elem alpha, Elem beta,
                   const std::string& base, ExecCtx ctx);

// One recursive product dispatch: classical at or below the cutoff.
inline void multiply_into(const std::string& variant, MatView A, MatView B, MatView C,
                          Elem alpha, Elem beta, ExecCtx& ctx) {
    if (variant == "classic" ||
        std::min({A.rows, A.cols, B.cols}) <= static_cast<std::size_t>(ctx.cutoff)) {
        ctx.check_write(C, "classical");
        classical_mul(C, A, B, alpha, beta, ctx.mod, ctx.meter);
        return;
    }
    run_schedule(builtin(variant), A, B, C, alpha, beta, ctx);
}

inline void run_schedule(const Schedule& s, MatView A, MatView B, MatView C,
                         Elem alpha, Elem beta, ExecCtx ctx) {
    const std::size_t m = A.rows, k = A.cols, n = B.cols;
    if (B.rows != k || C.rows != m || C.cols != n)
        throw dimension_error("schedule operands do not conform");
    if (m % 2 || k % 2 || n % 2)
        throw odd_dimension_error("schedule requires even dimensions");
    if (s.square_only && !(m == k && k == n))
        throw shape_error(s.name + " supports square matrices only");
    if (!s.accumulating && beta != 0)
        throw dimension_error(s.name + " is a plain product; beta must be 0");

    if (ctx.meter) ctx.meter->on_schedule(s.name);
    ctx.alpha_v = alpha;
    ctx.beta_v = beta;
    ctx.depth += 1;

    auto aq = quad_split(A);
    auto bq = quad_split(B);
    auto cq = quad_split(C);

    struct Bound {
        MatView buf;                       // full slot buffer
        std::size_t vr = 0, vc = 0;        // current value dims
        bool init = false;
        bool quadrant = false;
    };
    std::array<Bound, kSlotCount> slot;
    auto bind_quad = [&](SlotId id, const MatView& v, bool init) {
        slot[static_cast<int>(id)] = {v, v.rows, v.cols, init, true};
    };
    bind_quad(SlotId::A11, aq[0], true);
    bind_quad(SlotId::A12, aq[1], true);
    bind_quad(SlotId::A21, aq[2], true);
    bind_quad(SlotId::A22, aq[3], true);
    bind_quad(SlotId::B11, bq[0], true);
    bind_quad(SlotId::B12, bq[1], true);
    bind_quad(SlotId::B21, bq[2], true);
    bind_quad(SlotId::B22, bq[3], true);
    bind_quad(SlotId::C11, cq[0], s.accumulating);
    bind_quad(SlotId::C12, cq[1], s.accumulating);
    bind_quad(SlotId::C21, cq[2], s.accumulating);
    bind_quad(SlotId::C22, cq[3], s.accumulating);

    ctx.ws->push_frame();
    for (const auto& t : s.temps) {
        std::size_t r = eval_dim(t.rows, m, k, n), c = eval_dim(t.cols, m, k, n);
        MatView v = ctx.ws->acquire(r, c, ctx.depth, slot_name(t.slot));
        slot[static_cast<int>(t.slot)] = {v, 0, 0, false, false};
    }

    auto operand_view = [&](const Operand& op, const char* what) -> MatView {
        Bound& b = slot[static_cast<int>(op.slot)];
        if (!b.init)
            throw contract_error(std::string(what) + ": slot " + slot_name(op.slot) +
                                 " read before first write");
        return b.quadrant ? b.buf : b.buf.window(0, 0, b.vr, b.vc);
    };
    auto dst_view = [&](SlotId id, std::size_t r, std::size_t c) -> MatView {
        Bound& b = slot[static_cast<int>(id)];
        if (b.quadrant) {
            if (b.buf.rows != r || b.buf.cols != c)
                throw dimension_error("value shape does not match quadrant slot");
            return b.buf;
        }
        if (r > b.buf.rows || c > b.buf.cols)
            throw dimension_error(std::string("value does not fit temporary ") +
                                  slot_name(id));
        return b.buf.window(0, 0, r, c);
    };
    auto mark_written = [&](SlotId id, std::size_t r, std::size_t c) {
        Bound& b = slot[static_cast<int>(id)];
        b.init = true;
        b.vr = r;
        b.vc = c;
    };

    for (const auto& in : s.ins) {
        if (in.has_product()) {
            const ProductTerm& p = *in.prod;
            MatView lv = operand_view(p.lhs, "product");
            MatView rv = operand_view(p.rhs, "product");
            if (lv.cols != rv.rows)
                throw dimension_error("product inner dimensions disagree at " +
                                      render_instruction(in));
            MatView dv = dst_view(in.dst, lv.rows, rv.cols);
            ctx.check_write(dv, "product");

            Elem a_eff = ctx.resolve(p.scalar);
            if (!s.accumulating) a_eff = ctx.mod.mul(a_eff, alpha);
            Elem b_eff = 0;
            if (!in.adds.empty()) {
                if (in.adds[0].op.slot != in.dst)
                    throw contract_error("accumulator term must alias destination");
                b_eff = ctx.resolve(in.adds[0].scalar);
            }
            std::string target = dispatch_policy(s, in);
            if (ctx.peel && target != "classic")
                peel_multiply(lv, rv, dv, a_eff, b_eff, target, ctx);
            else
                multiply_into(target, lv, rv, dv, a_eff, b_eff, ctx);
            mark_written(in.dst, dv.rows, dv.cols);
        } else if (in.adds.size() == 2) {
            MatView av = operand_view(in.adds[0].op, "addsub");
            MatView bv = operand_view(in.adds[1].op, "addsub");
            if (av.rows != bv.rows || av.cols != bv.cols)
                throw dimension_error("addition operands disagree at " +
                                      render_instruction(in));
            MatView dv = dst_view(in.dst, av.rows, av.cols);
            ctx.check_write(dv, "addsub");
            block_addsub(dv, av, bv, ctx.resolve(in.adds[0].scalar),
                         ctx.resolve(in.adds[1].scalar), ctx.mod, ctx.meter);
            mark_written(in.dst, dv.rows, dv.cols);
        } else {  // single term: copy / negate / scale
            MatView sv = operand_view(in.adds[0].op, "copy");
            MatView dv = dst_view(in.dst, sv.rows, sv.cols);
            ctx.check_write(dv, "copy");
            block_scale_copy(dv, sv, ctx.resolve(in.adds[0].scalar), ctx.mod,
                             ctx.meter);
            mark_written(in.dst, dv.rows, dv.cols);
        }
    }
    ctx.ws->pop_frame();
}

// Dynamic peeling: odd dimensions shed one trailing row/column strip per
// recursion level; the even core runs one Winograd level whose recursive
// products route back here; strips are fixed up with classical rank updates.
inline void peel_multiply(MatView A, MatView B, MatView C, Elem alpha, Elem beta,
                          const std::string& base, ExecCtx ctx) {
    const std::size_t m = A.rows, k = A.cols, n = B.cols;
    if (B.rows != k || C.rows != m || C.cols != n)
        throw dimension_error("peel operands do not conform");
    if (std::min({m, k, n}) <= static_cast<std::size_t>(ctx.cutoff)) {
        ctx.check_write(C, "classical");
        classical_mul(C, A, B, alpha, beta, ctx.mod, ctx.meter);
        return;
    }
    const std::size_t m0 = m & ~std::size_t(1), k0 = k & ~std::size_t(1),
                      n0 = n & ~std::size_t(1);
    ctx.peel = true;
    run_schedule(builtin(base), A.window(0, 0, m0, k0), B.window(0, 0, k0, n0),
                 C.window(0, 0, m0, n0), alpha, beta, ctx);
    if (k % 2) {  // rank-1 update of the even core
        ctx.check_write(C, "peel");
        classical_mul(C.window(0, 0, m0, n0), A.window(0, k0, m0, 1),
                      B.window(k0, 0, 1, n0), alpha, 1, ctx.mod, ctx.meter);
    }
    if (n % 2)  // trailing column (rows 0..m0)
        classical_mul(C.window(0, n0, m0, 1), A.window(0, 0, m0, k),
                      B.window(0, n0, k, 1), alpha, beta, ctx.mod, ctx.meter);
    if (m % 2)  // trailing row, including the corner
        classical_mul(C.window(m0, 0, 1, n), A.window(m0, 0, 1, k), B, alpha, beta,
                      ctx.mod, ctx.meter);
}

// Entry point for builtin schedules and the classical baseline. Drivers
// (ipmm, ipovmm, blocked accumulation) live in drivers.hpp.
inline CostReport multiply(const std::string& variant, Matrix& A, Matrix& B,
                           Matrix& C, const MultiplyOptions& opt = {},
                           CostMeter* external_meter = nullptr) {
    if (!(A.mod() == B.mod()) || !(A.mod() == C.mod()))
        throw dimension_error("operands use different moduli");
    const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
    if (B.rows() != k || C.rows() != m || C.cols() != n)
        throw dimension_error("multiply dimensions do not conform");
    if (opt.cutoff < 1) throw dimension_error("cutoff must be >= 1");

    CostMeter local;
    CostMeter* meter = external_meter ? external_meter : &local;
    HeapWorkspace ws(meter);
    ExecCtx ctx{A.mod()};
    ctx.cutoff = opt.cutoff;
    ctx.meter = meter;
    ctx.ws = &ws;
    ctx.a_origin = A.data();
    ctx.b_origin = B.data();
    ctx.c_origin = C.data();

    if (variant == "classic") {
        classical_mul(C.view(), A.view(), B.view(), opt.alpha, opt.beta, ctx.mod,
                      meter);
    } else {
        const Schedule& s = builtin(variant);
        ctx.policy = s.contract;
        if (!s.accumulating && opt.beta != 0)
            throw dimension_error(variant + " is a plain product; beta must be 0");
        const bool pow2 = is_pow2(m) && is_pow2(k) && is_pow2(n);
        if (s.square_only && !(m == k && k == n && pow2))
            throw shape_error(variant + " requires square power-of-two dimensions");
        if (std::min({m, k, n}) <= static_cast<std::size_t>(opt.cutoff)) {
            classical_mul(C.view(), A.view(), B.view(), opt.alpha, opt.beta, ctx.mod,
                          meter);
        } else if (!pow2) {
            if (variant != "std2" && variant != "acc3")
                throw shape_error(variant +
                                  " requires power-of-two dimensions (peeling wraps "
                                  "std2/acc3 only)");
            peel_multiply(A.view(), B.view(), C.view(), opt.alpha, opt.beta, variant,
                          ctx);
        } else {
            run_schedule(s, A.view(), B.view(), C.view(), opt.alpha, opt.beta, ctx);
        }
    }

    CostReport rep;
    rep.variant = variant;
    rep.m = m;
    rep.k = k;
    rep.n = n;
    rep.cutoff = opt.cutoff;
    rep.mults = meter->mults;
    rep.adds = meter->adds;
    rep.peak_extra_words = meter->peak_extra_words;
    rep.total_alloc_words = meter->total_alloc_words;
    rep.word_moves = meter->word_moves;
    return rep;
}

// Executes a parsed (non-builtin) schedule, e.g. one emitted by the pebble
// search or loaded from a DSL file. Recursion tags must name builtins;
// a Self tag only works when the schedule's name is itself a builtin.
inline CostReport run_parsed_schedule(const Schedule& s, Matrix& A, Matrix& B,
                                      Matrix& C, const MultiplyOptions& opt = {},
                                      CostMeter* external_meter = nullptr) {
    const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
    if (B.rows() != k || C.rows() != m || C.cols() != n)
        throw dimension_error("multiply dimensions do not conform");
    if (s.square_only && !(m == k && k == n && is_pow2(n)))
        throw shape_error(s.name + " requires square power-of-two dimensions");

    CostMeter local;
    CostMeter* meter = external_meter ? external_meter : &local;
    HeapWorkspace ws(meter);
    ExecCtx ctx{A.mod()};
    ctx.cutoff = opt.cutoff;
    ctx.meter = meter;
    ctx.ws = &ws;
    ctx.policy = s.contract;
    ctx.a_origin = A.data();
    ctx.b_origin = B.data();
    ctx.c_origin = C.data();
    if (std::min({m, k, n}) <= static_cast<std::size_t>(opt.cutoff))
        classical_mul(C.view(), A.view(), B.view(), opt.alpha, opt.beta, ctx.mod,
                      meter);
    else
        run_schedule(s, A.view(), B.view(), C.view(), opt.alpha, opt.beta, ctx);

    CostReport rep;
    rep.variant = s.name;
    rep.m = m;
    rep.k = k;
    rep.n = n;
    rep.cutoff = opt.cutoff;
    rep.mults = meter->mults;
    rep.adds = meter->adds;
    rep.peak_extra_words = meter->peak_extra_words;
    rep.total_alloc_words = meter->total_alloc_words;
    rep.word_moves = meter->word_moves;
    return rep;
}

}  // namespace winomem
