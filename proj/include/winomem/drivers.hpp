#pragma once

// Composite drivers that combine classical blocking with the Winograd
// schedules: the overwrite-everything in-place product for n < min(m,k),
// the constant-input in-place product for k >= n, and the t-blocked
// reduced-memory accumulation. Block-call scratch is carved out of dead or
// not-yet-written regions of A and C, so the drivers allocate no heap
// temporaries (the blocked accumulation allocates exactly one shared chunk).

#include <string>
#include <vector>

#include "winomem/executor.hpp"
#include "winomem/models.hpp"

namespace winomem {

namespace detail {
inline CostReport finish_report(const std::string& variant, std::size_t m,
                                std::size_t k, std::size_t n, int cutoff,
                                const CostMeter& meter) {
    CostReport rep;
    rep.variant = variant;
    rep.m = m;
    rep.k = k;
    rep.n = n;
    rep.cutoff = cutoff;
    rep.mults = meter.mults;
    rep.adds = meter.adds;
    rep.peak_extra_words = meter.peak_extra_words;
    rep.total_alloc_words = meter.total_alloc_words;
    rep.word_moves = meter.word_moves;
    return rep;
}

// Scratch-sufficiency assertion: the designated region must cover the
// worst-case extra-memory demand of the schedules run at this block size.
inline void assert_scratch_fits(std::size_t block, int cutoff,
                                std::size_t region_words) {
    const std::uint64_t demand = std::max(
        {models::expected_costs("std2", block, block, block, cutoff).peak_extra_words,
         models::expected_costs("acc3", block, block, block, cutoff).peak_extra_words,
         models::expected_costs("ovl", block, block, block, cutoff).peak_extra_words});
    if (demand > region_words)
        throw workspace_error("scratch region smaller than schedule demand");
}
}  // namespace detail

// C = A*B overwriting A and B, zero heap temporaries. Requires n < min(m,k)
// and powers of two. C's second stripe serves as scratch for the first block
// product; afterwards A11 is dead and becomes the scratch region.
inline CostReport ipovmm(Matrix& A, Matrix& B, Matrix& C, int cutoff = 1,
                         CostMeter* external_meter = nullptr) {
    const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
    if (B.rows() != k || C.rows() != m || C.cols() != n)
        throw dimension_error("ipovmm dimensions do not conform");
    if (!is_pow2(m) || !is_pow2(k) || !is_pow2(n))
        throw shape_error("ipovmm requires power-of-two dimensions");
    if (n >= std::min(m, k))
        throw shape_error("ipovmm requires n < min(m,k); transpose or use ipmm");
    if (cutoff < 1) throw dimension_error("cutoff must be >= 1");

    CostMeter local;
    CostMeter* meter = external_meter ? external_meter : &local;
    ExecCtx ctx{A.mod()};
    ctx.cutoff = cutoff;
    ctx.meter = meter;
    ctx.policy = OverwritePolicy::OverwriteBoth;
    ctx.a_origin = A.data();
    ctx.b_origin = B.data();
    ctx.c_origin = C.data();

    const std::size_t m0 = m / n, k0 = k / n;
    auto av = A.view(), bv = B.view(), cv = C.view();
    auto ablk = [&](std::size_t i, std::size_t j) {
        return av.window(i * n, j * n, n, n);
    };
    auto bstripe = [&](std::size_t j) { return bv.window(j * n, 0, n, n); };
    auto cstripe = [&](std::size_t i) { return cv.window(i * n, 0, n, n); };

    detail::assert_scratch_fits(n, cutoff, n * n);

    // C1 <- A11 * B1, scratch in the not-yet-written C2
    {
        QuadrantWorkspace ws(cstripe(1));
        ctx.ws = &ws;
        multiply_into("std2", ablk(0, 0), bstripe(0), cstripe(0), 1, 0, ctx);
    }
    // A11 is dead from here on and serves as scratch
    QuadrantWorkspace ws(ablk(0, 0));
    ctx.ws = &ws;
    for (std::size_t i = 1; i < m0; ++i)
        multiply_into("ovl", ablk(i, 0), bstripe(0), cstripe(i), 1, 0, ctx);
    for (std::size_t j = 1; j < k0; ++j)
        for (std::size_t i = 0; i < m0; ++i)
            multiply_into("acc3", ablk(i, j), bstripe(j), cstripe(i), 1, 1, ctx);

    return detail::finish_report("ipovmm", m, k, n, cutoff, *meter);
}

// C = A*B with constant inputs and zero heap temporaries: A is n x k,
// B is k x n, k >= n, powers of two. C11, C12, C21 are computed by
// std2/acc3 block products using C22 as scratch; C22 recurses.
namespace detail {
inline void ipmm_rec(MatView A, MatView B, MatView C, ExecCtx ctx) {
    const std::size_t n = C.rows, k = A.cols;
    if (n <= static_cast<std::size_t>(ctx.cutoff)) {
        classical_mul(C, A, B, 1, 0, ctx.mod, ctx.meter);
        return;
    }
    const std::size_t s = n / 2, q = k / s;
    auto cq = quad_split(C);
    auto ablk = [&](std::size_t r, std::size_t i) {
        return A.window(r * s, i * s, s, s);
    };
    auto bblk = [&](std::size_t i, std::size_t c) {
        return B.window(i * s, c * s, s, s);
    };

    assert_scratch_fits(s, ctx.cutoff, s * s);
    {
        QuadrantWorkspace ws(cq[3]);
        ctx.ws = &ws;
        multiply_into("std2", ablk(0, 0), bblk(0, 0), cq[0], 1, 0, ctx);
        multiply_into("std2", ablk(0, 0), bblk(0, 1), cq[1], 1, 0, ctx);
        multiply_into("std2", ablk(1, 0), bblk(0, 0), cq[2], 1, 0, ctx);
        for (std::size_t i = 1; i < q; ++i) {
            multiply_into("acc3", ablk(0, i), bblk(i, 0), cq[0], 1, 1, ctx);
            multiply_into("acc3", ablk(0, i), bblk(i, 1), cq[1], 1, 1, ctx);
            multiply_into("acc3", ablk(1, i), bblk(i, 0), cq[2], 1, 1, ctx);
        }
    }
    ipmm_rec(A.window(s, 0, s, k), B.window(0, s, k, s), cq[3], ctx);
}
}  // namespace detail

inline CostReport ipmm(Matrix& A, Matrix& B, Matrix& C, int cutoff = 1,
                       CostMeter* external_meter = nullptr) {
    const std::size_t n = A.rows(), k = A.cols();
    if (B.rows() != k || B.cols() != n || C.rows() != n || C.cols() != n)
        throw dimension_error("ipmm expects A n x k, B k x n, C n x n");
    if (!is_pow2(n) || !is_pow2(k))
        throw shape_error("ipmm requires power-of-two dimensions");
    if (k < n) throw shape_error("ipmm requires k >= n; use the transpose");
    if (cutoff < 1) throw dimension_error("cutoff must be >= 1");

    CostMeter local;
    CostMeter* meter = external_meter ? external_meter : &local;
    ExecCtx ctx{A.mod()};
    ctx.cutoff = cutoff;
    ctx.meter = meter;
    ctx.policy = OverwritePolicy::ReadOnly;
    ctx.a_origin = A.data();
    ctx.b_origin = B.data();
    ctx.c_origin = C.data();
    detail::ipmm_rec(A.view(), B.view(), C.view(), ctx);
    return detail::finish_report("ipmm", n, k, n, cutoff, *meter);
}

// C <- alpha*A*B + beta*C via t^3 base-schedule calls on (n/t)-sized blocks
// sharing one scratch chunk: (n/t)^2 words for acc3, (2/3)((n/t)^2 - 1) for
// acc2. The calls are sequential because they share the chunk.
inline CostReport blocked_acc(Matrix& A, Matrix& B, Matrix& C, Elem alpha, Elem beta,
                              int t, const std::string& base = "acc3",
                              int cutoff = 1, CostMeter* external_meter = nullptr) {
    const std::size_t n = C.rows();
    if (A.rows() != n || A.cols() != n || B.rows() != n || B.cols() != n ||
        C.cols() != n)
        throw dimension_error("blocked_acc expects square n x n operands");
    if (t < 1 || n % static_cast<std::size_t>(t) != 0)
        throw dimension_error("t must divide n");
    const std::size_t s = n / static_cast<std::size_t>(t);
    if (!is_pow2(s)) throw dimension_error("n/t must be a power of two");
    if (base != "acc3" && base != "acc2")
        throw unknown_schedule_error("blocked_acc base must be acc3 or acc2");
    if (cutoff < 1) throw dimension_error("cutoff must be >= 1");

    CostMeter local;
    CostMeter* meter = external_meter ? external_meter : &local;
    const std::size_t chunk =
        base == "acc2" ? 2 * (s * s - 1) / 3 : s * s;
    std::vector<Elem> scratch(chunk);
    meter->on_alloc(chunk, 0, "scratch");

    ExecCtx ctx{A.mod()};
    ctx.cutoff = cutoff;
    ctx.meter = meter;
    ctx.policy = OverwritePolicy::ReadOnly;
    ctx.a_origin = A.data();
    ctx.b_origin = B.data();
    ctx.c_origin = C.data();
    BumpWorkspace ws(scratch.data(), scratch.size());
    ctx.ws = &ws;

    auto av = A.view(), bv = B.view(), cv = C.view();
    const std::size_t T = static_cast<std::size_t>(t);
    for (std::size_t i = 0; i < T; ++i)
        for (std::size_t j = 0; j < T; ++j)
            for (std::size_t l = 0; l < T; ++l)
                multiply_into(base, av.window(i * s, l * s, s, s),
                              bv.window(l * s, j * s, s, s),
                              cv.window(i * s, j * s, s, s), alpha,
                              l == 0 ? beta : Elem(1), ctx);

    meter->on_free(chunk);
    std::string name = "blocked_acc_t" + std::to_string(t) +
                       (base == "acc2" ? "_acc2" : "");
    return detail::finish_report(name, n, n, n, cutoff, *meter);
}

// Name-based dispatch over everything the library can run: builtins,
// "classic", the drivers, and blocked_acc_t<T>[_acc2] tokens.
inline CostReport run_variant(const std::string& variant, Matrix& A, Matrix& B,
                              Matrix& C, const MultiplyOptions& opt = {},
                              CostMeter* external_meter = nullptr) {
    if (variant == "ipmm") return ipmm(A, B, C, opt.cutoff, external_meter);
    if (variant == "ipovmm") return ipovmm(A, B, C, opt.cutoff, external_meter);
    if (auto spec = models::parse_blocked(variant))
        return blocked_acc(A, B, C, opt.alpha, opt.beta, spec->t, spec->base,
                           opt.cutoff, external_meter);
    return multiply(variant, A, B, C, opt, external_meter);
}

inline bool variant_accumulates(const std::string& variant) {
    if (variant == "ipmm" || variant == "ipovmm" || variant == "classic")
        return false;
    if (models::parse_blocked(variant)) return true;
    return builtin(variant).accumulating;
}

// Supported verification sizes per variant family, used by the sweep tools.
inline bool variant_square_only(const std::string& variant) {
    if (variant == "ipmm" || variant == "ipovmm" || variant == "classic") return false;
    if (models::parse_blocked(variant)) return true;
    return builtin(variant).square_only;
}

}  // namespace winomem
