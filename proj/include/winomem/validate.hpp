#pragma once

// Schedule validator. Runs four checks and reports failures as entries
// rather than exceptions:
//  (a) topological order: every value read was previously written (or is an
//      input / initial C quadrant) and has not been destroyed by an
//      overwriting recursive call;
//  (b) contract: destinations and overwritten call operands stay within the
//      schedule's overwrite policy;
//  (c) symbolic correctness: instructions are executed over formal
//      noncommutative products of the input quadrants (plus initial C
//      quadrants and the alpha/beta scalars); each final C quadrant must
//      equal the corresponding block of A*B, or alpha*A*B + beta*C when
//      accumulating. Products are never reordered, so transposition errors
//      are caught;
//  (d) slot dimension consistency under the schedule's shape constraint.

#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "winomem/schedule.hpp"

namespace winomem {

namespace symbolic {

// Coefficient ring Z[alpha, beta]: map from (alpha power, beta power) to an
// integer coefficient.
struct Coef {
    std::map<std::pair<int, int>, long long> terms;

    static Coef one() { return Coef{{{{0, 0}, 1}}}; }
    bool zero() const { return terms.empty(); }

    void add(const Coef& o, long long mul = 1) {
        for (const auto& [k, v] : o.terms) {
            auto& t = terms[k];
            t += v * mul;
            if (t == 0) terms.erase(k);
        }
    }
    Coef scaled(const Scalar& s) const {
        Coef r;
        long long f = s.neg ? -1 : 1;
        int da = 0, db = 0;
        if (s.sym == ScalarSym::Alpha) da = 1;
        if (s.sym == ScalarSym::Beta) db = 1;
        if (s.sym == ScalarSym::Lit) f *= s.lit;
        if (f == 0) return r;
        for (const auto& [k, v] : terms)
            r.terms[{k.first + da, k.second + db}] = v * f;
        return r;
    }
    Coef times(const Coef& o) const {
        Coef r;
        for (const auto& [k1, v1] : terms)
            for (const auto& [k2, v2] : o.terms) {
                auto key = std::make_pair(k1.first + k2.first, k1.second + k2.second);
                auto& t = r.terms[key];
                t += v1 * v2;
                if (t == 0) r.terms.erase(key);
            }
        return r;
    }
    bool operator==(const Coef&) const = default;
};

// Polynomial over formal monomials. A monomial is an input symbol or an
// ordered (noncommutative) product written "(L*R)".
struct Poly {
    std::map<std::string, Coef> monos;

    static Poly symbol(const std::string& s) {
        Poly p;
        p.monos[s] = Coef::one();
        return p;
    }
    void add(const Poly& o, const Scalar& s) {
        for (const auto& [m, c] : o.monos) {
            Coef sc = c.scaled(s);
            if (sc.zero()) continue;
            auto& t = monos[m];
            t.add(sc);
            if (t.zero()) monos.erase(m);
        }
    }
    static Poly product(const Poly& l, const Poly& r) {
        Poly p;
        for (const auto& [ml, cl] : l.monos)
            for (const auto& [mr, cr] : r.monos) {
                Coef c = cl.times(cr);
                if (c.zero()) continue;
                std::string key = "(" + ml + "*" + mr + ")";
                auto& t = p.monos[key];
                t.add(c);
                if (t.zero()) p.monos.erase(key);
            }
        return p;
    }
    bool operator==(const Poly&) const = default;
    std::string str() const {
        std::ostringstream os;
        for (const auto& [m, c] : monos) {
            for (const auto& [k, v] : c.terms)
                os << (v >= 0 ? "+" : "") << v
                   << (k.first ? "*a^" + std::to_string(k.first) : "")
                   << (k.second ? "*b^" + std::to_string(k.second) : "") << "*" << m
                   << " ";
        }
        return os.str();
    }
};

}  // namespace symbolic

struct ValidationIssue {
    std::string check;
    std::string message;
};

struct ValidationReport {
    bool structure_ok = true;
    bool topo_ok = true;
    bool contract_ok = true;
    bool symbolic_ok = true;
    bool dims_ok = true;
    std::vector<ValidationIssue> issues;

    bool ok() const {
        return structure_ok && topo_ok && contract_ok && symbolic_ok && dims_ok;
    }
    std::string summary() const {
        if (ok()) return "ok";
        std::string s;
        for (const auto& i : issues) s += "[" + i.check + "] " + i.message + "\n";
        return s;
    }
};

// True when the recursive call tagged `t` inside schedule `s` may overwrite
// its left/right operand during execution.
inline std::pair<bool, bool> tag_overwrite_sides(Tag t, const Schedule& s) {
    if (t == Tag::Self) {
        switch (s.contract) {
            case Contract::ReadOnly: return {false, false};
            case Contract::OverwriteA: return {true, false};
            case Contract::OverwriteB: return {false, true};
            case Contract::OverwriteBoth: return {true, true};
        }
    }
    return {tag_overwrites_left(t), tag_overwrites_right(t)};
}

inline ValidationReport validate(const Schedule& s) {
    using symbolic::Poly;
    ValidationReport rep;
    auto fail = [&](bool ValidationReport::*flag, const std::string& check,
                    const std::string& msg) {
        rep.*flag = false;
        rep.issues.push_back({check, msg});
    };

    // Per-slot symbolic state.
    struct SlotState {
        std::optional<Poly> value;
        bool destroyed = false;
        std::optional<std::pair<DimExpr, DimExpr>> dims;
    };
    std::vector<SlotState> st(kSlotCount);
    auto init_slot = [&](SlotId id, const std::string& sym, DimExpr r, DimExpr c) {
        auto& t = st[static_cast<int>(id)];
        t.value = Poly::symbol(sym);
        t.dims = {r, c};
    };
    init_slot(SlotId::A11, "A11", DimExpr::M2, DimExpr::K2);
    init_slot(SlotId::A12, "A12", DimExpr::M2, DimExpr::K2);
    init_slot(SlotId::A21, "A21", DimExpr::M2, DimExpr::K2);
    init_slot(SlotId::A22, "A22", DimExpr::M2, DimExpr::K2);
    init_slot(SlotId::B11, "B11", DimExpr::K2, DimExpr::N2);
    init_slot(SlotId::B12, "B12", DimExpr::K2, DimExpr::N2);
    init_slot(SlotId::B21, "B21", DimExpr::K2, DimExpr::N2);
    init_slot(SlotId::B22, "B22", DimExpr::K2, DimExpr::N2);
    if (s.accumulating) {
        init_slot(SlotId::C11, "C11:in", DimExpr::M2, DimExpr::N2);
        init_slot(SlotId::C12, "C12:in", DimExpr::M2, DimExpr::N2);
        init_slot(SlotId::C21, "C21:in", DimExpr::M2, DimExpr::N2);
        init_slot(SlotId::C22, "C22:in", DimExpr::M2, DimExpr::N2);
    }

    // In square-only schedules every block has the same dimensions; collapse
    // all symbolic dims to N2 so the checks become trivial identities.
    auto norm = [&](DimExpr d) { return s.square_only ? DimExpr::N2 : d; };

    int expected_index = 1;
    for (const auto& in : s.ins) {
        const std::string at = "instruction " + std::to_string(in.index);

        if (in.index != expected_index++)
            fail(&ValidationReport::structure_ok, "structure", at + ": bad index");
        if (!in.prod && in.tag != Tag::LeafAdd)
            fail(&ValidationReport::structure_ok, "structure",
                 at + ": recursion tag without a product term");
        if (in.prod && in.adds.size() > 1)
            fail(&ValidationReport::structure_ok, "structure",
                 at + ": more than one accumulator term");
        if (in.prod && in.adds.size() == 1 && in.adds[0].op.slot != in.dst)
            fail(&ValidationReport::structure_ok, "structure",
                 at + ": accumulator term must alias the destination slot");

        auto read = [&](const Operand& op) -> std::optional<Poly> {
            const auto& t = st[static_cast<int>(op.slot)];
            if (!t.value) {
                fail(&ValidationReport::topo_ok, "topological",
                     at + ": reads uninitialized slot " + slot_name(op.slot));
                return std::nullopt;
            }
            if (t.destroyed) {
                fail(&ValidationReport::topo_ok, "topological",
                     at + ": reads slot " + slot_name(op.slot) +
                         " destroyed by an overwriting recursive call");
                return std::nullopt;
            }
            return t.value;
        };

        if (!slot_writable(in.dst, s.contract))
            fail(&ValidationReport::contract_ok, "contract",
                 at + ": writes " + std::string(slot_name(in.dst)) + " under " +
                     contract_name(s.contract));

        std::optional<Poly> result;
        std::optional<std::pair<DimExpr, DimExpr>> result_dims;

        if (in.prod) {
            const auto& p = *in.prod;
            if (p.lhs.slot == in.dst || p.rhs.slot == in.dst)
                fail(&ValidationReport::structure_ok, "structure",
                     at + ": product destination aliases an operand block");
            auto lv = read(p.lhs), rv = read(p.rhs);
            auto [owl, owr] = tag_overwrite_sides(in.tag, s);
            if (owl && !slot_writable(p.lhs.slot, s.contract))
                fail(&ValidationReport::contract_ok, "contract",
                     at + ": " + tag_name(in.tag) + " overwrites read-only slot " +
                         slot_name(p.lhs.slot));
            if (owr && !slot_writable(p.rhs.slot, s.contract))
                fail(&ValidationReport::contract_ok, "contract",
                     at + ": " + tag_name(in.tag) + " overwrites read-only slot " +
                         slot_name(p.rhs.slot));

            // dims: (m',k') x (k',n') -> (m',n')
            const auto& lt = st[static_cast<int>(p.lhs.slot)];
            const auto& rt = st[static_cast<int>(p.rhs.slot)];
            if (lt.dims && rt.dims) {
                if (norm(lt.dims->second) != norm(rt.dims->first))
                    fail(&ValidationReport::dims_ok, "dims",
                         at + ": product inner dimensions disagree");
                result_dims = {lt.dims->first, rt.dims->second};
            }

            if (lv && rv) {
                Poly prod = Poly::product(*lv, *rv);
                Poly val;
                val.add(prod, p.scalar);
                if (!in.adds.empty()) {
                    auto av = read(in.adds[0].op);
                    if (av) {
                        val.add(*av, in.adds[0].scalar);
                        result = val;
                    }
                } else {
                    result = val;
                }
            }
            // The call itself destroys overwritable operands.
            if (owl) st[static_cast<int>(p.lhs.slot)].destroyed = true;
            if (owr) st[static_cast<int>(p.rhs.slot)].destroyed = true;
        } else {
            Poly val;
            bool all = true;
            std::optional<std::pair<DimExpr, DimExpr>> d;
            for (const auto& a : in.adds) {
                auto av = read(a.op);
                if (!av) {
                    all = false;
                    continue;
                }
                val.add(*av, a.scalar);
                const auto& ts = st[static_cast<int>(a.op.slot)];
                if (ts.dims) {
                    if (d && (norm(d->first) != norm(ts.dims->first) ||
                              norm(d->second) != norm(ts.dims->second)))
                        fail(&ValidationReport::dims_ok, "dims",
                             at + ": addition operands have different dimensions");
                    d = ts.dims;
                }
            }
            if (all) result = val;
            result_dims = d;
        }

        // write destination
        auto& dstst = st[static_cast<int>(in.dst)];
        if (result_dims) {
            if (slot_role(in.dst) == SlotRole::InoutC) {
                if (norm(result_dims->first) != norm(DimExpr::M2) ||
                    norm(result_dims->second) != norm(DimExpr::N2))
                    fail(&ValidationReport::dims_ok, "dims",
                         at + ": C-quadrant write with non C-shaped value");
            } else if (slot_role(in.dst) == SlotRole::Temporary) {
                const TempDecl* td = s.temp_decl(in.dst);
                if (td && !s.square_only &&
                    (!dim_fits(result_dims->first, td->rows) ||
                     !dim_fits(result_dims->second, td->cols)))
                    fail(&ValidationReport::dims_ok, "dims",
                         at + ": value does not fit declared temporary " +
                             slot_name(in.dst));
            }
        }
        dstst.value = result;
        dstst.destroyed = false;
        dstst.dims = result_dims;
        if (!result) dstst.value.reset();
    }

    // Expected block formulas of the plain product / accumulation.
    auto target = [&](const char* a1, const char* b1, const char* a2, const char* b2,
                      const char* cin) {
        Poly t;
        Scalar prod_scale;
        if (s.accumulating) prod_scale.sym = ScalarSym::Alpha;
        t.add(Poly::product(Poly::symbol(a1), Poly::symbol(b1)), prod_scale);
        t.add(Poly::product(Poly::symbol(a2), Poly::symbol(b2)), prod_scale);
        if (s.accumulating) {
            Scalar bs;
            bs.sym = ScalarSym::Beta;
            t.add(Poly::symbol(cin), bs);
        }
        return t;
    };
    const std::pair<SlotId, Poly> targets[] = {
        {SlotId::C11, target("A11", "B11", "A12", "B21", "C11:in")},
        {SlotId::C12, target("A11", "B12", "A12", "B22", "C12:in")},
        {SlotId::C21, target("A21", "B11", "A22", "B21", "C21:in")},
        {SlotId::C22, target("A21", "B12", "A22", "B22", "C22:in")},
    };
    for (const auto& [slot, want] : targets) {
        const auto& t = st[static_cast<int>(slot)];
        if (!t.value || t.destroyed) {
            fail(&ValidationReport::symbolic_ok, "symbolic",
                 std::string(slot_name(slot)) + " not produced");
            continue;
        }
        if (!(*t.value == want))
            fail(&ValidationReport::symbolic_ok, "symbolic",
                 std::string(slot_name(slot)) + " expands to " + t.value->str() +
                     " instead of " + want.str());
    }
    return rep;
}

// --- deliberate mutations (negative controls for the validator) -------------

enum class MutationKind { SignFlip, RowSwap, WrongLocation };

// Returns a mutated copy of `s` of the requested kind that the validator
// rejects, searching candidate mutation sites in order.
inline std::optional<Schedule> find_breaking_mutation(const Schedule& s,
                                                      MutationKind kind) {
    auto broken = [](const Schedule& m) { return !validate(m).ok(); };
    switch (kind) {
        case MutationKind::SignFlip:
            for (std::size_t i = s.ins.size(); i-- > 0;) {
                for (std::size_t t = 0; t < s.ins[i].adds.size(); ++t) {
                    Schedule m = s;
                    m.ins[i].adds[t].scalar.neg = !m.ins[i].adds[t].scalar.neg;
                    if (broken(m)) return m;
                }
                if (s.ins[i].prod) {
                    Schedule m = s;
                    m.ins[i].prod->scalar.neg = !m.ins[i].prod->scalar.neg;
                    if (broken(m)) return m;
                }
            }
            return std::nullopt;
        case MutationKind::RowSwap:
            for (std::size_t i = 0; i + 1 < s.ins.size(); ++i) {
                Schedule m = s;
                std::swap(m.ins[i], m.ins[i + 1]);
                std::swap(m.ins[i].index, m.ins[i + 1].index);
                if (broken(m)) return m;
            }
            return std::nullopt;
        case MutationKind::WrongLocation:
            for (std::size_t i = s.ins.size(); i-- > 0;) {
                for (int d = 0; d < kSlotCount; ++d) {
                    SlotId nd = static_cast<SlotId>(d);
                    if (nd == s.ins[i].dst) continue;
                    if (!slot_writable(nd, s.contract)) continue;
                    if (slot_role(nd) == SlotRole::Temporary && !s.temp_decl(nd))
                        continue;
                    Schedule m = s;
                    m.ins[i].dst = nd;
                    if (broken(m)) return m;
                }
            }
            return std::nullopt;
    }
    return std::nullopt;
}

}  // namespace winomem
