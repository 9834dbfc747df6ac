#pragma once

// Schedule intermediate representation: slots, instructions, the textual
// DSL, and the builtin catalog. A schedule is an ordered program of block
// operations over symbolic slots; a single executor interprets all of them.
//
// DSL, one instruction per line:
//   line    := INDEX ':' LABEL '=' rhs '@' SLOT
//   rhs     := [SIGN] [scalar '*'] term { SIGN [scalar '*'] term }
//   term    := IDENT | VARIANT '(' rhs ')' | IDENT '*' IDENT
//   scalar  := 'alpha' | 'beta' | INT
//   VARIANT := 'Classic'|'Std2'|'Acc3'|'IP'|'OvL'|'OvR'|'AcLR'|'AccR'|'Acc2'|'AcR'|'Self'
// '#' starts a comment. IDENT operands name either a slot or the label of an
// earlier result; labels resolve to the location they were stored at.
// Header directives before the first instruction:
//   schedule NAME | contract C | accumulating BOOL | shape S | temp SLOT RDIM CDIM

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace winomem {

struct parse_error : std::runtime_error {
    int line;
    parse_error(int line_, const std::string& w)
        : std::runtime_error("line " + std::to_string(line_) + ": " + w), line(line_) {}
};
struct unknown_slot_error : std::runtime_error {
    explicit unknown_slot_error(const std::string& w) : std::runtime_error(w) {}
};
struct contract_violation_error : std::runtime_error {
    explicit contract_violation_error(const std::string& w) : std::runtime_error(w) {}
};
struct unknown_schedule_error : std::runtime_error {
    explicit unknown_schedule_error(const std::string& w) : std::runtime_error(w) {}
};

enum class SlotId : std::uint8_t {
    A11, A12, A21, A22, B11, B12, B21, B22, C11, C12, C21, C22, X, Y, Z, Count
};
inline constexpr int kSlotCount = static_cast<int>(SlotId::Count);

inline const char* slot_name(SlotId s) {
    static const char* names[] = {"A11", "A12", "A21", "A22", "B11", "B12",
                                  "B21", "B22", "C11", "C12", "C21", "C22",
                                  "X",   "Y",   "Z"};
    return names[static_cast<int>(s)];
}
inline std::optional<SlotId> slot_by_name(const std::string& s) {
    for (int i = 0; i < kSlotCount; ++i)
        if (s == slot_name(static_cast<SlotId>(i))) return static_cast<SlotId>(i);
    return std::nullopt;
}

enum class SlotRole { InputA, InputB, InoutC, Temporary };
inline SlotRole slot_role(SlotId s) {
    int i = static_cast<int>(s);
    if (i < 4) return SlotRole::InputA;
    if (i < 8) return SlotRole::InputB;
    if (i < 12) return SlotRole::InoutC;
    return SlotRole::Temporary;
}

// Symbolic dimension over the half-sizes of the problem.
enum class DimExpr : std::uint8_t { M2, K2, N2, MaxK2N2, MaxM2K2 };
inline std::size_t eval_dim(DimExpr d, std::size_t m, std::size_t k, std::size_t n) {
    switch (d) {
        case DimExpr::M2: return m / 2;
        case DimExpr::K2: return k / 2;
        case DimExpr::N2: return n / 2;
        case DimExpr::MaxK2N2: return std::max(k, n) / 2;
        case DimExpr::MaxM2K2: return std::max(m, k) / 2;
    }
    return 0;
}
inline const char* dim_name(DimExpr d) {
    switch (d) {
        case DimExpr::M2: return "m/2";
        case DimExpr::K2: return "k/2";
        case DimExpr::N2: return "n/2";
        case DimExpr::MaxK2N2: return "max(k/2,n/2)";
        case DimExpr::MaxM2K2: return "max(m/2,k/2)";
    }
    return "?";
}
inline std::optional<DimExpr> dim_by_name(const std::string& s) {
    if (s == "m/2") return DimExpr::M2;
    if (s == "k/2") return DimExpr::K2;
    if (s == "n/2") return DimExpr::N2;
    if (s == "max(k/2,n/2)") return DimExpr::MaxK2N2;
    if (s == "max(m/2,k/2)") return DimExpr::MaxM2K2;
    return std::nullopt;
}
// d fits inside capacity D for every choice of dimensions.
inline bool dim_fits(DimExpr d, DimExpr D) {
    if (d == D) return true;
    if (D == DimExpr::MaxK2N2) return d == DimExpr::K2 || d == DimExpr::N2;
    if (D == DimExpr::MaxM2K2) return d == DimExpr::M2 || d == DimExpr::K2;
    return false;
}

enum class Tag : std::uint8_t {
    LeafAdd, Classic, Std2, Acc3, IP, OvL, OvR, AcLR, AccR, Acc2, AcR, Self
};
inline const char* tag_name(Tag t) {
    static const char* names[] = {"LeafAdd", "Classic", "Std2", "Acc3", "IP", "OvL",
                                  "OvR",     "AcLR",    "AccR", "Acc2", "AcR", "Self"};
    return names[static_cast<int>(t)];
}
inline std::optional<Tag> tag_by_name(const std::string& s) {
    for (int i = 1; i <= static_cast<int>(Tag::Self); ++i)
        if (s == tag_name(static_cast<Tag>(i))) return static_cast<Tag>(i);
    return std::nullopt;
}
// Which operand sides a recursive call may overwrite.
inline bool tag_overwrites_left(Tag t) {
    return t == Tag::IP || t == Tag::OvL || t == Tag::AcLR;
}
inline bool tag_overwrites_right(Tag t) {
    return t == Tag::IP || t == Tag::OvR || t == Tag::AcLR || t == Tag::AccR ||
           t == Tag::AcR;
}

enum class ScalarSym : std::uint8_t { One, Alpha, Beta, Lit };

struct Scalar {
    bool neg = false;
    ScalarSym sym = ScalarSym::One;
    std::int64_t lit = 1;

    bool operator==(const Scalar&) const = default;
    bool is_plus_one() const { return !neg && sym == ScalarSym::One; }
    std::string str() const {
        std::string s = neg ? "-" : "";
        switch (sym) {
            case ScalarSym::One: return s;
            case ScalarSym::Alpha: return s + "alpha*";
            case ScalarSym::Beta: return s + "beta*";
            case ScalarSym::Lit: return s + std::to_string(lit) + "*";
        }
        return s;
    }
};

struct Operand {
    std::string label;  // as written; documentation only
    SlotId slot = SlotId::X;
    bool operator==(const Operand&) const = default;
};

struct ProductTerm {
    Scalar scalar;
    Operand lhs, rhs;
    bool operator==(const ProductTerm&) const = default;
};
struct AddTerm {
    Scalar scalar;
    Operand op;
    bool operator==(const AddTerm&) const = default;
};

struct Instruction {
    int index = 0;
    std::string label;       // result name, e.g. "S3", "U1"
    SlotId dst = SlotId::X;  // location written
    Tag tag = Tag::LeafAdd;
    std::optional<ProductTerm> prod;
    std::vector<AddTerm> adds;  // at most two; with prod, at most one
    bool is_final = false;      // last write of a C quadrant
    // Render hints so canonical text round-trips exactly.
    bool explicit_tag = false;   // tag was written in the source
    bool scalar_outside = false; // product scalar written before the tag

    bool has_product() const { return prod.has_value(); }
    bool operator==(const Instruction&) const = default;
};

enum class Contract : std::uint8_t { ReadOnly, OverwriteA, OverwriteB, OverwriteBoth };
using OverwritePolicy = Contract;  // the executor vocabulary for the same choice
inline const char* contract_name(Contract c) {
    switch (c) {
        case Contract::ReadOnly: return "read-only";
        case Contract::OverwriteA: return "overwrite-A";
        case Contract::OverwriteB: return "overwrite-B";
        case Contract::OverwriteBoth: return "overwrite-both";
    }
    return "?";
}
inline std::optional<Contract> contract_by_name(const std::string& s) {
    if (s == "read-only") return Contract::ReadOnly;
    if (s == "overwrite-A") return Contract::OverwriteA;
    if (s == "overwrite-B") return Contract::OverwriteB;
    if (s == "overwrite-both") return Contract::OverwriteBoth;
    return std::nullopt;
}
inline bool slot_writable(SlotId s, Contract c) {
    switch (slot_role(s)) {
        case SlotRole::InputA:
            return c == Contract::OverwriteA || c == Contract::OverwriteBoth;
        case SlotRole::InputB:
            return c == Contract::OverwriteB || c == Contract::OverwriteBoth;
        default: return true;
    }
}

struct TempDecl {
    SlotId slot;
    DimExpr rows, cols;
    bool operator==(const TempDecl&) const = default;
};

struct Schedule {
    std::string name = "anonymous";
    Contract contract = Contract::ReadOnly;
    bool accumulating = false;
    bool square_only = true;
    std::vector<TempDecl> temps;
    std::vector<Instruction> ins;

    bool operator==(const Schedule&) const = default;

    const TempDecl* temp_decl(SlotId s) const {
        for (const auto& t : temps)
            if (t.slot == s) return &t;
        return nullptr;
    }
    int product_count() const {
        int c = 0;
        for (const auto& i : ins) c += i.has_product();
        return c;
    }
};

// Recursion target of a product instruction: Self resolves to the enclosing
// schedule; untagged products were parsed as Std2 (plain) or Acc3
// (accumulating) per the tables' conventions.
inline std::string dispatch_policy(const Schedule& enclosing, const Instruction& in) {
    switch (in.tag) {
        case Tag::Self: return enclosing.name;
        case Tag::Classic: return "classic";
        case Tag::Std2: return "std2";
        case Tag::Acc3: return "acc3";
        case Tag::IP: return "ip";
        case Tag::OvL: return "ovl";
        case Tag::OvR: return "ovr";
        case Tag::AcLR: return "aclr";
        case Tag::AccR: return "accr";
        case Tag::Acc2: return "acc2";
        case Tag::AcR: return "acr";
        default: throw unknown_schedule_error("dispatch on non-product instruction");
    }
}

// --- DSL parsing -------------------------------------------------------------

namespace dsl {

struct Token {
    enum Kind { Ident, Int, Sym, End } kind = End;
    std::string text;
    std::int64_t value = 0;
};

class Lexer {
  public:
    Lexer(const std::string& s, int line) : s_(s), line_(line) {}
    Token peek() {
        if (!has_) {
            cur_ = lex();
            has_ = true;
        }
        return cur_;
    }
    Token next() {
        Token t = peek();
        has_ = false;
        return t;
    }
    [[noreturn]] void fail(const std::string& msg) { throw parse_error(line_, msg); }

  private:
    Token lex() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_])))
            ++pos_;
        if (pos_ >= s_.size() || s_[pos_] == '#') return {Token::End, "", 0};
        char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t start = pos_;
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_])))
                ++pos_;
            std::string t = s_.substr(start, pos_ - start);
            return {Token::Int, t, std::stoll(t)};
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t start = pos_;
            while (pos_ < s_.size() &&
                   (std::isalnum(static_cast<unsigned char>(s_[pos_])) ||
                    s_[pos_] == '_' || s_[pos_] == '\''))
                ++pos_;
            return {Token::Ident, s_.substr(start, pos_ - start), 0};
        }
        ++pos_;
        return {Token::Sym, std::string(1, c), 0};
    }

    std::string s_;
    int line_;
    std::size_t pos_ = 0;
    Token cur_;
    bool has_ = false;
};

struct RhsTerm {
    Scalar scalar;
    // exactly one of the three:
    std::optional<Operand> slot;
    std::optional<std::pair<Operand, Operand>> product;
    struct Call {
        Tag tag;
        std::vector<RhsTerm> inner;
        bool scalar_outside;
    };
    std::optional<Call> call;
};

}  // namespace dsl

class ScheduleParser {
  public:
    Schedule parse(const std::string& text) {
        Schedule s;
        std::map<std::string, SlotId> labels;
        for (int i = 0; i < kSlotCount; ++i)
            labels[slot_name(static_cast<SlotId>(i))] = static_cast<SlotId>(i);

        std::istringstream is(text);
        std::string rawline;
        int lineno = 0;
        bool saw_instruction = false;
        while (std::getline(is, rawline)) {
            ++lineno;
            dsl::Lexer lex(rawline, lineno);
            auto first = lex.peek();
            if (first.kind == dsl::Token::End) continue;

            if (first.kind == dsl::Token::Ident && !saw_instruction &&
                parse_directive(s, lex, lineno, rawline))
                continue;

            saw_instruction = true;
            parse_instruction(s, labels, lex, lineno);
        }
        finalize(s);
        return s;
    }

  private:
    static bool parse_directive(Schedule& s, dsl::Lexer& lex, int lineno,
                                const std::string& raw) {
        auto kw = lex.peek().text;
        if (kw != "schedule" && kw != "contract" && kw != "accumulating" &&
            kw != "shape" && kw != "temp")
            return false;
        lex.next();
        if (kw == "schedule") {
            s.name = lex.next().text;
        } else if (kw == "contract") {
            // contract value may contain '-' symbols; consume rest of tokens
            std::string v;
            for (auto t = lex.next(); t.kind != dsl::Token::End; t = lex.next())
                v += t.text;
            auto c = contract_by_name(v);
            if (!c) throw parse_error(lineno, "unknown contract: " + v);
            s.contract = *c;
        } else if (kw == "accumulating") {
            auto v = lex.next().text;
            if (v != "true" && v != "false")
                throw parse_error(lineno, "accumulating expects true|false");
            s.accumulating = v == "true";
        } else if (kw == "shape") {
            auto v = lex.next().text;
            if (v == "square") s.square_only = true;
            else if (v == "rectangular") s.square_only = false;
            else throw parse_error(lineno, "shape expects square|rectangular");
        } else {  // temp SLOT RDIM CDIM — dims may contain '/', '(', ',', ')'
            std::istringstream ts(raw);
            std::string w, slot, rdim, cdim;
            ts >> w >> slot >> rdim >> cdim;
            auto sid = slot_by_name(slot);
            if (!sid || slot_role(*sid) != SlotRole::Temporary)
                throw parse_error(lineno, "temp expects a temporary slot name");
            auto rd = dim_by_name(rdim), cd = dim_by_name(cdim);
            if (!rd || !cd) throw parse_error(lineno, "bad temp dimension");
            s.temps.push_back({*sid, *rd, *cd});
        }
        return true;
    }

    static Operand resolve(const std::map<std::string, SlotId>& labels,
                           const std::string& tok, int lineno) {
        auto it = labels.find(tok);
        if (it == labels.end())
            throw unknown_slot_error("line " + std::to_string(lineno) +
                                     ": unknown operand '" + tok + "'");
        return Operand{tok, it->second};
    }

    static std::vector<dsl::RhsTerm> parse_rhs(const std::map<std::string, SlotId>& labels,
                                               dsl::Lexer& lex, int lineno) {
        std::vector<dsl::RhsTerm> terms;
        bool first = true;
        for (;;) {
            auto t = lex.peek();
            if (t.kind == dsl::Token::End) break;
            if (t.kind == dsl::Token::Sym && (t.text == "@" || t.text == ")")) break;

            dsl::RhsTerm term;
            if (!first) {
                if (t.kind != dsl::Token::Sym || (t.text != "+" && t.text != "-"))
                    lex.fail("expected '+' or '-' between terms");
                term.scalar.neg = t.text == "-";
                lex.next();
            } else {
                if (t.kind == dsl::Token::Sym && (t.text == "+" || t.text == "-")) {
                    term.scalar.neg = t.text == "-";
                    lex.next();
                }
            }
            first = false;

            // optional scalar
            auto u = lex.peek();
            bool had_scalar = false;
            if (u.kind == dsl::Token::Int) {
                term.scalar.sym = ScalarSym::Lit;
                term.scalar.lit = u.value;
                lex.next();
                had_scalar = true;
            } else if (u.kind == dsl::Token::Ident && (u.text == "alpha" || u.text == "beta")) {
                term.scalar.sym = u.text == "alpha" ? ScalarSym::Alpha : ScalarSym::Beta;
                lex.next();
                had_scalar = true;
            }
            if (had_scalar) {
                auto star = lex.next();
                if (star.kind != dsl::Token::Sym || star.text != "*")
                    lex.fail("expected '*' after scalar");
            }

            auto id = lex.next();
            if (id.kind != dsl::Token::Ident) lex.fail("expected operand");
            auto tag = tag_by_name(id.text);
            auto paren = lex.peek();
            if (tag && paren.kind == dsl::Token::Sym && paren.text == "(") {
                lex.next();
                dsl::RhsTerm::Call call;
                call.tag = *tag;
                call.scalar_outside = had_scalar;
                call.inner = parse_rhs(labels, lex, lineno);
                auto close = lex.next();
                if (close.kind != dsl::Token::Sym || close.text != ")")
                    lex.fail("expected ')'");
                term.call = call;
            } else {
                Operand a = resolve(labels, id.text, lineno);
                auto star = lex.peek();
                if (star.kind == dsl::Token::Sym && star.text == "*") {
                    lex.next();
                    auto id2 = lex.next();
                    if (id2.kind != dsl::Token::Ident) lex.fail("expected operand after '*'");
                    Operand b = resolve(labels, id2.text, lineno);
                    term.product = std::make_pair(a, b);
                } else {
                    term.slot = a;
                }
            }
            terms.push_back(std::move(term));
        }
        return terms;
    }

    static void parse_instruction(Schedule& s, std::map<std::string, SlotId>& labels,
                                  dsl::Lexer& lex, int lineno) {
        auto idx = lex.next();
        if (idx.kind != dsl::Token::Int) throw parse_error(lineno, "expected instruction index");
        auto colon = lex.next();
        if (colon.kind != dsl::Token::Sym || colon.text != ":")
            throw parse_error(lineno, "expected ':'");
        auto lbl = lex.next();
        if (lbl.kind != dsl::Token::Ident) throw parse_error(lineno, "expected result label");
        auto eq = lex.next();
        if (eq.kind != dsl::Token::Sym || eq.text != "=")
            throw parse_error(lineno, "expected '='");

        auto terms = parse_rhs(labels, lex, lineno);
        auto at = lex.next();
        if (at.kind != dsl::Token::Sym || at.text != "@")
            throw parse_error(lineno, "expected '@ SLOT'");
        auto dsttok = lex.next();
        auto dst = dsttok.kind == dsl::Token::Ident ? slot_by_name(dsttok.text)
                                                    : std::nullopt;
        if (!dst) throw unknown_slot_error("line " + std::to_string(lineno) +
                                           ": unknown destination slot");

        Instruction in;
        in.index = static_cast<int>(idx.value);
        if (in.index != static_cast<int>(s.ins.size()) + 1)
            throw parse_error(lineno, "instruction indices must be sequential from 1");
        in.label = lbl.text;
        in.dst = *dst;

        for (auto& t : terms) {
            if (t.call) {
                if (in.prod) throw parse_error(lineno, "more than one product term");
                bool found_prod = false;
                for (auto& inner : t.call->inner) {
                    if (inner.call) throw parse_error(lineno, "nested recursion tags");
                    if (inner.product) {
                        if (found_prod) throw parse_error(lineno, "two products in one call");
                        found_prod = true;
                        ProductTerm p;
                        p.scalar = inner.scalar;
                        if (t.call->scalar_outside) {
                            if (t.call->inner.size() != 1)
                                throw parse_error(lineno,
                                                  "scalar prefix on a tagged call is only "
                                                  "allowed for a pure product; write the "
                                                  "scalar inside the parentheses");
                            // outer sign/scalar multiply the product
                            if (t.scalar.neg) p.scalar.neg = !p.scalar.neg;
                            if (t.scalar.sym != ScalarSym::One) {
                                if (p.scalar.sym != ScalarSym::One)
                                    throw parse_error(lineno, "conflicting scalars");
                                p.scalar.sym = t.scalar.sym;
                                p.scalar.lit = t.scalar.lit;
                            }
                        } else if (t.scalar.neg) {
                            p.scalar.neg = !p.scalar.neg;
                        }
                        p.lhs = inner.product->first;
                        p.rhs = inner.product->second;
                        in.prod = p;
                        in.tag = t.call->tag;
                        in.explicit_tag = true;
                        in.scalar_outside = t.call->scalar_outside;
                    } else {
                        AddTerm a;
                        a.scalar = inner.scalar;
                        a.op = *inner.slot;
                        in.adds.push_back(a);
                    }
                }
                if (!found_prod) throw parse_error(lineno, "tagged call without a product");
            } else if (t.product) {
                if (in.prod) throw parse_error(lineno, "more than one product term");
                ProductTerm p;
                p.scalar = t.scalar;
                p.lhs = t.product->first;
                p.rhs = t.product->second;
                in.prod = p;
            } else {
                AddTerm a;
                a.scalar = t.scalar;
                a.op = *t.slot;
                in.adds.push_back(a);
            }
        }

        if (!in.prod && in.adds.empty())
            throw parse_error(lineno, "empty right-hand side");
        if (in.adds.size() > 2)
            throw parse_error(lineno, "more than two slot terms");
        if (in.prod && in.adds.size() > 1)
            throw parse_error(lineno, "a product allows at most one accumulator term");

        if (in.prod && !in.explicit_tag)
            in.tag = in.adds.empty() ? Tag::Std2 : Tag::Acc3;
        if (!in.prod) in.tag = Tag::LeafAdd;

        if (!slot_writable(in.dst, s.contract))
            throw contract_violation_error(
                "line " + std::to_string(lineno) + ": writing " + slot_name(in.dst) +
                " violates contract " + contract_name(s.contract));

        if (slot_role(in.dst) == SlotRole::Temporary && !s.temp_decl(in.dst))
            s.temps.push_back({in.dst, DimExpr::N2, DimExpr::N2});

        labels[in.label] = in.dst;
        s.ins.push_back(std::move(in));
    }

    static void finalize(Schedule& s) {
        // final = last write of each C quadrant
        std::map<SlotId, int> last_write;
        for (const auto& in : s.ins)
            if (slot_role(in.dst) == SlotRole::InoutC)
                last_write[in.dst] = in.index;
        for (auto& in : s.ins)
            in.is_final = slot_role(in.dst) == SlotRole::InoutC &&
                          last_write[in.dst] == in.index;
    }
};

inline Schedule parse_schedule(const std::string& text) {
    return ScheduleParser().parse(text);
}

// --- rendering ---------------------------------------------------------------

namespace dsl {
inline std::string render_term_scalar(const Scalar& sc, bool lead) {
    std::string out;
    if (sc.neg) out += lead ? "-" : "- ";
    else if (!lead) out += "+ ";
    switch (sc.sym) {
        case ScalarSym::One: break;
        case ScalarSym::Alpha: out += "alpha*"; break;
        case ScalarSym::Beta: out += "beta*"; break;
        case ScalarSym::Lit: out += std::to_string(sc.lit) + "*"; break;
    }
    return out;
}
}  // namespace dsl

inline std::string render_instruction(const Instruction& in) {
    std::ostringstream os;
    os << in.index << ": " << in.label << " = ";
    bool lead = true;
    auto emit_sep = [&]() {
        if (!lead) os << ' ';
    };
    if (in.prod && in.explicit_tag) {
        const auto& p = *in.prod;
        Scalar inner = p.scalar;
        if (in.scalar_outside) {
            os << dsl::render_term_scalar(p.scalar, true) << tag_name(in.tag) << '(';
            os << p.lhs.label << '*' << p.rhs.label;
        } else {
            os << tag_name(in.tag) << '(';
            os << dsl::render_term_scalar(inner, true) << p.lhs.label << '*'
               << p.rhs.label;
        }
        for (const auto& a : in.adds)
            os << ' ' << dsl::render_term_scalar(a.scalar, false) << a.op.label;
        os << ')';
        lead = false;
    } else if (in.prod) {
        os << dsl::render_term_scalar(in.prod->scalar, true) << in.prod->lhs.label
           << '*' << in.prod->rhs.label;
        lead = false;
        for (const auto& a : in.adds) {
            emit_sep();
            os << dsl::render_term_scalar(a.scalar, false) << a.op.label;
        }
    } else {
        for (const auto& a : in.adds) {
            emit_sep();
            os << dsl::render_term_scalar(a.scalar, lead) << a.op.label;
            lead = false;
        }
    }
    os << " @ " << slot_name(in.dst);
    return os.str();
}

inline std::string render_schedule(const Schedule& s) {
    std::ostringstream os;
    os << "schedule " << s.name << '\n';
    os << "contract " << contract_name(s.contract) << '\n';
    os << "accumulating " << (s.accumulating ? "true" : "false") << '\n';
    os << "shape " << (s.square_only ? "square" : "rectangular") << '\n';
    for (const auto& t : s.temps)
        os << "temp " << slot_name(t.slot) << ' ' << dim_name(t.rows) << ' '
           << dim_name(t.cols) << '\n';
    for (const auto& in : s.ins) os << render_instruction(in) << '\n';
    return os.str();
}

// --- builtin catalog ---------------------------------------------------------
// Each program is transcribed row for row; canonical renderings of these
// programs also ship as text fixtures.

namespace builtin_text {

inline constexpr const char* kStd2 = R"(schedule std2
contract read-only
accumulating false
shape rectangular
temp X m/2 max(k/2,n/2)
temp Y k/2 n/2
1: S3 = A11 - A21 @ X
2: T3 = B22 - B12 @ Y
3: P7 = S3*T3 @ C21
4: S1 = A21 + A22 @ X
5: T1 = B12 - B11 @ Y
6: P5 = S1*T1 @ C22
7: S2 = S1 - A11 @ X
8: T2 = B22 - T1 @ Y
9: P6 = S2*T2 @ C12
10: S4 = A12 - S2 @ X
11: P3 = S4*B22 @ C11
12: P1 = A11*B11 @ X
13: U2 = P1 + P6 @ C12
14: U3 = U2 + P7 @ C21
15: U4 = U2 + P5 @ C12
16: U7 = U3 + P5 @ C22
17: U5 = U4 + P3 @ C12
18: T4 = T2 - B21 @ Y
19: P4 = A22*T4 @ C11
20: U6 = U3 - P4 @ C21
21: P2 = A12*B21 @ C11
22: U1 = P1 + P2 @ C11
)";

inline constexpr const char* kAcc3 = R"(schedule acc3
contract read-only
accumulating true
shape rectangular
temp X m/2 k/2
temp Y k/2 n/2
temp Z m/2 n/2
1: S1 = A21 + A22 @ X
2: T1 = B12 - B11 @ Y
3: P5 = alpha*S1*T1 @ Z
4: C22 = P5 + beta*C22 @ C22
5: C12 = P5 + beta*C12 @ C12
6: S2 = S1 - A11 @ X
7: T2 = B22 - T1 @ Y
8: P1 = alpha*A11*B11 @ Z
9: C11 = P1 + beta*C11 @ C11
10: U2 = alpha*S2*T2 + P1 @ Z
11: U1 = alpha*A12*B21 + C11 @ C11
12: S4 = A12 - S2 @ X
13: T4 = T2 - B21 @ Y
14: C12 = alpha*S4*B22 + C12 @ C12
15: U5 = U2 + C12 @ C12
16: P4 = alpha*A22*T4 - beta*C21 @ C21
17: S3 = A11 - A21 @ X
18: T3 = B22 - B12 @ Y
19: U3 = alpha*S3*T3 + U2 @ Z
20: U7 = U3 + C22 @ C22
21: U6 = U3 - C21 @ C21
)";

inline constexpr const char* kIp = R"(schedule ip
contract overwrite-both
accumulating false
shape square
1: S3 = A11 - A21 @ C11
2: S1 = A21 + A22 @ A21
3: T1 = B12 - B11 @ C22
4: T3 = B22 - B12 @ B12
5: P7 = IP(S3*T3) @ C21
6: S2 = S1 - A11 @ C12
7: P1 = IP(A11*B11) @ C11
8: T2 = B22 - T1 @ B11
9: P5 = IP(S1*T1) @ A11
10: T4 = T2 - B21 @ C22
11: P4 = IP(A22*T4) @ A21
12: S4 = A12 - S2 @ A22
13: P6 = IP(S2*T2) @ C22
14: U2 = P1 + P6 @ C22
15: P2 = IP(A12*B21) @ C12
16: U1 = P1 + P2 @ C11
17: U4 = U2 + P5 @ C12
18: U3 = U2 + P7 @ C22
19: U6 = U3 - P4 @ C21
20: U7 = U3 + P5 @ C22
21: P3 = IP(S4*B22) @ A12
22: U5 = U4 + P3 @ C12
)";

inline constexpr const char* kOvl = R"(schedule ovl
contract overwrite-A
accumulating false
shape square
temp X n/2 n/2
1: S3 = A11 - A21 @ C22
2: S1 = A21 + A22 @ A21
3: S2 = S1 - A11 @ C12
4: T1 = B12 - B11 @ C21
5: P1 = OvL(A11*B11) @ C11
6: T3 = B22 - B12 @ A11
7: P7 = IP(S3*T3) @ X
8: T2 = B22 - T1 @ A11
9: P5 = IP(S1*T1) @ C22
10: S4 = A12 - S2 @ C21
11: P3 = OvL(S4*B22) @ A21
12: P6 = OvL(S2*T2) @ C21
13: T4 = T2 - B21 @ A11
14: U2 = P1 + P6 @ C21
15: U4 = U2 + P5 @ C12
16: U3 = U2 + P7 @ C21
17: U7 = U3 + P5 @ C22
18: U5 = U4 + P3 @ C12
19: P2 = OvL(A12*B21) @ X
20: U1 = P1 + P2 @ C11
21: P4 = IP(A22*T4) @ A21
22: U6 = U3 - P4 @ C21
)";

// The ovl variant that overwrites strictly two blocks of A: A12 is backed up
// into A21, restored after the P2 call, and the last product uses OvR so A22
// stays constant.
inline constexpr const char* kOvl2 = R"(schedule ovl2
contract overwrite-A
accumulating false
shape square
temp X n/2 n/2
1: S3 = A11 - A21 @ C22
2: S1 = A21 + A22 @ A21
3: S2 = S1 - A11 @ C12
4: T1 = B12 - B11 @ C21
5: P1 = OvL(A11*B11) @ C11
6: T3 = B22 - B12 @ A11
7: P7 = IP(S3*T3) @ X
8: T2 = B22 - T1 @ A11
9: P5 = IP(S1*T1) @ C22
10: S4 = A12 - S2 @ C21
11: P3 = OvL(S4*B22) @ A21
12: P6 = OvL(S2*T2) @ C21
13: T4 = T2 - B21 @ A11
14: U2 = P1 + P6 @ C21
15: U4 = U2 + P5 @ C12
16: U3 = U2 + P7 @ C21
17: U7 = U3 + P5 @ C22
18: U5 = U4 + P3 @ C12
19: A21 = A12 @ A21
20: P2 = OvL(A12*B21) @ X
21: A12 = A21 @ A12
22: U1 = P1 + P2 @ C11
23: P4 = OvR(A22*T4) @ A21
24: U6 = U3 - P4 @ C21
)";

inline constexpr const char* kOvr = R"(schedule ovr
contract overwrite-B
accumulating false
shape square
temp X n/2 n/2
1: S3 = A11 - A21 @ C22
2: S1 = A21 + A22 @ C21
3: T1 = B12 - B11 @ C12
4: P1 = OvR(A11*B11) @ C11
5: S2 = S1 - A11 @ B11
6: T3 = B22 - B12 @ B12
7: P7 = IP(S3*T3) @ X
8: T2 = B22 - T1 @ B12
9: P5 = IP(S1*T1) @ C22
10: T4 = T2 - B21 @ C12
11: P6 = OvR(S2*T2) @ C21
12: P4 = OvR(A22*T4) @ B12
13: S4 = A12 - S2 @ B11
14: U2 = P1 + P6 @ C21
15: U4 = U2 + P5 @ C12
16: U3 = U2 + P7 @ C21
17: U7 = U3 + P5 @ C22
18: U6 = U3 - P4 @ C21
19: P3 = IP(S4*B22) @ B12
20: U5 = U4 + P3 @ C12
21: P2 = OvR(A12*B21) @ B12
22: U1 = P1 + P2 @ C11
)";

inline constexpr const char* kAclr = R"(schedule aclr
contract overwrite-both
accumulating true
shape square
temp X n/2 n/2
temp Y n/2 n/2
1: Z1 = C22 - C12 @ C22
2: S1 = A21 + A22 @ X
3: T1 = B12 - B11 @ Y
4: Z2 = C21 - Z1 @ C21
5: T3 = B22 - B12 @ B12
6: S3 = A11 - A21 @ A21
7: P7 = AcLR(alpha*S3*T3 + beta*Z1) @ C22
8: S2 = S1 - A11 @ A21
9: T2 = B22 - T1 @ B12
10: P5 = AcLR(alpha*S1*T1 + beta*C12) @ C12
11: P1 = alpha*IP(A11*B11) @ Y
12: T4 = T2 - B21 @ X
13: P4 = AcLR(alpha*A22*T4 - beta*Z2) @ C21
14: S4 = A12 - S2 @ A22
15: P6 = alpha*IP(S2*T2) @ X
16: P2 = AcLR(alpha*A12*B21 + beta*C11) @ C11
17: U1 = P1 + P2 @ C11
18: U2 = P1 + P6 @ X
19: U3 = U2 + P7 @ C22
20: U4 = U2 + P5 @ X
21: U6 = U3 - P4 @ C21
22: U7 = U3 + P5 @ C22
23: P3 = alpha*IP(S4*B22) @ C12
24: U5 = U4 + P3 @ C12
)";

inline constexpr const char* kAccr = R"(schedule accr
contract overwrite-B
accumulating true
shape square
temp X n/2 n/2
temp Y n/2 n/2
1: Z1 = C22 - C12 @ C22
2: T1 = B12 - B11 @ X
3: Z2 = C21 - Z1 @ C21
4: T3 = B22 - B12 @ B12
5: S3 = A11 - A21 @ Y
6: P7 = AccR(alpha*S3*T3 + beta*Z1) @ C22
7: S1 = A21 + A22 @ Y
8: T2 = B22 - T1 @ B12
9: P5 = AccR(alpha*S1*T1 + beta*C12) @ C12
10: T4 = T2 - B21 @ X
11: P4 = AccR(alpha*A22*T4 - beta*Z2) @ C21
12: P1 = alpha*OvR(A11*B11) @ X
13: P2 = AccR(alpha*A12*B21 + beta*C11) @ C11
14: S2 = S1 - A11 @ Y
15: P6 = alpha*OvR(S2*T2) @ B21
16: S4 = A12 - S2 @ Y
17: U2 = P1 + P6 @ B21
18: U3 = U2 + P7 @ C22
19: U4 = U2 + P5 @ B21
20: U6 = U3 - P4 @ C21
21: U1 = P1 + P2 @ C11
22: U7 = U3 + P5 @ C22
23: P3 = alpha*IP(S4*B22) @ C12
24: U5 = U4 + P3 @ C12
)";

// Hybrid accumulation with constant inputs. Rows 19 and 24 are the split
// rows: the recursive call accumulates into the destination's current value,
// and T2 is recomputed on purpose (rows 21-23).
inline constexpr const char* kAcc2 = R"(schedule acc2
contract read-only
accumulating true
shape square
temp X n/2 n/2
temp Y n/2 n/2
1: Z1 = C22 - C12 @ C22
2: Z3 = C12 - C21 @ C12
3: S1 = A21 + A22 @ X
4: T1 = B12 - B11 @ Y
5: P5 = Acc2(alpha*S1*T1 + beta*Z3) @ C12
6: S2 = S1 - A11 @ X
7: T2 = B22 - T1 @ Y
8: P6 = Acc2(alpha*S2*T2 + beta*C21) @ C21
9: S4 = A12 - S2 @ X
10: W1 = P5 + beta*Z1 @ C22
11: P3 = Acc2(alpha*S4*B22 + P5) @ C12
12: P1 = alpha*A11*B11 @ X
13: U2 = P6 + P1 @ C21
14: P2 = Acc2(alpha*A12*B21 + beta*C11) @ C11
15: U1 = P1 + P2 @ C11
16: U5 = U2 + P3 @ C12
17: S3 = A11 - A21 @ X
18: T3 = B22 - B12 @ Y
19: U3 = AcLR(alpha*S3*T3 + U2) @ C21
20: U7 = U3 + W1 @ C22
21: T1' = B12 - B11 @ Y
22: T2' = B22 - T1' @ Y
23: T4 = T2' - B21 @ Y
24: U6 = AccR(-alpha*A22*T4 + U3) @ C21
)";

inline constexpr const char* kAcr = R"(schedule acr
contract overwrite-B
accumulating true
shape rectangular
temp X max(m/2,k/2) n/2
temp Y m/2 k/2
1: Z1 = C22 - C12 @ C22
2: T1 = B12 - B11 @ X
3: Z2 = C21 - Z1 @ C21
4: T3 = B22 - B12 @ B12
5: S3 = A11 - A21 @ Y
6: P7 = AcR(alpha*S3*T3 + beta*Z1) @ C22
7: S1 = A21 + A22 @ Y
8: T2 = B22 - T1 @ B12
9: P5 = AcR(alpha*S1*T1 + beta*C12) @ C12
10: T4 = T2 - B21 @ X
11: P4 = AcR(alpha*A22*T4 - beta*Z2) @ C21
12: P1 = alpha*A11*B11 @ X
13: P2 = AcR(alpha*A12*B21 + beta*C11) @ C11
14: U1 = P1 + P2 @ C11
15: S2 = S1 - A11 @ Y
16: U2 = AcR(alpha*S2*T2 + P1) @ X
17: U3 = U2 + P7 @ C22
18: U6 = U3 - P4 @ C21
19: U7 = U3 + P5 @ C22
20: U4 = U2 + P5 @ X
21: S4 = A12 - S2 @ Y
22: P3 = alpha*S4*B22 @ C12
23: U5 = U4 + P3 @ C12
)";

}  // namespace builtin_text

inline const std::vector<std::string>& builtin_names() {
    static const std::vector<std::string> names = {
        "std2", "acc3", "ip", "ovl", "ovl2", "ovr", "aclr", "accr", "acc2", "acr"};
    return names;
}

inline const Schedule& builtin(const std::string& name) {
    static const std::map<std::string, Schedule> catalog = [] {
        std::map<std::string, Schedule> m;
        m["std2"] = parse_schedule(builtin_text::kStd2);
        m["acc3"] = parse_schedule(builtin_text::kAcc3);
        m["ip"] = parse_schedule(builtin_text::kIp);
        m["ovl"] = parse_schedule(builtin_text::kOvl);
        m["ovl2"] = parse_schedule(builtin_text::kOvl2);
        m["ovr"] = parse_schedule(builtin_text::kOvr);
        m["aclr"] = parse_schedule(builtin_text::kAclr);
        m["accr"] = parse_schedule(builtin_text::kAccr);
        m["acc2"] = parse_schedule(builtin_text::kAcc2);
        m["acr"] = parse_schedule(builtin_text::kAcr);
        return m;
    }();
    auto it = catalog.find(name);
    if (it == catalog.end()) throw unknown_schedule_error("unknown schedule: " + name);
    return it->second;
}

inline const char* builtin_source(const std::string& name) {
    if (name == "std2") return builtin_text::kStd2;
    if (name == "acc3") return builtin_text::kAcc3;
    if (name == "ip") return builtin_text::kIp;
    if (name == "ovl") return builtin_text::kOvl;
    if (name == "ovl2") return builtin_text::kOvl2;
    if (name == "ovr") return builtin_text::kOvr;
    if (name == "aclr") return builtin_text::kAclr;
    if (name == "accr") return builtin_text::kAccr;
    if (name == "acc2") return builtin_text::kAcc2;
    if (name == "acr") return builtin_text::kAcr;
    throw unknown_schedule_error("unknown schedule: " + name);
}

}  // namespace winomem
