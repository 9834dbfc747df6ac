// Command-line driver: multiplication with oracle verification, cost-formula
// verification sweeps, pebble-game schedule search, and benchmarking.
//
// Exit codes: 0 success; 1 oracle/formula mismatch; 2 configuration or shape
// errors; search: 3 exhausted, 4 timed out.

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "winomem/drivers.hpp"
#include "winomem/pebble.hpp"
#include "winomem/validate.hpp"

using namespace winomem;
using nlohmann::json;

namespace {

struct CommonOpts {
    std::size_t m = 0, k = 0, n = 16;
    std::uint32_t modulus = kDefaultModulus;
    std::uint64_t seed = 1;
    int cutoff = 1;
    std::uint32_t alpha = 1, beta = 1;
    std::string format = "table";
};

int thread_cap() {
    if (const char* env = std::getenv("WINOMEM_THREADS")) {
        int t = std::atoi(env);
        if (t >= 1) return t;
    }
    return 1;
}

Matrix load_matrix(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f.good()) throw io_error("cannot open " + path);
    if (path.size() > 4 && path.substr(path.size() - 4) == ".bin")
        return read_binary(f);
    return read_text(f);
}

void emit_report(const CostReport& r, const std::string& format, bool header) {
    if (format == "csv") {
        if (header) std::cout << CostReport::csv_header() << "\n";
        std::cout << r.csv_row() << "\n";
    } else if (format == "json-lines") {
        json j{{"variant", r.variant}, {"m", r.m},
               {"k", r.k},             {"n", r.n},
               {"cutoff", r.cutoff},   {"mults", r.mults},
               {"adds", r.adds},       {"peak_extra", r.peak_extra_words},
               {"total_alloc", r.total_alloc_words}};
        std::cout << j.dump() << "\n";
    } else {
        std::cout << "variant=" << r.variant << " dims=" << r.m << "x" << r.k << "x"
                  << r.n << " cutoff=" << r.cutoff << "\n"
                  << "  mults=" << r.mults << " adds=" << r.adds
                  << " ops=" << r.ops() << "\n"
                  << "  peak_extra=" << r.peak_extra_words
                  << " total_alloc=" << r.total_alloc_words
                  << " word_moves=" << r.word_moves << "\n";
    }
}

// Which inputs the variant must leave untouched.
std::pair<bool, bool> preserved_sides(const std::string& variant) {
    if (variant == "classic" || variant == "ipmm") return {true, true};
    if (variant == "ipovmm") return {false, false};
    if (models::parse_blocked(variant)) return {true, true};
    switch (builtin(variant).contract) {
        case Contract::ReadOnly: return {true, true};
        case Contract::OverwriteA: return {false, true};
        case Contract::OverwriteB: return {true, false};
        case Contract::OverwriteBoth: return {false, false};
    }
    return {true, true};
}

// ---------------------------------------------------------------- multiply

int cmd_multiply(const CommonOpts& o, const std::string& variant,
                 const std::string& a_file, const std::string& b_file,
                 const std::string& c_file, const std::string& schedule_file) {
    Modulus mod(o.modulus);
    std::size_t m = o.m ? o.m : o.n, k = o.k ? o.k : o.n, n = o.n;

    std::optional<Schedule> custom;
    bool accumulates;
    if (!schedule_file.empty()) {
        std::ifstream f(schedule_file);
        if (!f.good()) throw io_error("cannot open " + schedule_file);
        std::string text((std::istreambuf_iterator<char>(f)),
                         std::istreambuf_iterator<char>());
        custom = parse_schedule(text);
        ValidationReport v = validate(*custom);
        if (!v.ok()) {
            std::cerr << "schedule fails validation:\n" << v.summary();
            return 2;
        }
        accumulates = custom->accumulating;
    } else {
        accumulates = variant_accumulates(variant);
    }

    Matrix A = a_file.empty() ? Matrix(m, k, mod) : load_matrix(a_file);
    Matrix B = b_file.empty() ? Matrix(k, n, mod) : load_matrix(b_file);
    if (a_file.empty()) A.fill_random(o.seed);
    if (b_file.empty()) B.fill_random(o.seed + 1);
    m = A.rows();
    k = A.cols();
    n = B.cols();
    Matrix C = c_file.empty() ? Matrix(m, n, mod) : load_matrix(c_file);
    if (c_file.empty() && accumulates) C.fill_random(o.seed + 2);

    const Matrix A0 = A, B0 = B;
    Matrix want = C;
    {
        Matrix At = A0, Bt = B0;
        classical_mul(want.view(), At.view(), Bt.view(), o.alpha,
                      accumulates ? o.beta : 0, mod);
    }

    MultiplyOptions opt{static_cast<Elem>(o.alpha % o.modulus),
                        accumulates ? static_cast<Elem>(o.beta % o.modulus) : Elem(0),
                        o.cutoff};
    CostReport rep = custom ? run_parsed_schedule(*custom, A, B, C, opt)
                            : run_variant(variant, A, B, C, opt);
    emit_report(rep, o.format, true);

    bool ok = C == want;
    std::cout << "oracle: " << (ok ? "ok" : "MISMATCH") << "\n";
    bool keep_a, keep_b;
    if (custom) {
        keep_a = custom->contract == Contract::ReadOnly ||
                 custom->contract == Contract::OverwriteB;
        keep_b = custom->contract == Contract::ReadOnly ||
                 custom->contract == Contract::OverwriteA;
    } else {
        std::tie(keep_a, keep_b) = preserved_sides(variant);
    }
    if (keep_a) {
        bool same = A == A0;
        std::cout << "A hash " << std::hex << A0.hash() << " -> " << A.hash()
                  << std::dec << (same ? " (constant)" : " CHANGED") << "\n";
        ok = ok && same;
    }
    if (keep_b) {
        bool same = B == B0;
        std::cout << "B hash " << std::hex << B0.hash() << " -> " << B.hash()
                  << std::dec << (same ? " (constant)" : " CHANGED") << "\n";
        ok = ok && same;
    }
    return ok ? 0 : 1;
}

// ------------------------------------------------------------------ verify

struct VerifyCell {
    std::string variant;
    std::size_t m, k, n;
};

std::vector<VerifyCell> verify_cells(const std::string& variant, std::size_t max_n) {
    std::vector<VerifyCell> cells;
    if (variant == "ipovmm") {
        for (std::size_t n = 2; 2 * n <= max_n; n *= 2)
            cells.push_back({variant, 2 * n, 2 * n, n});
    } else if (auto spec = models::parse_blocked(variant)) {
        for (std::size_t s = 1; s * spec->t <= max_n; s *= 2)
            if (s * spec->t >= 2)
                cells.push_back({variant, s * spec->t, s * spec->t, s * spec->t});
    } else {
        for (std::size_t n = 2; n <= max_n; n *= 2)
            cells.push_back({variant, n, n, n});
    }
    return cells;
}

// Known bound on peak extra words, asserted as a strict inequality where one
// applies: std2/ovl2 < 2/3 n^2; acc3 < n^2; ovl/ovr < 1/3 n^2;
// aclr/accr/acc2/acr < 2/3 n^2.
std::optional<double> peak_bound(const std::string& v, std::size_t n) {
    const double n2 = static_cast<double>(n) * static_cast<double>(n);
    if (v == "std2" || v == "ovl2") return 2.0 / 3 * n2;
    if (v == "acc3") return n2;
    if (v == "ovl" || v == "ovr") return n2 / 3;
    if (v == "aclr" || v == "accr" || v == "acc2" || v == "acr") return 2.0 / 3 * n2;
    return std::nullopt;
}

int cmd_verify(const CommonOpts& o, const std::vector<std::string>& variants,
               std::size_t max_n) {
    Modulus mod(o.modulus);
    std::vector<VerifyCell> cells;
    for (const auto& v : variants)
        for (auto c : verify_cells(v, max_n)) cells.push_back(c);

    struct Row {
        VerifyCell cell;
        CostReport measured;
        std::string status;
        bool ok = false;
    };
    std::vector<Row> rows(cells.size());

    const int threads = std::min<int>(thread_cap(),
                                      std::max<int>(1, static_cast<int>(cells.size())));
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            const VerifyCell& c = cells[i];
            Row& row = rows[i];
            row.cell = c;
            try {
                const bool acc = variant_accumulates(c.variant);
                Matrix A(c.m, c.k, mod), B(c.k, c.n, mod), C(c.m, c.n, mod);
                A.fill_random(o.seed + i);
                B.fill_random(o.seed + i + 1);
                if (acc) C.fill_random(o.seed + i + 2);
                Matrix want = C;
                {
                    Matrix At = A, Bt = B;
                    classical_mul(want.view(), At.view(), Bt.view(), 1,
                                  acc ? Elem(1) : Elem(0), mod);
                }
                row.measured = run_variant(
                    c.variant, A, B, C,
                    {.alpha = 1, .beta = acc ? Elem(1) : Elem(0), .cutoff = o.cutoff});
                CostReport expected =
                    models::expected_costs(c.variant, c.m, c.k, c.n, o.cutoff);
                DiffReport diff = compare(row.measured, expected);
                bool oracle = C == want;
                bool bound_ok = true;
                if (auto b = peak_bound(c.variant, c.n))
                    bound_ok = static_cast<double>(row.measured.peak_extra_words) < *b;
                row.ok = diff.empty() && oracle && bound_ok;
                row.status = row.ok          ? "ok"
                             : !oracle       ? "oracle mismatch"
                             : !bound_ok     ? "memory bound violated"
                                             : diff.to_string();
            } catch (const std::exception& e) {
                row.ok = false;
                row.status = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    bool all_ok = true;
    std::cout << std::left << std::setw(18) << "variant" << std::right << std::setw(6)
              << "n" << std::setw(14) << "mults" << std::setw(14) << "adds"
              << std::setw(12) << "peak" << std::setw(14) << "total_alloc"
              << "  status\n";
    for (const auto& row : rows) {
        std::cout << std::left << std::setw(18) << row.cell.variant << std::right
                  << std::setw(6) << row.cell.n << std::setw(14) << row.measured.mults
                  << std::setw(14) << row.measured.adds << std::setw(12)
                  << row.measured.peak_extra_words << std::setw(14)
                  << row.measured.total_alloc_words << "  " << row.status << "\n";
        all_ok = all_ok && row.ok;
    }
    std::cout << (all_ok ? "all formulas verified" : "MISMATCHES FOUND") << "\n";
    return all_ok ? 0 : 1;
}

// ------------------------------------------------------------------ search

double parse_budget(const std::string& s) {
    if (s.empty()) return 600.0;
    char suffix = s.back();
    double mult = 1.0;
    std::string num = s;
    if (suffix == 's') mult = 1, num = s.substr(0, s.size() - 1);
    else if (suffix == 'm') mult = 60, num = s.substr(0, s.size() - 1);
    else if (suffix == 'h') mult = 3600, num = s.substr(0, s.size() - 1);
    return std::stod(num) * mult;
}

int cmd_search(const std::string& graph_spec, int pebbles,
               const std::string& overwrite, int copy_budget,
               const std::string& time_budget, std::size_t state_cap,
               const std::string& emit_path) {
    pebble::TaskGraph g = pebble::load_graph(graph_spec);
    OverwritePolicy pol = OverwritePolicy::ReadOnly;
    if (overwrite == "A") pol = OverwritePolicy::OverwriteA;
    else if (overwrite == "B") pol = OverwritePolicy::OverwriteB;
    else if (overwrite == "both") pol = OverwritePolicy::OverwriteBoth;
    else if (overwrite != "none") throw std::invalid_argument("bad --overwrite");

    pebble::SearchLimits lim;
    lim.copy_budget = copy_budget;
    lim.time_budget_seconds = parse_budget(time_budget);
    if (state_cap) lim.state_cap = state_cap;

    auto t0 = std::chrono::steady_clock::now();
    pebble::SearchResult r = pebble::search(g, pebbles, pol, lim);
    double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << "states explored: " << r.states << " in " << std::fixed
              << std::setprecision(2) << secs << "s\n";

    if (r.outcome == pebble::Outcome::Exhausted) {
        std::cout << "exhausted: no schedule under these limits\n";
        return 3;
    }
    if (r.outcome == pebble::Outcome::TimedOut) {
        std::cout << "inconclusive: time or state budget exceeded\n";
        return 4;
    }
    std::cout << "trace found: " << r.trace.steps.size() << " steps\n";
    static const char* rule_names[] = {"compute", "free", "move", "alloc", "copy"};
    for (std::size_t i = 0; i < r.trace.steps.size(); ++i) {
        const auto& st = r.trace.steps[i];
        std::cout << "  " << i + 1 << ". rule " << st.rule << " ("
                  << rule_names[st.rule] << ") on " << g.nodes[st.node].id;
        if (st.parent >= 0) std::cout << " from " << g.nodes[st.parent].id;
        if (!st.freed.empty()) {
            std::cout << "; frees";
            for (int v : st.freed) std::cout << ' ' << g.nodes[v].id;
        }
        std::cout << "\n";
    }
    pebble::replay(g, pebbles, pol, r.trace, lim);
    Schedule s = pebble::trace_to_schedule(g, r.trace, pebbles, pol, "emitted", lim);
    ValidationReport v = validate(s);
    std::cout << "emitted schedule: " << s.ins.size() << " instructions, validation "
              << (v.ok() ? "ok" : "FAILED") << "\n";
    if (!emit_path.empty()) {
        std::ofstream f(emit_path);
        f << render_schedule(s);
        std::cout << "schedule written to " << emit_path << "\n";
    }
    return 0;
}

// ------------------------------------------------------------------- bench

int cmd_bench(const CommonOpts& o, const std::vector<std::string>& variants,
              const std::vector<std::size_t>& sizes) {
    Modulus mod(o.modulus);
    if (o.format == "csv")
        std::cout
            << "variant,m,k,n,cutoff,seconds,mults,adds,peak_extra,total_alloc\n";
    for (std::size_t n : sizes) {
        std::optional<Matrix> classic_result;
        for (const auto& v : variants) {
            const bool acc = variant_accumulates(v);
            CostReport rep;
            double seconds = 0;
            bool spot_ok = true;
            try {
                Matrix A(n, n, mod), B(n, n, mod), C(n, n, mod);
                A.fill_random(o.seed);
                B.fill_random(o.seed + 1);
                if (acc) C.fill_random(o.seed + 2);
                const Matrix C0 = C;
                auto t0 = std::chrono::steady_clock::now();
                rep = run_variant(v, A, B, C,
                                  {.alpha = 1, .beta = acc ? Elem(1) : Elem(0),
                                   .cutoff = o.cutoff});
                seconds =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                        .count();
                // spot oracle check: one entry recomputed as a dot product
                Matrix A2(n, n, mod), B2(n, n, mod);
                A2.fill_random(o.seed);
                B2.fill_random(o.seed + 1);
                SplitMix64 pick(n * 977 + 3);
                std::size_t i = pick.next() % n, j = pick.next() % n;
                std::uint64_t dot = 0;
                for (std::size_t l = 0; l < n; ++l)
                    dot = (dot +
                           static_cast<std::uint64_t>(A2.at(i, l)) * B2.at(l, j)) %
                          mod.p();
                if (acc) dot = (dot + C0.at(i, j)) % mod.p();
                spot_ok = C.at(i, j) == dot;
                if (v == "classic") classic_result = C;
                else if (classic_result && !acc) spot_ok &= C == *classic_result;
            } catch (const std::exception& e) {
                std::cerr << v << " n=" << n << ": " << e.what() << "\n";
                return 2;
            }
            if (o.format == "csv") {
                std::cout << rep.variant << ',' << rep.m << ',' << rep.k << ','
                          << rep.n << ',' << rep.cutoff << ',' << std::fixed
                          << std::setprecision(4) << seconds << ',' << rep.mults
                          << ',' << rep.adds << ',' << rep.peak_extra_words << ','
                          << rep.total_alloc_words << "\n";
            } else {
                std::cout << std::left << std::setw(16) << v << " n=" << std::setw(6)
                          << n << std::fixed << std::setprecision(4) << seconds
                          << "s  ops=" << rep.ops()
                          << " peak=" << rep.peak_extra_words
                          << (spot_ok ? "" : "  SPOT-CHECK FAILED") << "\n";
            }
            if (!spot_ok) return 1;
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Memory-lean Strassen-Winograd multiplication toolkit"};
    app.require_subcommand(1);
    CommonOpts o;

    std::string variant = "std2", variants_csv = "std2";
    std::string a_file, b_file, c_file, schedule_file, emit_path;
    std::string graph_spec = "builtin:winograd", overwrite = "none",
                time_budget = "600s";
    std::string sizes_csv = "64,128";
    std::size_t max_n = 64, state_cap = 0;
    int pebbles = 0, copy_budget = 2;

    auto add_common = [&](CLI::App* c, bool dims) {
        c->add_option("--modulus", o.modulus, "prime modulus (default 65521)");
        c->add_option("--seed", o.seed, "PRNG seed (SplitMix64)");
        c->add_option("--cutoff", o.cutoff, "recursion cutoff");
        c->add_option("--format", o.format, "table|csv|json-lines");
        if (dims) {
            c->add_option("--m", o.m);
            c->add_option("--k", o.k);
            c->add_option("--n", o.n);
            c->add_option("--alpha", o.alpha);
            c->add_option("--beta", o.beta);
        }
    };

    auto* mul = app.add_subcommand("multiply", "run one product and verify it");
    add_common(mul, true);
    mul->add_option("--variant", variant, "schedule or driver name");
    mul->add_option("--a-file", a_file, "matrix file for A (.txt or .bin)");
    mul->add_option("--b-file", b_file, "matrix file for B");
    mul->add_option("--c-file", c_file, "matrix file for C");
    mul->add_option("--schedule-file", schedule_file, "run a DSL schedule file");

    auto* ver = app.add_subcommand("verify", "check measured costs against formulas");
    add_common(ver, false);
    ver->add_option("--variants", variants_csv, "comma-separated variant list");
    ver->add_option("--max-n", max_n, "largest size in the sweep");

    auto* sea = app.add_subcommand("search", "pebble-game schedule search");
    sea->add_option("--graph", graph_spec,
                    "builtin:winograd, builtin:winograd-acc, or a graph file");
    sea->add_option("--pebbles", pebbles, "extra temporary pebbles");
    sea->add_option("--overwrite", overwrite, "none|A|B|both");
    sea->add_option("--copy-budget", copy_budget, "rule-4 applications allowed");
    sea->add_option("--time-budget", time_budget, "e.g. 600s, 10m, 24h");
    sea->add_option("--state-cap", state_cap, "max memoized states");
    sea->add_option("--emit", emit_path, "write the found schedule as DSL");

    auto* ben = app.add_subcommand("bench", "wall times and cost reports");
    add_common(ben, false);
    ben->add_option("--variants", variants_csv, "comma-separated variant list");
    ben->add_option("--sizes", sizes_csv, "comma-separated sizes");

    CLI11_PARSE(app, argc, argv);

    auto split_csv = [](const std::string& s) {
        std::vector<std::string> out;
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ','))
            if (!item.empty()) out.push_back(item);
        return out;
    };

    try {
        if (mul->parsed())
            return cmd_multiply(o, variant, a_file, b_file, c_file, schedule_file);
        if (ver->parsed()) return cmd_verify(o, split_csv(variants_csv), max_n);
        if (sea->parsed())
            return cmd_search(graph_spec, pebbles, overwrite, copy_budget,
                              time_budget, state_cap, emit_path);
        if (ben->parsed()) {
            std::vector<std::size_t> sizes;
            for (const auto& s : split_csv(sizes_csv))
                sizes.push_back(std::stoull(s));
            return cmd_bench(o, split_csv(variants_csv), sizes);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
