#pragma once

// Cost instrumentation: scalar-operation counters, live/peak/total words of
// temporary allocations, and the CostReport record they roll up into.

#include <algorithm>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace winomem {

struct AllocEvent {
    std::uint64_t words = 0;
    int depth = 0;
    std::string slot;
};

// One meter per execution context. Inputs and outputs are never counted;
// only temporary-slot allocations are. peak_extra_words is the high-water
// mark of live_extra_words.
class CostMeter {
  public:
    std::uint64_t mults = 0;
    std::uint64_t adds = 0;
    std::uint64_t word_moves = 0;
    std::uint64_t live_extra_words = 0;
    std::uint64_t peak_extra_words = 0;
    std::uint64_t total_alloc_words = 0;
    std::uint64_t classical_calls = 0;
    std::vector<AllocEvent> alloc_log;
    std::map<std::string, std::uint64_t> schedule_calls;

    void count_mults(std::uint64_t n) { mults += n; }
    void count_adds(std::uint64_t n) { adds += n; }
    void count_moves(std::uint64_t n) { word_moves += n; }

    void on_alloc(std::uint64_t words, int depth, const std::string& slot) {
        live_extra_words += words;
        peak_extra_words = std::max(peak_extra_words, live_extra_words);
        total_alloc_words += words;
        alloc_log.push_back({words, depth, slot});
    }
    void on_free(std::uint64_t words) { live_extra_words -= words; }

    void on_classical() { ++classical_calls; }
    void on_schedule(const std::string& name) { ++schedule_calls[name]; }
};

// Measured or predicted costs of one multiplication run.
struct CostReport {
    std::string variant;
    std::size_t m = 0, k = 0, n = 0;
    int cutoff = 1;
    std::uint64_t mults = 0;
    std::uint64_t adds = 0;
    std::uint64_t peak_extra_words = 0;
    std::uint64_t total_alloc_words = 0;
    std::uint64_t word_moves = 0;

    std::uint64_t ops() const { return mults + adds; }

    static const char* csv_header() {
        return "variant,m,k,n,cutoff,mults,adds,peak_extra,total_alloc";
    }
    std::string csv_row() const {
        std::ostringstream os;
        os << variant << ',' << m << ',' << k << ',' << n << ',' << cutoff << ','
           << mults << ',' << adds << ',' << peak_extra_words << ','
           << total_alloc_words;
        return os.str();
    }
};

struct DiffReport {
    std::vector<std::string> diffs;
    bool empty() const { return diffs.empty(); }
    std::string to_string() const {
        std::string s;
        for (const auto& d : diffs) {
            if (!s.empty()) s += "; ";
            s += d;
        }
        return s;
    }
};

// Field-by-field exact comparison of two reports with matching variant/dims.
inline DiffReport compare(const CostReport& measured, const CostReport& expected) {
    DiffReport r;
    auto chk = [&](const char* field, std::uint64_t a, std::uint64_t b) {
        if (a != b) {
            std::ostringstream os;
            os << field << ": measured=" << a << " expected=" << b;
            r.diffs.push_back(os.str());
        }
    };
    chk("mults", measured.mults, expected.mults);
    chk("adds", measured.adds, expected.adds);
    chk("peak_extra_words", measured.peak_extra_words, expected.peak_extra_words);
    chk("total_alloc_words", measured.total_alloc_words, expected.total_alloc_words);
    return r;
}

}  // namespace winomem
