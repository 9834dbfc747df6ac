#pragma once

// Exact arithmetic mod a prime p, dense row-major matrices, rectangular
// window views over shared buffers, elementwise block operations, and the
// classical multiplication kernel that serves as the correctness oracle.

#include <array>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "winomem/meter.hpp"

namespace winomem {

using Elem = std::uint32_t;

struct dimension_error : std::runtime_error {
    explicit dimension_error(const std::string& w) : std::runtime_error(w) {}
};
struct odd_dimension_error : dimension_error {
    explicit odd_dimension_error(const std::string& w) : dimension_error(w) {}
};
struct partial_overlap_error : std::runtime_error {
    explicit partial_overlap_error(const std::string& w) : std::runtime_error(w) {}
};
struct alias_error : std::runtime_error {
    explicit alias_error(const std::string& w) : std::runtime_error(w) {}
};
struct shape_error : std::runtime_error {
    explicit shape_error(const std::string& w) : std::runtime_error(w) {}
};
struct contract_error : std::runtime_error {
    explicit contract_error(const std::string& w) : std::runtime_error(w) {}
};
struct io_error : std::runtime_error {
    explicit io_error(const std::string& w) : std::runtime_error(w) {}
};

// Residues are canonical: 0 <= r < p. p prime, 2 < p < 2^31, so products of
// two residues fit in 64-bit intermediates.
class Modulus {
  public:
    explicit Modulus(std::uint32_t p) : p_(p) {
        if (p <= 2 || p >= (1u << 31) || !is_prime(p))
            throw dimension_error("modulus must be an odd prime in (2, 2^31): " +
                                  std::to_string(p));
    }

    std::uint32_t p() const { return p_; }

    Elem reduce_u64(std::uint64_t x) const { return static_cast<Elem>(x % p_); }
    Elem reduce_i64(std::int64_t x) const {
        std::int64_t r = x % static_cast<std::int64_t>(p_);
        if (r < 0) r += p_;
        return static_cast<Elem>(r);
    }
    Elem add(Elem a, Elem b) const {
        std::uint32_t s = a + b;
        return s >= p_ ? s - p_ : s;
    }
    Elem sub(Elem a, Elem b) const { return a >= b ? a - b : a + p_ - b; }
    Elem neg(Elem a) const { return a ? p_ - a : 0; }
    Elem mul(Elem a, Elem b) const {
        return static_cast<Elem>(static_cast<std::uint64_t>(a) * b % p_);
    }
    Elem minus_one() const { return p_ - 1; }

    bool operator==(const Modulus& o) const { return p_ == o.p_; }

    static bool is_prime(std::uint32_t n) {
        if (n < 2) return false;
        if (n % 2 == 0) return n == 2;
        for (std::uint64_t d = 3; d * d <= n; d += 2)
            if (n % d == 0) return false;
        return true;
    }

  private:
    std::uint32_t p_;
};

// Largest prime below 2^16; allows lazy 64-bit accumulation in dot products.
inline constexpr std::uint32_t kDefaultModulus = 65521;

// Fixed, platform-independent 64-bit generator used everywhere randomness is
// needed so that runs are reproducible from a seed.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

  private:
    std::uint64_t state_;
};

inline std::uint64_t fnv1a64(const Elem* data, std::size_t count) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < count; ++i) {
        h ^= data[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

class Matrix;

// A rectangular window into a shared row-major buffer. All block operations
// take views; a Matrix's full extent is just another view. `origin` is the
// start of the owning buffer and identifies which top-level region (A, B, C
// or a temporary) an element belongs to.
struct MatView {
    Elem* ptr = nullptr;          // address of window element (0,0)
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t stride = 0;       // distance between consecutive window rows
    const Elem* origin = nullptr; // owning buffer start

    Elem& at(std::size_t i, std::size_t j) const { return ptr[i * stride + j]; }

    bool empty() const { return rows == 0 || cols == 0; }
    std::size_t words() const { return rows * cols; }

    MatView window(std::size_t r0, std::size_t c0, std::size_t r, std::size_t c) const {
        if (r0 + r > rows || c0 + c > cols)
            throw dimension_error("window exceeds view bounds");
        return MatView{ptr + r0 * stride + c0, r, c, stride, origin};
    }

    bool same_window(const MatView& o) const {
        return ptr == o.ptr && rows == o.rows && cols == o.cols && stride == o.stride;
    }

    std::size_t first_word() const { return static_cast<std::size_t>(ptr - origin); }
    std::size_t last_word() const {
        return first_word() + (rows - 1) * stride + cols - 1;
    }

    // Exact index-set intersection test for views over the same buffer with
    // equal strides; conservative word-span test otherwise (distinct strides
    // only arise for provably disjoint bump-allocated temporaries).
    bool overlaps(const MatView& o) const {
        if (empty() || o.empty()) return false;
        if (origin != o.origin) return false;
        if (stride == o.stride) {
            std::int64_t s = static_cast<std::int64_t>(stride);
            std::int64_t delta = static_cast<std::int64_t>(o.ptr - ptr);
            // Segments i of *this and j of o overlap iff
            // (i - j) * s lies in (delta - cols, delta + o.cols).
            std::int64_t lo = delta - static_cast<std::int64_t>(cols);
            std::int64_t hi = delta + static_cast<std::int64_t>(o.cols);
            std::int64_t kmin = lo / s - 2, kmax = hi / s + 2;
            for (std::int64_t kk = kmin; kk <= kmax; ++kk) {
                if (kk * s > lo && kk * s < hi) {
                    // need i in [0, rows), j in [0, o.rows) with i - j == kk
                    if (kk > -static_cast<std::int64_t>(o.rows) &&
                        kk < static_cast<std::int64_t>(rows))
                        return true;
                }
            }
            return false;
        }
        return first_word() <= o.last_word() && o.first_word() <= last_word();
    }

    bool disjoint(const MatView& o) const { return !overlaps(o); }
};

// Dense row-major matrix of canonical residues.
class Matrix {
  public:
    Matrix(std::size_t rows, std::size_t cols, Modulus mod)
        : rows_(rows), cols_(cols), mod_(mod), data_(rows * cols, 0) {
        if (rows == 0 || cols == 0)
            throw dimension_error("matrix dimensions must be positive");
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    const Modulus& mod() const { return mod_; }
    Elem* data() { return data_.data(); }
    const Elem* data() const { return data_.data(); }
    std::size_t size() const { return data_.size(); }

    Elem& at(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    Elem at(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    MatView view() {
        return MatView{data_.data(), rows_, cols_, cols_, data_.data()};
    }

    void fill_random(std::uint64_t seed) {
        SplitMix64 g(seed);
        for (auto& x : data_) x = static_cast<Elem>(g.next() % mod_.p());
    }
    void fill_zero() { std::fill(data_.begin(), data_.end(), 0); }

    std::uint64_t hash() const { return fnv1a64(data_.data(), data_.size()); }

    bool operator==(const Matrix& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && mod_ == o.mod_ &&
               data_ == o.data_;
    }

  private:
    std::size_t rows_, cols_;
    Modulus mod_;
    std::vector<Elem> data_;
};

// The four half-size windows tiling an even-dimensioned view. No data moves.
inline std::array<MatView, 4> quad_split(const MatView& v) {
    if (v.rows % 2 != 0 || v.cols % 2 != 0)
        throw odd_dimension_error("quad_split requires even dimensions");
    std::size_t r = v.rows / 2, c = v.cols / 2;
    return {v.window(0, 0, r, c), v.window(0, c, r, c), v.window(r, 0, r, c),
            v.window(r, c, r, c)};
}

namespace detail {
// Scalars of magnitude one cost nothing (signs fold into the additions);
// zero elides the term entirely.
inline bool trivial_scalar(Elem s, const Modulus& mod) {
    return s == 0 || s == 1 || s == mod.minus_one();
}
}  // namespace detail

// dst <- sa*a + sb*b (mod p). dst may alias a or b exactly (same window) but
// must not partially overlap either. Counts r*c additions plus r*c
// multiplications per scalar whose magnitude is not 1.
inline void block_addsub(MatView dst, MatView a, MatView b, Elem sa, Elem sb,
                         const Modulus& mod, CostMeter* meter = nullptr) {
    if (a.rows != b.rows || a.cols != b.cols || dst.rows != a.rows ||
        dst.cols != a.cols)
        throw dimension_error("block_addsub dimension mismatch");
    if (!dst.same_window(a) && dst.overlaps(a))
        throw partial_overlap_error("block_addsub: dst partially overlaps a");
    if (!dst.same_window(b) && dst.overlaps(b))
        throw partial_overlap_error("block_addsub: dst partially overlaps b");

    const std::uint32_t p = mod.p();
    const std::uint64_t rc = dst.words();
    if (sa == 1 && sb == 1) {
        for (std::size_t i = 0; i < dst.rows; ++i)
            for (std::size_t j = 0; j < dst.cols; ++j) {
                std::uint32_t s = a.at(i, j) + b.at(i, j);
                dst.at(i, j) = s >= p ? s - p : s;
            }
    } else if (sa == 1 && sb == mod.minus_one()) {
        for (std::size_t i = 0; i < dst.rows; ++i)
            for (std::size_t j = 0; j < dst.cols; ++j) {
                std::uint32_t av = a.at(i, j), bv = b.at(i, j);
                dst.at(i, j) = av >= bv ? av - bv : av + p - bv;
            }
    } else {
        for (std::size_t i = 0; i < dst.rows; ++i)
            for (std::size_t j = 0; j < dst.cols; ++j) {
                std::uint64_t v = static_cast<std::uint64_t>(sa) * a.at(i, j) +
                                  static_cast<std::uint64_t>(sb) * b.at(i, j);
                dst.at(i, j) = static_cast<Elem>(v % p);
            }
    }
    if (meter) {
        meter->count_adds(rc);
        if (!detail::trivial_scalar(sa, mod)) meter->count_mults(rc);
        if (!detail::trivial_scalar(sb, mod)) meter->count_mults(rc);
    }
}

// dst <- s*src. With s == 1 this is a pure copy and counts as word moves,
// not arithmetic; with s == -1 a negation (free); otherwise r*c mults.
inline void block_scale_copy(MatView dst, MatView src, Elem s, const Modulus& mod,
                             CostMeter* meter = nullptr) {
    if (dst.rows != src.rows || dst.cols != src.cols)
        throw dimension_error("block_scale_copy dimension mismatch");
    if (!dst.same_window(src) && dst.overlaps(src))
        throw partial_overlap_error("block_scale_copy: dst partially overlaps src");
    const std::uint32_t p = mod.p();
    if (s == 1) {
        if (!dst.same_window(src))
            for (std::size_t i = 0; i < dst.rows; ++i)
                for (std::size_t j = 0; j < dst.cols; ++j) dst.at(i, j) = src.at(i, j);
        if (meter) meter->count_moves(dst.words());
        return;
    }
    if (s == mod.minus_one()) {
        for (std::size_t i = 0; i < dst.rows; ++i)
            for (std::size_t j = 0; j < dst.cols; ++j) {
                Elem v = src.at(i, j);
                dst.at(i, j) = v ? p - v : 0;
            }
        if (meter) meter->count_moves(dst.words());
        return;
    }
    for (std::size_t i = 0; i < dst.rows; ++i)
        for (std::size_t j = 0; j < dst.cols; ++j)
            dst.at(i, j) = static_cast<Elem>(static_cast<std::uint64_t>(s) *
                                             src.at(i, j) % p);
    if (meter) meter->count_mults(dst.words());
}

// C <- alpha*A*B + beta*C, exact mod p, with C disjoint from A and B and no
// extra allocation. Counts m*k*n mults and m*n*(k-1) adds, plus m*n adds when
// beta != 0 and m*n mults per non-unit-magnitude scalar.
inline void classical_mul(MatView C, MatView A, MatView B, Elem alpha, Elem beta,
                          const Modulus& mod, CostMeter* meter = nullptr) {
    const std::size_t m = A.rows, k = A.cols, n = B.cols;
    if (B.rows != k || C.rows != m || C.cols != n)
        throw dimension_error("classical_mul dimension mismatch");
    if (C.overlaps(A) || C.overlaps(B))
        throw alias_error("classical_mul: C must be disjoint from A and B");

    const std::uint32_t p = mod.p();
    const bool negate = alpha == mod.minus_one();
    const bool scale = !detail::trivial_scalar(alpha, mod) && alpha != 0;

    if (p < (1u << 16)) {
        // Lazy accumulation: residues < 2^16, products < 2^32, so up to 2^32
        // terms fit in a 64-bit accumulator. Fixed-size column tiles keep B
        // accesses row-contiguous without heap scratch.
        constexpr std::size_t kTile = 64;
        std::uint64_t acc[kTile];
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j0 = 0; j0 < n; j0 += kTile) {
                const std::size_t w = std::min(kTile, n - j0);
                for (std::size_t t = 0; t < w; ++t) acc[t] = 0;
                for (std::size_t l = 0; l < k; ++l) {
                    const std::uint64_t av = A.at(i, l);
                    if (!av) continue;
                    const Elem* brow = &B.at(l, j0);
                    for (std::size_t t = 0; t < w; ++t)
                        acc[t] += av * brow[t];
                }
                for (std::size_t t = 0; t < w; ++t) {
                    std::uint64_t dot = acc[t] % p;
                    if (alpha == 0) dot = 0;
                    else if (scale) dot = dot * alpha % p;
                    if (negate) dot = dot ? p - dot : 0;
                    Elem& c = C.at(i, j0 + t);
                    if (beta == 0)
                        c = static_cast<Elem>(dot);
                    else
                        c = static_cast<Elem>(
                            (static_cast<std::uint64_t>(beta) * c + dot) % p);
                }
            }
        }
    } else {
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                std::uint64_t dot = 0;
                for (std::size_t l = 0; l < k; ++l)
                    dot = (dot + static_cast<std::uint64_t>(A.at(i, l)) * B.at(l, j)) % p;
                if (alpha == 0) dot = 0;
                else if (scale) dot = dot * alpha % p;
                if (negate) dot = dot ? p - dot : 0;
                if (beta == 0)
                    C.at(i, j) = static_cast<Elem>(dot);
                else
                    C.at(i, j) = static_cast<Elem>(
                        (static_cast<std::uint64_t>(beta) * C.at(i, j) + dot) % p);
            }
    }

    if (meter) {
        meter->on_classical();
        meter->count_mults(static_cast<std::uint64_t>(m) * k * n);
        meter->count_adds(static_cast<std::uint64_t>(m) * n * (k - 1));
        if (beta != 0) meter->count_adds(static_cast<std::uint64_t>(m) * n);
        if (scale) meter->count_mults(static_cast<std::uint64_t>(m) * n);
        if (!detail::trivial_scalar(beta, mod) && beta != 0)
            meter->count_mults(static_cast<std::uint64_t>(m) * n);
    }
}

// --- matrix file formats ----------------------------------------------------
// Text: first line "rows cols p", then rows*cols residues row-major.
// Binary: three little-endian u64 (rows, cols, p) then u64 residues.

inline void write_text(const Matrix& a, std::ostream& os) {
    os << a.rows() << ' ' << a.cols() << ' ' << a.mod().p() << '\n';
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            if (j) os << ' ';
            os << a.at(i, j);
        }
        os << '\n';
    }
}

inline Matrix read_text(std::istream& is) {
    std::uint64_t r, c, p;
    if (!(is >> r >> c >> p)) throw io_error("bad matrix text header");
    Matrix a(r, c, Modulus(static_cast<std::uint32_t>(p)));
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) {
            std::uint64_t v;
            if (!(is >> v)) throw io_error("matrix text truncated");
            if (v >= p) throw io_error("matrix entry not a canonical residue");
            a.at(i, j) = static_cast<Elem>(v);
        }
    return a;
}

namespace detail {
inline void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}
inline std::uint64_t get_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw io_error("matrix binary truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}
}  // namespace detail

inline void write_binary(const Matrix& a, std::ostream& os) {
    detail::put_u64(os, a.rows());
    detail::put_u64(os, a.cols());
    detail::put_u64(os, a.mod().p());
    for (std::size_t i = 0; i < a.size(); ++i) detail::put_u64(os, a.data()[i]);
}

inline Matrix read_binary(std::istream& is) {
    std::uint64_t r = detail::get_u64(is);
    std::uint64_t c = detail::get_u64(is);
    std::uint64_t p = detail::get_u64(is);
    Matrix a(r, c, Modulus(static_cast<std::uint32_t>(p)));
    for (std::size_t i = 0; i < a.size(); ++i) {
        std::uint64_t v = detail::get_u64(is);
        if (v >= p) throw io_error("matrix entry not a canonical residue");
        a.data()[i] = static_cast<Elem>(v);
    }
    return a;
}

}  // namespace winomem
