#pragma once

// Temporary-block providers for schedule execution. Schedules acquire their
// temporaries at entry and release them at exit (LIFO). Heap-backed frames
// are metered; region-backed frames carve scratch out of donor blocks (the
// in-place drivers) or a preallocated chunk and are not counted as extra
// memory.

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "winomem/meter.hpp"
#include "winomem/ring.hpp"

namespace winomem {

struct workspace_error : std::runtime_error {
    explicit workspace_error(const std::string& w) : std::runtime_error(w) {}
};

class Workspace {
  public:
    virtual ~Workspace() = default;
    virtual void push_frame() = 0;
    virtual MatView acquire(std::size_t rows, std::size_t cols, int depth,
                            const char* slot) = 0;
    virtual void pop_frame() = 0;
};

// Owning, metered buffers; the default provider.
class HeapWorkspace : public Workspace {
  public:
    explicit HeapWorkspace(CostMeter* meter) : meter_(meter) {}

    void push_frame() override { frames_.emplace_back(); }

    MatView acquire(std::size_t rows, std::size_t cols, int depth,
                    const char* slot) override {
        if (frames_.empty()) throw workspace_error("acquire outside a frame");
        auto buf = std::make_unique<Elem[]>(rows * cols);
        Elem* p = buf.get();
        frames_.back().push_back({std::move(buf), rows * cols});
        if (meter_) meter_->on_alloc(rows * cols, depth, slot);
        return MatView{p, rows, cols, cols, p};
    }

    void pop_frame() override {
        if (frames_.empty()) throw workspace_error("pop without frame");
        if (meter_)
            for (auto& b : frames_.back()) meter_->on_free(b.words);
        frames_.pop_back();
    }

  private:
    struct Buf {
        std::unique_ptr<Elem[]> mem;
        std::size_t words;
    };
    CostMeter* meter_;
    std::vector<std::vector<Buf>> frames_;
};

// LIFO bump allocation over one contiguous span (a preallocated scratch
// chunk). Not metered; the chunk itself is the accounted allocation.
class BumpWorkspace : public Workspace {
  public:
    BumpWorkspace(Elem* base, std::size_t words) : base_(base), cap_(words) {}

    void push_frame() override { marks_.push_back(used_); }

    MatView acquire(std::size_t rows, std::size_t cols, int, const char*) override {
        if (marks_.empty()) throw workspace_error("acquire outside a frame");
        std::size_t need = rows * cols;
        if (used_ + need > cap_)
            throw workspace_error("scratch chunk exhausted: need " +
                                  std::to_string(need) + " words, free " +
                                  std::to_string(cap_ - used_));
        Elem* p = base_ + used_;
        used_ += need;
        high_water_ = std::max(high_water_, used_);
        return MatView{p, rows, cols, cols, base_};
    }

    void pop_frame() override {
        if (marks_.empty()) throw workspace_error("pop without frame");
        used_ = marks_.back();
        marks_.pop_back();
    }

    std::size_t high_water() const { return high_water_; }

  private:
    Elem* base_;
    std::size_t cap_;
    std::size_t used_ = 0;
    std::size_t high_water_ = 0;
    std::vector<std::size_t> marks_;
};

// Carves temporaries out of a square donor window (a dead input block or an
// output quadrant). Each frame takes up to three half-size quadrants of the
// current free region and descends into the fourth, which packs the whole
// recursion tree into the donor exactly.
class QuadrantWorkspace : public Workspace {
  public:
    explicit QuadrantWorkspace(MatView donor) {
        if (donor.rows != donor.cols)
            throw workspace_error("quadrant workspace donor must be square");
        frames_.push_back({donor, 0});
    }

    void push_frame() override {
        Frame& top = frames_.back();
        MatView region = top.region;
        if (top.used > 0) {
            if (region.rows < 2)
                throw workspace_error("scratch region exhausted");
            region = quad_split(region)[3];
        }
        frames_.push_back({region, 0});
    }

    MatView acquire(std::size_t rows, std::size_t cols, int, const char* slot) override {
        Frame& f = frames_.back();
        if (f.region.rows < 2 || rows > f.region.rows / 2 || cols > f.region.cols / 2)
            throw workspace_error(std::string("temporary ") + slot +
                                  " does not fit the scratch region");
        if (f.used >= 3) throw workspace_error("more than three temporaries in a frame");
        MatView q = quad_split(f.region)[f.used++];
        return q.window(0, 0, rows, cols);
    }

    void pop_frame() override {
        if (frames_.size() <= 1) throw workspace_error("pop without frame");
        frames_.pop_back();
    }

  private:
    struct Frame {
        MatView region;
        int used;
    };
    std::vector<Frame> frames_;
};

}  // namespace winomem
