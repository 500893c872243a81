#ifndef OCETS_PARALLEL_HPP
#define OCETS_PARALLEL_HPP

#include <atomic>
#include <cstddef>
#include <exception>
#include <utility>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ocets {

/// Execution mode for the data-parallel kernels. Every kernel has a plain
/// serial reference next to it; tests compare the two and the bench target
/// times them.
enum class Exec { serial, parallel };

inline int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

/// Fixed slot count for deterministic reductions: work over n items is
/// partitioned into kReduceSlots contiguous ranges, each accumulated in item
/// order, and the per-slot partials are combined in slot order. The result is
/// bitwise independent of the thread count.
inline constexpr std::size_t kReduceSlots = 8;

inline std::pair<std::size_t, std::size_t> slot_range(std::size_t n, std::size_t slot,
                                                      std::size_t slots = kReduceSlots) {
    const std::size_t lo = n * slot / slots;
    const std::size_t hi = n * (slot + 1) / slots;
    return {lo, hi};
}

/// Runs body(slot, begin, end) over the fixed slot partition of [0, n).
template <typename Body>
void for_each_slot(std::size_t n, Exec mode, Body&& body) {
    if (mode == Exec::parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
        for (int s = 0; s < static_cast<int>(kReduceSlots); ++s) {
            auto [lo, hi] = slot_range(n, static_cast<std::size_t>(s));
            if (lo < hi) body(static_cast<std::size_t>(s), lo, hi);
        }
        return;
#endif
    }
    for (std::size_t s = 0; s < kReduceSlots; ++s) {
        auto [lo, hi] = slot_range(n, s);
        if (lo < hi) body(s, lo, hi);
    }
}

/// Plain parallel map: out[i] = f(i), no reduction involved, so the result is
/// identical regardless of mode.
template <typename Body>
void parallel_index(std::size_t n, Exec mode, Body&& body) {
    if (mode == Exec::parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < static_cast<long long>(n); ++i)
            body(static_cast<std::size_t>(i));
        return;
#endif
    }
    for (std::size_t i = 0; i < n; ++i) body(i);
}

/// Exceptions must not unwind out of an OpenMP region; bodies run through
/// this capture and the first error is rethrown after the join.
class ErrorCapture {
public:
    template <typename F>
    void run(F&& f) noexcept {
        try {
            f();
        } catch (...) {
            if (!set_.exchange(true)) ep_ = std::current_exception();
        }
    }
    void rethrow() const {
        if (set_.load() && ep_) std::rethrow_exception(ep_);
    }

private:
    std::exception_ptr ep_;
    std::atomic<bool> set_{false};
};

}  // namespace ocets

#endif
