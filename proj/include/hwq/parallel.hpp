#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace hwq {

constexpr std::uint64_t kBlockSize = 4096;

inline std::size_t block_count(std::uint64_t reps) {
    return static_cast<std::size_t>((reps + kBlockSize - 1) / kBlockSize);
}

// Runs fn(rep_begin, rep_end, block_index) over fixed-size blocks of the
// replication range. Blocks are claimed by an atomic counter, so any worker
// count covers the same block decomposition; callers accumulate into
// per-block state and reduce in block-index order, which makes results
// bitwise independent of the number of workers.
inline void run_blocks(std::uint64_t reps, int workers,
                       const std::function<void(std::uint64_t, std::uint64_t, std::size_t)>& fn) {
    std::size_t nblocks = block_count(reps);
    if (workers < 1) workers = 1;
    if (workers == 1 || nblocks <= 1) {
        for (std::size_t b = 0; b < nblocks; ++b) {
            std::uint64_t lo = b * kBlockSize;
            std::uint64_t hi = std::min(reps, lo + kBlockSize);
            fn(lo, hi, b);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            std::size_t b = next.fetch_add(1);
            if (b >= nblocks) return;
            std::uint64_t lo = b * kBlockSize;
            std::uint64_t hi = std::min(reps, lo + kBlockSize);
            fn(lo, hi, b);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

} // namespace hwq
