#pragma once

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace rgate {

/// Error raised for malformed data files, schema violations and
/// incompatible inputs. The CLI maps it to exit code 2.
class DataError : public std::runtime_error {
  public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Error raised when a computation fails at runtime (non-convergence
/// treated as fatal, socket failures, ...). CLI exit code 3.
class RuntimeFailure : public std::runtime_error {
  public:
    explicit RuntimeFailure(const std::string& what) : std::runtime_error(what) {}
};

namespace util {

/// splitmix64 step; used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t& state);

/// Stateless mix of a master seed and a stream index. Deriving per-item
/// seeds this way keeps parallel generation independent of scheduling.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

/// Deterministic random generator (xoroshiro128++ core). Every
/// distribution mapping is spelled out here, so identical seeds give
/// byte-identical streams on any platform. The std <random>
/// distributions are deliberately avoided: their output is
/// implementation-defined.
class Rng {
  public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01();

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi);

    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t uniform_int(std::uint64_t n);

    bool bernoulli(double p);

    /// Standard normal via Box-Muller (deterministic, no caching).
    double gaussian();
    double gaussian(double mean, double stddev);

    /// Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_int(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    /// k distinct indices drawn uniformly from [0, n), in draw order.
    std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k);

  private:
    std::uint64_t s_[2];  // xoroshiro128++ state, seeded via splitmix64
};

/// CRC-32 (IEEE 802.3, reflected, poly 0xEDB88320). crc of "123456789"
/// is 0xCBF43926.
std::uint32_t crc32(std::span<const std::uint8_t> data, std::uint32_t seed = 0);
std::uint32_t crc32(std::string_view data, std::uint32_t seed = 0);

/// CRC-32 of a file's contents. Throws DataError if unreadable.
std::uint32_t crc32_file(const std::string& path);

/// Round-half-up to the nearest integer (0.5 -> 1, 1.5 -> 2).
long round_half_up(double x);

/// Fixed-size pool of worker threads with a bounded task queue.
/// submit() blocks while the queue is full; try_submit() reports
/// saturation instead so callers can shed load.
class ThreadPool {
  public:
    explicit ThreadPool(std::size_t threads, std::size_t queue_capacity = 1024);
    ~ThreadPool();

    ThreadPool(const ThreadPool&) = delete;
    ThreadPool& operator=(const ThreadPool&) = delete;

    void submit(std::function<void()> task);
    bool try_submit(std::function<void()> task);

    /// Blocks until every submitted task has finished.
    void wait_idle();

    std::size_t thread_count() const { return workers_.size(); }

  private:
    void worker_loop();

    std::vector<std::thread> workers_;
    std::deque<std::function<void()>> queue_;
    std::size_t capacity_;
    std::size_t in_flight_ = 0;
    bool stopping_ = false;
    std::mutex mu_;
    std::condition_variable cv_task_;
    std::condition_variable cv_space_;
    std::condition_variable cv_idle_;
};

/// Runs fn(i) for i in [0, n) on up to `threads` threads. Blocks until
/// done. Exceptions from fn propagate (first one wins).
void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)>& fn);

/// ISO-8601 UTC timestamp of now, e.g. "2025-03-14T09:26:53Z".
std::string iso8601_now();

}  // namespace util
}  // namespace rgate
