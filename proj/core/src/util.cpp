#include "rgate/util.hpp"

#include <array>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>

namespace rgate::util {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t s = master ^ (0x6a09e667f3bcc909ULL + stream * 0x9e3779b97f4a7c15ULL);
    return splitmix64(s);
}

Rng::Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    s_[0] = splitmix64(sm);
    s_[1] = splitmix64(sm);
}

std::uint64_t Rng::next_u64() {
    auto rotl = [](std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); };
    const std::uint64_t s0 = s_[0];
    std::uint64_t s1 = s_[1];
    const std::uint64_t result = rotl(s0 + s1, 17) + s0;
    s1 ^= s0;
    s_[0] = rotl(s0, 49) ^ s1 ^ (s1 << 21);
    s_[1] = rotl(s1, 28);
    return result;
}

double Rng::uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform01();
}

std::uint64_t Rng::uniform_int(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::uniform_int: n must be > 0");
    // Rejection sampling on the top multiple of n; unbiased.
    const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return x % n;
}

bool Rng::bernoulli(double p) {
    return uniform01() < p;
}

double Rng::gaussian() {
    // Box-Muller; u1 shifted away from 0 so log() stays finite.
    double u1 = uniform01();
    double u2 = uniform01();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    constexpr double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

double Rng::gaussian(double mean, double stddev) {
    return mean + stddev * gaussian();
}

std::vector<std::size_t> Rng::sample_indices(std::size_t n, std::size_t k) {
    if (k > n) throw std::invalid_argument("Rng::sample_indices: k > n");
    // Partial Fisher-Yates over an index vector.
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::vector<std::size_t> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t j = i + static_cast<std::size_t>(uniform_int(n - i));
        std::swap(idx[i], idx[j]);
        out.push_back(idx[i]);
    }
    return out;
}

namespace {

std::array<std::uint32_t, 256> make_crc_table() {
    std::array<std::uint32_t, 256> table{};
    for (std::uint32_t i = 0; i < 256; ++i) {
        std::uint32_t c = i;
        for (int b = 0; b < 8; ++b) {
            c = (c & 1) ? (0xEDB88320u ^ (c >> 1)) : (c >> 1);
        }
        table[i] = c;
    }
    return table;
}

const std::array<std::uint32_t, 256>& crc_table() {
    static const auto table = make_crc_table();
    return table;
}

}  // namespace

std::uint32_t crc32(std::span<const std::uint8_t> data, std::uint32_t seed) {
    const auto& table = crc_table();
    std::uint32_t c = seed ^ 0xFFFFFFFFu;
    for (std::uint8_t byte : data) {
        c = table[(c ^ byte) & 0xFFu] ^ (c >> 8);
    }
    return c ^ 0xFFFFFFFFu;
}

std::uint32_t crc32(std::string_view data, std::uint32_t seed) {
    return crc32(std::span<const std::uint8_t>(
                     reinterpret_cast<const std::uint8_t*>(data.data()), data.size()),
                 seed);
}

std::uint32_t crc32_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file for hashing: " + path);
    std::uint32_t crc = 0;
    std::array<char, 65536> buf;
    // Incremental update: crc32(seed) restarts the running value.
    const auto& table = crc_table();
    std::uint32_t c = 0xFFFFFFFFu;
    while (in.read(buf.data(), static_cast<std::streamsize>(buf.size())) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            c = table[(c ^ static_cast<std::uint8_t>(buf[static_cast<std::size_t>(i)])) & 0xFFu] ^
                (c >> 8);
        }
    }
    crc = c ^ 0xFFFFFFFFu;
    return crc;
}

long round_half_up(double x) {
    return static_cast<long>(std::floor(x + 0.5));
}

ThreadPool::ThreadPool(std::size_t threads, std::size_t queue_capacity)
    : capacity_(queue_capacity == 0 ? 1 : queue_capacity) {
    if (threads == 0) threads = 1;
    workers_.reserve(threads);
    for (std::size_t i = 0; i < threads; ++i) {
        workers_.emplace_back([this] { worker_loop(); });
    }
}

ThreadPool::~ThreadPool() {
    {
        std::lock_guard lock(mu_);
        stopping_ = true;
    }
    cv_task_.notify_all();
    for (auto& t : workers_) t.join();
}

void ThreadPool::worker_loop() {
    for (;;) {
        std::function<void()> task;
        {
            std::unique_lock lock(mu_);
            cv_task_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
            if (queue_.empty()) {
                if (stopping_) return;
                continue;
            }
            task = std::move(queue_.front());
            queue_.pop_front();
            ++in_flight_;
            cv_space_.notify_one();
        }
        task();
        {
            std::lock_guard lock(mu_);
            --in_flight_;
            if (queue_.empty() && in_flight_ == 0) cv_idle_.notify_all();
        }
    }
}

void ThreadPool::submit(std::function<void()> task) {
    std::unique_lock lock(mu_);
    cv_space_.wait(lock, [this] { return queue_.size() < capacity_; });
    queue_.push_back(std::move(task));
    cv_task_.notify_one();
}

bool ThreadPool::try_submit(std::function<void()> task) {
    {
        std::lock_guard lock(mu_);
        if (queue_.size() >= capacity_) return false;
        queue_.push_back(std::move(task));
    }
    cv_task_.notify_one();
    return true;
}

void ThreadPool::wait_idle() {
    std::unique_lock lock(mu_);
    cv_idle_.wait(lock, [this] { return queue_.empty() && in_flight_ == 0; });
}

void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    if (threads <= 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    threads = std::min(threads, n);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex err_mu;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= n || failed.load()) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(err_mu);
                    if (!first_error) first_error = std::current_exception();
                    failed.store(true);
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

std::string iso8601_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
    return buf;
}

}  // namespace rgate::util
