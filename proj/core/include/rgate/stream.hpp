#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rgate/network.hpp"

namespace rgate::wire {

/// One IED transmission: a batch of keyed readings.
struct MeasurementPacket {
    std::uint16_t ied_id = 0;
    std::uint32_t sequence = 0;
    std::uint64_t timestamp_us = 0;
    struct Reading {
        std::uint16_t key_id = 0;
        double value = 0.0;
        bool operator==(const Reading&) const = default;
    };
    std::vector<Reading> readings;

    bool operator==(const MeasurementPacket&) const = default;
};

/// Frame layout (big-endian): magic "RGM1", ied_id u16, sequence u32,
/// timestamp_us u64, count u16, count * (key_id u16, value f64), then
/// CRC-32 (u32) over all preceding bytes.
std::vector<std::uint8_t> encode_packet(const MeasurementPacket& packet);

/// Decodes and verifies a frame. plan_size bounds valid key ids.
/// Throws DataError on bad magic, truncation, CRC mismatch or unknown
/// key id.
MeasurementPacket decode_packet(const std::vector<std::uint8_t>& bytes, std::size_t plan_size);

constexpr std::size_t kPacketHeaderBytes = 4 + 2 + 4 + 8 + 2;
constexpr std::size_t kPacketRecordBytes = 2 + 8;
constexpr std::size_t kPacketCrcBytes = 4;

/// Latest-value table keyed by measurement-plan index. A single writer
/// applies packets; snapshots copy the current state.
class SnapshotTable {
  public:
    explicit SnapshotTable(std::size_t plan_size, std::int64_t staleness_horizon_us = 3'000'000);

    /// Latest-timestamp-wins per key; readings older than the stored
    /// timestamp are ignored and counted.
    void update(const MeasurementPacket& packet);

    struct TakeResult {
        bool complete = false;
        net::MeasurementSnapshot snapshot;          // filled when complete
        std::vector<std::uint16_t> missing_keys;    // absent or stale
    };
    /// Plan-ordered snapshot over `keys`; incomplete when any key has
    /// no value newer than now_us - horizon.
    TakeResult take_snapshot(const std::vector<std::uint16_t>& keys, std::uint64_t now_us) const;

    std::uint64_t stale_updates() const { return stale_updates_; }
    std::uint64_t packets_applied() const { return packets_applied_; }
    /// Keys whose value changed since the counter was last cleared
    /// (drives the snapshot-on-change cadence).
    std::size_t changed_keys() const { return changed_keys_; }
    void reset_changed_keys() { changed_keys_ = 0; }
    std::int64_t staleness_horizon_us() const { return horizon_us_; }

  private:
    struct Entry {
        double value = 0.0;
        std::uint64_t timestamp_us = 0;
        bool has = false;
    };
    std::vector<Entry> entries_;
    std::int64_t horizon_us_;
    std::uint64_t stale_updates_ = 0;
    std::uint64_t packets_applied_ = 0;
    std::size_t changed_keys_ = 0;
};

/// IED transmission cadence. Normal operation is one packet per
/// normal_interval; after an event the interval starts at
/// initial_fast_interval and doubles until it reaches the normal rate
/// (1, 2, 4, ..., 512 ms for the defaults: ~10 packets in the first
/// second).
struct TransmissionSchedule {
    enum class Mode { normal, event };
    Mode mode = Mode::normal;
    std::uint64_t normal_interval_us = 1'000'000;
    std::uint64_t initial_fast_interval_us = 1'000;

    /// Send offsets within one cycle, starting at 0. Normal mode: {0}.
    /// Event mode: 0, 1 ms, 3 ms, 7 ms, ..., until the next doubling
    /// would meet or exceed the normal interval.
    std::vector<std::uint64_t> cycle_offsets_us() const;
};

struct ReplayStats {
    std::uint64_t packets_offered = 0;
    std::uint64_t packets_sent = 0;
    std::uint64_t packets_dropped = 0;  // sink refused (backpressure)
    std::uint64_t simulated_duration_us = 0;
    double wall_seconds = 0.0;
    double offered_rate_per_s = 0.0;   // over simulated time
    double achieved_rate_per_s = 0.0;  // sent over wall time
};

struct ReplayOptions {
    TransmissionSchedule schedule;
    /// Simulated microseconds that pass per wall microsecond; 0 pumps
    /// packets as fast as possible (no sleeping).
    double time_scale = 0.0;
    /// Repeat count for the source rows (1 = play once).
    int repeats = 1;
};

/// Sink for encoded datagrams; return false to signal backpressure
/// (the packet is counted as dropped).
using PacketSink = std::function<bool(const std::vector<std::uint8_t>&)>;

/// Plays dataset snapshots as per-IED packet streams under the
/// schedule. Row r of the source is what every IED reports during
/// simulated second r; event-mode IEDs retransmit the current row at
/// the fast cadence. Keys are partitioned by owning IED from the plan.
ReplayStats replay(const net::NetworkModel& net,
                   const std::vector<net::MeasurementSnapshot>& source,
                   const ReplayOptions& options, const PacketSink& sink);

/// Minimal UDP pair for loopback replay (one packet per datagram).
class UdpSender {
  public:
    UdpSender(const std::string& host, int port);
    ~UdpSender();
    UdpSender(const UdpSender&) = delete;
    UdpSender& operator=(const UdpSender&) = delete;
    bool send(const std::vector<std::uint8_t>& datagram);

  private:
    int fd_ = -1;
};

class UdpReceiver {
  public:
    explicit UdpReceiver(int port);  // 0 picks a free port
    ~UdpReceiver();
    UdpReceiver(const UdpReceiver&) = delete;
    UdpReceiver& operator=(const UdpReceiver&) = delete;
    int port() const { return port_; }
    /// Blocks up to timeout_ms; nullopt on timeout.
    std::optional<std::vector<std::uint8_t>> receive(int timeout_ms);

  private:
    int fd_ = -1;
    int port_ = 0;
};

}  // namespace rgate::wire
