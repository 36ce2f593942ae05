#include "rgate/stream.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <bit>
#include <cstring>

#include "rgate/util.hpp"

namespace rgate::wire {

namespace {

constexpr std::uint8_t kMagic[4] = {'R', 'G', 'M', '1'};

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8)
        out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8)
        out.push_back(static_cast<std::uint8_t>(v >> shift));
}

std::uint16_t get_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>((std::uint16_t{p[0]} << 8) | p[1]);
}

std::uint32_t get_u32(const std::uint8_t* p) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | p[i];
    return v;
}

std::uint64_t get_u64(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | p[i];
    return v;
}

}  // namespace

std::vector<std::uint8_t> encode_packet(const MeasurementPacket& packet) {
    if (packet.readings.size() > 0xFFFF)
        throw DataError("packet carries more than 65535 readings");
    std::vector<std::uint8_t> out;
    out.reserve(kPacketHeaderBytes + packet.readings.size() * kPacketRecordBytes +
                kPacketCrcBytes);
    for (std::uint8_t b : kMagic) out.push_back(b);
    put_u16(out, packet.ied_id);
    put_u32(out, packet.sequence);
    put_u64(out, packet.timestamp_us);
    put_u16(out, static_cast<std::uint16_t>(packet.readings.size()));
    for (const auto& reading : packet.readings) {
        put_u16(out, reading.key_id);
        put_u64(out, std::bit_cast<std::uint64_t>(reading.value));
    }
    put_u32(out, util::crc32(std::span<const std::uint8_t>(out.data(), out.size())));
    return out;
}

MeasurementPacket decode_packet(const std::vector<std::uint8_t>& bytes, std::size_t plan_size) {
    if (bytes.size() < kPacketHeaderBytes + kPacketCrcBytes)
        throw DataError("packet truncated: " + std::to_string(bytes.size()) + " bytes");
    if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
        throw DataError("packet has bad magic");

    const std::size_t count = get_u16(bytes.data() + 18);
    const std::size_t expected = kPacketHeaderBytes + count * kPacketRecordBytes + kPacketCrcBytes;
    if (bytes.size() != expected)
        throw DataError("packet truncated: expected " + std::to_string(expected) + " bytes, got " +
                        std::to_string(bytes.size()));

    const std::uint32_t stored_crc = get_u32(bytes.data() + bytes.size() - kPacketCrcBytes);
    const std::uint32_t actual_crc = util::crc32(
        std::span<const std::uint8_t>(bytes.data(), bytes.size() - kPacketCrcBytes));
    if (stored_crc != actual_crc) throw DataError("packet CRC mismatch");

    MeasurementPacket packet;
    packet.ied_id = get_u16(bytes.data() + 4);
    packet.sequence = get_u32(bytes.data() + 6);
    packet.timestamp_us = get_u64(bytes.data() + 10);
    packet.readings.reserve(count);
    const std::uint8_t* p = bytes.data() + kPacketHeaderBytes;
    for (std::size_t i = 0; i < count; ++i, p += kPacketRecordBytes) {
        MeasurementPacket::Reading reading;
        reading.key_id = get_u16(p);
        if (reading.key_id >= plan_size)
            throw DataError("packet carries unknown key id " + std::to_string(reading.key_id));
        reading.value = std::bit_cast<double>(get_u64(p + 2));
        packet.readings.push_back(reading);
    }
    return packet;
}

SnapshotTable::SnapshotTable(std::size_t plan_size, std::int64_t staleness_horizon_us)
    : entries_(plan_size), horizon_us_(staleness_horizon_us) {}

void SnapshotTable::update(const MeasurementPacket& packet) {
    for (const auto& reading : packet.readings) {
        if (reading.key_id >= entries_.size())
            throw DataError("table update with unknown key id " + std::to_string(reading.key_id));
        Entry& entry = entries_[reading.key_id];
        if (entry.has && packet.timestamp_us < entry.timestamp_us) {
            ++stale_updates_;
            continue;
        }
        if (!entry.has || entry.value != reading.value) ++changed_keys_;
        entry.value = reading.value;
        entry.timestamp_us = packet.timestamp_us;
        entry.has = true;
    }
    ++packets_applied_;
}

SnapshotTable::TakeResult SnapshotTable::take_snapshot(const std::vector<std::uint16_t>& keys,
                                                       std::uint64_t now_us) const {
    TakeResult result;
    result.snapshot.key_ids.reserve(keys.size());
    result.snapshot.values.reserve(keys.size());
    for (const std::uint16_t key : keys) {
        const Entry& entry = entries_.at(key);
        const bool stale =
            !entry.has || (now_us > entry.timestamp_us &&
                           static_cast<std::int64_t>(now_us - entry.timestamp_us) > horizon_us_);
        if (stale) {
            result.missing_keys.push_back(key);
            continue;
        }
        result.snapshot.key_ids.push_back(key);
        result.snapshot.values.push_back(entry.value);
    }
    result.complete = result.missing_keys.empty();
    result.snapshot.timestamp_us = static_cast<std::int64_t>(now_us);
    if (!result.complete) result.snapshot = net::MeasurementSnapshot{};
    return result;
}

std::vector<std::uint64_t> TransmissionSchedule::cycle_offsets_us() const {
    std::vector<std::uint64_t> offsets{0};
    if (mode == Mode::normal) return offsets;
    std::uint64_t interval = initial_fast_interval_us;
    std::uint64_t t = 0;
    while (interval < normal_interval_us) {
        t += interval;
        if (t >= normal_interval_us) break;
        offsets.push_back(t);
        interval *= 2;
    }
    return offsets;
}

UdpSender::UdpSender(const std::string& host, int port) {
    fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd_ < 0) throw RuntimeFailure("cannot create UDP socket");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        ::close(fd_);
        throw RuntimeFailure("bad replay host address: " + host);
    }
    if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(fd_);
        throw RuntimeFailure("cannot connect UDP socket to " + host + ":" + std::to_string(port));
    }
}

UdpSender::~UdpSender() {
    if (fd_ >= 0) ::close(fd_);
}

bool UdpSender::send(const std::vector<std::uint8_t>& datagram) {
    return ::send(fd_, datagram.data(), datagram.size(), 0) ==
           static_cast<ssize_t>(datagram.size());
}

UdpReceiver::UdpReceiver(int port) {
    fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd_ < 0) throw RuntimeFailure("cannot create UDP socket");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(fd_);
        throw RuntimeFailure("cannot bind UDP port " + std::to_string(port));
    }
    sockaddr_in bound{};
    socklen_t len = sizeof(bound);
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&bound), &len);
    port_ = ntohs(bound.sin_port);
}

UdpReceiver::~UdpReceiver() {
    if (fd_ >= 0) ::close(fd_);
}

std::optional<std::vector<std::uint8_t>> UdpReceiver::receive(int timeout_ms) {
    pollfd pfd{fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, timeout_ms);
    if (ready <= 0) return std::nullopt;
    std::vector<std::uint8_t> buf(65536);
    const ssize_t got = ::recv(fd_, buf.data(), buf.size(), 0);
    if (got <= 0) return std::nullopt;
    buf.resize(static_cast<std::size_t>(got));
    return buf;
}

}  // namespace rgate::wire
