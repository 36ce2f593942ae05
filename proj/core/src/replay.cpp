#include <algorithm>
#include <chrono>
#include <map>
#include <thread>

#include "rgate/stream.hpp"
#include "rgate/util.hpp"

namespace rgate::wire {

ReplayStats replay(const net::NetworkModel& net,
                   const std::vector<net::MeasurementSnapshot>& source,
                   const ReplayOptions& options, const PacketSink& sink) {
    ReplayStats stats;
    if (source.empty() || options.repeats <= 0) return stats;

    // Every IED named by the plan transmits; IEDs whose keys are all
    // inactive in the source rows send empty heartbeats.
    std::map<int, std::vector<std::uint16_t>> ied_ids;  // ied -> owned plan ids (full plan)
    for (std::size_t i = 0; i < net.measurement_plan.size(); ++i)
        ied_ids[net.measurement_plan[i].owning_ied].push_back(static_cast<std::uint16_t>(i));

    const auto offsets = options.schedule.cycle_offsets_us();
    const std::uint64_t cycle_us = options.schedule.normal_interval_us;
    const std::uint64_t cycles =
        static_cast<std::uint64_t>(source.size()) * static_cast<std::uint64_t>(options.repeats);

    std::map<int, std::uint32_t> sequence;
    const auto wall_start = std::chrono::steady_clock::now();

    for (std::uint64_t cycle = 0; cycle < cycles; ++cycle) {
        const auto& row = source[cycle % source.size()];
        for (const std::uint64_t offset : offsets) {
            const std::uint64_t sim_time = cycle * cycle_us + offset;
            if (options.time_scale > 0.0) {
                const auto wall_target =
                    wall_start + std::chrono::microseconds(static_cast<std::int64_t>(
                                     static_cast<double>(sim_time) / options.time_scale));
                std::this_thread::sleep_until(wall_target);
            }
            for (const auto& [ied, keys] : ied_ids) {
                MeasurementPacket packet;
                packet.ied_id = static_cast<std::uint16_t>(ied);
                packet.sequence = sequence[ied]++;
                packet.timestamp_us = sim_time;
                for (std::size_t i = 0; i < row.key_ids.size(); ++i) {
                    if (net.measurement_plan[row.key_ids[i]].owning_ied == ied)
                        packet.readings.push_back({row.key_ids[i], row.values[i]});
                }
                ++stats.packets_offered;
                if (sink(encode_packet(packet))) ++stats.packets_sent;
                else ++stats.packets_dropped;
            }
        }
    }

    stats.simulated_duration_us = cycles * cycle_us;
    stats.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    if (stats.simulated_duration_us > 0)
        stats.offered_rate_per_s = static_cast<double>(stats.packets_offered) /
                                   (static_cast<double>(stats.simulated_duration_us) / 1e6);
    if (stats.wall_seconds > 0.0)
        stats.achieved_rate_per_s = static_cast<double>(stats.packets_sent) / stats.wall_seconds;
    return stats;
}

}  // namespace rgate::wire
