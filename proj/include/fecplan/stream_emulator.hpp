#pragma once

// Discrete-event emulation of the sender -> Bernoulli channel -> erasure
// decoder -> playout pipeline on a virtual clock (integer microseconds).
// Source packet i of block b is sent at (bN+i)d; the K repair packets go out
// with the last source packet of the block. The channel delivers instantly
// and in order. The decoder holds packets only while an earlier packet of
// the same block is missing and releases as soon as N packets of the block
// have arrived (or the block's repair slot has passed). Playout begins after
// an (N-1)-packet prefill and advances one slot per interval, pausing one
// slot for every unrecovered packet.

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fecplan/channel_sim.hpp"
#include "fecplan/reed_solomon.hpp"
#include "fecplan/rng.hpp"
#include "fecplan/types.hpp"

namespace fecplan {

enum class PacketKind : std::uint8_t { source = 0, repair = 1 };

// One per-packet trace record.
struct PacketRecord {
    std::uint64_t seq = 0;  // global over all packets, send order
    std::uint32_t block_id = 0;
    int index_in_block = 0;  // 0..N+K-1
    PacketKind kind = PacketKind::source;
    std::int64_t send_time_us = 0;
    bool received = false;
    bool recovered = false;                 // sources only
    std::int64_t decoder_delay_us = -1;     // sources only; release - send
    std::int64_t playout_time_us = -1;      // sources only; slot time
};

struct EmulationConfig {
    CodeParams code;
    LossModel loss;
    double packet_interval_ms = 20.0;  // d
    int payload_bytes = 32;
    std::uint64_t num_blocks = 1;
    std::uint64_t seed = 0;
    bool keep_packet_records = true;
    // Test/shim hook: when set, decides packet drops instead of the seeded
    // Bernoulli draw. Same signature order as the send schedule.
    std::function<bool(std::uint64_t seq, std::uint32_t block, int index, PacketKind kind)>
        drop_override;

    void validate() const {
        code.validate();
        loss.validate();
        if (!(packet_interval_ms > 0.0))
            throw std::invalid_argument("EmulationConfig: packet_interval_ms must be > 0");
        if (payload_bytes < 1)
            throw std::invalid_argument("EmulationConfig: payload_bytes must be >= 1");
        if (num_blocks < 1)
            throw std::invalid_argument("EmulationConfig: num_blocks must be >= 1");
        if (code.total_packets() > 255)
            throw std::invalid_argument("EmulationConfig: N+K must be <= 255");
    }
};

struct EmulationReport {
    ResidualLossStats stats;  // estimates over the emulated stream
    std::uint64_t sources_sent = 0;
    std::uint64_t packets_unrecovered = 0;
    std::uint64_t run_count = 0;
    SimConfidence confidence;

    std::int64_t packet_interval_us = 0;
    std::int64_t max_decoder_delay_us = 0;
    std::int64_t max_added_delay_us = 0;   // playout slot minus send time
    std::int64_t playout_prefill_us = 0;   // (N-1) d
    std::int64_t delay_budget_us = 0;      // 2 N d
    std::uint64_t late_releases = 0;       // releases after the playout slot (none expected)
    std::uint64_t payload_mismatches = 0;  // recovered bytes differing from sent (none expected)

    std::vector<PacketRecord> packets;  // when keep_packet_records

    double max_decoder_delay_ms() const { return max_decoder_delay_us / 1000.0; }
    double max_added_delay_ms() const { return max_added_delay_us / 1000.0; }
};

namespace detail {

// Deterministic payload bytes for a given source packet; lets the receiver
// verify recovered payloads byte-for-byte.
inline void fill_payload(std::vector<std::uint8_t>& out, std::uint64_t payload_seed,
                         std::uint64_t source_index, int payload_bytes) {
    out.resize(static_cast<std::size_t>(payload_bytes));
    std::uint64_t state = splitmix64(payload_seed ^ source_index);
    for (int i = 0; i < payload_bytes; ++i) {
        if (i % 8 == 0) state = splitmix64(state);
        out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(state >> ((i % 8) * 8));
    }
}

}  // namespace detail

inline EmulationReport run_emulation(const EmulationConfig& cfg) {
    cfg.validate();
    const int n = cfg.code.n_block;
    const int k = cfg.code.k_redundancy;
    const int total = cfg.code.total_packets();
    const std::int64_t d_us = static_cast<std::int64_t>(cfg.packet_interval_ms * 1000.0 + 0.5);

    ReedSolomonCodec codec(cfg.code);
    Rng channel_rng(substream_seed(cfg.seed, 1));
    const std::uint64_t payload_seed = substream_seed(cfg.seed, 2);

    EmulationReport rep;
    rep.packet_interval_us = d_us;
    rep.playout_prefill_us = static_cast<std::int64_t>(n - 1) * d_us;
    rep.delay_budget_us = 2 * static_cast<std::int64_t>(n) * d_us;
    if (cfg.keep_packet_records)
        rep.packets.reserve(static_cast<std::size_t>(cfg.num_blocks) * static_cast<std::size_t>(total));

    constexpr std::uint64_t kBatches = 100;
    const std::uint64_t blocks_per_batch = (cfg.num_blocks + kBatches - 1) / kBatches;
    detail::RunAccumulator runs(kBatches);

    std::uint64_t seq = 0;
    std::uint64_t unrecovered_total = 0;
    double sum_sq_block = 0.0;
    std::vector<std::vector<std::uint8_t>> sources(static_cast<std::size_t>(n));
    std::vector<std::uint8_t> expected;

    for (std::uint64_t b = 0; b < cfg.num_blocks; ++b) {
        const std::int64_t block_start_us = static_cast<std::int64_t>(b) * n * d_us;
        const std::int64_t block_end_us = block_start_us + static_cast<std::int64_t>(n - 1) * d_us;

        for (int i = 0; i < n; ++i)
            detail::fill_payload(sources[static_cast<std::size_t>(i)], payload_seed,
                                 b * static_cast<std::uint64_t>(n) + static_cast<std::uint64_t>(i),
                                 cfg.payload_bytes);
        std::vector<std::vector<std::uint8_t>> encoded = codec.encode(sources);

        // send + channel, in send order
        std::vector<PacketRecord> block_pkts(static_cast<std::size_t>(total));
        std::vector<std::pair<int, std::vector<std::uint8_t>>> arrived;
        arrived.reserve(static_cast<std::size_t>(total));
        for (int i = 0; i < total; ++i) {
            PacketRecord& pr = block_pkts[static_cast<std::size_t>(i)];
            pr.seq = seq++;
            pr.block_id = static_cast<std::uint32_t>(b);
            pr.index_in_block = i;
            pr.kind = i < n ? PacketKind::source : PacketKind::repair;
            pr.send_time_us = i < n ? block_start_us + static_cast<std::int64_t>(i) * d_us
                                    : block_end_us;
            const bool dropped = cfg.drop_override
                                     ? cfg.drop_override(pr.seq, pr.block_id, i, pr.kind)
                                     : channel_rng.bernoulli(cfg.loss.p);
            pr.received = !dropped;
            if (pr.received) arrived.push_back({i, std::move(encoded[static_cast<std::size_t>(i)])});
        }

        // decoder: walk arrivals in order, holding once a gap is seen
        int received_count = 0;
        int next_expected_source = 0;
        bool holding = false;
        std::int64_t decode_time_us = -1;
        std::vector<std::int64_t> release_us(static_cast<std::size_t>(n), -1);
        for (const auto& [idx, payload] : arrived) {
            ++received_count;
            const std::int64_t t = block_pkts[static_cast<std::size_t>(idx)].send_time_us;
            if (idx < n) {
                if (!holding && idx == next_expected_source) {
                    release_us[static_cast<std::size_t>(idx)] = t;  // passes straight through
                    ++next_expected_source;
                } else {
                    holding = true;
                }
            } else {
                if (next_expected_source < n) holding = true;
            }
            if (received_count >= n && decode_time_us < 0) decode_time_us = t;
        }

        const bool decodable = received_count >= n;
        ReedSolomonCodec::DecodeResult decoded;
        if (decodable && holding) decoded = codec.decode(arrived);

        const std::uint64_t batch = b / blocks_per_batch;
        int block_unrecovered = 0;
        for (int i = 0; i < n; ++i) {
            PacketRecord& pr = block_pkts[static_cast<std::size_t>(i)];
            std::int64_t rel = release_us[static_cast<std::size_t>(i)];
            bool recovered = rel >= 0;
            if (!recovered) {
                if (decodable) {
                    rel = decode_time_us;
                    recovered = true;
                    if (pr.received) {
                        // held behind a gap until decodability
                    } else if (decoded.complete && decoded.sources[static_cast<std::size_t>(i)]) {
                        detail::fill_payload(expected, payload_seed,
                                             b * static_cast<std::uint64_t>(n) +
                                                 static_cast<std::uint64_t>(i),
                                             cfg.payload_bytes);
                        if (*decoded.sources[static_cast<std::size_t>(i)] != expected)
                            ++rep.payload_mismatches;
                    }
                } else if (pr.received) {
                    rel = block_end_us;  // repair slot passed; flush what we have
                    recovered = true;
                }
            }
            pr.recovered = recovered;
            if (recovered) {
                pr.decoder_delay_us = rel - pr.send_time_us;
                if (pr.decoder_delay_us > rep.max_decoder_delay_us)
                    rep.max_decoder_delay_us = pr.decoder_delay_us;
            }
            const std::uint64_t g = b * static_cast<std::uint64_t>(n) + static_cast<std::uint64_t>(i);
            const std::int64_t slot = rep.playout_prefill_us + static_cast<std::int64_t>(g) * d_us;
            pr.playout_time_us = slot;
            if (recovered) {
                if (rel > slot) ++rep.late_releases;
                const std::int64_t added = slot - pr.send_time_us;
                if (added > rep.max_added_delay_us) rep.max_added_delay_us = added;
            } else {
                ++block_unrecovered;
            }
            runs.feed(!recovered, batch);
        }
        unrecovered_total += static_cast<std::uint64_t>(block_unrecovered);
        sum_sq_block += static_cast<double>(block_unrecovered) * block_unrecovered;
        if (cfg.keep_packet_records)
            for (PacketRecord& pr : block_pkts) rep.packets.push_back(pr);
    }
    runs.finish(kBatches - 1);

    rep.sources_sent = cfg.num_blocks * static_cast<std::uint64_t>(n);
    rep.packets_unrecovered = unrecovered_total;
    rep.run_count = runs.run_count();

    const double nb = static_cast<double>(cfg.num_blocks);
    const double mean_block = static_cast<double>(unrecovered_total) / nb;
    rep.stats.ppl_fraction = mean_block / n;
    const double var_block = nb > 1 ? (sum_sq_block - nb * mean_block * mean_block) / (nb - 1) : 0.0;
    rep.confidence.ppl_stderr = std::sqrt(std::max(var_block, 0.0) / nb) / n;
    if (runs.run_count() > 0) {
        const double mean_run =
            static_cast<double>(unrecovered_total) / static_cast<double>(runs.run_count());
        rep.stats.expected_run_length = mean_run;
        rep.stats.burst_ratio = mean_run * (1.0 - rep.stats.ppl_fraction);
        rep.confidence.run_length_stderr = runs.mean_stderr();
        const double se_b1 = (1.0 - rep.stats.ppl_fraction) * rep.confidence.run_length_stderr;
        const double se_b2 = mean_run * rep.confidence.ppl_stderr;
        rep.confidence.burst_ratio_stderr = std::sqrt(se_b1 * se_b1 + se_b2 * se_b2);
    }
    return rep;
}

// Per-packet trace export; columns fixed by the external interface.
inline void write_trace_csv(const EmulationReport& rep, std::ostream& os) {
    os << "seq,block_id,kind,sent_ms,received_flag,recovered_flag,decoder_delay_ms,playout_ms\n";
    for (const PacketRecord& pr : rep.packets) {
        os << pr.seq << ',' << pr.block_id << ','
           << (pr.kind == PacketKind::source ? "source" : "repair") << ','
           << pr.send_time_us / 1000.0 << ',' << (pr.received ? 1 : 0) << ','
           << (pr.recovered ? 1 : 0) << ',';
        if (pr.kind == PacketKind::source && pr.recovered)
            os << pr.decoder_delay_us / 1000.0;
        os << ',';
        if (pr.kind == PacketKind::source) os << pr.playout_time_us / 1000.0;
        os << '\n';
    }
}

}  // namespace fecplan
