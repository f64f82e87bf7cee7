#pragma once

// Real-socket smoke path: the emulated stream is carried over loopback UDP
// datagrams with a loss-injecting shim on the receive side. Wire format per
// datagram: 8-byte big-endian seq, 4-byte big-endian block id, 1-byte index,
// 1-byte kind, payload bytes. Statistics are computed by replaying the
// observed wire loss pattern through the virtual-clock pipeline, so they are
// directly comparable with run_emulation; received payloads are additionally
// decoded and byte-verified against what the sender generated.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <exception>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "fecplan/reed_solomon.hpp"
#include "fecplan/rng.hpp"
#include "fecplan/stream_emulator.hpp"

namespace fecplan {

// Socket-level failure; distinct from protocol anomalies, which are counted.
struct UdpError : std::runtime_error {
    explicit UdpError(const std::string& what) : std::runtime_error(what) {}
};

struct UdpRunConfig {
    EmulationConfig emu;
    int port = 0;  // 0 picks an ephemeral port
    int idle_timeout_ms = 2000;
    int inject_malformed_datagrams = 0;  // short garbage datagrams mid-stream
};

struct UdpRunReport {
    EmulationReport emulation;
    std::uint64_t datagrams_received = 0;  // accepted by the shim
    std::uint64_t datagrams_dropped = 0;   // dropped by the shim
    std::uint64_t datagrams_malformed = 0;
    std::uint64_t datagrams_missing = 0;   // never seen (transit loss); counted as lost
    std::uint64_t payload_mismatches = 0;  // byte-verified decode failures
};

namespace detail {

inline constexpr std::size_t kUdpHeaderBytes = 14;
inline constexpr std::uint8_t kEndMarkerKind = 0xFF;

inline void put_be64(std::uint8_t* p, std::uint64_t v) {
    for (int i = 7; i >= 0; --i) {
        p[i] = static_cast<std::uint8_t>(v & 0xFF);
        v >>= 8;
    }
}
inline void put_be32(std::uint8_t* p, std::uint32_t v) {
    for (int i = 3; i >= 0; --i) {
        p[i] = static_cast<std::uint8_t>(v & 0xFF);
        v >>= 8;
    }
}
inline std::uint64_t get_be64(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | p[i];
    return v;
}
inline std::uint32_t get_be32(const std::uint8_t* p) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | p[i];
    return v;
}

struct SocketGuard {
    int fd = -1;
    ~SocketGuard() {
        if (fd >= 0) ::close(fd);
    }
};

}  // namespace detail

inline UdpRunReport udp_loopback_run(const UdpRunConfig& cfg) {
    cfg.emu.validate();
    const int n = cfg.emu.code.n_block;
    const int total = cfg.emu.code.total_packets();
    const std::uint64_t num_packets = cfg.emu.num_blocks * static_cast<std::uint64_t>(total);

    detail::SocketGuard recv_sock;
    recv_sock.fd = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (recv_sock.fd < 0) throw UdpError(std::string("socket(): ") + std::strerror(errno));

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(static_cast<std::uint16_t>(cfg.port));
    if (::bind(recv_sock.fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0)
        throw UdpError(std::string("bind(): ") + std::strerror(errno));
    socklen_t addr_len = sizeof(addr);
    if (::getsockname(recv_sock.fd, reinterpret_cast<sockaddr*>(&addr), &addr_len) != 0)
        throw UdpError(std::string("getsockname(): ") + std::strerror(errno));

    int rcvbuf = 1 << 22;
    ::setsockopt(recv_sock.fd, SOL_SOCKET, SO_RCVBUF, &rcvbuf, sizeof(rcvbuf));
    timeval tv{};
    tv.tv_sec = 0;
    tv.tv_usec = 100 * 1000;
    ::setsockopt(recv_sock.fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));

    const std::uint64_t payload_seed = substream_seed(cfg.emu.seed, 2);

    std::exception_ptr sender_error;
    std::thread sender([&] {
        try {
            detail::SocketGuard send_sock;
            send_sock.fd = ::socket(AF_INET, SOCK_DGRAM, 0);
            if (send_sock.fd < 0)
                throw UdpError(std::string("sender socket(): ") + std::strerror(errno));
            ReedSolomonCodec codec(cfg.emu.code);
            std::vector<std::uint8_t> dgram;
            std::vector<std::vector<std::uint8_t>> sources(static_cast<std::size_t>(n));
            std::uint64_t seq = 0;
            int malformed_left = cfg.inject_malformed_datagrams;
            for (std::uint64_t b = 0; b < cfg.emu.num_blocks; ++b) {
                for (int i = 0; i < n; ++i)
                    detail::fill_payload(sources[static_cast<std::size_t>(i)], payload_seed,
                                         b * static_cast<std::uint64_t>(n) +
                                             static_cast<std::uint64_t>(i),
                                         cfg.emu.payload_bytes);
                std::vector<std::vector<std::uint8_t>> encoded = codec.encode(sources);
                for (int i = 0; i < total; ++i) {
                    dgram.resize(detail::kUdpHeaderBytes + encoded[static_cast<std::size_t>(i)].size());
                    detail::put_be64(dgram.data(), seq);
                    detail::put_be32(dgram.data() + 8, static_cast<std::uint32_t>(b));
                    dgram[12] = static_cast<std::uint8_t>(i);
                    dgram[13] = i < n ? 0 : 1;
                    std::copy(encoded[static_cast<std::size_t>(i)].begin(),
                              encoded[static_cast<std::size_t>(i)].end(),
                              dgram.begin() + detail::kUdpHeaderBytes);
                    if (::sendto(send_sock.fd, dgram.data(), dgram.size(), 0,
                                 reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0)
                        throw UdpError(std::string("sendto(): ") + std::strerror(errno));
                    ++seq;
                    // light pacing so loopback buffers cannot overflow
                    if ((seq & 0xFF) == 0) std::this_thread::sleep_for(std::chrono::microseconds(200));
                }
                if (malformed_left > 0) {
                    const std::uint8_t junk[3] = {0xDE, 0xAD, 0xBE};
                    ::sendto(send_sock.fd, junk, sizeof(junk), 0,
                             reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
                    --malformed_left;
                }
            }
            std::uint8_t marker[detail::kUdpHeaderBytes] = {};
            marker[13] = detail::kEndMarkerKind;
            for (int i = 0; i < 3; ++i)
                ::sendto(send_sock.fd, marker, sizeof(marker), 0,
                         reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
        } catch (...) {
            sender_error = std::current_exception();
        }
    });

    // receive loop with the Bernoulli shim
    UdpRunReport rep;
    Rng shim(substream_seed(cfg.emu.seed, 1));
    std::vector<std::uint8_t> arrived(num_packets, 0);  // 1 = accepted by shim
    std::unordered_map<std::uint64_t, std::vector<std::pair<int, std::vector<std::uint8_t>>>>
        block_payloads;
    std::vector<std::uint8_t> buf(detail::kUdpHeaderBytes + static_cast<std::size_t>(cfg.emu.payload_bytes) + 64);
    std::uint64_t seen = 0;
    int idle_ms = 0;
    bool done = false;
    while (!done && idle_ms < cfg.idle_timeout_ms) {
        const ssize_t len = ::recv(recv_sock.fd, buf.data(), buf.size(), 0);
        if (len < 0) {
            if (errno == EAGAIN || errno == EWOULDBLOCK) {
                idle_ms += 100;
                continue;
            }
            throw UdpError(std::string("recv(): ") + std::strerror(errno));
        }
        idle_ms = 0;
        if (static_cast<std::size_t>(len) < detail::kUdpHeaderBytes) {
            ++rep.datagrams_malformed;
            continue;
        }
        const std::uint8_t kind = buf[13];
        if (kind == detail::kEndMarkerKind) {
            done = true;
            continue;
        }
        const std::uint64_t seq = detail::get_be64(buf.data());
        const std::uint32_t block = detail::get_be32(buf.data() + 8);
        const int index = buf[12];
        if (seq >= num_packets || block >= cfg.emu.num_blocks || index >= total ||
            (kind != 0 && kind != 1)) {
            ++rep.datagrams_malformed;
            continue;
        }
        ++seen;
        // the shim consumes one draw per datagram, in arrival order
        if (shim.bernoulli(cfg.emu.loss.p)) {
            ++rep.datagrams_dropped;
            continue;
        }
        ++rep.datagrams_received;
        arrived[seq] = 1;
        block_payloads[block].push_back(
            {index, std::vector<std::uint8_t>(buf.begin() + detail::kUdpHeaderBytes,
                                              buf.begin() + len)});
    }
    sender.join();
    if (sender_error) std::rethrow_exception(sender_error);
    rep.datagrams_missing = num_packets - seen;

    // byte-true verification of every decodable block from the wire payloads
    {
        ReedSolomonCodec codec(cfg.emu.code);
        std::vector<std::uint8_t> expected;
        for (auto& [block, payloads] : block_payloads) {
            if (static_cast<int>(payloads.size()) < n) continue;
            ReedSolomonCodec::DecodeResult dec = codec.decode(payloads);
            for (int i = 0; i < n; ++i) {
                if (!dec.sources[static_cast<std::size_t>(i)]) {
                    ++rep.payload_mismatches;
                    continue;
                }
                detail::fill_payload(expected, payload_seed,
                                     block * static_cast<std::uint64_t>(n) +
                                         static_cast<std::uint64_t>(i),
                                     cfg.emu.payload_bytes);
                if (*dec.sources[static_cast<std::size_t>(i)] != expected)
                    ++rep.payload_mismatches;
            }
        }
    }

    // statistics and delay accounting: replay the wire loss pattern through
    // the virtual-clock pipeline
    EmulationConfig replay = cfg.emu;
    replay.drop_override = [&arrived](std::uint64_t seq, std::uint32_t, int, PacketKind) {
        return arrived[seq] == 0;
    };
    rep.emulation = run_emulation(replay);
    return rep;
}

}  // namespace fecplan
