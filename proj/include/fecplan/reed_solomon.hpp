#pragma once

// Systematic maximum-distance-separable erasure codec over GF(2^8).
// The generator is a Vandermonde matrix over distinct evaluation points,
// column-reduced so the first N rows form the identity; any N rows of the
// result remain invertible, so any N received packets of a block determine
// all N source payloads.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fecplan/gf256.hpp"
#include "fecplan/types.hpp"

namespace fecplan {

class ReedSolomonCodec {
public:
    using Payload = std::vector<std::uint8_t>;

    explicit ReedSolomonCodec(CodeParams code) : code_(code) {
        code_.validate();
        if (code_.total_packets() > 255)
            throw std::invalid_argument("ReedSolomonCodec: N+K must be <= 255");
        build_generator();
    }

    const CodeParams& code() const { return code_; }

    // N equal-length payloads in, N+K out; the first N are the inputs verbatim.
    std::vector<Payload> encode(const std::vector<Payload>& sources) const {
        const int n = code_.n_block;
        const int k = code_.k_redundancy;
        if (static_cast<int>(sources.size()) != n)
            throw std::invalid_argument("rs_encode_block: expected N payloads");
        const std::size_t len = sources.empty() ? 0 : sources[0].size();
        for (const Payload& s : sources)
            if (s.size() != len)
                throw std::invalid_argument("rs_encode_block: payload lengths differ");

        std::vector<Payload> out(sources.begin(), sources.end());
        out.resize(static_cast<std::size_t>(n + k));
        for (int r = 0; r < k; ++r) {
            Payload& parity = out[static_cast<std::size_t>(n + r)];
            parity.assign(len, 0);
            const std::uint8_t* row = parity_row(r);
            for (int c = 0; c < n; ++c) {
                const std::uint8_t coef = row[c];
                if (coef == 0) continue;
                const Payload& src = sources[static_cast<std::size_t>(c)];
                for (std::size_t b = 0; b < len; ++b)
                    parity[b] ^= gf256::mul(coef, src[b]);
            }
        }
        return out;
    }

    struct DecodeResult {
        std::vector<std::optional<Payload>> sources;  // size N; nullopt = unrecoverable
        bool complete = false;
    };

    // Received packets as (codeword index, payload). With >= N packets every
    // source payload is reconstructed byte-exact; with fewer, only the
    // received source payloads are returned.
    DecodeResult decode(const std::vector<std::pair<int, Payload>>& received) const {
        const int n = code_.n_block;
        const int total = code_.total_packets();
        std::vector<const Payload*> have(static_cast<std::size_t>(total), nullptr);
        std::size_t len = 0;
        bool first = true;
        for (const auto& [idx, payload] : received) {
            if (idx < 0 || idx >= total)
                throw std::invalid_argument("rs_decode_block: packet index out of range");
            if (have[static_cast<std::size_t>(idx)] != nullptr)
                throw std::invalid_argument("rs_decode_block: duplicate packet index");
            if (first) {
                len = payload.size();
                first = false;
            } else if (payload.size() != len) {
                throw std::invalid_argument("rs_decode_block: payload lengths differ");
            }
            have[static_cast<std::size_t>(idx)] = &payload;
        }

        DecodeResult res;
        res.sources.resize(static_cast<std::size_t>(n));
        if (static_cast<int>(received.size()) < n) {
            for (int i = 0; i < n; ++i)
                if (have[static_cast<std::size_t>(i)])
                    res.sources[static_cast<std::size_t>(i)] = *have[static_cast<std::size_t>(i)];
            return res;
        }

        // choose N received rows, sources first
        std::vector<int> rows;
        rows.reserve(static_cast<std::size_t>(n));
        for (int i = 0; i < total && static_cast<int>(rows.size()) < n; ++i)
            if (have[static_cast<std::size_t>(i)]) rows.push_back(i);

        bool all_sources = true;
        for (int r : rows)
            if (r >= n) all_sources = false;
        if (all_sources) {
            for (int i = 0; i < n; ++i)
                res.sources[static_cast<std::size_t>(i)] = *have[static_cast<std::size_t>(i)];
            res.complete = true;
            return res;
        }

        std::vector<std::uint8_t> inv = invert_rows(rows);
        for (int i = 0; i < n; ++i) {
            Payload out(len, 0);
            for (int c = 0; c < n; ++c) {
                const std::uint8_t coef = inv[static_cast<std::size_t>(i * n + c)];
                if (coef == 0) continue;
                const Payload& src = *have[static_cast<std::size_t>(rows[static_cast<std::size_t>(c)])];
                for (std::size_t b = 0; b < len; ++b) out[b] ^= gf256::mul(coef, src[b]);
            }
            res.sources[static_cast<std::size_t>(i)] = std::move(out);
        }
        res.complete = true;
        return res;
    }

private:
    const std::uint8_t* generator_row(int r) const {
        return generator_.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(code_.n_block);
    }
    const std::uint8_t* parity_row(int r) const { return generator_row(code_.n_block + r); }

    // G = V * inverse(V_top): Vandermonde rows x_r^c for x_r = r, reduced to
    // systematic form.
    void build_generator() {
        const int n = code_.n_block;
        const int total = code_.total_packets();
        std::vector<std::uint8_t> vand(static_cast<std::size_t>(total) * n);
        for (int r = 0; r < total; ++r)
            for (int c = 0; c < n; ++c)
                vand[static_cast<std::size_t>(r * n + c)] =
                    gf256::pow(static_cast<std::uint8_t>(r), static_cast<unsigned>(c));

        std::vector<std::uint8_t> top_inv = invert_matrix(vand.data(), n);
        generator_.assign(static_cast<std::size_t>(total) * n, 0);
        for (int r = 0; r < total; ++r)
            for (int c = 0; c < n; ++c) {
                std::uint8_t acc = 0;
                for (int m = 0; m < n; ++m)
                    acc ^= gf256::mul(vand[static_cast<std::size_t>(r * n + m)],
                                      top_inv[static_cast<std::size_t>(m * n + c)]);
                generator_[static_cast<std::size_t>(r * n + c)] = acc;
            }
    }

    std::vector<std::uint8_t> invert_rows(const std::vector<int>& rows) const {
        const int n = code_.n_block;
        std::vector<std::uint8_t> m(static_cast<std::size_t>(n) * n);
        for (int i = 0; i < n; ++i)
            for (int c = 0; c < n; ++c)
                m[static_cast<std::size_t>(i * n + c)] =
                    generator_row(rows[static_cast<std::size_t>(i)])[c];
        return invert_matrix(m.data(), n);
    }

    // Gauss-Jordan over GF(2^8); the matrices inverted here are always
    // nonsingular by the MDS construction.
    static std::vector<std::uint8_t> invert_matrix(const std::uint8_t* src, int n) {
        std::vector<std::uint8_t> a(src, src + static_cast<std::size_t>(n) * n);
        std::vector<std::uint8_t> inv(static_cast<std::size_t>(n) * n, 0);
        for (int i = 0; i < n; ++i) inv[static_cast<std::size_t>(i * n + i)] = 1;

        for (int col = 0; col < n; ++col) {
            int pivot = -1;
            for (int r = col; r < n; ++r)
                if (a[static_cast<std::size_t>(r * n + col)] != 0) {
                    pivot = r;
                    break;
                }
            if (pivot < 0) throw std::logic_error("ReedSolomonCodec: singular decode matrix");
            if (pivot != col) {
                for (int c = 0; c < n; ++c) {
                    std::swap(a[static_cast<std::size_t>(pivot * n + c)],
                              a[static_cast<std::size_t>(col * n + c)]);
                    std::swap(inv[static_cast<std::size_t>(pivot * n + c)],
                              inv[static_cast<std::size_t>(col * n + c)]);
                }
            }
            const std::uint8_t piv_inv = gf256::inverse(a[static_cast<std::size_t>(col * n + col)]);
            for (int c = 0; c < n; ++c) {
                a[static_cast<std::size_t>(col * n + c)] =
                    gf256::mul(a[static_cast<std::size_t>(col * n + c)], piv_inv);
                inv[static_cast<std::size_t>(col * n + c)] =
                    gf256::mul(inv[static_cast<std::size_t>(col * n + c)], piv_inv);
            }
            for (int r = 0; r < n; ++r) {
                if (r == col) continue;
                const std::uint8_t f = a[static_cast<std::size_t>(r * n + col)];
                if (f == 0) continue;
                for (int c = 0; c < n; ++c) {
                    a[static_cast<std::size_t>(r * n + c)] ^=
                        gf256::mul(f, a[static_cast<std::size_t>(col * n + c)]);
                    inv[static_cast<std::size_t>(r * n + c)] ^=
                        gf256::mul(f, inv[static_cast<std::size_t>(col * n + c)]);
                }
            }
        }
        return inv;
    }

    CodeParams code_;
    std::vector<std::uint8_t> generator_;  // (N+K) x N, top block identity
};

inline std::vector<ReedSolomonCodec::Payload> rs_encode_block(
    const std::vector<ReedSolomonCodec::Payload>& payloads, const CodeParams& code) {
    return ReedSolomonCodec(code).encode(payloads);
}

inline ReedSolomonCodec::DecodeResult rs_decode_block(
    const std::vector<std::pair<int, ReedSolomonCodec::Payload>>& received,
    const CodeParams& code) {
    return ReedSolomonCodec(code).decode(received);
}

}  // namespace fecplan
