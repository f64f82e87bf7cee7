#pragma once

// ITU-T G.107 E-model, specialized to planning: map (Ppl, BurstR, T, codec)
// to the transmission rating R and a conversation-quality MOS. Parameter
// names and default values follow Table 3 of the standard; the delay wiring
// used by the planner sets T = Ta = one-way delay and Tr = 2T.

#include <cmath>
#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fecplan/types.hpp"

#include <json.hpp>

namespace fecplan {

struct CodecProfile {
    std::string name;
    double ie = 0.0;                  // equipment impairment factor
    double bpl = 1.0;                 // packet-loss robustness factor
    double packet_interval_ms = 20.0;  // d

    void validate() const {
        if (!(bpl > 0.0)) throw std::invalid_argument("CodecProfile: Bpl must be > 0");
        if (ie < 0.0) throw std::invalid_argument("CodecProfile: Ie must be >= 0");
        if (!(packet_interval_ms > 0.0))
            throw std::invalid_argument("CodecProfile: packet interval must be > 0");
    }
};

inline const std::vector<CodecProfile>& builtin_codec_profiles() {
    static const std::vector<CodecProfile> profiles = {
        {"g711-plc", 0.0, 25.1, 20.0},
        {"g729a-vad", 11.0, 19.0, 20.0},
        {"g723.1-vad", 15.0, 16.1, 30.0},
    };
    return profiles;
}

inline std::optional<CodecProfile> find_codec_profile(
    const std::string& name, const std::vector<CodecProfile>& extra = {}) {
    auto matches = [&](const CodecProfile& c) {
        if (c.name == name) return true;
        // short aliases for the built-ins
        return (name == "g711" && c.name == "g711-plc") ||
               ((name == "g729" || name == "g729a") && c.name == "g729a-vad") ||
               ((name == "g723.1" || name == "g7231") && c.name == "g723.1-vad");
    };
    for (const CodecProfile& c : extra)
        if (matches(c)) return c;
    for (const CodecProfile& c : builtin_codec_profiles())
        if (matches(c)) return c;
    return std::nullopt;
}

// G.107 Table-3 parameter set. Defaults as listed there; delays in ms.
struct EModelParams {
    double slr = 8.0;    // send loudness rating
    double rlr = 2.0;    // receive loudness rating
    double stmr = 15.0;  // sidetone masking rating
    double lstr = 18.0;  // listener sidetone rating
    double ds = 3.0;     // D-value, send side
    double dr = 3.0;     // D-value, receive side
    double telr = 65.0;  // talker echo loudness rating
    double wepl = 110.0; // weighted echo path loss
    double qdu = 1.0;    // quantization distortion units
    double nc = -70.0;   // circuit noise, dBm0p
    double nfor = -64.0; // noise floor at receive side
    double ps = 35.0;    // room noise, send
    double pr = 35.0;    // room noise, receive
    double advantage = 0.0;        // advantage factor A
    double delay_sensitivity = 1.0;  // sT
    double t = 0.0;   // mean one-way delay of the echo path
    double ta = 0.0;  // absolute one-way delay
    double tr = 0.0;  // round-trip delay in the 4-wire loop
};

// Eq.-(4) family, in the standard's form: Ie-eff rises from Ie towards 95 as
// loss grows, more steeply for bursty loss.
inline double effective_equipment_impairment(const CodecProfile& profile, double ppl_percent,
                                             double burst_r) {
    profile.validate();
    if (ppl_percent < 0.0 || ppl_percent > 100.0)
        throw std::invalid_argument("effective_equipment_impairment: Ppl outside [0, 100]");
    if (!(burst_r >= 1.0))
        throw std::invalid_argument("effective_equipment_impairment: BurstR must be >= 1");
    return profile.ie +
           (95.0 - profile.ie) * ppl_percent / (ppl_percent / burst_r + profile.bpl);
}

namespace detail {

inline double lg(double x) { return std::log10(x); }

struct NoiseChain {
    double no;  // total noise referred to 0 dBr
    double ro;  // basic signal-to-noise ratio
};

inline NoiseChain noise_chain(const EModelParams& p) {
    const double olr = p.slr + p.rlr;
    const double nos = p.ps - p.slr - p.ds - 100.0 +
                       0.004 * (p.ps - olr - p.ds - 14.0) * (p.ps - olr - p.ds - 14.0);
    const double pre = p.pr + 10.0 * lg(1.0 + std::pow(10.0, (10.0 - p.lstr) / 10.0));
    const double nor = p.rlr - 121.0 + pre + 0.008 * (pre - 35.0) * (pre - 35.0);
    const double nfo = p.nfor + p.rlr;
    const double no =
        10.0 * lg(std::pow(10.0, p.nc / 10.0) + std::pow(10.0, nos / 10.0) +
                  std::pow(10.0, nor / 10.0) + std::pow(10.0, nfo / 10.0));
    return {no, 15.0 - 1.5 * (p.slr + no)};
}

inline double sidetone_rating(const EModelParams& p) {
    // STMRo: sidetone as heard, including the early echo contribution
    return -10.0 * lg(std::pow(10.0, -p.stmr / 10.0) +
                      std::exp(-p.t / 4.0) * std::pow(10.0, -p.telr / 10.0));
}

inline double ist_term(double stmro) {
    return 12.0 * std::pow(1.0 + std::pow((stmro - 13.0) / 6.0, 8.0), 1.0 / 8.0) -
           28.0 * std::pow(1.0 + std::pow((stmro + 1.0) / 19.4, 35.0), 1.0 / 35.0) -
           13.0 * std::pow(1.0 + std::pow((stmro - 3.0) / 33.0, 13.0), 1.0 / 13.0) + 29.0;
}

inline double iq_term(const EModelParams& p, double ro) {
    const double q = 37.0 - 15.0 * lg(p.qdu);
    const double g = 1.07 + 0.258 * q + 0.0602 * q * q;
    const double y = (ro - 100.0) / 15.0 + 46.0 / 8.4 - g / 9.0;
    const double z = 46.0 / 30.0 - g / 40.0;
    return 15.0 * lg(1.0 + std::pow(10.0, y) + std::pow(10.0, z));
}

}  // namespace detail

struct SimultaneousImpairment {
    double iolr = 0.0;
    double ist = 0.0;
    double iq = 0.0;
    double is = 0.0;
};

inline SimultaneousImpairment simultaneous_impairment(const EModelParams& p) {
    const detail::NoiseChain nc = detail::noise_chain(p);
    const double olr = p.slr + p.rlr;
    const double xolr = olr + 0.2 * (64.0 + nc.no - p.rlr);
    SimultaneousImpairment s;
    s.iolr = 20.0 * (std::pow(1.0 + std::pow(xolr / 8.0, 8.0), 1.0 / 8.0) - xolr / 8.0);
    s.ist = detail::ist_term(detail::sidetone_rating(p));
    s.iq = detail::iq_term(p, nc.ro);
    s.is = s.iolr + s.ist + s.iq;
    return s;
}

struct DelayImpairment {
    double idte = 0.0;  // talker echo
    double idle = 0.0;  // listener echo
    double idd = 0.0;   // absolute delay
    double id = 0.0;
};

inline DelayImpairment delay_impairment(const EModelParams& p) {
    const detail::NoiseChain nc = detail::noise_chain(p);
    DelayImpairment d;

    // talker echo
    double terv = p.telr - 40.0 * detail::lg((1.0 + p.t / 10.0) / (1.0 + p.t / 150.0)) +
                  6.0 * std::exp(-0.3 * p.t * p.t);
    const double ist = detail::ist_term(detail::sidetone_rating(p));
    if (p.stmr < 9.0) terv += ist / 2.0;
    const double roe = -1.5 * (nc.no - p.rlr);
    const double re = 80.0 + 2.5 * (terv - 14.0);
    double idte = ((roe - re) / 2.0 + std::sqrt((roe - re) * (roe - re) / 4.0 + 100.0) - 1.0) *
                  (1.0 - std::exp(-p.t));
    if (p.stmr > 20.0) idte = std::sqrt(idte * idte + ist * ist);
    d.idte = idte;

    // listener echo
    const double rle = 10.5 * (p.wepl + 7.0) * std::pow(p.tr + 1.0, -0.25);
    d.idle = (nc.ro - rle) / 2.0 + std::sqrt((nc.ro - rle) * (nc.ro - rle) / 4.0 + 169.0);

    // absolute delay; zero up to 100 ms by definition
    if (p.ta > 100.0) {
        const double x = detail::lg(p.ta / 100.0) / detail::lg(2.0);
        const double ex = 6.0 * p.delay_sensitivity;
        d.idd = 25.0 * (std::pow(1.0 + std::pow(x, ex), 1.0 / ex) -
                        3.0 * std::pow(1.0 + std::pow(x / 3.0, ex), 1.0 / ex) + 2.0);
    }
    d.id = d.idte + d.idle + d.idd;
    return d;
}

// Appendix-B conversion from R to conversation-quality MOS.
inline double mos_from_r(double r) {
    if (r <= 0.0) return 1.0;
    if (r >= 100.0) return 4.5;
    return 1.0 + 0.035 * r + r * (r - 60.0) * (100.0 - r) * 7.0e-6;
}

struct MosReport {
    double r_factor = 0.0;
    double mos_cq = 1.0;
    double ro = 0.0;
    SimultaneousImpairment is;
    DelayImpairment id;
    double ie_eff = 0.0;
};

// Eq. (3): R = Ro - Is - Id - Ie-eff (+ advantage factor, default 0).
// Undefined upstream BurstR (zero residual loss) enters as 1.
inline MosReport transmission_rating(const EModelParams& params, const CodecProfile& profile,
                                     double ppl_percent, std::optional<double> burst_r) {
    MosReport rep;
    rep.ro = detail::noise_chain(params).ro;
    rep.is = simultaneous_impairment(params);
    rep.id = delay_impairment(params);
    rep.ie_eff = effective_equipment_impairment(profile, ppl_percent, burst_r.value_or(1.0));
    rep.r_factor = rep.ro - rep.is.is - rep.id.id - rep.ie_eff + params.advantage;
    rep.mos_cq = mos_from_r(rep.r_factor);
    return rep;
}

// One-way delay added by block erasure coding with single-block buffering:
// T = 2 N d (decoder worst case plus playout prefill, rounded up to a whole
// block). K does not enter.
inline double coding_delay_ms(const CodeParams& code, const CodecProfile& profile) {
    code.validate();
    profile.validate();
    return 2.0 * code.n_block * profile.packet_interval_ms;
}

// Planner delay wiring: one-way delay T = Ta, round trip Tr = 2T.
inline EModelParams emodel_params_for_delay(double one_way_ms) {
    EModelParams p;
    p.t = one_way_ms;
    p.ta = one_way_ms;
    p.tr = 2.0 * one_way_ms;
    return p;
}

// Codec profile files: a JSON array of records
// [{"name": ..., "ie": ..., "bpl": ..., "packet_interval_ms": ...}, ...]
inline std::vector<CodecProfile> parse_codec_profiles(const nlohmann::json& j) {
    if (!j.is_array())
        throw std::invalid_argument("codec profile file: expected a JSON array of profiles");
    std::vector<CodecProfile> out;
    for (const auto& rec : j) {
        CodecProfile c;
        c.name = rec.at("name").get<std::string>();
        c.ie = rec.at("ie").get<double>();
        c.bpl = rec.at("bpl").get<double>();
        c.packet_interval_ms = rec.at("packet_interval_ms").get<double>();
        c.validate();
        out.push_back(std::move(c));
    }
    return out;
}

inline std::vector<CodecProfile> load_codec_profiles(std::istream& in) {
    nlohmann::json j;
    in >> j;
    return parse_codec_profiles(j);
}

}  // namespace fecplan
