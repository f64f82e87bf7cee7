#pragma once

// Report rows and serialization for the planning workflows. CSV renders an
// undefined BurstR as "-" (as in the source tables); JSON uses null. Files
// carry full precision; console tables round Ppl/BurstR/MOS to one decimal.

#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "fecplan/emodel.hpp"
#include "fecplan/types.hpp"

#include <json.hpp>

namespace fecplan {

// A sweep evaluation point: an erasure code, or the no-coding baseline
// (coding = false), which contributes no coding delay.
struct CodePoint {
    CodeParams code;
    bool coding = true;
};

enum class Method { analytic, simulate, emulate };

inline const char* method_name(Method m) {
    switch (m) {
        case Method::analytic: return "analytic";
        case Method::simulate: return "simulate";
        case Method::emulate: return "emulate";
    }
    return "?";
}

struct ReportRow {
    double p = 0.0;
    int n = 0;
    int k = 0;
    bool coding = true;
    Method method = Method::analytic;
    double ppl_percent = 0.0;
    std::optional<double> burst_ratio;
    double t_ms = 0.0;
    MosReport mos;
    // truncation bound on E[C] for analytic rows; Ppl standard error for
    // simulate/emulate rows
    std::optional<double> error_bound;
};

inline const char* kReportCsvHeader =
    "p,n,k,coding,method,ppl_percent,burst_ratio,t_ms,ie_eff,id,r,mos,error_bound";

inline void write_report_csv(const std::vector<ReportRow>& rows, std::ostream& os) {
    os << kReportCsvHeader << '\n';
    os << std::setprecision(12);
    for (const ReportRow& r : rows) {
        os << r.p << ',' << r.n << ',' << r.k << ',' << (r.coding ? "yes" : "no") << ','
           << method_name(r.method) << ',' << r.ppl_percent << ',';
        if (r.burst_ratio)
            os << *r.burst_ratio;
        else
            os << '-';
        os << ',' << r.t_ms << ',' << r.mos.ie_eff << ',' << r.mos.id.id << ',' << r.mos.r_factor
           << ',' << r.mos.mos_cq << ',';
        if (r.error_bound) os << *r.error_bound;
        os << '\n';
    }
}

inline nlohmann::json report_row_json(const ReportRow& r) {
    nlohmann::json j{
        {"p", r.p},
        {"n", r.n},
        {"k", r.k},
        {"coding", r.coding},
        {"method", method_name(r.method)},
        {"ppl_percent", r.ppl_percent},
        {"burst_ratio", r.burst_ratio ? nlohmann::json(*r.burst_ratio) : nlohmann::json()},
        {"t_ms", r.t_ms},
        {"components",
         {{"ro", r.mos.ro},
          {"is", r.mos.is.is},
          {"iolr", r.mos.is.iolr},
          {"ist", r.mos.is.ist},
          {"iq", r.mos.is.iq},
          {"id", r.mos.id.id},
          {"idte", r.mos.id.idte},
          {"idle", r.mos.id.idle},
          {"idd", r.mos.id.idd},
          {"ie_eff", r.mos.ie_eff}}},
        {"r", r.mos.r_factor},
        {"mos", r.mos.mos_cq},
    };
    if (r.error_bound) j["error_bound"] = *r.error_bound;
    return j;
}

inline nlohmann::json report_json(const std::vector<ReportRow>& rows, const std::string& codec,
                                  std::uint64_t seed) {
    nlohmann::json rows_json = nlohmann::json::array();
    for (const ReportRow& r : rows) rows_json.push_back(report_row_json(r));
    return nlohmann::json{
        {"schema", "fecplan-report-v1"},
        {"codec", codec},
        {"seed", seed},
        {"rows", rows_json},
    };
}

// one-decimal rendering used by console tables
inline std::string round1(double v) {
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(1) << v;
    return ss.str();
}

inline std::string round1(const std::optional<double>& v) {
    return v ? round1(*v) : std::string("-");
}

}  // namespace fecplan
