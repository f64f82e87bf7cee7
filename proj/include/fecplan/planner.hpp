#pragma once

// Planning workflows composing the analytics, simulators and the E-model:
// single-point evaluation, analytic-vs-simulation validation, and sweeps.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "fecplan/channel_sim.hpp"
#include "fecplan/emodel.hpp"
#include "fecplan/erasure_analytics.hpp"
#include "fecplan/report.hpp"
#include "fecplan/rng.hpp"
#include "fecplan/stream_emulator.hpp"
#include "fecplan/types.hpp"

namespace fecplan {

struct SweepSpec {
    std::vector<double> p_values;
    std::vector<CodePoint> code_points;
    CodecProfile codec;
    Method method = Method::analytic;
    double tolerance = 1e-4;
    std::uint64_t num_blocks = 100000;
    std::uint64_t seed = 1;

    void validate() const {
        if (p_values.empty()) throw std::invalid_argument("SweepSpec: empty p list");
        if (code_points.empty()) throw std::invalid_argument("SweepSpec: empty code point list");
        for (double p : p_values) LossModel{p}.validate();
        for (const CodePoint& cp : code_points) cp.code.validate();
        codec.validate();
    }
};

// Residual-loss statistics for one cell by the requested method. The
// no-coding baseline is a raw Bernoulli stream: Ppl = 100p, BurstR = 1.
inline ResidualLossStats cell_loss_stats(const CodePoint& point, double p, Method method,
                                         double tolerance, std::uint64_t num_blocks,
                                         std::uint64_t seed, double* stderr_ppl = nullptr) {
    LossModel loss{p};
    loss.validate();
    if (method == Method::analytic) {
        if (stderr_ppl) *stderr_ppl = 0.0;
        if (!point.coding) {
            ResidualLossStats s;
            s.ppl_fraction = p;
            if (p > 0.0) {
                s.expected_run_length = 1.0 / (1.0 - p);
                s.burst_ratio = 1.0;
            }
            return s;
        }
        return burst_ratio(point.code, loss, tolerance);
    }
    CodeParams effective = point.coding ? point.code : CodeParams{point.code.n_block, 0};
    if (method == Method::simulate) {
        SimResult r = simulate_stream({effective, loss, num_blocks, seed});
        if (stderr_ppl) *stderr_ppl = r.confidence.ppl_stderr;
        return r.stats;
    }
    EmulationConfig cfg;
    cfg.code = effective;
    cfg.loss = loss;
    cfg.num_blocks = num_blocks;
    cfg.seed = seed;
    cfg.keep_packet_records = false;
    EmulationReport rep = run_emulation(cfg);
    if (stderr_ppl) *stderr_ppl = rep.confidence.ppl_stderr;
    return rep.stats;
}

inline ReportRow analyze_point(const CodePoint& point, double p, const CodecProfile& codec,
                               Method method = Method::analytic, double tolerance = 1e-4,
                               std::uint64_t num_blocks = 100000, std::uint64_t seed = 1) {
    double stderr_ppl = 0.0;
    ResidualLossStats stats = cell_loss_stats(point, p, method, tolerance, num_blocks, seed,
                                              &stderr_ppl);
    ReportRow row;
    row.p = p;
    row.n = point.code.n_block;
    row.k = point.coding ? point.code.k_redundancy : 0;
    row.coding = point.coding;
    row.method = method;
    row.ppl_percent = stats.ppl_fraction * 100.0;
    row.burst_ratio = stats.burst_ratio;
    row.t_ms = point.coding ? coding_delay_ms(point.code, codec) : 0.0;
    row.mos = transmission_rating(emodel_params_for_delay(row.t_ms), codec, row.ppl_percent,
                                  stats.burst_ratio);
    if (method == Method::analytic) {
        if (stats.truncation_error_bound > 0.0) row.error_bound = stats.truncation_error_bound;
    } else {
        row.error_bound = stderr_ppl;
    }
    return row;
}

// Rows ordered as specified: p values outermost, code points within.
inline std::vector<ReportRow> run_sweep(const SweepSpec& spec) {
    spec.validate();
    std::vector<ReportRow> rows;
    rows.reserve(spec.p_values.size() * spec.code_points.size());
    std::uint64_t cell = 0;
    for (double p : spec.p_values) {
        for (const CodePoint& point : spec.code_points) {
            rows.push_back(analyze_point(point, p, spec.codec, spec.method, spec.tolerance,
                                         spec.num_blocks, substream_seed(spec.seed, cell)));
            ++cell;
        }
    }
    return rows;
}

// --- analytic vs Monte Carlo validation ------------------------------------

struct ValidationCell {
    double p = 0.0;
    CodeParams code;
    double ppl_analytic = 0.0;
    std::optional<double> burst_analytic;
    double ppl_sim = 0.0;
    std::optional<double> burst_sim;
    double ppl_stderr = 0.0;
    double burst_stderr = 0.0;
    double z_ppl = 0.0;
    std::optional<double> z_burst;
    bool pass = false;
};

// Side-by-side closed-form vs Monte Carlo columns with a z-score gate.
inline std::vector<ValidationCell> validate_cells(const std::vector<CodeParams>& points,
                                                  const std::vector<double>& p_values,
                                                  std::uint64_t num_blocks, std::uint64_t seed,
                                                  double tolerance, double sigma_gate = 4.0) {
    if (points.empty() || p_values.empty())
        throw std::invalid_argument("validate_cells: empty grid");
    std::vector<ValidationCell> cells;
    std::uint64_t idx = 0;
    for (const CodeParams& code : points) {
        for (double p : p_values) {
            ValidationCell cell;
            cell.p = p;
            cell.code = code;
            ResidualLossStats analytic = burst_ratio(code, LossModel{p}, tolerance);
            cell.ppl_analytic = analytic.ppl_fraction * 100.0;
            cell.burst_analytic = analytic.burst_ratio;

            SimResult sim = simulate_stream({code, LossModel{p}, num_blocks,
                                             substream_seed(seed, idx)});
            cell.ppl_sim = sim.stats.ppl_fraction * 100.0;
            cell.burst_sim = sim.stats.burst_ratio;
            cell.ppl_stderr = sim.confidence.ppl_stderr * 100.0;
            cell.burst_stderr = sim.confidence.burst_ratio_stderr;

            if (cell.ppl_stderr > 0.0) {
                cell.z_ppl = std::abs(cell.ppl_analytic - cell.ppl_sim) / cell.ppl_stderr;
            } else {
                cell.z_ppl = cell.ppl_analytic == cell.ppl_sim ? 0.0
                             : std::numeric_limits<double>::infinity();
            }
            bool ok = cell.z_ppl <= sigma_gate;
            if (cell.burst_analytic && cell.burst_sim && cell.burst_stderr > 0.0) {
                cell.z_burst = std::abs(*cell.burst_analytic - *cell.burst_sim) /
                               cell.burst_stderr;
                ok = ok && *cell.z_burst <= sigma_gate;
            } else {
                // both undefined (zero residual loss) is agreement
                ok = ok && cell.burst_analytic.has_value() == cell.burst_sim.has_value();
            }
            cell.pass = ok;
            cells.push_back(cell);
            ++idx;
        }
    }
    return cells;
}

}  // namespace fecplan
