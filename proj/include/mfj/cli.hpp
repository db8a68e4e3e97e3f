// SPDX-License-Identifier: MIT
//
// Batch commands behind the mfj tool. Each command writes its CSV files into
// cfg.out and returns 0 on success, 2 on configuration errors and 1 on any
// other failure, with a one-line diagnostic on `err`.
#pragma once

#include "mfj/config.hpp"
#include "mfj/csv.hpp"
#include "mfj/error.hpp"
#include "mfj/greeks.hpp"
#include "mfj/parallel.hpp"
#include "mfj/simulate.hpp"

#include <cstddef>
#include <exception>
#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace mfj {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

inline constexpr std::string_view kCommands[] = {"simulate", "delta", "compare", "converge"};

[[nodiscard]] inline bool is_command(std::string_view c) {
    for (auto k : kCommands) {
        if (k == c) return true;
    }
    return false;
}

/// Methods used when the config names none.
inline std::vector<DeltaMethod> default_methods(std::string_view command, const Payoff& payoff) {
    if (command == "compare") {
        std::vector<DeltaMethod> m{DeltaMethod::fd_central, DeltaMethod::malliavin};
        if (payoff.kind != PayoffKind::digital) m.push_back(DeltaMethod::flow_pathwise);
        return m;
    }
    return {DeltaMethod::malliavin};
}

namespace detail {

inline std::string estimate_columns() {
    return "method,payoff,K,B,x0,nu,dt,n_paths,seed,mean,stderr,variance,guard_hits,runtime_ms";
}

inline void add_estimate(CsvRow& row, const DeltaEstimate& e, bool timing) {
    row.add(to_string(e.method))
        .add(to_string(e.payoff.kind))
        .add(e.payoff.K)
        .add(e.payoff.B)
        .add(e.x0)
        .add(e.nu)
        .add(e.dt)
        .add(static_cast<std::uint64_t>(e.n_paths))
        .add(e.seed)
        .add(e.mean)
        .add(e.std_error)
        .add(e.variance)
        .add(e.guard_hits)
        .add(timing ? e.runtime_ms : 0L);
}

inline std::string trace_csv(const RunConfig& cfg, std::string_view command, const PathContext& ctx,
                             const PathBundle& b) {
    std::string s = config_header(cfg, command);
    s += "step,t,X,Y,u,flow,n_jumps_in_step\n";
    std::vector<long> counts(ctx.grid().points(), 0);
    for (const auto& e : b.noise.jumps) ++counts[e.step];
    for (std::size_t k = 0; k < b.X.size(); ++k) {
        CsvRow row;
        row.add(static_cast<std::uint64_t>(k))
            .add(ctx.grid().time(k))
            .add(b.X[k])
            .add(b.Y[k])
            .add(b.u[k])
            .add(b.flow[k])
            .add(counts[k]);
        s += row.str();
    }
    return s;
}

class CommandRunner {
public:
    CommandRunner(std::string_view command, RunConfig cfg) : command_(command), cfg_(std::move(cfg)) {
        if (cfg_.methods.empty()) cfg_.methods = default_methods(command_, cfg_.payoff);
        outdir_ = cfg_.out;
    }

    void run() {
        std::filesystem::create_directories(outdir_);
        if (command_ == "converge") {
            converge();
            return;
        }
        const PathContext ctx(cfg_.spec(), cfg_.grid(), cfg_.sim_options());
        if (command_ == "simulate") {
            simulate(ctx);
            return;
        }
        if (cfg_.trace) write("trace.csv", trace_csv(cfg_, command_, ctx, simulate_path(ctx, RngConfig{cfg_.seed, 0})));
        const auto estimates = estimate_all(ctx);
        if (command_ == "delta") {
            std::string s = header() + estimate_columns() + "\n";
            for (const auto& e : estimates) {
                CsvRow row;
                add_estimate(row, e, cfg_.timing);
                s += row.str();
            }
            write("delta.csv", s);
        } else {
            std::vector<DeltaEstimate> report_input = estimates;
            if (!cfg_.timing) {
                for (auto& e : report_input) e.runtime_ms = 0;
            }
            const auto rows = variance_report(report_input);
            std::string s = header() + estimate_columns() + ",variance_ratio,stderr_ratio,runtime_ratio\n";
            for (const auto& r : rows) {
                CsvRow row;
                add_estimate(row, r.estimate, cfg_.timing);
                row.add(r.variance_ratio).add(r.stderr_ratio).add(r.runtime_ratio);
                s += row.str();
            }
            write("compare.csv", s);
        }
    }

    [[nodiscard]] const std::vector<std::string>& warnings() const noexcept { return warnings_; }

private:
    [[nodiscard]] std::string header() const { return config_header(cfg_, command_); }

    void write(const std::string& name, const std::string& content) { write_atomic(outdir_ / name, content); }

    std::vector<DeltaEstimate> estimate_all(const PathContext& ctx) {
        const EstimatorOptions opt{cfg_.n_paths, cfg_.seed, cfg_.threads};
        std::vector<DeltaEstimate> out;
        for (DeltaMethod m : cfg_.methods) {
            switch (m) {
                case DeltaMethod::malliavin:
                    out.push_back(delta_malliavin(ctx, cfg_.payoff, opt, MalliavinOptions{cfg_.skorokhod}));
                    break;
                case DeltaMethod::flow_pathwise: out.push_back(delta_flow_pathwise(ctx, cfg_.payoff, opt)); break;
                case DeltaMethod::fd_central:
                    out.push_back(delta_fd_central(ctx, cfg_.payoff, opt, FdOptions{cfg_.h_fd, cfg_.fd_mode, false}));
                    break;
            }
            for (const auto& w : out.back().warnings) warnings_.push_back(w);
        }
        return out;
    }

    void simulate(const PathContext& ctx) {
        const std::size_t n = cfg_.n_paths;
        std::vector<std::string> rows(n);
        parallel_for(n, cfg_.threads, [&](std::size_t i) {
            const PathBundle b = simulate_path(ctx, RngConfig{cfg_.seed, i});
            const std::size_t N = b.last();
            CsvRow row;
            row.add(static_cast<std::uint64_t>(i))
                .add(b.X[N])
                .add(b.Y[N])
                .add(b.u[N])
                .add(b.flow[N])
                .add(b.run_max)
                .add(static_cast<std::uint64_t>(b.argmax_index))
                .add(b.run_min)
                .add(static_cast<std::uint64_t>(b.argmin_index))
                .add(static_cast<std::uint64_t>(b.noise.jumps.size()));
            rows[i] = row.str();
        });
        std::string s = header() + "path,X_T,Y_T,u_T,flow_T,run_max,argmax_index,run_min,argmin_index,n_jumps\n";
        for (const auto& r : rows) s += r;
        write("paths.csv", s);
        write("trace.csv", trace_csv(cfg_, command_, ctx, simulate_path(ctx, RngConfig{cfg_.seed, 0})));
    }

    void converge() {
        ConvergenceOptions opt;
        opt.n_paths = cfg_.n_paths;
        opt.seed = cfg_.seed;
        opt.threads = cfg_.threads;
        opt.sim = cfg_.sim_options();
        opt.payoff = cfg_.payoff;
        opt.r_time = cfg_.r_time;
        opt.z_mark = cfg_.z_mark;
        opt.malliavin.mode = cfg_.skorokhod;
        if (cfg_.quantity == ConvergenceQuantity::delta_barrier && !cfg_.payoff.has_barrier()) {
            opt.payoff = Payoff::up_and_out(cfg_.payoff.K, cfg_.payoff.B);
        }
        const auto res = convergence_study(cfg_.spec(), cfg_.quantity, cfg_.dt_list, opt);
        std::string s = header() + "quantity,dt,rms_error,n_paths,slope\n";
        const auto qname = to_string(res.quantity);
        for (const auto& l : res.levels) {
            CsvRow row;
            row.add(qname).add(l.dt).add(l.rms_error).add(static_cast<std::uint64_t>(res.n_paths)).add("");
            s += row.str();
        }
        CsvRow last;
        last.add(qname).add("").add("").add(static_cast<std::uint64_t>(res.n_paths)).add(res.slope);
        s += last.str();
        write("converge.csv", s);
    }

    std::string command_;
    RunConfig cfg_;
    std::filesystem::path outdir_;
    std::vector<std::string> warnings_;
};

}  // namespace detail

/// Runs one command; never throws.
inline int run_command(std::string_view command, const RunConfig& cfg, std::ostream& err) {
    try {
        if (!is_command(command)) throw ConfigError("unknown command '" + std::string(command) + "'");
        detail::CommandRunner runner(command, cfg);
        runner.run();
        for (const auto& w : runner.warnings()) err << "warning: " << w << '\n';
        return kExitOk;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    } catch (...) {
        err << "error: unknown failure\n";
        return kExitRuntime;
    }
}

}  // namespace mfj
