// Experiment dispatch: builds the objective, runs the configured experiment,
// and writes `<prefix>_<experiment>.csv` plus `<prefix>_verdict.txt`
// atomically. Exit statuses: 0 pass, 1 experiment verdict failed, 2 usage
// error, 3 integration failure.

#ifndef MINMAXCBO_DRIVER_HPP
#define MINMAXCBO_DRIVER_HPP

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "minmaxcbo/config.hpp"
#include "minmaxcbo/csv.hpp"
#include "minmaxcbo/experiments.hpp"

namespace mmcbo {

struct DispatchResult {
    int exit_code = 0;
    std::vector<std::string> files;
};

namespace detail {

inline Objective config_objective(const RunConfig& cfg) {
    std::optional<Saddle> shift;
    if (cfg.shift_x || cfg.shift_y) {
        Saddle s;
        s.x = cfg.shift_x ? *cfg.shift_x : Vec(static_cast<std::size_t>(cfg.d1), 0.0);
        s.y = cfg.shift_y ? *cfg.shift_y : Vec(static_cast<std::size_t>(cfg.d2), 0.0);
        shift = std::move(s);
    }
    return make_benchmark(cfg.objective, cfg.d1, cfg.d2, shift);
}

inline std::string verdict_header(const RunConfig& cfg) {
    std::string s;
    s += "experiment: ";
    s += to_string(cfg.experiment);
    s += "\nobjective: " + cfg.objective + " (" + std::to_string(cfg.d1) + "+" +
         std::to_string(cfg.d2) + "D)\nseed: " + std::to_string(cfg.seed) + "\n";
    return s;
}

}  // namespace detail

inline DispatchResult dispatch(const RunConfig& cfg, const std::string& out_prefix,
                               std::ostream& log) {
    DispatchResult result;
    const Objective obj = detail::config_objective(cfg);
    const std::string csv_path =
        out_prefix + "_" + to_string(cfg.experiment) + ".csv";
    const std::string verdict_path = out_prefix + "_verdict.txt";
    std::string verdict = detail::verdict_header(cfg);
    bool pass = true;

    switch (cfg.experiment) {
        case Experiment::Decay: {
            DecayConfig dc;
            dc.params = cfg.params;
            dc.init_x = cfg.init_sampler();
            dc.init_y = cfg.init_sampler();
            dc.n_seeds = cfg.n_seeds;
            dc.seed = cfg.seed;
            dc.epsilon_factor = cfg.epsilon_factor;
            dc.stride = cfg.record_stride;
            const DecayReport rep = run_decay_experiment(obj, dc);

            CsvBuilder csv("t,vx,vy,v,bound");
            for (std::size_t i = 0; i < rep.times.size(); ++i)
                csv.cell(rep.times[i]).cell(rep.vx[i]).cell(rep.vy[i]).cell(rep.v[i])
                    .cell(rep.bound[i]).end_row();
            write_file_atomic(csv_path, csv.str());

            verdict += "v0: " + format_real(rep.v0) + "\n";
            verdict += "decay rate: " + format_real(cfg.params.decay_rate()) + "\n";
            verdict += "cutoff index (V <= eps*V0): " + std::to_string(rep.cutoff_index) + "\n";
            verdict += "fraction of times within 1.5x bound: " + format_real(rep.fraction_ok) + "\n";
            pass = rep.pass;
            break;
        }
        case Experiment::Mfl: {
            CouplingConfig cc;
            cc.params = cfg.params;
            cc.init_x = cfg.init_sampler();
            cc.init_y = cfg.init_sampler();
            if (!cfg.n_grid.empty()) cc.n_grid = cfg.n_grid;
            cc.m_reference = cfg.m_reference;
            cc.reps = cfg.reps;
            cc.p_order = cfg.p_order;
            cc.seed = cfg.seed;
            cc.m_sensitivity = cfg.mfl_m_sensitivity;
            const CouplingReport rep = run_coupling_experiment(obj, cc);

            CsvBuilder csv("n,rep,e_n");
            for (std::size_t ni = 0; ni < rep.n_grid.size(); ++ni)
                for (std::size_t r = 0; r < rep.rep_errors[ni].size(); ++r)
                    csv.cell(rep.n_grid[ni]).cell(static_cast<int>(r))
                        .cell(rep.rep_errors[ni][r]).end_row();
            csv.cell("fit").cell("slope").cell(rep.fit.slope).end_row();
            csv.cell("fit").cell("intercept").cell(rep.fit.intercept).end_row();
            csv.cell("fit").cell("r2").cell(rep.fit.r_squared).end_row();
            write_file_atomic(csv_path, csv.str());

            verdict += "m_reference: " + std::to_string(rep.m_reference) + "\n";
            for (std::size_t ni = 0; ni < rep.n_grid.size(); ++ni)
                verdict += "e_N(" + std::to_string(rep.n_grid[ni]) + ") = " +
                           format_real(rep.per_n_error[ni]) + "\n";
            verdict += "slope: " + format_real(rep.fit.slope) + "  r2: " +
                       format_real(rep.fit.r_squared) + "\n";
            if (rep.has_m2) {
                verdict += "M-sensitivity block (M = " + std::to_string(rep.m2) + "):\n";
                for (std::size_t ni = 0; ni < rep.n_grid.size(); ++ni)
                    verdict += "e_N(" + std::to_string(rep.n_grid[ni]) + ") = " +
                               format_real(rep.per_n_error_m2[ni]) + "\n";
            }
            pass = rep.pass;
            break;
        }
        case Experiment::Lln: {
            LlnConfig lc;
            lc.alpha = cfg.params.alpha;
            lc.beta = cfg.params.beta;
            lc.law_x = cfg.init_sampler();
            lc.law_y = cfg.init_sampler();
            if (!cfg.n_grid.empty()) lc.n_grid = cfg.n_grid;
            lc.reps = cfg.reps;
            lc.p_order = cfg.p_order;
            lc.probe_points = cfg.probe_points;
            lc.fixed_atoms = cfg.fixed_atoms;
            lc.m_reference = cfg.m_reference;
            lc.seed = cfg.seed;
            const LlnReport rep = run_lln_experiment(obj, lc);

            CsvBuilder csv("n,target,err");
            for (const auto& t : rep.targets)
                for (std::size_t ni = 0; ni < rep.n_grid.size(); ++ni)
                    csv.cell(rep.n_grid[ni]).cell(t.name).cell(t.err[ni]).end_row();
            write_file_atomic(csv_path, csv.str());

            verdict += "m_reference: " + std::to_string(rep.m_reference) + "\n";
            for (const auto& t : rep.targets)
                verdict += t.name + " slope: " + format_real(t.fit.slope) + "  r2: " +
                           format_real(t.fit.r_squared) + (t.pass ? "  (ok)\n" : "  (out of window)\n");
            pass = rep.pass;
            break;
        }
        case Experiment::Moments: {
            MomentConfig mc;
            mc.params = cfg.params;
            mc.init_x = cfg.init_sampler();
            mc.init_y = cfg.init_sampler();
            if (!cfg.n_grid.empty()) mc.n_grid = cfg.n_grid;
            mc.p_list = cfg.p_list;
            mc.n_seeds = cfg.n_seeds;
            mc.m_factor = cfg.moment_m_factor;
            mc.seed = cfg.seed;
            const MomentReport rep = run_moment_experiment(obj, mc);

            CsvBuilder csv("n,p,agent,sup_moment");
            for (const auto& row : rep.rows)
                csv.cell(row.n).cell(row.p).cell(row.agent).cell(row.sup_moment).end_row();
            write_file_atomic(csv_path, csv.str());

            verdict += "m_reference: " + std::to_string(rep.m_reference) + "\n";
            verdict += "worst largest/smallest-N ratio: " + format_real(rep.worst_ratio) + "\n";
            pass = rep.pass;
            break;
        }
        case Experiment::Stability: {
            StabilityConfig sc;
            sc.trials = cfg.stability_trials;
            sc.probe.n_atoms = cfg.stability_atoms;
            sc.probe.box = cfg.stability_box;
            sc.probe.alpha = cfg.params.alpha;
            sc.probe.beta = cfg.params.beta;
            sc.seed = cfg.seed;
            const StabilityReport rep = run_stability_experiment(obj, sc);

            CsvBuilder csv("kind,trial,ratio");
            for (const auto& kr : rep.kinds) {
                int trial = 0;
                for (const double r : kr.batch_a.ratios)
                    csv.cell(kr.name).cell(trial++).cell(r).end_row();
                trial = cfg.stability_trials;
                for (const double r : kr.batch_b.ratios)
                    csv.cell(kr.name).cell(trial++).cell(r).end_row();
            }
            write_file_atomic(csv_path, csv.str());

            for (const auto& kr : rep.kinds) {
                verdict += kr.name + " max ratios: " + format_real(kr.batch_a.max_ratio) + " / " +
                           format_real(kr.batch_b.max_ratio) +
                           "  batch ratio: " + format_real(kr.batch_ratio) +
                           (kr.pass ? "  (ok)\n" : "  (unstable)\n");
                verdict += kr.name + " quantiles (q50/q90/q99): " + format_real(kr.batch_a.q50) +
                           " / " + format_real(kr.batch_a.q90) + " / " +
                           format_real(kr.batch_a.q99) + "  skipped: " +
                           std::to_string(kr.batch_a.skipped) + "\n";
            }
            verdict += "constant-cost control max ratio: " + format_real(rep.control_max) + "\n";
            pass = rep.pass;
            break;
        }
        case Experiment::VerifyAssumptions: {
            const AssumptionReport rep =
                verify_assumptions(obj, cfg.va_samples, cfg.va_radius, cfg.seed);

            CsvBuilder csv("metric,value");
            csv.cell("n_samples").cell(rep.n_samples).end_row();
            csv.cell("radius").cell(cfg.va_radius).end_row();
            csv.cell("max_abs_value").cell(rep.max_abs_value).end_row();
            csv.cell("bound_c").cell(obj.bound_c()).end_row();
            csv.cell("max_lipschitz_ratio").cell(rep.max_lipschitz_ratio).end_row();
            csv.cell("skipped_pairs").cell(rep.skipped_pairs).end_row();
            csv.cell("bound_ok").cell(rep.bound_ok ? 1 : 0).end_row();
            write_file_atomic(csv_path, csv.str());

            verdict += "max |E| over samples: " + format_real(rep.max_abs_value) +
                       "  (bound " + format_real(obj.bound_c()) + ")\n";
            verdict += "max Lipschitz ratio: " + format_real(rep.max_lipschitz_ratio) + "\n";
            pass = rep.bound_ok;
            break;
        }
    }

    verdict += std::string("verdict: ") + (pass ? "PASS" : "FAIL") + "\n";
    write_file_atomic(verdict_path, verdict);
    result.files = {csv_path, verdict_path};
    result.exit_code = pass ? 0 : 1;
    log << verdict;
    return result;
}

}  // namespace mmcbo

#endif  // MINMAXCBO_DRIVER_HPP
