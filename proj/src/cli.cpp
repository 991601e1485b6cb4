#include "pdm/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "pdm/errors.hpp"
#include "pdm/floquet.hpp"
#include "pdm/majorant.hpp"
#include "pdm/pdm.hpp"
#include "pdm/thresholds.hpp"

namespace pdm {

using nlohmann::json;

namespace {

constexpr double kOracleStaticTol = 1e-8;
constexpr double kOracleFloquetTol = 1e-6;
constexpr double kTailGrowth = 2.0;
constexpr double kTailAgreement = 0.10;

json quantity(double value, const std::string& stage, double tol) {
    json q;
    if (std::isfinite(value))
        q["value"] = value;
    else
        q["value"] = nullptr, q["unbounded"] = true;
    q["stage"] = stage;
    q["tolerance"] = tol;
    return q;
}

json bracket(const Bracket& b, const std::string& stage, double tol) {
    json q = quantity(b.mid(), stage, tol);
    q["lower"] = b.lower;
    if (b.finite())
        q["upper"] = b.upper;
    else
        q["upper"] = nullptr;
    return q;
}

double resolved_sigma(const ModelSpec& spec) {
    if (spec.sigma) return *spec.sigma;
    switch (spec.kind) {
        case ModelKind::delta_rotor: return 1.5;
        case ModelKind::quantum_top: return 2.0 * spec.d - 0.5;
        case ModelKind::custom: return 2.0;
    }
    return 2.0;
}

double resolved_r(const ModelSpec& spec) { return spec.r ? *spec.r : resolved_sigma(spec) + 2.0; }

bool is_static(const PeriodicBlockOperator& v) { return v.max_frequency() == 0; }

BlockOperator static_part(const Model& m) {
    const BlockOperator* v0 = m.v.find(0);
    return v0 ? *v0 : BlockOperator(m.space);
}

/// Failure raised inside a stage; carries the exit code.
struct StageFailure {
    int code;
    std::string message;
};

class Runner {
public:
    explicit Runner(const RunConfig& c) : config_(c) {}

    RunOutcome execute() {
        RunOutcome out;
        report_["config"] = echo_config();
        try {
            config_.validate();
            model_ = std::make_unique<Model>(build_model(config_.model));
        } catch (const Error& e) {
            return finish(out, "config", {exit_config, e.what()});
        }
        report_["model"] = {{"kind", to_string(model_->spec.kind)},
                            {"blocks", model_->space->block_count()},
                            {"dimension", model_->space->total_dim()},
                            {"max_frequency", model_->v.max_frequency()}};
        for (const auto& stage : kStages) {
            if (!config_.stages.count(stage)) continue;
            std::optional<StageFailure> failure;
            try {
                failure = dispatch(stage);
            } catch (const ThresholdRefusal& e) {
                failure = StageFailure{exit_threshold, e.what()};
                report_["stages"][stage]["refusal"] = {{"condition", e.condition()},
                                                       {"value", e.value()},
                                                       {"bound", e.bound()}};
            } catch (const IterationError& e) {
                const int code = e.reason() == IterationError::Reason::gap_violation ? exit_certificate
                                                                                      : exit_nonconvergence;
                failure = StageFailure{code, e.what()};
            } catch (const ConvergenceError& e) {
                failure = StageFailure{exit_nonconvergence, e.what()};
            } catch (const IngestError& e) {
                failure = StageFailure{exit_config, e.what()};
            } catch (const UsageError& e) {
                failure = StageFailure{exit_config, e.what()};
            } catch (const TruncationError& e) {
                failure = StageFailure{exit_config, e.what()};
            } catch (const MemoryGuardError& e) {
                failure = StageFailure{exit_config, e.what()};
            } catch (const Error& e) {
                failure = StageFailure{exit_certificate, e.what()};
            }
            if (!failure) {
                report_["stages"][stage]["status"] = "pass";
                continue;
            }
            report_["stages"][stage]["status"] = "fail";
            report_["stages"][stage]["reason"] = failure->message;
            if (out.exit_code == exit_pass) {
                out.exit_code = failure->code;
                out.failed_stage = stage;
                out.failure = failure->message;
            }
            // Certificate failures let later stages run; anything else stops the pipeline.
            if (failure->code != exit_certificate) break;
        }
        return finish(out);
    }

private:
    RunOutcome& finish(RunOutcome& out, const std::string& stage, const StageFailure& f) {
        out.exit_code = f.code;
        out.failed_stage = stage;
        out.failure = f.message;
        report_["stages"][stage] = {{"status", "fail"}, {"reason", f.message}};
        return finish(out);
    }

    RunOutcome& finish(RunOutcome& out) {
        report_["exit_code"] = out.exit_code;
        if (out.exit_code != exit_pass) report_["failure"] = {{"stage", out.failed_stage}, {"reason", out.failure}};
        out.report = report_;
        write_files(out);
        return out;
    }

    json echo_config() const {
        const ModelSpec& s = config_.model;
        json c = {{"source", config_.source},
                  {"kind", to_string(s.kind)},
                  {"N", s.truncation},
                  {"K_max", s.k_max},
                  {"d", s.d},
                  {"g", s.g},
                  {"omega", s.omega},
                  {"stages", config_.stages},
                  {"tol", config_.tol},
                  {"ladder", config_.ladder},
                  {"seed", config_.seed},
                  {"unsafe_thresholds", config_.unsafe},
                  {"periods", config_.periods},
                  {"campaign", config_.campaign},
                  {"edge_weight", config_.edge_weight},
                  {"sigma", resolved_sigma(s)},
                  {"r", resolved_r(s)}};
        if (config_.omega0) c["omega0"] = *config_.omega0;
        json f = json::array();
        for (const auto& [k, v] : s.fhat) f.push_back({k, v.real(), v.imag()});
        c["fourier"] = f;
        return c;
    }

    std::optional<StageFailure> dispatch(const std::string& stage) {
        if (stage == "constants") return constants();
        if (stage == "gaps") return gaps();
        if (stage == "pdm") return pdm();
        if (stage == "oracle") return oracle();
        if (stage == "thresholds") return thresholds();
        if (stage == "campaign") return campaign();
        if (stage == "simulate") return simulate();
        throw UsageError("unknown stage '" + stage + "'");
    }

    std::optional<StageFailure> constants() {
        const std::string st = "constants";
        const ScalarConstantReport r = verify_scalar_constants();
        json& j = report_["stages"][st];
        j["x1"] = quantity(r.x1, st, 0.0);
        j["margin"] = quantity(r.margin, st, 0.0);
        j["margin_holds"] = r.margin_holds;
        j["exp_sum_x_phi"] = quantity(r.exp_sum_x_phi, st, 0.0);
        j["exp_bound_holds"] = r.exp_bound_holds;
        j["g_chain"] = quantity(r.g_chain, st, 0.0);
        j["g_chain_holds"] = r.g_chain_holds;
        j["jdot_factor"] = quantity(r.jdot, st, 0.0);
        j["jdot_holds"] = r.jdot_holds;
        j["exp_sum_x"] = quantity(r.exp_sum_x, st, 0.0);
        j["exp_sum_x_holds"] = r.exp_sum_x_holds;
        j["exp_sum_x_note"] = "reported only";
        if (!r.all_hold()) return StageFailure{exit_certificate, "a scalar constant inequality fails"};
        return std::nullopt;
    }

    const GapReport& gap_data() {
        if (!gaps_) gaps_ = gap_report(*model_->space, resolved_sigma(model_->spec), model_->tail);
        return *gaps_;
    }

    std::optional<StageFailure> gaps() {
        const std::string st = "gaps";
        const GapReport& g = gap_data();
        json& j = report_["stages"][st];
        j["label"] = g.tail_certified ? "certified" : "head-only";
        j["sigma"] = g.sigma;
        j["truncation"] = g.truncation;
        j["inverse_gap_sum"] = bracket(g.inverse_gap_sum, st, g.inverse_gap_sum.width());
        j["inverse_gap_sum_head"] = quantity(g.inverse_gap_sum_head, st, 0.0);
        j["inverse_gap_argmax"] = g.inverse_gap_argmax;
        j["delta_e"] = quantity(g.tail_certified ? g.delta_e_certified() : g.delta_e_retained(), st, 0.0);
        j["sigma_gap_sum"] = bracket(g.sigma_gap_sum, st, g.sigma_gap_sum.width());
        j["sigma_gap_divergent"] = g.sigma_gap_divergent;
        j["inverse_gap_divergent"] = g.inverse_gap_divergent;
        j["delta_e_sigma"] = quantity(g.tail_certified ? g.delta_e_sigma_certified() : g.delta_e_sigma_retained(), st, 0.0);
        j["smallest_gap"] = quantity(g.smallest_gap, st, 0.0);
        j["v_norm_inf1"] = quantity(norm_inf1(static_part(*model_)), st, 0.0);
        if (model_->spec.kind == ModelKind::delta_rotor) {
            const BlockOperator delta = delta_operator(model_->space);
            j["delta_norm_inf1"] = quantity(norm_inf1(delta), st, 0.0);
            j["delta_block_norms"] = {{"P0 delta P0", quantity(spectral_norm(*delta.find(0, 0)), st, 0.0)},
                                      {"P1 delta P0", quantity(spectral_norm(*delta.find(1, 0)), st, 0.0)},
                                      {"P1 delta P1", quantity(spectral_norm(*delta.find(1, 1)), st, 0.0)}};
        }
        if (model_->tail && !g.tail_certified)
            return StageFailure{exit_certificate, "the declared tail did not certify the gap sums"};
        return std::nullopt;
    }

    std::optional<StageFailure> pdm() {
        const std::string st = "pdm";
        json& j = report_["stages"][st];
        if (is_static(model_->v)) {
            const PdmProblem problem = PdmProblem::from_space(model_->space);
            PdmOptions opts;
            opts.tol = config_.tol * problem.delta_e();
            opts.unsafe = config_.unsafe;
            static_result_ = pdm_run(problem, static_part(*model_), opts);
            const PdmCertificate& c = static_result_->certificate;
            j["mode"] = "static";
            j["iterations"] = c.iterations;
            j["delta_e"] = quantity(c.delta_e, st, 0.0);
            j["v_norm_inf1"] = quantity(c.v_norm, st, 0.0);
            j["stop_tolerance"] = quantity(*opts.tol, st, 0.0);
            j["j_sh_norm"] = quantity(c.j_sh_norm, st, 0.0);
            j["j_sh_ok"] = c.j_sh_ok();
            j["g_operator_norm"] = quantity(c.g_operator_norm, st, 0.0);
            j["g_norm_ok"] = c.g_norm_ok();
            j["reconstruction_residual"] = quantity(c.reconstruction_residual, st, c.reconstruction_tol);
            j["unitarity_defect"] = quantity(c.unitarity_defect, st, c.unitarity_tol);
            j["commutator_regularity"] = quantity(c.commutator_regularity, st, 0.0);
            j["commutator_identity_defect"] = quantity(c.commutator_identity_defect, st, c.reconstruction_residual);
            j["gaps_ok"] = c.gaps_ok();
            j["majorant_dominates"] = c.majorant_dominates;
            j["superexponential_ratio"] = quantity(c.superexponential_ratio, st, 0.0);
            j["superexponential_samples"] = c.superexponential_samples;
            j["max_spectral_drift"] = quantity(c.max_spectral_drift, st, 0.0);
            std::ostringstream t;
            t << "step\tv_norm\tw_sh\tg_norm\tx_actual\tx_majorant\tx_floor\tgap_slack\tunitarity_defect\n";
            t.precision(17);
            for (const auto& e : static_result_->trace)
                t << e.step << '\t' << e.v_norm << '\t' << e.w_sh << '\t' << e.g_norm << '\t' << e.x_actual << '\t'
                  << e.x_majorant << '\t' << e.x_floor << '\t' << e.gap_slack << '\t' << e.unitarity_defect << '\n';
            tables_["trace.tsv"] = t.str();
            if (!c.all_ok()) return StageFailure{exit_certificate, "an iteration certificate fails"};
            return std::nullopt;
        }
        TimeDependentOptions opts;
        opts.omega0 = config_.omega0;
        opts.pdm.unsafe = config_.unsafe;
        const double r = resolved_r(model_->spec);
        td_result_ = time_dependent_pdm(model_->space, model_->v, model_->spec.omega, r, opts);
        const RegularizedPerturbation& t = *td_result_;
        j["mode"] = "time_dependent";
        j["r"] = r;
        j["omega0"] = quantity(t.omega0, st, 0.0);
        j["delta_e"] = quantity(t.delta_e, st, 0.0);
        j["grid_size"] = t.grid_size;
        j["grid_difference"] = quantity(t.grid_difference, st, opts.coefficient_tol);
        j["dropped_tail"] = quantity(t.dropped_tail, st, opts.coefficient_tol);
        j["weighted_v"] = quantity(t.weighted_v, st, 0.0);
        j["triple_v"] = quantity(t.triple_v, st, 0.0);
        j["x1"] = quantity(t.x1, st, 0.0);
        j["jdot_norm"] = quantity(t.jdot_norm, st, t.grid_difference);
        j["jdot_bound"] = quantity(t.jdot_bound, st, 0.0);
        j["jdot_ok"] = t.jdot_ok();
        j["v_tilde_norm"] = quantity(t.v_tilde_norm, st, t.grid_difference);
        j["v_tilde_bound"] = quantity(t.v_tilde_bound, st, 0.0);
        j["v_tilde_ok"] = t.v_tilde_ok();
        j["j_weighted"] = quantity(t.j_weighted, st, t.grid_difference);
        j["g_weighted"] = quantity(t.g_weighted, st, t.grid_difference);
        j["reconstruction_residual"] = quantity(t.reconstruction_residual, st, t.reconstruction_tol);
        j["unitarity_residual"] = quantity(t.unitarity_residual, st, t.reconstruction_tol);
        j["max_iterations"] = t.max_iterations;
        if (!t.all_ok()) return StageFailure{exit_certificate, "a time-dependent certificate fails"};
        return std::nullopt;
    }

    std::optional<StageFailure> oracle() {
        const std::string st = "oracle";
        json& j = report_["stages"][st];
        if (is_static(model_->v)) {
            if (!static_result_) return StageFailure{exit_config, "the oracle stage needs the pdm stage"};
            const BlockOperator v0 = static_part(*model_);
            const double dev = spectrum_deviation(*model_->space, v0, static_result_->g);
            j["spectrum_relative_deviation"] = quantity(dev, st, kOracleStaticTol);
            const Matrix h0 = model_->space->dense_h0();
            const RealVector a = hermitian_eigenvalues(h0 + static_result_->g.to_dense());
            const RealVector b = hermitian_eigenvalues(h0 + v0.to_dense());
            std::ostringstream t;
            t.precision(17);
            t << "index\tdiagonalized\tdense\n";
            for (Eigen::Index i = 0; i < a.size(); ++i) t << i << '\t' << a(i) << '\t' << b(i) << '\n';
            tables_["spectrum.tsv"] = t.str();
            if (!(dev <= kOracleStaticTol)) return StageFailure{exit_certificate, "spectra disagree with the dense oracle"};
            return std::nullopt;
        }
        if (!td_result_) return StageFailure{exit_config, "the oracle stage needs the pdm stage"};
        const QuasiEnergyComparison c = compare_quasi_energies(*model_->space, model_->v, td_result_->v_tilde,
                                                               model_->spec.omega, model_->spec.k_max,
                                                               config_.edge_weight);
        j["k_max"] = model_->spec.k_max;
        j["compared"] = c.compared;
        j["quasi_energy_deviation"] = quantity(c.max_deviation, st, kOracleFloquetTol);
        if (c.compared == 0) return StageFailure{exit_certificate, "no quasi-energy passed the edge filter"};
        if (!(c.max_deviation <= kOracleFloquetTol))
            return StageFailure{exit_certificate, "quasi-energies of the two assemblies disagree"};
        return std::nullopt;
    }

    std::optional<StageFailure> thresholds() {
        const std::string st = "thresholds";
        json& j = report_["stages"][st];
        const double omega0 = config_.omega0.value_or(8.0 * model_->spec.omega / 9.0);
        const ThresholdReport r =
            threshold_report(*model_->space, model_->v, omega0, resolved_sigma(model_->spec), resolved_r(model_->spec),
                             model_->tail);
        j["label"] = r.certified ? "certified" : "uncertified";
        j["omega0"] = r.omega0;
        j["sigma"] = r.sigma;
        j["r"] = r.r;
        j["C1"] = r.c1;
        j["delta0"] = quantity(r.delta0, st, 0.0);
        j["delta_e"] = quantity(r.delta_e, st, 0.0);
        j["delta_e_sigma"] = quantity(r.delta_e_sigma, st, 0.0);
        j["v_norm_r"] = quantity(r.v_norm_r, st, 0.0);
        j["v_triple_r"] = quantity(r.v_triple_r, st, 0.0);
        j["v_weighted_triple"] = quantity(r.v_weighted_triple, st, 0.0);
        auto terms = [&](const auto& arr) {
            json a = json::array();
            for (const auto& t : arr) a.push_back({{"name", t.name}, {"expression", t.expression}, {"value", t.value}});
            return a;
        };
        if (r.theorem1) {
            j["theorem1"] = {{"C", r.theorem1->c},
                             {"C2", r.theorem1->c2},
                             {"terms", terms(r.theorem1->terms)},
                             {"threshold", quantity(r.theorem1->threshold, st, 0.0)},
                             {"omega_interval", {r.theorem1->omega_interval.first, r.theorem1->omega_interval.second}}};
            if (r.theorem1_measure) j["theorem1"]["measure_lower_bound"] = *r.theorem1_measure;
        } else {
            j["theorem1"] = {{"skipped", r.theorem1_skipped}};
        }
        if (r.theorem3) {
            j["theorem3"] = {{"C", r.theorem3->c},
                             {"C2_tilde", r.theorem3->c2_tilde},
                             {"prefactor", r.theorem3->prefactor},
                             {"terms", terms(r.theorem3->terms)},
                             {"threshold", quantity(r.theorem3->threshold, st, 0.0)},
                             {"auxiliary_bound", quantity(r.theorem3->auxiliary_bound, st, 0.0)},
                             {"omega_interval", {r.theorem3->omega_interval.first, r.theorem3->omega_interval.second}}};
            if (r.theorem3_measure) j["theorem3"]["measure_lower_bound"] = *r.theorem3_measure;
        } else {
            j["theorem3"] = {{"skipped", r.theorem3_skipped}};
        }
        json conds = json::array();
        for (const auto& c : r.conditions)
            conds.push_back({{"name", c.name}, {"value", c.value}, {"bound", c.bound}, {"pass", c.pass}, {"guard_band", 1e-12}});
        j["conditions"] = conds;
        // The smallness conditions describe the theorems, not this run; they do not set the exit code.
        j["informational"] = true;
        return std::nullopt;
    }

    std::optional<StageFailure> campaign() {
        const std::string st = "campaign";
        json& j = report_["stages"][st];
        const PdmProblem problem = PdmProblem::from_space(model_->space);
        std::mt19937_64 rng(config_.seed);
        std::uniform_real_distribution<double> unit(-1.0, 1.0), scale(0.05, 0.9);
        const int nb = model_->space->block_count();
        int converged = 0, violations = 0;
        json runs = json::array();
        for (int i = 0; i < config_.campaign; ++i) {
            BlockOperator v(model_->space);
            for (int m = 0; m < nb; ++m)
                for (int n = m + 1; n < nb; ++n) {
                    Matrix b(model_->space->dim(m), model_->space->dim(n));
                    for (Eigen::Index a = 0; a < b.size(); ++a) b(a) = Complex(unit(rng), unit(rng));
                    b /= std::pow(1.0 + std::abs(m - n), 2.0);
                    v.set(m, n, b);
                    v.set(n, m, b.adjoint());
                }
            const double target = scale(rng) * problem.delta_e() / 8.0;
            v *= Complex(target / norm_inf1(v));
            PdmOptions opts;
            opts.tol = config_.tol * problem.delta_e();
            const PdmResult res = pdm_run(problem, v, opts);
            ++converged;
            const bool ok = res.certificate.all_ok();
            if (!ok) ++violations;
            runs.push_back({{"v_norm_inf1", res.certificate.v_norm},
                            {"iterations", res.certificate.iterations},
                            {"j_sh_norm", res.certificate.j_sh_norm},
                            {"all_ok", ok}});
        }
        j["seed"] = config_.seed;
        j["models"] = config_.campaign;
        j["converged"] = converged;
        j["violations"] = violations;
        j["runs"] = runs;
        if (violations) return StageFailure{exit_certificate, std::to_string(violations) + " campaign run(s) violate a certificate"};
        return std::nullopt;
    }

    std::optional<StageFailure> simulate() {
        const std::string st = "simulate";
        json& j = report_["stages"][st];
        std::vector<int> ladder = config_.ladder;
        const int base = model_->space->block_count();
        if (ladder.empty()) ladder = {base, 2 * base};
        if (model_->spec.kind == ModelKind::custom) ladder = {base};
        const int n0 = ladder.front();
        const int cutoff = n0 / 2;
        const double omega = model_->spec.omega;
        const double horizon = config_.periods * 2.0 * std::numbers::pi / omega;
        j["cutoff"] = cutoff;
        j["horizon"] = horizon;
        j["periods"] = config_.periods;
        std::ostringstream tails, energy;
        tails.precision(17);
        energy.precision(17);
        tails << "truncation\tcutoff\ttail_initial\ttail_sup\n";
        energy << "truncation\ttime\tenergy\tnorm\n";
        std::vector<double> sups;
        std::optional<StageFailure> failure;
        json rungs = json::array();
        for (int n : ladder) {
            std::unique_ptr<Model> owned;
            const Model* m = model_.get();
            if (n != base) {
                ModelSpec s = model_->spec;
                s.truncation = n;
                owned = std::make_unique<Model>(build_model(s));
                m = owned.get();
            }
            Vector psi = Vector::Zero(m->space->total_dim());
            for (int b = 0; b < std::min(n0, m->space->block_count()); ++b)
                for (int i = 0; i < m->space->dim(b); ++i) psi(m->space->offset(b) + i) = 1.0 / (1.0 + b);
            psi.normalize();
            PropagatorOptions opts;
            opts.record_every = 64;
            PropagatorState s;
            try {
                s = simulate_propagator(*m->space, m->v, omega, psi, horizon, opts);
            } catch (const IntegratorError& e) {
                return StageFailure{exit_certificate, e.what()};
            }
            const double t0 = s.tail_initial[cutoff], ts = s.tail_sup[cutoff];
            sups.push_back(ts);
            rungs.push_back({{"truncation", n},
                             {"tail_initial", quantity(t0, st, 0.0)},
                             {"tail_sup", quantity(ts, st, 0.0)},
                             {"max_norm_drift", quantity(s.max_norm_drift, st, 1e-6)},
                             {"steps", s.steps},
                             {"dt", s.dt}});
            for (std::size_t c = 0; c < s.tail_initial.size(); ++c)
                tails << n << '\t' << c << '\t' << s.tail_initial[c] << '\t' << s.tail_sup[c] << '\n';
            for (std::size_t i = 0; i < s.times.size(); ++i)
                energy << n << '\t' << s.times[i] << '\t' << s.energy[i] << '\t' << s.norm[i] << '\n';
            if (!failure && !(ts <= kTailGrowth * t0))
                failure = StageFailure{exit_certificate, "tail norm above the cutoff more than doubled"};
        }
        j["rungs"] = rungs;
        if (sups.size() > 1) {
            double worst = 0.0;
            for (std::size_t i = 1; i < sups.size(); ++i)
                worst = std::max(worst, std::abs(sups[i] - sups[0]) / std::max(sups[0], 1e-300));
            j["truncation_disagreement"] = quantity(worst, st, kTailAgreement);
            if (!failure && !(worst <= kTailAgreement))
                failure = StageFailure{exit_certificate, "tail norms disagree across the truncation ladder"};
        }
        tables_["tails.tsv"] = tails.str();
        tables_["energy.tsv"] = energy.str();
        return failure;
    }

    void write_files(RunOutcome& out) {
        if (config_.out_dir.empty()) return;
        std::error_code ec;
        std::filesystem::create_directories(config_.out_dir, ec);
        const std::filesystem::path dir(config_.out_dir);
        std::ofstream(dir / "report.json") << out.report.dump(2) << '\n';
        for (const auto& [name, body] : tables_) std::ofstream(dir / name) << body;
    }

    RunConfig config_;
    json report_;
    std::unique_ptr<Model> model_;
    std::optional<GapReport> gaps_;
    std::optional<PdmResult> static_result_;
    std::optional<RegularizedPerturbation> td_result_;
    std::map<std::string, std::string> tables_;
};

}  // namespace

void RunConfig::validate() const {
    if (!(tol > 0.0)) throw UsageError("tol must be positive");
    if (!(edge_weight > 0.0)) throw UsageError("edge_weight must be positive");
    if (!(periods > 0.0)) throw UsageError("periods must be positive");
    if (campaign < 0) throw UsageError("campaign must be nonnegative");
    if (omega0 && !(*omega0 > 0.0)) throw UsageError("omega0 must be positive");
    for (std::size_t i = 1; i < ladder.size(); ++i)
        if (ladder[i] <= ladder[i - 1]) throw UsageError("the truncation ladder must be strictly increasing");
    if (!ladder.empty() && ladder.front() < 2) throw UsageError("ladder truncations must be at least 2");
    for (const auto& s : stages)
        if (std::find(kStages.begin(), kStages.end(), s) == kStages.end()) throw UsageError("unknown stage '" + s + "'");
}

RunConfig parse_config(std::istream& in, const std::string& source) {
    RunConfig c;
    c.source = source;
    bool stages_given = false;
    auto handler = [&](const std::string& key, const std::vector<std::string>& args, int line) {
        auto one = [&]() -> const std::string& {
            if (args.size() != 1) throw IngestError("'" + key + "' takes one argument", line);
            return args[0];
        };
        auto num = [&](const std::string& s) {
            char* end = nullptr;
            const double v = std::strtod(s.c_str(), &end);
            if (end == s.c_str() || *end != '\0') throw IngestError("expected a number, got '" + s + "'", line);
            return v;
        };
        auto integer = [&](const std::string& s) {
            const double v = num(s);
            if (v != std::floor(v)) throw IngestError("expected an integer, got '" + s + "'", line);
            return static_cast<long long>(v);
        };
        if (key == "stages") {
            if (!stages_given) c.stages.clear();
            stages_given = true;
            for (const auto& a : args) {
                if (std::find(kStages.begin(), kStages.end(), a) == kStages.end())
                    throw IngestError("unknown stage '" + a + "'", line);
                c.stages.insert(a);
            }
        } else if (key == "tol") {
            c.tol = num(one());
        } else if (key == "ladder") {
            c.ladder.clear();
            for (const auto& a : args) c.ladder.push_back(static_cast<int>(integer(a)));
        } else if (key == "out") {
            c.out_dir = one();
        } else if (key == "seed") {
            c.seed = static_cast<std::uint64_t>(integer(one()));
        } else if (key == "unsafe_thresholds") {
            c.unsafe = integer(one()) != 0;
        } else if (key == "omega0") {
            c.omega0 = num(one());
        } else if (key == "periods") {
            c.periods = num(one());
        } else if (key == "campaign") {
            c.campaign = static_cast<int>(integer(one()));
        } else if (key == "edge_weight") {
            c.edge_weight = num(one());
        } else {
            return false;
        }
        return true;
    };
    c.model = read_model(in, handler);
    try {
        c.validate();
    } catch (const UsageError& e) {
        throw IngestError(e.what(), 0);
    }
    return c;
}

RunConfig read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open '" + path + "'", 0);
    return parse_config(in, path);
}

std::string default_out_dir() {
    const char* env = std::getenv("PDM_OUT_DIR");
    return env && *env ? env : "pdm_out";
}

RunOutcome run(const RunConfig& config) { return Runner(config).execute(); }

}  // namespace pdm
