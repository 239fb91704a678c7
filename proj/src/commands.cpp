#include "rcrte/commands.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>

#include "rcrte/dataset_io.hpp"
#include "rcrte/errors.hpp"
#include "rcrte/evaluation.hpp"
#include "rcrte/model_io.hpp"
#include "rcrte/prediction.hpp"
#include "rcrte/synthgen.hpp"

namespace rcrte {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string config_hash(const json& cfg) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(cfg.dump())));
    return buf;
}

// Every emitted table starts with a provenance comment and a header row.
std::ofstream open_table(const fs::path& path, const json& cfg, const std::string& header) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write output file: " + path.string());
    out << std::setprecision(17);
    out << "# rcrte " << kVersion << " seed=" << cfg.at("seed").get<std::uint64_t>()
        << " config=" << config_hash(cfg) << "\n";
    out << header << "\n";
    return out;
}

fs::path out_path(const json& cfg, const std::string& name) {
    fs::path dir(cfg.at("out_dir").get<std::string>());
    if (!dir.empty()) fs::create_directories(dir);
    return dir / name;
}

void deep_merge(json& base, const json& overlay) {
    if (!overlay.is_object() || !base.is_object()) {
        base = overlay;
        return;
    }
    for (const auto& [key, value] : overlay.items()) {
        if (base.contains(key) && base[key].is_object() && value.is_object())
            deep_merge(base[key], value);
        else
            base[key] = value;
    }
}

GenConfig gen_config_from_json(const json& g, std::uint64_t seed) {
    GenConfig cfg = GenConfig::defaults();
    cfg.seed = seed;
    cfg.n = g.at("n").get<int>();
    cfg.q_count = g.at("q").get<int>();
    cfg.p = g.at("p").get<int>();
    cfg.repair_mode = repair_mode_from_string(g.at("repair").get<std::string>());
    cfg.params.xi = g.at("xi").get<double>();
    cfg.params.alpha = g.at("alpha").get<std::vector<double>>();
    cfg.params.beta_rcr = g.at("beta_rcr").get<std::vector<std::vector<double>>>();
    cfg.params.gamma = g.at("gamma").get<std::vector<double>>();
    cfg.params.beta_te = g.at("beta_te").get<std::vector<double>>();
    cfg.weibull_rcr.clear();
    for (const auto& row : g.at("weibull_rcr"))
        cfg.weibull_rcr.push_back({row.at(0).get<double>(), row.at(1).get<double>()});
    cfg.weibull_te = {g.at("weibull_te").at(0).get<double>(), g.at("weibull_te").at(1).get<double>()};
    cfg.tau_lo = g.at("tau").at(0).get<double>();
    cfg.tau_hi = g.at("tau").at(1).get<double>();
    cfg.cov_mean = g.at("covariate_mean").get<double>();
    cfg.cov_sd = g.at("covariate_sd").get<double>();
    return cfg;
}

FitConfig fit_config_from_json(const json& f) {
    FitConfig cfg;
    cfg.em_tol = f.at("em_tol").get<double>();
    cfg.em_max_iter = f.at("em_max_iter").get<int>();
    cfg.score_tol = f.at("score_tol").get<double>();
    cfg.newton_max_iter = f.at("newton_max_iter").get<int>();
    cfg.xi_min = f.at("xi_min").get<double>();
    cfg.xi_max = f.at("xi_max").get<double>();
    return cfg;
}

int run_guarded(const char* what, const std::function<int()>& body) {
    try {
        return body();
    } catch (const InputError& e) {
        std::cerr << what << ": input error: " << e.what() << "\n";
        return kExitInputError;
    } catch (const NumericalError& e) {
        std::cerr << what << ": numerical failure: " << e.what() << "\n";
        return kExitNumericalError;
    } catch (const std::exception& e) {
        std::cerr << what << ": error: " << e.what() << "\n";
        return kExitInputError;
    }
}

} // namespace

json default_config() {
    const GenConfig g = GenConfig::defaults();
    json wrcr = json::array();
    for (const auto& w : g.weibull_rcr) wrcr.push_back({w.shape, w.scale});
    return json{
        {"seed", 20201025},
        {"threads", 1},
        {"out_dir", "."},
        {"generate",
         {{"n", g.n},
          {"q", g.q_count},
          {"p", g.p},
          {"repair", to_string(g.repair_mode)},
          {"xi", g.params.xi},
          {"alpha", g.params.alpha},
          {"beta_rcr", g.params.beta_rcr},
          {"gamma", g.params.gamma},
          {"beta_te", g.params.beta_te},
          {"weibull_rcr", wrcr},
          {"weibull_te", {g.weibull_te.shape, g.weibull_te.scale}},
          {"tau", {g.tau_lo, g.tau_hi}},
          {"covariate_mean", g.cov_mean},
          {"covariate_sd", g.cov_sd},
          {"dataset_file", "dataset.jsonl"},
          {"truth_file", "truth.jsonl"}}},
        {"fit",
         {{"input", "dataset.jsonl"},
          {"model_file", "model.json"},
          {"repair", "perfect"},
          {"em_tol", 1e-7},
          {"em_max_iter", 500},
          {"score_tol", 1e-6},
          {"newton_max_iter", 100},
          {"xi_min", 1e-3},
          {"xi_max", 1e3},
          {"init_model", nullptr},
          {"trace_file", "fit_trace.csv"},
          {"ple_file", "fit_ple.csv"}}},
        {"predict",
         {{"model_file", "model.json"},
          {"unit_file", "unit.jsonl"},
          {"unit_id", nullptr},
          {"paths", 10000},
          {"horizons", json::array()},
          {"repair_override", nullptr},
          {"paths_file", "pred_paths.csv"},
          {"summary_file", "pred_summary.csv"},
          {"survival_file", "pred_survival.csv"},
          {"ttte_file", "pred_ttte.csv"}}},
        {"cv",
         {{"input", "dataset.jsonl"},
          {"k", 5},
          {"v", 0.8},
          {"horizons", {0.45, 0.50, 0.55, 0.60, 0.65, 0.70, 0.75}},
          {"paths", 500},
          {"repair", "perfect"},
          {"em_tol", 1e-7},
          {"em_max_iter", 500},
          {"score_tol", 1e-6},
          {"newton_max_iter", 100},
          {"xi_min", 1e-3},
          {"xi_max", 1e3},
          {"per_fold_file", "cv_folds.csv"},
          {"mean_file", "cv_mean.csv"}}}};
}

json resolve_config(const std::optional<std::string>& config_path,
                    std::optional<std::uint64_t> seed_override,
                    std::optional<int> threads_override,
                    std::optional<std::string> out_override) {
    json cfg = default_config();
    if (const char* env = std::getenv("RCRTE_OUT")) cfg["out_dir"] = env;
    if (config_path) {
        std::ifstream in(*config_path);
        if (!in) throw InputError("cannot open config file: " + *config_path);
        json overlay;
        try {
            in >> overlay;
        } catch (const json::exception& e) {
            throw InputError(std::string("config file: ") + e.what());
        }
        deep_merge(cfg, overlay);
    }
    if (seed_override) cfg["seed"] = *seed_override;
    if (threads_override) cfg["threads"] = *threads_override;
    if (out_override) cfg["out_dir"] = *out_override;
    return cfg;
}

int cmd_print_defaults(std::ostream& out) {
    out << default_config().dump(2) << "\n";
    return kExitOk;
}

int cmd_generate(const json& cfg) {
    return run_guarded("generate", [&]() {
        const json& g = cfg.at("generate");
        const GenConfig gen = gen_config_from_json(g, cfg.at("seed").get<std::uint64_t>());
        const GeneratedData out = generate_dataset(gen);

        const auto dataset_path = out_path(cfg, g.at("dataset_file").get<std::string>());
        save_dataset_jsonl(dataset_path.string(), out.data);
        const auto truth_path = out_path(cfg, g.at("truth_file").get<std::string>());
        save_truth_jsonl(truth_path.string(), out.truth);

        std::size_t n_te = 0, n_events = 0;
        for (const auto& u : out.data.units) {
            n_te += u.te_observed();
            n_events += u.events.size();
        }
        std::cout << "generated " << out.data.units.size() << " units (Q=" << out.data.q_count
                  << ", p=" << out.data.p << ")\n"
                  << "terminal-event fraction: "
                  << static_cast<double>(n_te) / static_cast<double>(out.data.units.size())
                  << "\nmean events per unit: "
                  << static_cast<double>(n_events) / static_cast<double>(out.data.units.size())
                  << "\ndataset: " << dataset_path.string() << "\ntruth:   " << truth_path.string()
                  << "\n";
        return kExitOk;
    });
}

int cmd_fit(const json& cfg) {
    return run_guarded("fit", [&]() {
        const json& f = cfg.at("fit");
        const Dataset data = load_dataset_auto(
            (fs::path(cfg.at("out_dir").get<std::string>()) / f.at("input").get<std::string>())
                    .string());
        FitConfig fit_cfg = fit_config_from_json(f);
        if (!f.at("init_model").is_null()) {
            const FittedModel init = load_model_json(
                (fs::path(cfg.at("out_dir").get<std::string>()) /
                 f.at("init_model").get<std::string>())
                    .string());
            fit_cfg.init = init.params;
            if (static_cast<int>(init.frailty.size()) ==
                static_cast<int>(data.units.size())) {
                fit_cfg.init_z = std::vector<double>{};
                for (const auto& r : init.frailty) fit_cfg.init_z->push_back(r.mean);
            }
        }
        const RepairMode mode = repair_mode_from_string(f.at("repair").get<std::string>());
        const FitResult result = fit_em(data, mode, fit_cfg);

        save_model_json(out_path(cfg, f.at("model_file").get<std::string>()).string(),
                        result.model);

        auto trace = open_table(out_path(cfg, f.at("trace_file").get<std::string>()), cfg,
                                "iteration,max_param_change,xi,max_score_residual");
        for (const auto& row : result.trace)
            trace << row.iteration << ',' << row.max_param_change << ',' << row.xi << ','
                  << row.max_score_residual << "\n";

        auto ple = open_table(out_path(cfg, f.at("ple_file").get<std::string>()), cfg,
                              "curve,time,survival");
        for (int q = 1; q <= result.model.meta.q_count; ++q) {
            const auto surv = product_limit_survival(
                result.model.baselines_rcr[static_cast<std::size_t>(q - 1)]);
            for (std::size_t k = 0; k < surv.times.size(); ++k)
                ple << "rcr" << q << ',' << surv.times[k] << ',' << surv.values[k] << "\n";
        }
        {
            const auto surv = product_limit_survival(result.model.baseline_te);
            for (std::size_t k = 0; k < surv.times.size(); ++k)
                ple << "te," << surv.times[k] << ',' << surv.values[k] << "\n";
        }

        for (const auto& w : result.warnings) std::cerr << "fit: warning: " << w << "\n";
        std::cout << "xi_hat: " << result.model.params.xi << "\n"
                  << "iterations: " << result.iterations
                  << (result.converged ? " (converged)" : " (NOT converged)") << "\n"
                  << "max score residual: " << result.max_score_residual << "\n";
        return result.converged ? kExitOk : kExitNonConvergence;
    });
}

int cmd_predict(const json& cfg) {
    return run_guarded("predict", [&]() {
        const json& pr = cfg.at("predict");
        const fs::path dir(cfg.at("out_dir").get<std::string>());
        FittedModel model = load_model_json((dir / pr.at("model_file").get<std::string>()).string());
        if (!pr.at("repair_override").is_null()) {
            model.repair_mode =
                repair_mode_from_string(pr.at("repair_override").get<std::string>());
            std::cerr << "predict: warning: repair mode overridden to "
                      << to_string(model.repair_mode) << "\n";
        }

        Dataset units = load_dataset_auto((dir / pr.at("unit_file").get<std::string>()).string());
        if (units.units.empty()) throw InputError("predict: unit file holds no units");
        if (units.q_count < model.meta.q_count)
            for (auto& u : units.units) u.q_count = model.meta.q_count;
        else if (units.q_count > model.meta.q_count)
            throw InputError("predict: unit file has more risks than the fitted model");
        UnitHistory unit = units.units.front();
        if (!pr.at("unit_id").is_null()) {
            const std::string want = pr.at("unit_id").get<std::string>();
            bool found = false;
            for (const auto& u : units.units)
                if (u.unit_id == want) {
                    unit = u;
                    found = true;
                }
            if (!found) throw InputError("predict: unit_id not found in unit file: " + want);
        }

        const int n_paths = pr.at("paths").get<int>();
        const auto seed = cfg.at("seed").get<std::uint64_t>();
        const int threads = cfg.at("threads").get<int>();
        const double z_hat = predict_frailty(unit, model);
        const PredictiveDistribution dist =
            simulate_ensemble_with_z(unit, model, z_hat, n_paths, seed, threads);

        auto paths = open_table(out_path(cfg, pr.at("paths_file").get<std::string>()), cfg,
                                [&] {
                                    std::string h = "path,seed,ttte,te_calendar,n_events";
                                    for (int q = 1; q <= unit.q_count; ++q)
                                        h += ",count_q" + std::to_string(q);
                                    h += ",events";
                                    return h;
                                }());
        for (std::size_t k = 0; k < dist.paths.size(); ++k) {
            const auto& path = dist.paths[k];
            paths << k << ',' << path.rng_seed << ',' << path.ttte_beyond_tau << ','
                  << path.te_calendar_time << ',' << path.events.size();
            std::vector<int> c(static_cast<std::size_t>(unit.q_count), 0);
            for (const auto& e : path.events) ++c[static_cast<std::size_t>(e.risk - 1)];
            for (int q = 0; q < unit.q_count; ++q) paths << ',' << c[static_cast<std::size_t>(q)];
            paths << ',';
            for (std::size_t e = 0; e < path.events.size(); ++e) {
                if (e) paths << ';';
                paths << path.events[e].time << ':' << path.events[e].risk;
            }
            paths << "\n";
        }

        auto summary = open_table(out_path(cfg, pr.at("summary_file").get<std::string>()), cfg,
                                  "statistic,value");
        const EnsembleSummary& s = dist.summary;
        summary << "tau0," << dist.tau0 << "\n"
                << "z_hat," << z_hat << "\n"
                << "paths," << n_paths << "\n"
                << "mean_ttte," << s.mean_ttte << "\n"
                << "median_ttte," << s.median_ttte << "\n"
                << "pct_2_5," << s.pct_2_5 << "\n"
                << "pct_97_5," << s.pct_97_5 << "\n"
                << "mean_simulated_events," << s.mean_total_events << "\n"
                << "median_simulated_events," << s.median_total_events << "\n";
        EventCounts observed = counts_at(unit, unit.monitoring_time);
        std::size_t n_observed = unit.events.size();
        summary << "observed_events," << n_observed << "\n"
                << "mean_total_events_with_observed,"
                << s.mean_total_events + static_cast<double>(n_observed) << "\n";
        for (int q = 1; q <= unit.q_count; ++q) {
            summary << "mean_count_q" << q << ','
                    << s.mean_count_per_risk[static_cast<std::size_t>(q - 1)] << "\n"
                    << "median_count_q" << q << ','
                    << s.median_count_per_risk[static_cast<std::size_t>(q - 1)] << "\n"
                    << "observed_count_q" << q << ','
                    << observed[static_cast<std::size_t>(q - 1)] << "\n";
        }

        std::vector<double> horizons;
        if (pr.at("horizons").is_array() && !pr.at("horizons").empty()) {
            horizons = pr.at("horizons").get<std::vector<double>>();
        } else {
            double max_ttte = 0.0;
            for (const auto& path : dist.paths)
                max_ttte = std::max(max_ttte, path.ttte_beyond_tau);
            for (int i = 0; i <= 20; ++i)
                horizons.push_back(max_ttte * static_cast<double>(i) / 20.0);
        }
        auto surv = open_table(out_path(cfg, pr.at("survival_file").get<std::string>()), cfg,
                               "s,survival");
        for (double s_h : horizons) surv << s_h << ',' << predicted_survival(dist, s_h) << "\n";

        auto ttte = open_table(out_path(cfg, pr.at("ttte_file").get<std::string>()), cfg, "ttte");
        for (const auto& path : dist.paths) ttte << path.ttte_beyond_tau << "\n";

        std::cout << "z_hat: " << z_hat << "\nmean TTTE beyond tau0: " << s.mean_ttte
                  << "\n2.5/97.5 percentiles: " << s.pct_2_5 << " / " << s.pct_97_5 << "\n";
        return kExitOk;
    });
}

int cmd_cv(const json& cfg) {
    return run_guarded("cv", [&]() {
        const json& c = cfg.at("cv");
        const Dataset data = load_dataset_auto(
            (fs::path(cfg.at("out_dir").get<std::string>()) / c.at("input").get<std::string>())
                    .string());
        CvConfig cv;
        cv.k = c.at("k").get<int>();
        cv.v = c.at("v").get<double>();
        cv.horizons = c.at("horizons").get<std::vector<double>>();
        cv.n_paths = c.at("paths").get<int>();
        cv.seed = cfg.at("seed").get<std::uint64_t>();
        cv.threads = cfg.at("threads").get<int>();
        cv.repair_mode = repair_mode_from_string(c.at("repair").get<std::string>());
        cv.fit = fit_config_from_json(c);

        const CvResult result = k_fold_cv(data, cv);
        for (const auto& w : result.warnings) std::cerr << "cv: warning: " << w << "\n";

        auto folds = open_table(out_path(cfg, c.at("per_fold_file").get<std::string>()), cfg,
                                "fold,v,s,score,n_at_risk,n_effective");
        for (const auto& row : result.per_fold)
            folds << row.fold << ',' << row.brier.v << ',' << row.brier.horizon << ','
                  << row.brier.score << ',' << row.brier.n_at_risk << ','
                  << row.brier.n_effective << "\n";

        auto mean = open_table(out_path(cfg, c.at("mean_file").get<std::string>()), cfg,
                               "s,mean_score");
        for (std::size_t h = 0; h < result.horizons.size(); ++h)
            mean << result.horizons[h] << ',' << result.mean_score[h] << "\n";

        std::cout << "mean Brier scores:";
        for (std::size_t h = 0; h < result.horizons.size(); ++h)
            std::cout << ' ' << result.horizons[h] << ':' << result.mean_score[h];
        std::cout << "\n";
        return kExitOk;
    });
}

} // namespace rcrte
