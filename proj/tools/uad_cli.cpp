// Command-line front end: train a detector, run detection on batch files,
// print coincidence-test tables, generate scenario datasets, and rerun the
// bundled experiments end to end.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "uad/csv.hpp"
#include "uad/detector.hpp"
#include "uad/errors.hpp"
#include "uad/eval.hpp"
#include "uad/run_config.hpp"
#include "uad/scenarios.hpp"
#include "uad/uniformity.hpp"
#include "uad/wigan.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> overrides;  // key=value pairs from --set
    std::optional<std::uint64_t> seed_flag;
};

// Precedence: --seed flag > --set/config file > UAD_SEED env > built-in 0.
uad::KeyValueConfig resolve_config(const CommonOpts& opts) {
    uad::KeyValueConfig kv;
    if (!opts.config_path.empty()) kv = uad::KeyValueConfig::parse_file(opts.config_path);
    for (const auto& item : opts.overrides) {
        auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0)
            throw uad::ConfigError("--set expects key=value, got '" + item + "'");
        kv.set(item.substr(0, eq), item.substr(eq + 1));
    }
    if (opts.seed_flag) {
        kv.set("seed", std::to_string(*opts.seed_flag));
    } else if (!kv.has("seed")) {
        if (const char* env = std::getenv("UAD_SEED")) kv.set("seed", env);
    }
    return kv;
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "key = value config file");
    cmd->add_option("--set", opts.overrides, "override a config key (key=value), repeatable");
    cmd->add_option("--seed", opts.seed_flag, "seed override (beats config and UAD_SEED)");
}

void write_resolved_config(const uad::RunConfig& rc, const fs::path& path,
                           const std::vector<std::pair<std::string, std::string>>& extra = {}) {
    uad::KeyValueConfig kv = uad::to_key_value(rc);
    for (const auto& [k, v] : extra) kv.set(k, v);
    kv.write_file(path);
}

uad::detector::DetectorModel train_model(const Eigen::MatrixXd& data, const uad::RunConfig& rc,
                                         uad::wigan::TrainingTrace* trace_out) {
    uad::wigan::TrainResult result = uad::wigan::train(data, rc.train);
    if (trace_out) *trace_out = std::move(result.trace);
    return uad::detector::make_mlp_detector(std::move(result.generator), rc.levels_m,
                                            rc.sample_n, rc.fp_level, rc.epsilon,
                                            rc.train.seed, uad::resolved_hash(rc));
}

int cmd_train(const std::string& data_path, const CommonOpts& opts, const std::string& out_path,
              std::string trace_path) {
    uad::RunConfig rc = uad::run_config_from(resolve_config(opts));
    uad::csv::Table table = uad::csv::read_table(data_path);
    uad::wigan::TrainingTrace trace;
    uad::detector::DetectorModel model = train_model(table.values, rc, &trace);
    uad::detector::save_model(model, out_path);
    if (trace_path.empty()) trace_path = out_path + ".trace.csv";
    uad::wigan::write_trace_csv(trace, trace_path);
    write_resolved_config(rc, out_path + ".config");
    std::cout << "model: " << out_path << "\n"
              << "trace: " << trace_path << "\n"
              << "threshold: " << model.test.threshold_t << "\n";
    return 0;
}

int cmd_detect(const std::string& model_path, const std::string& batches_path,
               const std::string& out_path) {
    uad::detector::DetectorModel model = uad::detector::load_model(model_path);
    uad::csv::Table table = uad::csv::read_table(batches_path);
    const int n = model.test.sample_n;
    if (table.values.cols() != model.input_dim)
        throw uad::DataError("batch file has " + std::to_string(table.values.cols()) +
                             " columns, model expects " + std::to_string(model.input_dim));
    if (table.values.rows() % n != 0)
        throw uad::DataError("row count " + std::to_string(table.values.rows()) +
                             " is not a multiple of the batch size " + std::to_string(n));
    const int batches = static_cast<int>(table.values.rows()) / n;
    uad::csv::AtomicWriter writer(out_path);
    auto& out = writer.stream();
    out << "batch_id,k1,threshold,decision\n";
    int anomalies = 0;
    for (int b = 0; b < batches; ++b) {
        Eigen::MatrixXd batch = table.values.middleRows(static_cast<Eigen::Index>(b) * n, n);
        uad::detector::Verdict v = uad::detector::detect(model, batch);
        anomalies += v.anomaly ? 1 : 0;
        out << b << ',' << v.k1_value << ',' << v.threshold_used << ','
            << (v.anomaly ? "anomaly" : "normal") << '\n';
    }
    writer.commit();
    std::cout << "batches: " << batches << "\nanomalies: " << anomalies << "\nverdicts: "
              << out_path << "\n";
    return 0;
}

int cmd_pmf(int levels_m, int sample_n, const std::string& out_path) {
    uad::uniformity::CoincidencePmf pmf = uad::uniformity::coincidence_pmf(levels_m, sample_n);
    std::vector<double> probs = pmf.probs_double();
    auto emit = [&](std::ostream& out) {
        out << "k,prob\n";
        for (std::size_t k = 0; k < probs.size(); ++k)
            out << k << ',' << uad::csv::fmt_g17(probs[k]) << '\n';
    };
    if (out_path.empty()) {
        emit(std::cout);
    } else {
        uad::csv::AtomicWriter writer(out_path);
        emit(writer.stream());
        writer.commit();
    }
    return 0;
}

int cmd_threshold(int levels_m, int sample_n, double alpha) {
    std::cout << uad::uniformity::threshold_for(levels_m, sample_n, alpha) << "\n";
    return 0;
}

uad::eval::ExperimentPlan make_plan(const std::string& kind, const uad::RunConfig& rc,
                                    int batches, const std::string& grid_config) {
    uad::eval::ExperimentPlan plan;
    if (kind == "case1" || kind == "1") {
        plan.scenario = uad::eval::GaussianSweep{1};
    } else if (kind == "case2" || kind == "2") {
        plan.scenario = uad::eval::GaussianSweep{2};
    } else if (kind == "grid") {
        uad::scenarios::GridScenario scenario =
            grid_config.empty() ? uad::scenarios::default_grid_scenario()
                                : uad::scenarios::load_grid_scenario(grid_config);
        plan.scenario = uad::eval::GridSweep{std::move(scenario)};
    } else {
        throw uad::ConfigError("unknown scenario kind '" + kind +
                               "' (expected case1, case2, or grid)");
    }
    plan.batches_per_class = batches;
    plan.batch_n = rc.sample_n;
    plan.seed = rc.train.seed;
    uad::eval::validate(plan);
    return plan;
}

void write_stacked_batches(const uad::eval::ExperimentPlan& plan, bool anomalous,
                           const fs::path& data_path, const fs::path& params_path) {
    uad::csv::AtomicWriter writer(data_path);
    auto& out = writer.stream();
    std::vector<double> params;
    for (int b = 0; b < plan.batches_per_class; ++b) {
        double param = 0.0;
        Eigen::MatrixXd batch = anomalous ? uad::eval::h1_batch(plan, b, &param)
                                          : uad::eval::h0_batch(plan, b);
        for (Eigen::Index r = 0; r < batch.rows(); ++r) {
            for (Eigen::Index c = 0; c < batch.cols(); ++c) {
                if (c) out << ',';
                out << uad::csv::fmt_g17(batch(r, c));
            }
            out << '\n';
        }
        params.push_back(param);
    }
    writer.commit();
    if (anomalous && !params_path.empty() &&
        std::holds_alternative<uad::eval::GaussianSweep>(plan.scenario)) {
        uad::csv::AtomicWriter pwriter(params_path);
        auto& pout = pwriter.stream();
        pout << "batch_id,param\n";
        for (std::size_t b = 0; b < params.size(); ++b)
            pout << b << ',' << uad::csv::fmt_g17(params[b]) << '\n';
        pwriter.commit();
    }
}

int cmd_scenario(const std::string& kind, const CommonOpts& opts, const std::string& out_dir,
                 int batches, int train_count, const std::string& grid_config) {
    uad::KeyValueConfig kv = resolve_config(opts);
    if (batches > 0) kv.set_int("batches_per_class", batches);
    if (train_count > 0) kv.set_int("train_count", train_count);
    if (!grid_config.empty()) kv.set("grid_config", grid_config);
    uad::RunConfig rc = uad::run_config_from(kv);
    const int n_batches = static_cast<int>(kv.get_int("batches_per_class", 200));
    const int n_train = static_cast<int>(kv.get_int("train_count", 10000));
    if (n_batches < 1 || n_train < 1)
        throw uad::ConfigError("batches_per_class and train_count must be >= 1");
    uad::eval::ExperimentPlan plan =
        make_plan(kind, rc, n_batches, kv.get_string("grid_config", ""));

    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    uad::csv::write_table(dir / "train.csv", uad::eval::training_data(plan, n_train));
    const bool is_grid = std::holds_alternative<uad::eval::GridSweep>(plan.scenario);
    const fs::path h0_path = dir / (is_grid ? "clean.csv" : "h0.csv");
    const fs::path h1_path = dir / (is_grid ? "attacked.csv" : "h1.csv");
    write_stacked_batches(plan, false, h0_path, "");
    write_stacked_batches(plan, true, h1_path, dir / "h1_params.csv");
    if (is_grid)
        uad::scenarios::save_grid_scenario(std::get<uad::eval::GridSweep>(plan.scenario).scenario,
                                           dir / "grid.config");
    write_resolved_config(rc, dir / "run.config",
                          {{"scenario", uad::eval::scenario_label(plan)},
                           {"batches_per_class", std::to_string(n_batches)},
                           {"train_count", std::to_string(n_train)}});
    std::cout << "train: " << (dir / "train.csv").string() << "\n"
              << "h0: " << h0_path.string() << "\nh1: " << h1_path.string() << "\n";
    return 0;
}

int cmd_reproduce(const std::string& kind, const CommonOpts& opts, const std::string& out_dir,
                  int batches, int train_count, const std::string& grid_config,
                  const std::string& model_path) {
    uad::KeyValueConfig kv = resolve_config(opts);
    if (batches > 0) kv.set_int("batches_per_class", batches);
    if (train_count > 0) kv.set_int("train_count", train_count);
    if (!grid_config.empty()) kv.set("grid_config", grid_config);
    uad::RunConfig rc = uad::run_config_from(kv);
    const int n_batches = static_cast<int>(kv.get_int("batches_per_class", 2000));
    const int n_train = static_cast<int>(kv.get_int("train_count", 10000));
    if (n_batches < 1 || n_train < 1)
        throw uad::ConfigError("batches_per_class and train_count must be >= 1");
    uad::eval::ExperimentPlan plan =
        make_plan(kind, rc, n_batches, kv.get_string("grid_config", ""));
    const bool is_grid = std::holds_alternative<uad::eval::GridSweep>(plan.scenario);

    fs::create_directories(out_dir);
    const fs::path dir(out_dir);

    std::vector<uad::eval::DetectorEntry> detectors;
    if (is_grid) {
        const auto& scenario = std::get<uad::eval::GridSweep>(plan.scenario).scenario;
        uad::detector::GaussianCdfMap oracle =
            uad::scenarios::gaussian_cdf_oracle_for_grid(scenario.grid);
        detectors.push_back({"uad_oracle", uad::eval::DetectorKind::UadModel,
                             uad::detector::make_gaussian_cdf_detector(
                                 std::move(oracle), rc.levels_m, rc.sample_n, rc.fp_level,
                                 rc.epsilon)});
        detectors.push_back({"j_test", uad::eval::DetectorKind::JTest, {}});
        if (!model_path.empty())
            detectors.push_back({"uad", uad::eval::DetectorKind::UadModel,
                                 uad::detector::load_model(model_path)});
    } else {
        uad::detector::DetectorModel trained =
            model_path.empty()
                ? train_model(uad::eval::training_data(plan, n_train), rc, nullptr)
                : uad::detector::load_model(model_path);
        detectors.push_back({"uad", uad::eval::DetectorKind::UadModel, std::move(trained)});
        uad::detector::GaussianCdfMap oracle;
        oracle.weights = Eigen::VectorXd::Ones(1);
        detectors.push_back({"uad_oracle", uad::eval::DetectorKind::UadModel,
                             uad::detector::make_gaussian_cdf_detector(
                                 std::move(oracle), rc.levels_m, rc.sample_n, rc.fp_level,
                                 rc.epsilon)});
    }

    std::vector<uad::eval::ExperimentResult> results = uad::eval::run_experiment(plan, detectors);
    std::vector<uad::eval::SummaryRow> summary;
    for (const auto& result : results) {
        uad::eval::write_roc_csv(dir / ("roc_" + result.detector + ".csv"), result.curve);
        summary.push_back({result.detector, uad::eval::scenario_label(plan), result.curve.auc,
                           plan.batches_per_class});
    }
    uad::eval::write_summary_csv(dir / "summary.csv", summary);
    if (is_grid)
        uad::scenarios::save_grid_scenario(std::get<uad::eval::GridSweep>(plan.scenario).scenario,
                                           dir / "grid.config");
    std::vector<std::pair<std::string, std::string>> extra = {
        {"scenario", uad::eval::scenario_label(plan)},
        {"batches_per_class", std::to_string(n_batches)},
        {"train_count", std::to_string(n_train)}};
    write_resolved_config(rc, dir / "run.config", extra);
    for (const auto& row : summary)
        std::cout << row.detector << " auc: " << row.auc << "\n";
    std::cout << "summary: " << (dir / "summary.csv").string() << "\n";
    return 0;
}

int run(int argc, char** argv) {
    CLI::App app{"Universal anomaly detection: adversarially learned uniform transforms "
                 "with an exact coincidence test"};
    app.require_subcommand(1);

    // train
    auto* train = app.add_subcommand("train", "Train a detector on anomaly-free data");
    std::string train_data, train_out = "model.uadm", train_trace;
    CommonOpts train_opts;
    train->add_option("data", train_data, "CSV of anomaly-free observations (rows)")
        ->required();
    train->add_option("-o,--out", train_out, "output model path");
    train->add_option("--trace", train_trace, "training trace CSV path");
    add_common(train, train_opts);

    // detect
    auto* detect = app.add_subcommand("detect", "Score batches with a trained model");
    std::string detect_model, detect_batches, detect_out = "verdicts.csv";
    detect->add_option("model", detect_model, "model file from train")->required();
    detect->add_option("batches", detect_batches,
                       "CSV whose rows form consecutive batches of N observations")
        ->required();
    detect->add_option("-o,--out", detect_out, "verdict CSV path");

    // pmf
    auto* pmf = app.add_subcommand("pmf", "Exact null distribution of the K1 statistic");
    int pmf_m = 0, pmf_n = 0;
    std::string pmf_out;
    pmf->add_option("M", pmf_m, "alphabet size")->required();
    pmf->add_option("N", pmf_n, "batch size")->required();
    pmf->add_option("-o,--out", pmf_out, "write CSV here instead of stdout");

    // threshold
    auto* thr = app.add_subcommand("threshold", "Decision threshold for a false-positive level");
    int thr_m = 0, thr_n = 0;
    double thr_alpha = 0.0;
    thr->add_option("M", thr_m, "alphabet size")->required();
    thr->add_option("N", thr_n, "batch size")->required();
    thr->add_option("alpha", thr_alpha, "false-positive level in (0,1)")->required();

    // scenario
    auto* scen = app.add_subcommand("scenario", "Generate experiment datasets");
    std::string scen_kind, scen_dir = "scenario_out", scen_grid;
    int scen_batches = 0, scen_train = 0;
    CommonOpts scen_opts;
    scen->add_option("kind", scen_kind, "case1 | case2 | grid")->required();
    scen->add_option("-d,--out-dir", scen_dir, "output directory");
    scen->add_option("--batches", scen_batches, "batches per class");
    scen->add_option("--train-count", scen_train, "training rows to emit");
    scen->add_option("--grid-config", scen_grid, "grid scenario config file");
    add_common(scen, scen_opts);

    // reproduce
    auto* rep = app.add_subcommand("reproduce", "Run a full experiment and emit ROC/AUC");
    std::string rep_kind, rep_dir = "reproduce_out", rep_grid, rep_model;
    int rep_batches = 0, rep_train = 0;
    CommonOpts rep_opts;
    rep->add_option("kind", rep_kind, "case1 | case2 | grid")->required();
    rep->add_option("-d,--out-dir", rep_dir, "output directory");
    rep->add_option("--batches", rep_batches, "batches per class (default 2000)");
    rep->add_option("--train-count", rep_train, "training sample count (default 10000)");
    rep->add_option("--grid-config", rep_grid, "grid scenario config file");
    rep->add_option("--model", rep_model, "use this trained model instead of training");
    add_common(rep, rep_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (train->parsed()) return cmd_train(train_data, train_opts, train_out, train_trace);
    if (detect->parsed()) return cmd_detect(detect_model, detect_batches, detect_out);
    if (pmf->parsed()) return cmd_pmf(pmf_m, pmf_n, pmf_out);
    if (thr->parsed()) return cmd_threshold(thr_m, thr_n, thr_alpha);
    if (scen->parsed())
        return cmd_scenario(scen_kind, scen_opts, scen_dir, scen_batches, scen_train, scen_grid);
    if (rep->parsed())
        return cmd_reproduce(rep_kind, rep_opts, rep_dir, rep_batches, rep_train, rep_grid,
                             rep_model);
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const uad::TrainingDivergedError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const uad::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const uad::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const uad::ShapeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
