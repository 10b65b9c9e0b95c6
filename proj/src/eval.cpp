#include "uad/eval.hpp"

#include <algorithm>
#include <cmath>

#include "uad/csv.hpp"
#include "uad/errors.hpp"
#include "uad/rng.hpp"

namespace uad::eval {

namespace {

// Substream tags for per-batch seeds.
constexpr std::uint64_t kH0Stream = 10;
constexpr std::uint64_t kH1Stream = 11;
constexpr std::uint64_t kParamStream = 12;
constexpr std::uint64_t kTrainStream = 13;

}  // namespace

RocCurve roc(const std::vector<double>& h0_scores, const std::vector<double>& h1_scores,
             Orientation orientation) {
    if (h0_scores.empty() || h1_scores.empty())
        throw ShapeError("roc: both score lists must be nonempty");

    // Canonical form: larger score means more anomalous.
    const double flip = orientation == Orientation::HighIsAnomalous ? 1.0 : -1.0;
    std::vector<std::pair<double, int>> scored;  // (score, label 1 = anomalous)
    scored.reserve(h0_scores.size() + h1_scores.size());
    for (double s : h0_scores) {
        if (std::isnan(s)) throw ShapeError("roc: NaN score");
        scored.emplace_back(flip * s, 0);
    }
    for (double s : h1_scores) {
        if (std::isnan(s)) throw ShapeError("roc: NaN score");
        scored.emplace_back(flip * s, 1);
    }
    std::sort(scored.begin(), scored.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });

    const double n0 = static_cast<double>(h0_scores.size());
    const double n1 = static_cast<double>(h1_scores.size());
    RocCurve curve;
    curve.fpr.push_back(0.0);
    curve.tpr.push_back(0.0);
    std::size_t fp = 0, tp = 0, i = 0;
    while (i < scored.size()) {
        const double value = scored[i].first;
        while (i < scored.size() && scored[i].first == value) {
            if (scored[i].second) ++tp;
            else ++fp;
            ++i;
        }
        curve.fpr.push_back(static_cast<double>(fp) / n0);
        curve.tpr.push_back(static_cast<double>(tp) / n1);
    }

    double area = 0.0;
    for (std::size_t k = 1; k < curve.fpr.size(); ++k)
        area += (curve.fpr[k] - curve.fpr[k - 1]) * (curve.tpr[k] + curve.tpr[k - 1]) / 2.0;
    curve.auc = area;
    return curve;
}

void write_roc_csv(const std::filesystem::path& path, const RocCurve& curve) {
    csv::AtomicWriter writer(path);
    auto& out = writer.stream();
    out << "fpr,tpr\n";
    for (std::size_t i = 0; i < curve.fpr.size(); ++i)
        out << csv::fmt_g17(curve.fpr[i]) << ',' << csv::fmt_g17(curve.tpr[i]) << '\n';
    out << "auc=" << csv::fmt_g17(curve.auc) << '\n';
    writer.commit();
}

void validate(const ExperimentPlan& plan) {
    if (plan.batches_per_class < 1)
        throw ConfigError("experiment: batches_per_class must be >= 1");
    if (plan.batch_n < 1) throw ConfigError("experiment: batch_n must be >= 1");
    if (const auto* g = std::get_if<GaussianSweep>(&plan.scenario)) {
        if (g->case_id != 1 && g->case_id != 2)
            throw ConfigError("experiment: gaussian case must be 1 or 2");
        if (!(g->mu_lo < g->mu_hi) || !(g->sigma_lo < g->sigma_hi))
            throw ConfigError("experiment: parameter intervals must be nonempty");
        if (!(g->sigma_lo > 0.0))
            throw ConfigError("experiment: sigma interval must be positive");
        if (g->fixed_param && g->case_id == 2 && !(g->fixed_value > 0.0))
            throw ConfigError("experiment: fixed sigma must be positive");
    } else {
        scenarios::validate_grid(std::get<GridSweep>(plan.scenario).scenario.grid);
    }
}

std::string scenario_label(const ExperimentPlan& plan) {
    if (const auto* g = std::get_if<GaussianSweep>(&plan.scenario))
        return g->case_id == 1 ? "case1" : "case2";
    return "grid";
}

Eigen::MatrixXd h0_batch(const ExperimentPlan& plan, int index) {
    const std::uint64_t seed = derive_seed(plan.seed, kH0Stream, static_cast<std::uint64_t>(index));
    if (const auto* g = std::get_if<GaussianSweep>(&plan.scenario)) {
        scenarios::GaussianScenario sc{g->case_id, 0.0, 1.0, seed};
        return scenarios::gaussian_batch(sc, plan.batch_n);
    }
    const auto& grid = std::get<GridSweep>(plan.scenario).scenario.grid;
    Rng rng(seed);
    return scenarios::measurement_batch(grid, plan.batch_n, rng);
}

Eigen::MatrixXd h1_batch(const ExperimentPlan& plan, int index, double* param_out) {
    const std::uint64_t seed = derive_seed(plan.seed, kH1Stream, static_cast<std::uint64_t>(index));
    if (const auto* g = std::get_if<GaussianSweep>(&plan.scenario)) {
        double mu = 0.0, sigma = 1.0, param;
        Rng prng(derive_seed(plan.seed, kParamStream, static_cast<std::uint64_t>(index)));
        if (g->fixed_param) {
            param = g->fixed_value;
            if (g->case_id == 1 && g->random_sign && prng.uniform01() < 0.5) param = -param;
        } else {
            param = g->case_id == 1 ? prng.uniform(g->mu_lo, g->mu_hi)
                                    : prng.uniform(g->sigma_lo, g->sigma_hi);
        }
        if (g->case_id == 1) mu = param;
        else sigma = param;
        if (param_out) *param_out = param;
        scenarios::GaussianScenario sc{g->case_id, mu, sigma, seed};
        return scenarios::gaussian_batch(sc, plan.batch_n);
    }
    const auto& sweep = std::get<GridSweep>(plan.scenario);
    Rng rng(seed);
    Eigen::MatrixXd clean = scenarios::measurement_batch(sweep.scenario.grid, plan.batch_n, rng);
    if (param_out) *param_out = 0.0;
    return scenarios::inject_attack(clean, sweep.scenario.grid, sweep.scenario.attack);
}

Eigen::MatrixXd training_data(const ExperimentPlan& plan, int count) {
    validate(plan);
    const std::uint64_t seed = derive_seed(plan.seed, kTrainStream);
    if (const auto* g = std::get_if<GaussianSweep>(&plan.scenario)) {
        scenarios::GaussianScenario sc{g->case_id, 0.0, 1.0, seed};
        return scenarios::gaussian_batch(sc, count);
    }
    const auto& grid = std::get<GridSweep>(plan.scenario).scenario.grid;
    Rng rng(seed);
    return scenarios::measurement_batch(grid, count, rng);
}

namespace {

double uad_score(const detector::DetectorModel& model, const Eigen::MatrixXd& batch) {
    std::vector<int> levels = detector::transform(model, batch);
    return static_cast<double>(uniformity::k1_statistic(levels));
}

double jtest_score(const scenarios::GridScenario& scenario, const Eigen::MatrixXd& batch) {
    double total = 0.0;
    for (Eigen::Index r = 0; r < batch.rows(); ++r) {
        Eigen::VectorXd z = batch.row(r).transpose();
        total += scenarios::jx_test(z, scenario.grid, scenario.j_fp_level).j_value;
    }
    return total / static_cast<double>(batch.rows());
}

}  // namespace

ScoredBatches score_batches(const ExperimentPlan& plan, const DetectorEntry& entry) {
    validate(plan);
    const bool is_grid = std::holds_alternative<GridSweep>(plan.scenario);
    if (entry.kind == DetectorKind::JTest && !is_grid)
        throw ConfigError("experiment: the residual test applies only to the grid scenario");
    if (entry.kind == DetectorKind::UadModel) {
        const int want = is_grid
            ? static_cast<int>(std::get<GridSweep>(plan.scenario).scenario.grid.h.rows())
            : 1;
        if (entry.model.input_dim != want)
            throw ShapeError("experiment: detector input dimension does not match scenario");
        if (entry.model.test.sample_n != plan.batch_n)
            throw ConfigError("experiment: detector batch size N does not match plan batch_n");
    }

    ScoredBatches out;
    out.orientation = entry.kind == DetectorKind::UadModel ? Orientation::LowIsAnomalous
                                                           : Orientation::HighIsAnomalous;
    out.h0_scores.reserve(plan.batches_per_class);
    out.h1_scores.reserve(plan.batches_per_class);
    const bool record_params = !is_grid;
    for (int i = 0; i < plan.batches_per_class; ++i) {
        Eigen::MatrixXd h0 = h0_batch(plan, i);
        double param = 0.0;
        Eigen::MatrixXd h1 = h1_batch(plan, i, &param);
        if (entry.kind == DetectorKind::UadModel) {
            out.h0_scores.push_back(uad_score(entry.model, h0));
            out.h1_scores.push_back(uad_score(entry.model, h1));
        } else {
            const auto& scenario = std::get<GridSweep>(plan.scenario).scenario;
            out.h0_scores.push_back(jtest_score(scenario, h0));
            out.h1_scores.push_back(jtest_score(scenario, h1));
        }
        if (record_params) out.h1_params.push_back(param);
    }
    return out;
}

std::vector<ExperimentResult> run_experiment(const ExperimentPlan& plan,
                                             const std::vector<DetectorEntry>& detectors) {
    if (detectors.empty()) throw ConfigError("experiment: no detectors given");
    std::vector<ExperimentResult> results;
    results.reserve(detectors.size());
    for (const auto& entry : detectors) {
        ExperimentResult result;
        result.detector = entry.name;
        result.scores = score_batches(plan, entry);
        result.curve = roc(result.scores.h0_scores, result.scores.h1_scores,
                           result.scores.orientation);
        results.push_back(std::move(result));
    }
    return results;
}

void write_summary_csv(const std::filesystem::path& path,
                       const std::vector<SummaryRow>& rows) {
    csv::AtomicWriter writer(path);
    auto& out = writer.stream();
    out << "detector,scenario,auc,batches\n";
    for (const auto& row : rows)
        out << row.detector << ',' << row.scenario << ',' << csv::fmt_g17(row.auc) << ','
            << row.batches << '\n';
    writer.commit();
}

}  // namespace uad::eval
