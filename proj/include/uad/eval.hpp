#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "uad/detector.hpp"
#include "uad/scenarios.hpp"

namespace uad::eval {

enum class Orientation { HighIsAnomalous, LowIsAnomalous };

struct RocCurve {
    std::vector<double> fpr;  // parallel arrays, from (0,0) to (1,1)
    std::vector<double> tpr;
    double auc = 0.0;
};

// Empirical ROC over every achievable threshold. Equal scores are grouped
// into a single step, so the area from the trapezoid rule coincides with
// pair counting (ties at half credit).
RocCurve roc(const std::vector<double>& h0_scores, const std::vector<double>& h1_scores,
             Orientation orientation);

// "fpr,tpr" rows followed by an "auc=<value>" footer line.
void write_roc_csv(const std::filesystem::path& path, const RocCurve& curve);

// Gaussian experiment family. H0 batches are always N(0,1). H1 batches draw
// the nuisance parameter per batch: case 1 shifts the mean inside
// (mu_lo, mu_hi), case 2 rescales inside (sigma_lo, sigma_hi). With
// fixed_param set, every H1 batch uses fixed_value instead; random_sign
// additionally flips the sign of a fixed mean per batch, so fixed_value acts
// as a magnitude (both tails exercised).
struct GaussianSweep {
    int case_id = 1;
    double mu_lo = -1.0;
    double mu_hi = 1.0;
    double sigma_lo = 0.5;
    double sigma_hi = 0.8;
    bool fixed_param = false;
    double fixed_value = 1.0;
    bool random_sign = false;
};

// Grid experiment: H0 = clean measurement batches, H1 = same model with the
// unobservable attack injected.
struct GridSweep {
    scenarios::GridScenario scenario;
};

struct ExperimentPlan {
    std::variant<GaussianSweep, GridSweep> scenario;
    int batches_per_class = 2000;
    int batch_n = 50;
    std::uint64_t seed = 0;
};

void validate(const ExperimentPlan& plan);

std::string scenario_label(const ExperimentPlan& plan);

enum class DetectorKind { UadModel, JTest };

struct DetectorEntry {
    std::string name;
    DetectorKind kind = DetectorKind::UadModel;
    detector::DetectorModel model;  // unused for the J test
};

// Per-batch data, one observation per row. Depends only on (plan.seed, class,
// index), so every detector sees identical batches and reruns are exact.
Eigen::MatrixXd h0_batch(const ExperimentPlan& plan, int index);
Eigen::MatrixXd h1_batch(const ExperimentPlan& plan, int index, double* param_out = nullptr);

// Anomaly-free training data from a substream disjoint from the batch streams.
Eigen::MatrixXd training_data(const ExperimentPlan& plan, int count);

struct ScoredBatches {
    std::vector<double> h0_scores;
    std::vector<double> h1_scores;
    std::vector<double> h1_params;  // per-batch mu or sigma; empty for the grid
    Orientation orientation = Orientation::LowIsAnomalous;
};

// One score per batch and class: the K1 statistic for UAD detectors (lower
// means more anomalous), the batch-mean J for the residual test (higher
// means more anomalous). Batches depend only on (plan.seed, class, index),
// so every detector entry sees identical data.
ScoredBatches score_batches(const ExperimentPlan& plan, const DetectorEntry& entry);

struct ExperimentResult {
    std::string detector;
    ScoredBatches scores;
    RocCurve curve;
};

std::vector<ExperimentResult> run_experiment(const ExperimentPlan& plan,
                                             const std::vector<DetectorEntry>& detectors);

struct SummaryRow {
    std::string detector;
    std::string scenario;
    double auc = 0.0;
    int batches = 0;
};

// "detector,scenario,auc,batches" with one row per detector.
void write_summary_csv(const std::filesystem::path& path,
                       const std::vector<SummaryRow>& rows);

}  // namespace uad::eval
