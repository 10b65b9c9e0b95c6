#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "uad/mlp.hpp"
#include "uad/uniformity.hpp"

namespace uad::detector {

inline constexpr int kFormatVersion = 1;

double normal_cdf(double x);

// Closed-form inverse generator: y = Phi((w.z - mean) / stddev). With the true
// parameters of w.z under anomaly-free data this is an exact probability
// integral transform, which makes it the ground-truth reference the trained
// generator approximates.
struct GaussianCdfMap {
    Eigen::VectorXd weights;  // projection, one entry per input coordinate
    double mean = 0.0;
    double stddev = 1.0;

    double apply(const Eigen::VectorXd& z) const;
};

using Generator = std::variant<nn::Mlp, GaussianCdfMap>;

struct DetectorModel {
    Generator generator;
    int input_dim = 0;
    uniformity::TestSpec test;
    std::uint64_t seed = 0;          // training seed fingerprint
    std::string config_hash;         // hash of the resolved training config
};

DetectorModel make_mlp_detector(nn::Mlp generator, int levels_m, int sample_n,
                                double fp_level_alpha, double epsilon,
                                std::uint64_t seed, std::string config_hash);

// Scalar standard-normal oracle when weights is empty of size 1; pass an
// explicit projection for multivariate inputs.
DetectorModel make_gaussian_cdf_detector(GaussianCdfMap map, int levels_m, int sample_n,
                                         double fp_level_alpha, double epsilon = 0.0);

// Generator output for one raw observation, clamped into (0,1).
double generator_output(const DetectorModel& model, const Eigen::VectorXd& z);

// batch: one observation per row. Applies the generator, clamps, quantizes.
std::vector<int> transform(const DetectorModel& model, const Eigen::MatrixXd& batch);

struct Verdict {
    bool anomaly = false;
    int k1_value = 0;
    int threshold_used = -1;
};

// Full pipeline on one batch of exactly test.sample_n observations.
Verdict detect(const DetectorModel& model, const Eigen::MatrixXd& batch);

// Self-describing text format (.uadm): header fields, then the generator
// parameters row-major with 17 significant digits. load(save(m)) restores
// bit-identical parameters.
void save_model(const DetectorModel& model, const std::filesystem::path& path);
DetectorModel load_model(const std::filesystem::path& path);

}  // namespace uad::detector
