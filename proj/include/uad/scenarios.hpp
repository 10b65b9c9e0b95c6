#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "uad/detector.hpp"
#include "uad/rng.hpp"

namespace uad::scenarios {

// Synthetic Gaussian hypothesis families. Case 1 shifts the mean, case 2
// shrinks the spread; anomaly-free data is always N(0,1).
struct GaussianScenario {
    int case_id = 1;
    double mu = 0.0;
    double sigma = 1.0;
    std::uint64_t seed = 0;
};

// count x 1 matrix of i.i.d. N(mu, sigma^2) draws, reproducible per seed.
Eigen::MatrixXd gaussian_batch(const GaussianScenario& scenario, int count);

// Linearized (DC) measurement model z = H x + e with redundant metering.
struct DcGridModel {
    Eigen::MatrixXd h;           // m_meas x n_state, full column rank
    double noise_sigma = 0.01;
    Eigen::VectorXd state_mean;  // synthetic load-driven operating point
    Eigen::VectorXd state_std;   // per-coordinate standard deviations
};

// Throws unless H has full column rank and m_meas > n_state.
void validate_grid(const DcGridModel& grid);

// 5-bus ring network, 4 angle states, 8 unit-susceptance flow measurements.
DcGridModel default_grid();

struct AttackSpec {
    Eigen::VectorXd shift_c;          // state shift injected by the attacker
    std::vector<int> target_meters;   // measurements with a nonzero attack entry
};

// Uniform state shift scaled so that ||H c|| = 3 * noise_sigma.
AttackSpec default_attack(const DcGridModel& grid);

Eigen::VectorXd attack_vector(const DcGridModel& grid, const AttackSpec& attack);

Eigen::VectorXd sample_state(const DcGridModel& grid, Rng& rng);

// z = H x + e with e ~ N(0, noise_sigma^2 I).
Eigen::VectorXd measure(const DcGridModel& grid, const Eigen::VectorXd& state, Rng& rng);

// count x m_meas matrix; states drawn i.i.d. per row.
Eigen::MatrixXd measurement_batch(const DcGridModel& grid, int count, Rng& rng);

// z + H c: corruption confined to the column space of H, invisible to
// residual tests but a mean shift of the measurement distribution.
Eigen::VectorXd inject_attack(const Eigen::VectorXd& z, const DcGridModel& grid,
                              const AttackSpec& attack);
Eigen::MatrixXd inject_attack(const Eigen::MatrixXd& z_batch, const DcGridModel& grid,
                              const AttackSpec& attack);

struct JxResult {
    double j_value = 0.0;
    bool reject = false;
    double quantile = 0.0;
};

// Classical residual test: J = ||z - H x_hat||^2 / noise_sigma^2 against the
// chi-square quantile with m_meas - n_state degrees of freedom.
JxResult jx_test(const Eigen::VectorXd& z, const DcGridModel& grid, double fp_level);

// Least-squares state estimate.
Eigen::VectorXd estimate_state(const Eigen::VectorXd& z, const DcGridModel& grid);

double chi2_quantile(int dof, double p);

// Exact probability integral transform for the projection w.z of anomaly-free
// measurements; w is the normalized all-ones direction.
detector::GaussianCdfMap gaussian_cdf_oracle_for_grid(const DcGridModel& grid);

struct GridScenario {
    DcGridModel grid;
    AttackSpec attack;
    double j_fp_level = 0.05;
};

GridScenario default_grid_scenario();

// Scalars as "key = value" lines, then the H matrix as a CSV block after a
// line containing "[H]".
GridScenario load_grid_scenario(const std::filesystem::path& path);
void save_grid_scenario(const GridScenario& scenario, const std::filesystem::path& path);

}  // namespace uad::scenarios
