#include "uad/scenarios.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <fstream>
#include <sstream>

#include "uad/config.hpp"
#include "uad/csv.hpp"
#include "uad/errors.hpp"

namespace uad::scenarios {

Eigen::MatrixXd gaussian_batch(const GaussianScenario& scenario, int count) {
    if (count < 1) throw ShapeError("gaussian_batch: count must be >= 1");
    if (!(scenario.sigma > 0.0))
        throw std::domain_error("gaussian_batch: sigma must be positive");
    Rng rng(scenario.seed);
    Eigen::MatrixXd batch(count, 1);
    for (int i = 0; i < count; ++i)
        batch(i, 0) = scenario.mu + scenario.sigma * rng.normal();
    return batch;
}

void validate_grid(const DcGridModel& grid) {
    const Eigen::Index m = grid.h.rows();
    const Eigen::Index n = grid.h.cols();
    if (n < 1 || m <= n)
        throw ShapeError("grid: need more measurements than states (m > n)");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(grid.h);
    if (qr.rank() < n) throw ShapeError("grid: H is rank-deficient");
    if (!(grid.noise_sigma > 0.0))
        throw std::domain_error("grid: noise_sigma must be positive");
    if (grid.state_mean.size() != n || grid.state_std.size() != n)
        throw ShapeError("grid: state_mean/state_std must have one entry per state");
    if ((grid.state_std.array() <= 0.0).any())
        throw std::domain_error("grid: state_std entries must be positive");
}

DcGridModel default_grid() {
    DcGridModel grid;
    // Bus 0 is the angle reference. Measurements: four flows to the reference
    // plus the four ring flows, all with unit susceptance.
    grid.h.resize(8, 4);
    grid.h << 1, 0, 0, 0,   // flow 1->0
        0, 1, 0, 0,         // flow 2->0
        0, 0, 1, 0,         // flow 3->0
        0, 0, 0, 1,         // flow 4->0
        1, -1, 0, 0,        // flow 1->2
        0, 1, -1, 0,        // flow 2->3
        0, 0, 1, -1,        // flow 3->4
        -1, 0, 0, 1;        // flow 4->1
    grid.noise_sigma = 0.01;
    grid.state_mean.resize(4);
    grid.state_mean << 0.10, 0.05, 0.02, 0.08;
    grid.state_std = Eigen::VectorXd::Constant(4, 0.01);
    return grid;
}

AttackSpec default_attack(const DcGridModel& grid) {
    const Eigen::Index n = grid.h.cols();
    Eigen::VectorXd direction = Eigen::VectorXd::Ones(n);
    Eigen::VectorXd a = grid.h * direction;
    double norm = a.norm();
    if (norm == 0.0) {
        direction = Eigen::VectorXd::Zero(n);
        direction(0) = 1.0;
        a = grid.h * direction;
        norm = a.norm();
    }
    AttackSpec attack;
    attack.shift_c = direction * (3.0 * grid.noise_sigma / norm);
    a = grid.h * attack.shift_c;
    for (Eigen::Index i = 0; i < a.size(); ++i)
        if (a(i) != 0.0) attack.target_meters.push_back(static_cast<int>(i));
    return attack;
}

Eigen::VectorXd attack_vector(const DcGridModel& grid, const AttackSpec& attack) {
    if (attack.shift_c.size() != grid.h.cols())
        throw ShapeError("attack: shift_c dimension != state dimension");
    return grid.h * attack.shift_c;
}

Eigen::VectorXd sample_state(const DcGridModel& grid, Rng& rng) {
    Eigen::VectorXd x(grid.state_mean.size());
    for (Eigen::Index i = 0; i < x.size(); ++i)
        x(i) = grid.state_mean(i) + grid.state_std(i) * rng.normal();
    return x;
}

Eigen::VectorXd measure(const DcGridModel& grid, const Eigen::VectorXd& state, Rng& rng) {
    if (state.size() != grid.h.cols())
        throw ShapeError("measure: state dimension != grid state dimension");
    Eigen::VectorXd z = grid.h * state;
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) += grid.noise_sigma * rng.normal();
    return z;
}

Eigen::MatrixXd measurement_batch(const DcGridModel& grid, int count, Rng& rng) {
    if (count < 1) throw ShapeError("measurement_batch: count must be >= 1");
    Eigen::MatrixXd batch(count, grid.h.rows());
    for (int i = 0; i < count; ++i)
        batch.row(i) = measure(grid, sample_state(grid, rng), rng).transpose();
    return batch;
}

Eigen::VectorXd inject_attack(const Eigen::VectorXd& z, const DcGridModel& grid,
                              const AttackSpec& attack) {
    if (z.size() != grid.h.rows())
        throw ShapeError("inject_attack: measurement dimension != grid rows");
    return z + attack_vector(grid, attack);
}

Eigen::MatrixXd inject_attack(const Eigen::MatrixXd& z_batch, const DcGridModel& grid,
                              const AttackSpec& attack) {
    if (z_batch.cols() != grid.h.rows())
        throw ShapeError("inject_attack: measurement dimension != grid rows");
    Eigen::VectorXd a = attack_vector(grid, attack);
    return z_batch.rowwise() + a.transpose();
}

Eigen::VectorXd estimate_state(const Eigen::VectorXd& z, const DcGridModel& grid) {
    if (z.size() != grid.h.rows())
        throw ShapeError("estimate_state: measurement dimension != grid rows");
    return grid.h.colPivHouseholderQr().solve(z);
}

JxResult jx_test(const Eigen::VectorXd& z, const DcGridModel& grid, double fp_level) {
    validate_grid(grid);
    if (!(fp_level > 0.0 && fp_level < 1.0))
        throw std::domain_error("jx_test: fp_level must be in (0,1)");
    Eigen::VectorXd x_hat = estimate_state(z, grid);
    Eigen::VectorXd residual = z - grid.h * x_hat;
    JxResult result;
    result.j_value = residual.squaredNorm() / (grid.noise_sigma * grid.noise_sigma);
    const int dof = static_cast<int>(grid.h.rows() - grid.h.cols());
    result.quantile = chi2_quantile(dof, 1.0 - fp_level);
    result.reject = result.j_value > result.quantile;
    return result;
}

double chi2_quantile(int dof, double p) {
    if (dof < 1) throw std::domain_error("chi2_quantile: dof must be >= 1");
    if (!(p > 0.0 && p < 1.0))
        throw std::domain_error("chi2_quantile: p must be in (0,1)");
    boost::math::chi_squared_distribution<double> dist(dof);
    return boost::math::quantile(dist, p);
}

detector::GaussianCdfMap gaussian_cdf_oracle_for_grid(const DcGridModel& grid) {
    validate_grid(grid);
    const Eigen::Index m = grid.h.rows();
    Eigen::VectorXd w = Eigen::VectorXd::Constant(m, 1.0 / std::sqrt(double(m)));
    Eigen::VectorXd hw = grid.h.transpose() * w;  // projection of the columns
    double mean = hw.dot(grid.state_mean);
    double var = (hw.array().square() * grid.state_std.array().square()).sum() +
                 grid.noise_sigma * grid.noise_sigma * w.squaredNorm();
    detector::GaussianCdfMap map;
    map.weights = w;
    map.mean = mean;
    map.stddev = std::sqrt(var);
    return map;
}

GridScenario default_grid_scenario() {
    GridScenario scenario;
    scenario.grid = default_grid();
    scenario.attack = default_attack(scenario.grid);
    scenario.j_fp_level = 0.05;
    return scenario;
}

GridScenario load_grid_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open grid config '" + path.string() + "'");

    std::string scalar_part;
    std::vector<std::vector<double>> h_rows;
    bool in_h = false;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string trimmed = line;
        auto hash = trimmed.find('#');
        if (hash != std::string::npos) trimmed.erase(hash);
        auto b = trimmed.find_first_not_of(" \t\r\n");
        trimmed = b == std::string::npos
                      ? ""
                      : trimmed.substr(b, trimmed.find_last_not_of(" \t\r\n") - b + 1);
        if (trimmed.empty()) continue;
        if (trimmed == "[H]") {
            in_h = true;
            continue;
        }
        if (!in_h) {
            scalar_part += trimmed + "\n";
            continue;
        }
        std::vector<double> row;
        std::stringstream ss(trimmed);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t pos = 0;
                row.push_back(std::stod(cell, &pos));
            } catch (const std::exception&) {
                throw ConfigError("grid config line " + std::to_string(lineno) +
                                  ": bad H entry '" + cell + "'");
            }
        }
        if (!h_rows.empty() && row.size() != h_rows.front().size())
            throw ConfigError("grid config line " + std::to_string(lineno) +
                              ": ragged H row");
        h_rows.push_back(std::move(row));
    }

    GridScenario scenario = default_grid_scenario();
    if (!h_rows.empty()) {
        scenario.grid.h.resize(static_cast<Eigen::Index>(h_rows.size()),
                               static_cast<Eigen::Index>(h_rows.front().size()));
        for (std::size_t r = 0; r < h_rows.size(); ++r)
            for (std::size_t c = 0; c < h_rows.front().size(); ++c)
                scenario.grid.h(static_cast<Eigen::Index>(r),
                                static_cast<Eigen::Index>(c)) = h_rows[r][c];
    }

    KeyValueConfig kv = KeyValueConfig::parse_string(scalar_part);
    const Eigen::Index n = scenario.grid.h.cols();
    scenario.grid.noise_sigma = kv.get_double("noise_sigma", scenario.grid.noise_sigma);
    auto as_vector = [&](const std::string& key, const Eigen::VectorXd& fallback) {
        std::vector<double> fb(fallback.data(), fallback.data() + fallback.size());
        std::vector<double> v = kv.get_double_list(key, fb);
        if (static_cast<Eigen::Index>(v.size()) != n)
            throw ConfigError("grid config: '" + key + "' must have " +
                              std::to_string(n) + " entries");
        return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                                 static_cast<Eigen::Index>(v.size()))
            .eval();
    };
    if (!h_rows.empty()) {
        // A custom H resets the state-space defaults to neutral values.
        scenario.grid.state_mean = Eigen::VectorXd::Zero(n);
        scenario.grid.state_std = Eigen::VectorXd::Constant(n, 0.01);
    }
    scenario.grid.state_mean = as_vector("state_mean", scenario.grid.state_mean);
    scenario.grid.state_std = as_vector("state_std", scenario.grid.state_std);
    scenario.j_fp_level = kv.get_double("j_fp_level", scenario.j_fp_level);
    if (kv.has("shift_c")) {
        scenario.attack.shift_c = as_vector("shift_c", Eigen::VectorXd::Zero(n));
        scenario.attack.target_meters.clear();
        Eigen::VectorXd a = scenario.grid.h * scenario.attack.shift_c;
        for (Eigen::Index i = 0; i < a.size(); ++i)
            if (a(i) != 0.0) scenario.attack.target_meters.push_back(static_cast<int>(i));
    } else {
        scenario.attack = default_attack(scenario.grid);
    }
    validate_grid(scenario.grid);
    return scenario;
}

void save_grid_scenario(const GridScenario& scenario, const std::filesystem::path& path) {
    csv::AtomicWriter writer(path);
    auto& out = writer.stream();
    auto write_vec = [&](const char* key, const Eigen::VectorXd& v) {
        out << key << " = ";
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            if (i) out << ',';
            out << csv::fmt_g17(v(i));
        }
        out << '\n';
    };
    out << "noise_sigma = " << csv::fmt_g17(scenario.grid.noise_sigma) << '\n';
    write_vec("state_mean", scenario.grid.state_mean);
    write_vec("state_std", scenario.grid.state_std);
    write_vec("shift_c", scenario.attack.shift_c);
    out << "j_fp_level = " << csv::fmt_g17(scenario.j_fp_level) << '\n';
    out << "[H]\n";
    for (Eigen::Index r = 0; r < scenario.grid.h.rows(); ++r) {
        for (Eigen::Index c = 0; c < scenario.grid.h.cols(); ++c) {
            if (c) out << ',';
            out << csv::fmt_g17(scenario.grid.h(r, c));
        }
        out << '\n';
    }
    writer.commit();
}

}  // namespace uad::scenarios
