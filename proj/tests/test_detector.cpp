#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "uad/detector.hpp"
#include "uad/errors.hpp"
#include "uad/rng.hpp"

using namespace uad;

namespace {

// Simpson quadrature of the standard normal density over [0, x]; an
// integration oracle independent of the erfc-based implementation.
double phi_simpson(double x) {
    const int steps = 2000;
    const double h = x / steps;
    auto pdf = [](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * M_PI); };
    double sum = pdf(0.0) + pdf(x);
    for (int i = 1; i < steps; ++i) sum += pdf(i * h) * (i % 2 ? 4.0 : 2.0);
    return 0.5 + sum * h / 3.0;
}

nn::Mlp scalar_identity_net() {
    Rng rng(0);
    nn::Mlp net = nn::make_mlp({1, 1}, nn::Activation::LeakyRelu,
                               nn::Activation::Identity, rng);
    net.weights[0](0, 0) = 1.0;
    net.biases[0](0) = 0.0;
    return net;
}

bool same_params(const nn::Mlp& a, const nn::Mlp& b) {
    if (a.layer_dims != b.layer_dims) return false;
    for (int l = 0; l < a.layer_count(); ++l) {
        if (!(a.weights[l].array() == b.weights[l].array()).all()) return false;
        if (!(a.biases[l].array() == b.biases[l].array()).all()) return false;
    }
    return true;
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

const std::string kGaussianModelText =
    "uadm 1\n"
    "d 1\n"
    "M 10\n"
    "N 3\n"
    "alpha 0.05\n"
    "epsilon 0\n"
    "threshold -1\n"
    "seed 7\n"
    "config_hash none\n"
    "generator gaussian_cdf\n"
    "weights 1\n"
    "1\n"
    "mean 0\n"
    "stddev 1\n"
    "end\n";

}  // namespace

TEST_CASE("normal_cdf: matches numeric integration of the density") {
    for (double x : {-3.0, -1.5, -0.5, 0.0, 0.3, 1.0, 1.96, 2.5}) {
        INFO("x=", x);
        CHECK(detector::normal_cdf(x) == doctest::Approx(phi_simpson(x)).epsilon(1e-10));
    }
    CHECK(detector::normal_cdf(0.0) == 0.5);
    for (double x : {0.25, 1.0, 2.0})
        CHECK(detector::normal_cdf(x) + detector::normal_cdf(-x) ==
              doctest::Approx(1.0).epsilon(1e-15));
    CHECK(detector::normal_cdf(-9.0) < 1e-18);  // erfc keeps the tail accurate
    CHECK(detector::normal_cdf(9.0) >= 1.0 - 1e-15);
}

TEST_CASE("GaussianCdfMap: projection, standardization, cdf") {
    detector::GaussianCdfMap map;
    map.weights = Eigen::Vector2d(2.0, -1.0);
    map.mean = 0.3;
    map.stddev = 2.0;

    Eigen::Vector2d z(1.0, 0.5);  // w.z = 1.5, standardized (1.5-0.3)/2 = 0.6
    CHECK(map.apply(z) == doctest::Approx(phi_simpson(0.6)).epsilon(1e-10));

    Eigen::Vector3d wrong(1.0, 2.0, 3.0);
    CHECK_THROWS_AS(map.apply(wrong), ShapeError);
}

TEST_CASE("detector factories: spec wiring and argument checks") {
    Rng rng(21);
    nn::Mlp net = nn::make_mlp({3, 4, 1}, nn::Activation::LeakyRelu,
                               nn::Activation::Sigmoid, rng);
    detector::DetectorModel model =
        detector::make_mlp_detector(net, 200, 50, 0.05, 0.1, 99, "abc123");
    CHECK(model.input_dim == 3);
    CHECK(model.test.alphabet_m == 200);
    CHECK(model.test.sample_n == 50);
    CHECK(model.test.threshold_t == uniformity::threshold_for(200, 50, 0.05));
    CHECK(model.test.epsilon == 0.1);
    CHECK(model.seed == 99);
    CHECK(model.config_hash == "abc123");

    nn::Mlp multi_out = nn::make_mlp({3, 4, 2}, nn::Activation::LeakyRelu,
                                     nn::Activation::Sigmoid, rng);
    CHECK_THROWS_AS(detector::make_mlp_detector(multi_out, 200, 50, 0.05, 0.0, 0, ""),
                    ShapeError);

    detector::GaussianCdfMap empty_map;
    CHECK_THROWS_AS(detector::make_gaussian_cdf_detector(empty_map, 10, 3, 0.05),
                    ShapeError);
    detector::GaussianCdfMap bad_std;
    bad_std.weights = Eigen::VectorXd::Ones(1);
    bad_std.stddev = 0.0;
    CHECK_THROWS_AS(detector::make_gaussian_cdf_detector(bad_std, 10, 3, 0.05),
                    ShapeError);

    detector::GaussianCdfMap ok;
    ok.weights = Eigen::VectorXd::Ones(1);
    detector::DetectorModel gaussian =
        detector::make_gaussian_cdf_detector(ok, 10, 3, 0.05);
    CHECK(gaussian.config_hash == "none");
    CHECK(gaussian.input_dim == 1);
}

TEST_CASE("generator_output: clamped into the open unit interval") {
    detector::GaussianCdfMap map;
    map.weights = Eigen::VectorXd::Ones(1);
    detector::DetectorModel model = detector::make_gaussian_cdf_detector(map, 10, 3, 0.05);

    Eigen::VectorXd huge(1);
    huge << 40.0;  // cdf rounds to 1.0, the clamp pulls it back inside
    CHECK(detector::generator_output(model, huge) < 1.0);
    huge << -40.0;
    CHECK(detector::generator_output(model, huge) > 0.0);

    Eigen::VectorXd zero(1);
    zero << 0.0;
    CHECK(detector::generator_output(model, zero) == 0.5);

    Eigen::VectorXd wrong(2);
    wrong << 0.0, 1.0;
    CHECK_THROWS_AS(detector::generator_output(model, wrong), ShapeError);
}

TEST_CASE("transform: quantized symbols for both generator kinds") {
    detector::DetectorModel mlp_model =
        detector::make_mlp_detector(scalar_identity_net(), 10, 3, 0.05, 0.0, 0, "");
    Eigen::MatrixXd batch(6, 1);
    batch << 0.125, 0.15625, 0.375, 0.34375, 0.75, 0.96875;
    CHECK(detector::transform(mlp_model, batch) ==
          std::vector<int>{1, 1, 3, 3, 7, 9});

    detector::GaussianCdfMap map;
    map.weights = Eigen::VectorXd::Ones(1);
    detector::DetectorModel g_model = detector::make_gaussian_cdf_detector(map, 10, 3, 0.05);
    Eigen::MatrixXd z(3, 1);
    z << 0.0, -10.0, 10.0;  // cdf 0.5, ~0, ~1 -> bins 5, 0, 9
    CHECK(detector::transform(g_model, z) == std::vector<int>{5, 0, 9});

    Eigen::MatrixXd wrong(3, 2);
    wrong.setZero();
    CHECK_THROWS_AS(detector::transform(mlp_model, wrong), ShapeError);
}

TEST_CASE("detect: verdict against the coincidence threshold") {
    // M=3, N=2, alpha=0.5 admits threshold 1: reject iff no unique symbols
    detector::DetectorModel model =
        detector::make_mlp_detector(scalar_identity_net(), 3, 2, 0.5, 0.0, 0, "");
    REQUIRE(model.test.threshold_t == 1);

    Eigen::MatrixXd collide(2, 1);
    collide << 0.1, 0.15;  // both in bin 0
    detector::Verdict v = detector::detect(model, collide);
    CHECK(v.anomaly);
    CHECK(v.k1_value == 0);
    CHECK(v.threshold_used == 1);

    Eigen::MatrixXd spread(2, 1);
    spread << 0.1, 0.9;
    v = detector::detect(model, spread);
    CHECK_FALSE(v.anomaly);
    CHECK(v.k1_value == 2);

    Eigen::MatrixXd wrong_n(3, 1);
    wrong_n.setZero();
    CHECK_THROWS_AS(detector::detect(model, wrong_n), ShapeError);

    // alpha too small for any threshold: the test never rejects
    detector::DetectorModel never =
        detector::make_mlp_detector(scalar_identity_net(), 3, 2, 0.2, 0.0, 0, "");
    REQUIRE(never.test.threshold_t == -1);
    v = detector::detect(never, collide);
    CHECK_FALSE(v.anomaly);
    CHECK(v.k1_value == 0);
    CHECK(v.threshold_used == -1);
}

TEST_CASE("detect: oracle generator separates clean from shifted data") {
    detector::GaussianCdfMap map;
    map.weights = Eigen::VectorXd::Ones(1);
    detector::DetectorModel model =
        detector::make_gaussian_cdf_detector(map, 200, 50, 0.05);

    Rng rng(314);
    int clean_rejects = 0, shifted_rejects = 0;
    double clean_k1 = 0.0;
    const int batches = 200;
    for (int b = 0; b < batches; ++b) {
        Eigen::MatrixXd clean(50, 1), shifted(50, 1);
        for (int i = 0; i < 50; ++i) {
            clean(i, 0) = rng.normal();
            shifted(i, 0) = 3.0 + rng.normal();
        }
        detector::Verdict vc = detector::detect(model, clean);
        clean_rejects += vc.anomaly ? 1 : 0;
        clean_k1 += vc.k1_value;
        shifted_rejects += detector::detect(model, shifted).anomaly ? 1 : 0;
    }
    clean_k1 /= batches;
    CHECK(clean_k1 > 37.0);  // uniform expectation is ~39.1
    CHECK(clean_k1 < 41.0);
    CHECK(clean_rejects <= 30);     // nominal rate 0.05 of 200
    CHECK(shifted_rejects >= 180);  // mass piles into the top bins
}

TEST_CASE("save/load: mlp model round-trips bit-identically") {
    Rng rng(77);
    nn::Mlp net = nn::make_mlp({2, 5, 1}, nn::Activation::LeakyRelu,
                               nn::Activation::Sigmoid, rng);
    detector::DetectorModel model =
        detector::make_mlp_detector(net, 200, 50, 0.05, 0.1, 424242, "deadbeef");

    auto path = temp_file("uad_model_mlp_test.uadm");
    detector::save_model(model, path);
    detector::DetectorModel loaded = detector::load_model(path);
    std::filesystem::remove(path);

    CHECK(loaded.input_dim == 2);
    CHECK(loaded.test.alphabet_m == 200);
    CHECK(loaded.test.sample_n == 50);
    CHECK(loaded.test.fp_level_alpha == 0.05);
    CHECK(loaded.test.epsilon == 0.1);
    CHECK(loaded.test.threshold_t == model.test.threshold_t);
    CHECK(loaded.seed == 424242);
    CHECK(loaded.config_hash == "deadbeef");

    const auto* loaded_net = std::get_if<nn::Mlp>(&loaded.generator);
    REQUIRE(loaded_net != nullptr);
    CHECK(loaded_net->hidden_activation == nn::Activation::LeakyRelu);
    CHECK(loaded_net->output_activation == nn::Activation::Sigmoid);
    CHECK(same_params(*loaded_net, std::get<nn::Mlp>(model.generator)));

    Eigen::MatrixXd batch(50, 2);
    Rng data_rng(5);
    for (Eigen::Index i = 0; i < batch.size(); ++i)
        batch(i / 2, i % 2) = data_rng.normal();
    CHECK(detector::transform(loaded, batch) == detector::transform(model, batch));
}

TEST_CASE("save/load: gaussian model round-trips bit-identically") {
    detector::GaussianCdfMap map;
    map.weights = Eigen::VectorXd::Constant(8, 1.0 / std::sqrt(8.0));
    map.mean = 0.2503561234567891;
    map.stddev = 0.0105409255338946;
    detector::DetectorModel model =
        detector::make_gaussian_cdf_detector(map, 200, 50, 0.05, 3.0);

    auto path = temp_file("uad_model_gauss_test.uadm");
    detector::save_model(model, path);
    detector::DetectorModel loaded = detector::load_model(path);
    std::filesystem::remove(path);

    const auto* loaded_map = std::get_if<detector::GaussianCdfMap>(&loaded.generator);
    REQUIRE(loaded_map != nullptr);
    CHECK((loaded_map->weights.array() == map.weights.array()).all());
    CHECK(loaded_map->mean == map.mean);
    CHECK(loaded_map->stddev == map.stddev);
    CHECK(loaded.test.epsilon == 3.0);
    CHECK(loaded.input_dim == 8);
}

TEST_CASE("load_model: rejects missing and malformed files") {
    CHECK_THROWS_AS(detector::load_model(temp_file("uad_no_such_model.uadm")), DataError);

    auto path = temp_file("uad_model_bad_test.uadm");

    write_text(path, kGaussianModelText);
    CHECK_NOTHROW(detector::load_model(path));

    std::string newer = kGaussianModelText;
    newer.replace(newer.find("uadm 1"), 6, "uadm 2");
    write_text(path, newer);
    CHECK_THROWS_AS(detector::load_model(path), UnsupportedVersionError);

    std::string bad_int = kGaussianModelText;
    bad_int.replace(bad_int.find("M 10"), 4, "M ten");
    write_text(path, bad_int);
    CHECK_THROWS_AS(detector::load_model(path), ParseError);

    std::string truncated = kGaussianModelText.substr(0, kGaussianModelText.find("mean"));
    write_text(path, truncated);
    CHECK_THROWS_AS(detector::load_model(path), ParseError);

    std::string bad_kind = kGaussianModelText;
    bad_kind.replace(bad_kind.find("generator gaussian_cdf"), 22, "generator perceptron");
    write_text(path, bad_kind);
    CHECK_THROWS_AS(detector::load_model(path), ParseError);

    std::string bad_size = kGaussianModelText;
    bad_size.replace(bad_size.find("weights 1"), 9, "weights 3");
    write_text(path, bad_size);
    CHECK_THROWS_AS(detector::load_model(path), ParseError);

    std::filesystem::remove(path);
}

TEST_CASE("load_model: mlp with mismatched layer shape is rejected") {
    Rng rng(9);
    nn::Mlp net = nn::make_mlp({2, 3, 1}, nn::Activation::LeakyRelu,
                               nn::Activation::Sigmoid, rng);
    detector::DetectorModel model =
        detector::make_mlp_detector(net, 10, 3, 0.05, 0.0, 0, "");
    auto path = temp_file("uad_model_shape_test.uadm");
    detector::save_model(model, path);

    std::ifstream in(path);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    in.close();
    std::string needle = "layer 0 3 2";
    REQUIRE(text.find(needle) != std::string::npos);
    text.replace(text.find(needle), needle.size(), "layer 0 3 9");
    write_text(path, text);
    CHECK_THROWS_AS(detector::load_model(path), ParseError);

    // unknown activation name
    detector::save_model(model, path);
    std::ifstream in2(path);
    std::string text2((std::istreambuf_iterator<char>(in2)),
                      std::istreambuf_iterator<char>());
    in2.close();
    std::string act = "activations leaky_relu sigmoid";
    REQUIRE(text2.find(act) != std::string::npos);
    text2.replace(text2.find(act), act.size(), "activations leaky_relu softmax_");
    write_text(path, text2);
    CHECK_THROWS_AS(detector::load_model(path), ParseError);
    std::filesystem::remove(path);
}
