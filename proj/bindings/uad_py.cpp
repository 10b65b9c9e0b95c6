// Python bindings for the core operations: exact coincidence-test tables,
// detector training and inference, scenario generation, and ROC evaluation.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "uad/detector.hpp"
#include "uad/errors.hpp"
#include "uad/eval.hpp"
#include "uad/run_config.hpp"
#include "uad/scenarios.hpp"
#include "uad/uniformity.hpp"
#include "uad/wigan.hpp"

namespace py = pybind11;

namespace {

uad::RunConfig config_from_dict(const py::dict& options) {
    uad::KeyValueConfig kv;
    for (const auto& item : options)
        kv.set(py::str(item.first).cast<std::string>(),
               py::str(item.second).cast<std::string>());
    return uad::run_config_from(kv);
}

}  // namespace

PYBIND11_MODULE(uad, m) {
    m.doc() = "Semi-supervised anomaly detection: learned uniform transforms plus an "
              "exact coincidence test";

    py::register_exception<uad::ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<uad::DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<uad::TrainingDivergedError>(m, "TrainingDivergedError",
                                                       PyExc_RuntimeError);

    m.def(
        "pmf",
        [](int m_levels, int n_samples) {
            return uad::uniformity::coincidence_pmf(m_levels, n_samples).probs_double();
        },
        py::arg("m"), py::arg("n"),
        "Exact P(K1 = k) for N uniform draws on an M-symbol alphabet, k = 0..N");
    m.def("threshold", &uad::uniformity::threshold_for, py::arg("m"), py::arg("n"),
          py::arg("alpha"),
          "Largest t with P(K1 <= t) <= alpha under uniformity; -1 means never reject");
    m.def("expected_k1", &uad::uniformity::expected_k1, py::arg("m"), py::arg("n"));
    m.def(
        "k1_statistic",
        [](const std::vector<int>& symbols) {
            return uad::uniformity::k1_statistic(symbols);
        },
        py::arg("symbols"), "Number of values occurring exactly once");
    m.def("quantize", &uad::uniformity::quantize, py::arg("y"), py::arg("m"));

    py::class_<uad::detector::Verdict>(m, "Verdict")
        .def_readonly("anomaly", &uad::detector::Verdict::anomaly)
        .def_readonly("k1", &uad::detector::Verdict::k1_value)
        .def_readonly("threshold", &uad::detector::Verdict::threshold_used)
        .def("__repr__", [](const uad::detector::Verdict& v) {
            return "Verdict(anomaly=" + std::string(v.anomaly ? "True" : "False") +
                   ", k1=" + std::to_string(v.k1_value) +
                   ", threshold=" + std::to_string(v.threshold_used) + ")";
        });

    py::class_<uad::detector::DetectorModel>(m, "Detector")
        .def_readonly("input_dim", &uad::detector::DetectorModel::input_dim)
        .def_property_readonly(
            "levels_m",
            [](const uad::detector::DetectorModel& d) { return d.test.alphabet_m; })
        .def_property_readonly(
            "sample_n",
            [](const uad::detector::DetectorModel& d) { return d.test.sample_n; })
        .def_property_readonly(
            "threshold",
            [](const uad::detector::DetectorModel& d) { return d.test.threshold_t; })
        .def(
            "transform",
            [](const uad::detector::DetectorModel& d, const Eigen::MatrixXd& batch) {
                return uad::detector::transform(d, batch);
            },
            py::arg("batch"), "Quantized generator outputs, one symbol per row")
        .def(
            "detect",
            [](const uad::detector::DetectorModel& d, const Eigen::MatrixXd& batch) {
                return uad::detector::detect(d, batch);
            },
            py::arg("batch"))
        .def("save",
             [](const uad::detector::DetectorModel& d, const std::filesystem::path& path) {
                 uad::detector::save_model(d, path);
             })
        .def_static("load", &uad::detector::load_model, py::arg("path"));

    m.def(
        "train_detector",
        [](const Eigen::MatrixXd& data, const py::dict& options) {
            uad::RunConfig rc = config_from_dict(options);
            uad::wigan::TrainResult result = uad::wigan::train(data, rc.train);
            return uad::detector::make_mlp_detector(std::move(result.generator), rc.levels_m,
                                                    rc.sample_n, rc.fp_level, rc.epsilon,
                                                    rc.train.seed, uad::resolved_hash(rc));
        },
        py::arg("data"), py::arg("options") = py::dict(),
        "Adversarially train an inverse generator on anomaly-free rows; options are the "
        "same keys as the CLI config file");
    m.def(
        "analytic_detector",
        [](const Eigen::VectorXd& weights, double mean, double stddev, int levels_m,
           int sample_n, double alpha) {
            uad::detector::GaussianCdfMap map{weights, mean, stddev};
            return uad::detector::make_gaussian_cdf_detector(std::move(map), levels_m,
                                                             sample_n, alpha);
        },
        py::arg("weights"), py::arg("mean"), py::arg("stddev"), py::arg("m"), py::arg("n"),
        py::arg("alpha"),
        "Closed-form detector: y = Phi((w.z - mean)/stddev), then quantize and test");

    m.def(
        "gaussian_batch",
        [](double mu, double sigma, std::uint64_t seed, int count) {
            uad::scenarios::GaussianScenario sc{1, mu, sigma, seed};
            return uad::scenarios::gaussian_batch(sc, count);
        },
        py::arg("mu"), py::arg("sigma"), py::arg("seed"), py::arg("count"));

    m.def(
        "roc",
        [](const std::vector<double>& h0, const std::vector<double>& h1,
           bool high_is_anomalous) {
            uad::eval::RocCurve curve =
                uad::eval::roc(h0, h1,
                               high_is_anomalous ? uad::eval::Orientation::HighIsAnomalous
                                                 : uad::eval::Orientation::LowIsAnomalous);
            return py::make_tuple(curve.fpr, curve.tpr, curve.auc);
        },
        py::arg("h0_scores"), py::arg("h1_scores"), py::arg("high_is_anomalous"),
        "Empirical ROC with tie grouping; returns (fpr, tpr, auc)");
}
