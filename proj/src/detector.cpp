#include "uad/detector.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "uad/common.hpp"
#include "uad/csv.hpp"
#include "uad/errors.hpp"

namespace uad::detector {

double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

double GaussianCdfMap::apply(const Eigen::VectorXd& z) const {
    if (z.size() != weights.size())
        throw ShapeError("gaussian_cdf: observation dimension " +
                         std::to_string(z.size()) + " != " +
                         std::to_string(weights.size()));
    return normal_cdf((weights.dot(z) - mean) / stddev);
}

DetectorModel make_mlp_detector(nn::Mlp generator, int levels_m, int sample_n,
                                double fp_level_alpha, double epsilon,
                                std::uint64_t seed, std::string config_hash) {
    DetectorModel model;
    model.input_dim = generator.input_dim();
    if (generator.output_dim() != 1)
        throw ShapeError("detector: generator must produce a single scalar");
    model.generator = std::move(generator);
    model.test = uniformity::make_test_spec(levels_m, sample_n, fp_level_alpha, epsilon);
    model.seed = seed;
    model.config_hash = std::move(config_hash);
    return model;
}

DetectorModel make_gaussian_cdf_detector(GaussianCdfMap map, int levels_m, int sample_n,
                                         double fp_level_alpha, double epsilon) {
    if (map.weights.size() == 0 || !(map.stddev > 0.0))
        throw ShapeError("gaussian_cdf detector: need weights and positive stddev");
    DetectorModel model;
    model.input_dim = static_cast<int>(map.weights.size());
    model.generator = std::move(map);
    model.test = uniformity::make_test_spec(levels_m, sample_n, fp_level_alpha, epsilon);
    model.config_hash = "none";
    return model;
}

double generator_output(const DetectorModel& model, const Eigen::VectorXd& z) {
    if (z.size() != model.input_dim)
        throw ShapeError("detect: observation dimension " + std::to_string(z.size()) +
                         " != model input dimension " + std::to_string(model.input_dim));
    double y = std::visit(
        [&](const auto& gen) -> double {
            using T = std::decay_t<decltype(gen)>;
            if constexpr (std::is_same_v<T, nn::Mlp>)
                return nn::forward(gen, z)(0);
            else
                return gen.apply(z);
        },
        model.generator);
    return clamp_unit(y);
}

std::vector<int> transform(const DetectorModel& model, const Eigen::MatrixXd& batch) {
    if (batch.cols() != model.input_dim)
        throw ShapeError("transform: observation dimension " +
                         std::to_string(batch.cols()) + " != model input dimension " +
                         std::to_string(model.input_dim));
    std::vector<int> symbols(static_cast<std::size_t>(batch.rows()));
    // The whole batch goes through the network in one pass; the analytic map
    // is applied row by row.
    if (const auto* net = std::get_if<nn::Mlp>(&model.generator)) {
        Eigen::MatrixXd outputs = nn::forward_batch(*net, batch.transpose());
        for (Eigen::Index i = 0; i < batch.rows(); ++i)
            symbols[static_cast<std::size_t>(i)] =
                uniformity::quantize(clamp_unit(outputs(0, i)), model.test.alphabet_m);
    } else {
        const auto& map = std::get<GaussianCdfMap>(model.generator);
        for (Eigen::Index i = 0; i < batch.rows(); ++i)
            symbols[static_cast<std::size_t>(i)] = uniformity::quantize(
                clamp_unit(map.apply(batch.row(i).transpose())), model.test.alphabet_m);
    }
    return symbols;
}

Verdict detect(const DetectorModel& model, const Eigen::MatrixXd& batch) {
    if (batch.rows() != model.test.sample_n)
        throw ShapeError("detect: batch has " + std::to_string(batch.rows()) +
                         " observations, model expects " +
                         std::to_string(model.test.sample_n));
    std::vector<int> symbols = transform(model, batch);
    uniformity::TestResult result = uniformity::coincidence_test(symbols, model.test);
    Verdict verdict;
    verdict.anomaly = result.reject;
    verdict.k1_value = result.k1;
    verdict.threshold_used = model.test.threshold_t;
    return verdict;
}

namespace {

const char* activation_name(nn::Activation a) {
    switch (a) {
        case nn::Activation::LeakyRelu: return "leaky_relu";
        case nn::Activation::Sigmoid: return "sigmoid";
        case nn::Activation::Identity: return "identity";
    }
    return "?";
}

nn::Activation activation_from(const std::string& name, const std::string& section) {
    if (name == "leaky_relu") return nn::Activation::LeakyRelu;
    if (name == "sigmoid") return nn::Activation::Sigmoid;
    if (name == "identity") return nn::Activation::Identity;
    throw ParseError("model file: unknown activation '" + name + "' in section '" +
                     section + "'");
}

// Tokenizing reader that reports the section it was in when input ran out.
class TokenReader {
public:
    explicit TokenReader(std::istream& in) : in_(in) {}

    void section(const std::string& name) { section_ = name; }
    const std::string& section() const { return section_; }

    std::string word() {
        std::string tok;
        if (!(in_ >> tok))
            throw ParseError("model file: unexpected end of file in section '" +
                             section_ + "'");
        return tok;
    }

    void expect(const std::string& keyword) {
        std::string tok = word();
        if (tok != keyword)
            throw ParseError("model file: expected '" + keyword + "' in section '" +
                             section_ + "', got '" + tok + "'");
    }

    long long integer() {
        std::string tok = word();
        try {
            std::size_t pos = 0;
            long long v = std::stoll(tok, &pos);
            if (pos != tok.size()) throw std::invalid_argument(tok);
            return v;
        } catch (const std::exception&) {
            throw ParseError("model file: bad integer '" + tok + "' in section '" +
                             section_ + "'");
        }
    }

    double real() {
        std::string tok = word();
        try {
            std::size_t pos = 0;
            double v = std::stod(tok, &pos);
            if (pos != tok.size()) throw std::invalid_argument(tok);
            return v;
        } catch (const std::exception&) {
            throw ParseError("model file: bad number '" + tok + "' in section '" +
                             section_ + "'");
        }
    }

private:
    std::istream& in_;
    std::string section_ = "header";
};

}  // namespace

void save_model(const DetectorModel& model, const std::filesystem::path& path) {
    csv::AtomicWriter writer(path);
    auto& out = writer.stream();
    out << "uadm " << kFormatVersion << '\n';
    out << "d " << model.input_dim << '\n';
    out << "M " << model.test.alphabet_m << '\n';
    out << "N " << model.test.sample_n << '\n';
    out << "alpha " << csv::fmt_g17(model.test.fp_level_alpha) << '\n';
    out << "epsilon " << csv::fmt_g17(model.test.epsilon) << '\n';
    out << "threshold " << model.test.threshold_t << '\n';
    out << "seed " << model.seed << '\n';
    out << "config_hash " << (model.config_hash.empty() ? "none" : model.config_hash)
        << '\n';

    if (const auto* net = std::get_if<nn::Mlp>(&model.generator)) {
        out << "generator mlp\n";
        out << "activations " << activation_name(net->hidden_activation) << ' '
            << activation_name(net->output_activation) << '\n';
        out << "layers " << net->layer_dims.size();
        for (int d : net->layer_dims) out << ' ' << d;
        out << '\n';
        for (int l = 0; l < net->layer_count(); ++l) {
            const auto& w = net->weights[static_cast<std::size_t>(l)];
            out << "layer " << l << ' ' << w.rows() << ' ' << w.cols() << '\n';
            for (Eigen::Index r = 0; r < w.rows(); ++r) {
                for (Eigen::Index c = 0; c < w.cols(); ++c) {
                    if (c) out << ' ';
                    out << csv::fmt_g17(w(r, c));
                }
                out << '\n';
            }
            const auto& b = net->biases[static_cast<std::size_t>(l)];
            out << "bias " << l << ' ' << b.size() << '\n';
            for (Eigen::Index r = 0; r < b.size(); ++r) {
                if (r) out << ' ';
                out << csv::fmt_g17(b(r));
            }
            out << '\n';
        }
    } else {
        const auto& map = std::get<GaussianCdfMap>(model.generator);
        out << "generator gaussian_cdf\n";
        out << "weights " << map.weights.size() << '\n';
        for (Eigen::Index i = 0; i < map.weights.size(); ++i) {
            if (i) out << ' ';
            out << csv::fmt_g17(map.weights(i));
        }
        out << '\n';
        out << "mean " << csv::fmt_g17(map.mean) << '\n';
        out << "stddev " << csv::fmt_g17(map.stddev) << '\n';
    }
    out << "end\n";
    writer.commit();
}

DetectorModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model '" + path.string() + "'");
    TokenReader reader(in);

    reader.expect("uadm");
    long long version = reader.integer();
    if (version != kFormatVersion)
        throw UnsupportedVersionError("model file: format version " +
                                      std::to_string(version) +
                                      " not supported (this build reads version " +
                                      std::to_string(kFormatVersion) + ")");

    DetectorModel model;
    reader.expect("d");
    model.input_dim = static_cast<int>(reader.integer());
    reader.expect("M");
    int levels_m = static_cast<int>(reader.integer());
    reader.expect("N");
    int sample_n = static_cast<int>(reader.integer());
    reader.expect("alpha");
    double alpha = reader.real();
    reader.expect("epsilon");
    double epsilon = reader.real();
    reader.expect("threshold");
    int threshold = static_cast<int>(reader.integer());
    reader.expect("seed");
    std::string seed_tok = reader.word();
    try {
        model.seed = std::stoull(seed_tok);
    } catch (const std::exception&) {
        throw ParseError("model file: bad seed '" + seed_tok + "' in section 'header'");
    }
    reader.expect("config_hash");
    model.config_hash = reader.word();

    model.test.alphabet_m = levels_m;
    model.test.sample_n = sample_n;
    model.test.fp_level_alpha = alpha;
    model.test.epsilon = epsilon;
    model.test.threshold_t = threshold;

    reader.section("generator");
    reader.expect("generator");
    std::string kind = reader.word();
    if (kind == "mlp") {
        nn::Mlp net;
        reader.expect("activations");
        net.hidden_activation = activation_from(reader.word(), reader.section());
        net.output_activation = activation_from(reader.word(), reader.section());
        reader.expect("layers");
        long long n_dims = reader.integer();
        if (n_dims < 2) throw ParseError("model file: bad layer count in 'generator'");
        for (long long i = 0; i < n_dims; ++i)
            net.layer_dims.push_back(static_cast<int>(reader.integer()));
        for (std::size_t l = 0; l + 1 < net.layer_dims.size(); ++l) {
            reader.section("layer " + std::to_string(l));
            reader.expect("layer");
            if (reader.integer() != static_cast<long long>(l))
                throw ParseError("model file: layer index mismatch in section '" +
                                 reader.section() + "'");
            long long rows = reader.integer();
            long long cols = reader.integer();
            if (rows != net.layer_dims[l + 1] || cols != net.layer_dims[l])
                throw ParseError("model file: layer shape mismatch in section '" +
                                 reader.section() + "'");
            Eigen::MatrixXd w(rows, cols);
            for (long long r = 0; r < rows; ++r)
                for (long long c = 0; c < cols; ++c) w(r, c) = reader.real();
            net.weights.push_back(std::move(w));
            reader.section("bias " + std::to_string(l));
            reader.expect("bias");
            if (reader.integer() != static_cast<long long>(l))
                throw ParseError("model file: bias index mismatch in section '" +
                                 reader.section() + "'");
            long long size = reader.integer();
            if (size != rows)
                throw ParseError("model file: bias size mismatch in section '" +
                                 reader.section() + "'");
            Eigen::VectorXd b(size);
            for (long long r = 0; r < size; ++r) b(r) = reader.real();
            net.biases.push_back(std::move(b));
        }
        if (net.input_dim() != model.input_dim)
            throw ParseError("model file: generator input dimension disagrees with header");
        model.generator = std::move(net);
    } else if (kind == "gaussian_cdf") {
        GaussianCdfMap map;
        reader.expect("weights");
        long long size = reader.integer();
        if (size != model.input_dim)
            throw ParseError("model file: weights size disagrees with header dimension");
        map.weights.resize(size);
        for (long long i = 0; i < size; ++i) map.weights(i) = reader.real();
        reader.section("gaussian_cdf");
        reader.expect("mean");
        map.mean = reader.real();
        reader.expect("stddev");
        map.stddev = reader.real();
        model.generator = std::move(map);
    } else {
        throw ParseError("model file: unknown generator kind '" + kind + "'");
    }

    reader.section("trailer");
    reader.expect("end");
    return model;
}

}  // namespace uad::detector
