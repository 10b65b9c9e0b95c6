#include "uad/uniformity.hpp"

#include <cmath>
#include <unordered_map>

#include "uad/errors.hpp"

namespace uad::uniformity {

int quantize(double y, int levels_m) {
    if (levels_m < 1) throw std::domain_error("quantize: levels must be >= 1");
    if (!(y >= 0.0 && y <= 1.0))
        throw std::domain_error("quantize: input outside [0,1]");
    int idx = static_cast<int>(std::floor(y * levels_m));
    if (idx >= levels_m) idx = levels_m - 1;  // y == 1, or rounding at the top edge
    return idx;
}

int k1_statistic(std::span<const int> symbols) {
    if (symbols.empty()) throw ShapeError("k1_statistic: empty sequence");
    std::unordered_map<int, int> counts;
    counts.reserve(symbols.size());
    for (int s : symbols) ++counts[s];
    int k1 = 0;
    for (const auto& [value, count] : counts)
        if (count == 1) ++k1;
    return k1;
}

CoincidencePmf coincidence_pmf(int alphabet_m, int sample_n) {
    if (alphabet_m < 1 || sample_n < 1)
        throw std::domain_error("coincidence_pmf: M and N must be >= 1");

    const int m = alphabet_m;
    const int n = sample_n;

    // P(K1 = k) = sum_{j=k}^{min(M,N)} (-1)^{j+k} C(j,k) C(M,j) N!/(N-j)! (M-j)^{N-j} / M^N.
    // The falling factorial N!/(N-j)! vanishes for j > N, which truncates the sum.
    const int j_max = std::min(m, n);

    // fall[j] = N!/(N-j)!
    std::vector<mpz_class> fall(static_cast<std::size_t>(j_max) + 1);
    fall[0] = 1;
    for (int j = 1; j <= j_max; ++j) fall[j] = fall[j - 1] * (n - j + 1);

    mpz_class denom;
    mpz_ui_pow_ui(denom.get_mpz_t(), static_cast<unsigned long>(m),
                  static_cast<unsigned long>(n));

    CoincidencePmf pmf;
    pmf.alphabet_m = m;
    pmf.sample_n = n;
    pmf.probs.resize(static_cast<std::size_t>(n) + 1);

    for (int k = 0; k <= n; ++k) {
        mpz_class num = 0;
        for (int j = k; j <= j_max; ++j) {
            mpz_class choose_jk, choose_mj, surplus_pow;
            mpz_bin_uiui(choose_jk.get_mpz_t(), static_cast<unsigned long>(j),
                         static_cast<unsigned long>(k));
            mpz_bin_uiui(choose_mj.get_mpz_t(), static_cast<unsigned long>(m),
                         static_cast<unsigned long>(j));
            mpz_ui_pow_ui(surplus_pow.get_mpz_t(), static_cast<unsigned long>(m - j),
                          static_cast<unsigned long>(n - j));
            mpz_class term = choose_jk * choose_mj * fall[static_cast<std::size_t>(j)] *
                             surplus_pow;
            if ((j + k) % 2 == 0)
                num += term;
            else
                num -= term;
        }
        mpq_class p(num, denom);
        p.canonicalize();
        pmf.probs[static_cast<std::size_t>(k)] = p;
    }
    return pmf;
}

mpq_class CoincidencePmf::cdf(int k) const {
    mpq_class sum = 0;
    for (int i = 0; i <= k && i <= sample_n; ++i)
        sum += probs[static_cast<std::size_t>(i)];
    return sum;
}

double CoincidencePmf::mean() const {
    mpq_class sum = 0;
    for (int k = 0; k <= sample_n; ++k)
        sum += mpq_class(k) * probs[static_cast<std::size_t>(k)];
    return sum.get_d();
}

std::vector<double> CoincidencePmf::probs_double() const {
    std::vector<double> out(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) out[i] = probs[i].get_d();
    return out;
}

int threshold_for(int alphabet_m, int sample_n, double fp_level_alpha) {
    if (!(fp_level_alpha > 0.0 && fp_level_alpha < 1.0))
        throw std::domain_error("threshold_for: alpha must be in (0,1)");
    CoincidencePmf pmf = coincidence_pmf(alphabet_m, sample_n);
    mpq_class alpha(fp_level_alpha);  // exact value of the binary double
    mpq_class cum = 0;
    int best = -1;
    for (int t = 0; t <= sample_n; ++t) {
        cum += pmf.probs[static_cast<std::size_t>(t)];
        if (cum <= alpha)
            best = t;
        else
            break;  // the CDF is nondecreasing
    }
    return best;
}

double expected_k1(int alphabet_m, int sample_n) {
    if (alphabet_m < 1 || sample_n < 1)
        throw std::domain_error("expected_k1: M and N must be >= 1");
    return sample_n * std::pow(1.0 - 1.0 / alphabet_m, sample_n - 1);
}

TestSpec make_test_spec(int alphabet_m, int sample_n, double fp_level_alpha,
                        double epsilon) {
    if (alphabet_m < 2) throw std::domain_error("make_test_spec: M must be >= 2");
    if (sample_n < 1) throw std::domain_error("make_test_spec: N must be >= 1");
    if (epsilon < 0.0) throw std::domain_error("make_test_spec: epsilon must be >= 0");
    TestSpec spec;
    spec.alphabet_m = alphabet_m;
    spec.sample_n = sample_n;
    spec.fp_level_alpha = fp_level_alpha;
    spec.epsilon = epsilon;
    spec.threshold_t = threshold_for(alphabet_m, sample_n, fp_level_alpha);
    return spec;
}

TestResult coincidence_test(std::span<const int> symbols, const TestSpec& spec) {
    if (static_cast<int>(symbols.size()) != spec.sample_n)
        throw ShapeError("coincidence_test: expected " + std::to_string(spec.sample_n) +
                         " symbols, got " + std::to_string(symbols.size()));
    for (int s : symbols)
        if (s < 0 || s >= spec.alphabet_m)
            throw std::domain_error("coincidence_test: symbol " + std::to_string(s) +
                                    " outside alphabet of size " +
                                    std::to_string(spec.alphabet_m));
    TestResult result;
    result.k1 = k1_statistic(symbols);
    result.reject = spec.threshold_t >= 0 && result.k1 <= spec.threshold_t;
    return result;
}

}  // namespace uad::uniformity
