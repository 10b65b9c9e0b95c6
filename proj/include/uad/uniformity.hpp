#pragma once

#include <gmpxx.h>

#include <span>
#include <vector>

namespace uad::uniformity {

// Uniform quantizer on [0,1]: y -> floor(M*y), with y = 1 mapped to M-1.
int quantize(double y, int levels_m);

// Number of entries whose value occurs exactly once in the sequence.
int k1_statistic(std::span<const int> symbols);

// Exact distribution of the K1 statistic for N i.i.d. draws from the uniform
// distribution on an M-symbol alphabet. The alternating sum is catastrophically
// cancellative in floating point at the sizes used here (M=200, N=50), so every
// term is an arbitrary-precision integer and the division happens once.
struct CoincidencePmf {
    int alphabet_m = 0;
    int sample_n = 0;
    std::vector<mpq_class> probs;  // index k = 0..N

    mpq_class cdf(int k) const;    // P(K1 <= k), exact
    double mean() const;           // sum k*probs[k], converted once
    std::vector<double> probs_double() const;
};

CoincidencePmf coincidence_pmf(int alphabet_m, int sample_n);

// Largest integer t with P0(K1 <= t) <= alpha; -1 when even t = 0 exceeds the
// false-positive budget (the test then never rejects).
int threshold_for(int alphabet_m, int sample_n, double fp_level_alpha);

// Closed form N*(1 - 1/M)^(N-1) for the mean of K1 under uniformity.
double expected_k1(int alphabet_m, int sample_n);

struct TestSpec {
    int alphabet_m = 0;
    int sample_n = 0;
    double fp_level_alpha = 0.0;
    double epsilon = 0.0;  // declared detection resolution; carried, not used
    int threshold_t = -1;
};

// Computes the threshold from (M, N, alpha); epsilon is recorded as metadata.
TestSpec make_test_spec(int alphabet_m, int sample_n, double fp_level_alpha,
                        double epsilon = 0.0);

struct TestResult {
    bool reject = false;  // reject uniformity = declare anomaly
    int k1 = 0;
};

// Coincidence test: reject iff K1(x) <= threshold_t. threshold_t = -1 never rejects.
TestResult coincidence_test(std::span<const int> symbols, const TestSpec& spec);

}  // namespace uad::uniformity
