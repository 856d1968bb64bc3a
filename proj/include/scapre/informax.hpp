#pragma once

#include <cstdint>
#include <vector>

#include "scapre/matkernel.hpp"

namespace scapre {

/// An input feature with its label: 0 for neutral, k >= 1 for target concept k.
struct ActivationSample {
    Vector s;
    int label = 0;
};

/// 2x2 contingency table n_{zy}: z is the binarized activation, y the label.
struct JointCounts {
    std::uint64_t n00 = 0;
    std::uint64_t n01 = 0;
    std::uint64_t n10 = 0;
    std::uint64_t n11 = 0;

    std::uint64_t total() const noexcept { return n00 + n01 + n10 + n11; }
};

struct DecouplerAlpha {
    Vector alpha;           // d_out, in [0, 1]
    Vector mi_raw;          // d_out, max over concepts
    Matrix per_concept_mi;  // d_out x m, column k-1 holds concept k
    bool degenerate = false;  // every channel has zero MI; alpha is all zeros
};

struct DecouplerOptions {
    /// Logarithm base for MI. Any base gives the same alpha.
    double log_base = 0.0;  // 0 selects the natural log
};

/// Per-channel median of a_i(s) = W_{i:} s over all samples.
Vector channel_thresholds(const Matrix& w, const std::vector<ActivationSample>& samples);

/// Mutual information (nats) of the table; empty cells contribute 0.
double channel_mi(const JointCounts& counts);
double channel_mi(const JointCounts& counts, double log_base);

DecouplerAlpha build_decoupler(const Matrix& w, const std::vector<ActivationSample>& samples,
                               const DecouplerOptions& options = {});

}  // namespace scapre
