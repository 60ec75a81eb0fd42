#pragma once

#include "charmend/core/errors.hpp"

namespace charmend {

/// (1 + b^2) P R / (b^2 P + R), defined as 0 when P = R = 0. Unit-agnostic:
/// pass fractions or percentages, consistently.
inline double f_beta(double precision, double recall, double beta) {
    if (precision == 0.0 && recall == 0.0) return 0.0;
    const double b2 = beta * beta;
    return (1.0 + b2) * precision * recall / (b2 * precision + recall);
}

/// Aggregated precision/recall/F plus the counts they came from.
/// Conventions: zero proposed edits give precision 1, zero gold edits give
/// recall 1 (scoring an already-correct corpus is not an error).
struct PRF {
    size_t matched = 0;
    size_t proposed = 0;
    size_t gold = 0;
    double beta = 0.5;

    double precision() const {
        return proposed == 0 ? 1.0 : static_cast<double>(matched) / static_cast<double>(proposed);
    }
    double recall() const {
        return gold == 0 ? 1.0 : static_cast<double>(matched) / static_cast<double>(gold);
    }
    double f() const { return f_beta(precision(), recall(), beta); }
};

}  // namespace charmend
