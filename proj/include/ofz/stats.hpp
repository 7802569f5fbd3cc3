#pragma once

#include <span>

namespace ofz {

// Conventional threshold above which an effect size is reported as large.
constexpr double kLargeEffectA12 = 0.71;

// Reporting threshold for p-values; never branched on internally.
constexpr double kSignificanceLevel = 0.05;

struct MannWhitneyResult {
    double u;  // U statistic of the first sample (midrank ties)
    double p;  // two-sided p-value
};

// Mann-Whitney U with a two-sided p-value. Exact by enumeration of all
// C(n1+n2, n1) rank assignments when n1+n2 <= 20, otherwise the normal
// approximation with tie correction. The exact two-sided value sums both
// tails mirrored around n1*n2/2 and is clamped to 1.
MannWhitneyResult mann_whitney_u(std::span<const double> a,
                                 std::span<const double> b);

// Vargha-Delaney effect size: P(a > b) + 0.5 * P(a == b) over all pairs.
double vargha_delaney_a12(std::span<const double> a, std::span<const double> b);

}  // namespace ofz
