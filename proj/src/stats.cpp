#include "ofz/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "ofz/error.hpp"

namespace ofz {

namespace {

// Midranks of the pooled samples, in pooled order (a first, then b).
std::vector<double> midranks(std::span<const double> a,
                             std::span<const double> b) {
    const size_t n = a.size() + b.size();
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i)
        order[i] = i;
    auto value = [&](size_t i) { return i < a.size() ? a[i] : b[i - a.size()]; };
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t x, size_t y) { return value(x) < value(y); });

    std::vector<double> rank(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && value(order[j + 1]) == value(order[i]))
            ++j;
        const double mid = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (size_t k = i; k <= j; ++k)
            rank[order[k]] = mid;
        i = j + 1;
    }
    return rank;
}

// Walks every size-n1 subset of the pooled ranks, accumulating the tail
// counts of the U distribution under the null.
struct ExactTails {
    double u_lo, u_hi;
    uint64_t at_or_below = 0, at_or_above = 0, total = 0;

    void count(const std::vector<double>& ranks, size_t n1) {
        std::vector<size_t> idx(n1);
        for (size_t i = 0; i < n1; ++i)
            idx[i] = i;
        const size_t n = ranks.size();
        const double base = static_cast<double>(n1) * (n1 + 1) / 2.0;
        for (;;) {
            double rsum = 0;
            for (size_t i : idx)
                rsum += ranks[i];
            const double u = rsum - base;
            ++total;
            if (u <= u_lo + 1e-12)
                ++at_or_below;
            if (u >= u_hi - 1e-12)
                ++at_or_above;
            // next combination
            size_t k = n1;
            while (k > 0 && idx[k - 1] == n - n1 + (k - 1))
                --k;
            if (k == 0)
                break;
            ++idx[k - 1];
            for (size_t i = k; i < n1; ++i)
                idx[i] = idx[i - 1] + 1;
        }
    }
};

double normal_two_sided(double z) {
    return std::erfc(std::fabs(z) / std::sqrt(2.0));
}

}  // namespace

MannWhitneyResult mann_whitney_u(std::span<const double> a,
                                 std::span<const double> b) {
    if (a.empty() || b.empty())
        throw Error(ErrorCode::EmptySamples, "mann_whitney_u needs samples");
    const double n1 = static_cast<double>(a.size());
    const double n2 = static_cast<double>(b.size());
    const std::vector<double> rank = midranks(a, b);

    double r1 = 0;
    for (size_t i = 0; i < a.size(); ++i)
        r1 += rank[i];
    const double u1 = r1 - n1 * (n1 + 1) / 2.0;

    MannWhitneyResult res{u1, 1.0};
    if (a.size() + b.size() <= 20) {
        ExactTails tails;
        tails.u_lo = std::min(u1, n1 * n2 - u1);
        tails.u_hi = std::max(u1, n1 * n2 - u1);
        tails.count(rank, a.size());
        res.p = std::min(
            1.0, (static_cast<double>(tails.at_or_below) +
                  static_cast<double>(tails.at_or_above)) /
                     static_cast<double>(tails.total));
        return res;
    }

    // Normal approximation with tie correction.
    const double n = n1 + n2;
    std::map<double, double> tie_counts;
    for (double r : rank)
        tie_counts[r] += 1;
    double tie_term = 0;
    for (const auto& [r, t] : tie_counts)
        tie_term += t * t * t - t;
    const double var =
        n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1)));
    if (var <= 0) {
        res.p = 1.0;  // all values tied
        return res;
    }
    const double z = (u1 - n1 * n2 / 2.0) / std::sqrt(var);
    res.p = std::min(1.0, normal_two_sided(z));
    return res;
}

double vargha_delaney_a12(std::span<const double> a,
                          std::span<const double> b) {
    if (a.empty() || b.empty())
        throw Error(ErrorCode::EmptySamples, "vargha_delaney_a12 needs samples");
    double wins = 0;
    for (double x : a)
        for (double y : b) {
            if (x > y)
                wins += 1.0;
            else if (x == y)
                wins += 0.5;
        }
    return wins / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

}  // namespace ofz
