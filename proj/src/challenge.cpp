#include "metareduce/challenge.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "metareduce/ranking.hpp"

namespace metareduce {

double skewness(std::span<const double> means) {
    if (means.size() < 2) throw degenerate_input("skewness: need at least two values");
    double lo = means[0], hi = means[0], sum = 0.0;
    for (double v : means) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        sum += v;
    }
    if (hi == lo) throw degenerate_input("skewness: undefined when max == min");
    double mean = sum / static_cast<double>(means.size());
    return (mean - lo) / (hi - lo);
}

namespace {

struct SampleStats {
    std::size_t n = 0;
    double mean = 0.0;
    double variance = 0.0;  // unbiased
};

SampleStats sample_stats(std::span<const double> xs) {
    SampleStats s;
    s.n = xs.size();
    if (s.n == 0) return s;
    s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(s.n);
    if (s.n >= 2) {
        double ss = 0.0;
        for (double x : xs) {
            double d = x - s.mean;
            ss += d * d;
        }
        s.variance = ss / static_cast<double>(s.n - 1);
    }
    return s;
}

}  // namespace

double welch_p(std::span<const double> sample_a, std::span<const double> sample_b) {
    if (sample_a.size() < 2 || sample_b.size() < 2)
        throw degenerate_input("welch_p: both samples need n >= 2");
    auto a = sample_stats(sample_a);
    auto b = sample_stats(sample_b);
    if (a.variance == 0.0 && b.variance == 0.0) return a.mean == b.mean ? 1.0 : 0.0;

    double va = a.variance / static_cast<double>(a.n);
    double vb = b.variance / static_cast<double>(b.n);
    double t = (a.mean - b.mean) / std::sqrt(va + vb);
    double df = (va + vb) * (va + vb) /
                (va * va / static_cast<double>(a.n - 1) + vb * vb / static_cast<double>(b.n - 1));
    boost::math::students_t_distribution<double> dist(df);
    double p = 2.0 * boost::math::cdf(dist, -std::fabs(t));
    return std::clamp(p, 0.0, 1.0);
}

IndistinguishabilityMatrix indistinguishability_matrix(const MetaKnowledgeBase& base,
                                                       const std::string& dataset_id,
                                                       const MatrixOptions& options) {
    if (!base.has_dataset(dataset_id))
        throw std::invalid_argument("unknown dataset: " + dataset_id);

    struct Entry {
        std::string id;
        std::vector<double> errors;
        double mean = 1.0;
        bool missing = false;     // fewer than two completed evaluations
        bool degenerate = false;  // enough evaluations but zero variance
    };
    std::vector<Entry> entries;
    for (const auto& p : base.predictor_universe()) {
        Entry e;
        e.id = p;
        e.errors = base.cell_errors(dataset_id, p, options.filter);
        e.mean = base.aggregate(dataset_id, p, options.filter).mean_error;
        if (e.errors.size() < 2) {
            e.missing = true;
        } else {
            auto stats = sample_stats(e.errors);
            e.degenerate = stats.variance == 0.0;
        }
        entries.push_back(std::move(e));
    }
    std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        if (a.mean != b.mean) return a.mean < b.mean;
        return a.id < b.id;
    });

    IndistinguishabilityMatrix m;
    m.dataset_id = dataset_id;
    m.base_id = base.base_id();
    m.alpha = options.alpha;
    const std::size_t n = entries.size();
    m.cells.assign(n, std::vector<int>(n, -1));
    for (std::size_t i = 0; i < n; ++i) m.order.push_back(entries[i].id);

    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = entries[i];
        m.cells[i][i] = (!a.missing && !a.degenerate) ? 1 : -1;
        for (std::size_t j = i + 1; j < n; ++j) {
            const auto& b = entries[j];
            int cell = -1;
            if (!a.missing && !b.missing) {
                if (a.degenerate && b.degenerate) {
                    cell = a.mean == b.mean ? 1 : 0;
                } else if (!a.degenerate && !b.degenerate) {
                    cell = welch_p(a.errors, b.errors) > options.alpha ? 1 : 0;
                }
                // one-sided zero variance stays untestable
            }
            m.cells[i][j] = cell;
            m.cells[j][i] = cell;
        }
    }
    return m;
}

PerformerGroups best_groups(const IndistinguishabilityMatrix& matrix) {
    PerformerGroups out;
    out.dataset_id = matrix.dataset_id;

    const std::size_t n = matrix.order.size();
    std::vector<std::size_t> testable;
    for (std::size_t i = 0; i < n; ++i) {
        if (matrix.cells[i][i] == 1)
            testable.push_back(i);
        else
            out.unclassified.push_back(matrix.order[i]);
    }

    std::size_t i = 0;
    while (i < testable.size()) {
        std::size_t anchor = testable[i];
        std::vector<std::string> group = {matrix.order[anchor]};
        std::size_t j = i + 1;
        while (j < testable.size() && matrix.cells[anchor][testable[j]] == 1) {
            group.push_back(matrix.order[testable[j]]);
            ++j;
        }
        out.groups.push_back(std::move(group));
        i = j;
    }
    out.best_group_size = out.groups.empty() ? 0 : static_cast<int>(out.groups.front().size());
    return out;
}

namespace {

using u128 = unsigned __int128;

// Exact binomial coefficient; each intermediate division is integral.
u128 binom(int n, int k) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    u128 result = 1;
    for (int i = 1; i <= k; ++i) {
        u128 factor = static_cast<u128>(n - k + i);
        if (result > (~static_cast<u128>(0)) / factor)
            throw std::overflow_error("binomial coefficient exceeds 2^128");
        result = result * factor / static_cast<u128>(i);
    }
    return result;
}

u128 gcd128(u128 a, u128 b) {
    while (b != 0) {
        u128 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

}  // namespace

double random_top_hit_probability(int roster_size, int best_group_size, int k) {
    if (best_group_size <= 0 || best_group_size > roster_size)
        throw std::invalid_argument("best_group_size outside (0, roster_size]");
    if (k < 1 || k > roster_size) throw std::invalid_argument("k outside [1, roster_size]");
    u128 den = binom(roster_size, k);
    u128 miss = binom(roster_size - best_group_size, k);
    u128 num = den - miss;
    u128 g = gcd128(num, den);
    if (g != 0) {
        num /= g;
        den /= g;
    }
    return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace metareduce
