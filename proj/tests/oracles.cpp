#include "oracles.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

namespace oracles {

namespace {

double t_density(double x, double df) {
    // Gamma((df+1)/2) / (sqrt(df*pi) Gamma(df/2)) * (1 + x^2/df)^{-(df+1)/2}
    double log_coeff = std::lgamma((df + 1.0) / 2.0) - std::lgamma(df / 2.0) -
                       0.5 * std::log(df * M_PI);
    return std::exp(log_coeff - (df + 1.0) / 2.0 * std::log1p(x * x / df));
}

double simpson(const std::function<double(double)>& f, double a, double b, double fa, double fm,
               double fb, double whole, double tol, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::fabs(left + right - whole) < 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
           simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol) {
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson(f, a, b, fa, fm, fb, whole, tol, 60);
}

}  // namespace

double t_two_sided_p(double t, double df) {
    double at = std::fabs(t);
    // map (at, inf) onto u in (0, 1): x = at + u/(1-u)
    auto integrand = [&](double u) {
        if (u >= 1.0) return 0.0;
        double x = at + u / (1.0 - u);
        double jac = 1.0 / ((1.0 - u) * (1.0 - u));
        return t_density(x, df) * jac;
    };
    double tail = adaptive_simpson(integrand, 0.0, 1.0 - 1e-12, 1e-14);
    double p = 2.0 * tail;
    return p > 1.0 ? 1.0 : p;
}

double welch_p(std::span<const double> a, std::span<const double> b) {
    auto moments = [](std::span<const double> xs, double& mean, double& var) {
        double sum = 0.0;
        for (double x : xs) sum += x;
        mean = sum / static_cast<double>(xs.size());
        double ss = 0.0;
        for (double x : xs) ss += (x - mean) * (x - mean);
        var = ss / static_cast<double>(xs.size() - 1);
    };
    double ma, va, mb, vb;
    moments(a, ma, va);
    moments(b, mb, vb);
    if (va == 0.0 && vb == 0.0) return ma == mb ? 1.0 : 0.0;
    double qa = va / static_cast<double>(a.size());
    double qb = vb / static_cast<double>(b.size());
    double t = (ma - mb) / std::sqrt(qa + qb);
    double df = (qa + qb) * (qa + qb) /
                (qa * qa / (a.size() - 1.0) + qb * qb / (b.size() - 1.0));
    return t_two_sided_p(t, df);
}

namespace {

double norm_cdf(double x) { return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))); }
double norm_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }

// 20-point Gauss-Legendre nodes/weights on [-1, 1].
constexpr double kNodes[10] = {0.0765265211334973, 0.2277858511416451, 0.3737060887154196,
                               0.5108670019508271, 0.6360536807265150, 0.7463319064601508,
                               0.8391169718222188, 0.9122344282513259, 0.9639719272779138,
                               0.9931285991850949};
constexpr double kWeights[10] = {0.1527533871307258, 0.1491729864726037, 0.1420961093183821,
                                 0.1316886384491766, 0.1181945319615184, 0.1019301198172404,
                                 0.0832767415767048, 0.0626720483341091, 0.0406014298003869,
                                 0.0176140071391521};

double gauss_panel(const std::function<double(double)>& f, double a, double b) {
    double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double sum = 0.0;
    for (int i = 0; i < 10; ++i)
        sum += kWeights[i] * (f(c - h * kNodes[i]) + f(c + h * kNodes[i]));
    return sum * h;
}

double range_cdf(double r, int k) {
    auto f = [&](double u) {
        return norm_pdf(u) * std::pow(norm_cdf(u) - norm_cdf(u - r), k - 1);
    };
    double total = 0.0;
    for (double a = -10.0; a < 10.0; a += 0.25) total += gauss_panel(f, a, a + 0.25);
    return k * total;
}

}  // namespace

double nemenyi_q(int k, double alpha) {
    double target = 1.0 - alpha;
    // Brent on g(r) = range_cdf(r, k) - target over [0.5, 20].
    double a = 0.5, b = 20.0;
    double fa = range_cdf(a, k) - target, fb = range_cdf(b, k) - target;
    if (fa * fb > 0.0) throw std::runtime_error("nemenyi_q oracle: bad bracket");
    double c = a, fc = fa, d = b - a, e = d;
    for (int iter = 0; iter < 200; ++iter) {
        if (std::fabs(fc) < std::fabs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        double tol = 2.0 * 1e-15 * std::fabs(b) + 1e-13;
        double m = 0.5 * (c - b);
        if (std::fabs(m) <= tol || fb == 0.0) break;
        if (std::fabs(e) < tol || std::fabs(fa) <= std::fabs(fb)) {
            d = m; e = m;
        } else {
            double s = fb / fa, p, q;
            if (a == c) {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                double qq = fa / fc, rr = fb / fc;
                p = s * (2.0 * m * qq * (qq - rr) - (b - a) * (rr - 1.0));
                q = (qq - 1.0) * (rr - 1.0) * (s - 1.0);
            }
            if (p > 0.0) q = -q;
            p = std::fabs(p);
            if (2.0 * p < std::min(3.0 * m * q - std::fabs(tol * q), std::fabs(e * q))) {
                e = d; d = p / q;
            } else {
                d = m; e = m;
            }
        }
        a = b; fa = fb;
        b += std::fabs(d) > tol ? d : (m > 0.0 ? tol : -tol);
        fb = range_cdf(b, k) - target;
        if ((fb > 0.0) == (fc > 0.0)) {
            c = a; fc = fa; d = b - a; e = d;
        }
    }
    return b / std::sqrt(2.0);
}

void for_each_subset(int n, int k, const std::function<void(const std::vector<int>&)>& fn) {
    std::vector<int> idx(k);
    for (int i = 0; i < k; ++i) idx[i] = i;
    while (true) {
        fn(idx);
        int i = k - 1;
        while (i >= 0 && idx[i] == n - k + i) --i;
        if (i < 0) break;
        ++idx[i];
        for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
}

double enumerate_random_optimal(std::span<const double> means, int k) {
    long double sum = 0.0L;
    long long count = 0;
    for_each_subset(static_cast<int>(means.size()), k, [&](const std::vector<int>& subset) {
        double lo = means[subset[0]];
        for (int i : subset) lo = std::min(lo, means[i]);
        sum += lo;
        ++count;
    });
    return static_cast<double>(sum / count);
}

double enumerate_random_average(std::span<const double> means, int k) {
    long double sum = 0.0L;
    long long count = 0;
    for_each_subset(static_cast<int>(means.size()), k, [&](const std::vector<int>& subset) {
        long double s = 0.0L;
        for (int i : subset) s += means[i];
        sum += s / k;
        ++count;
    });
    return static_cast<double>(sum / count);
}

double enumerate_hit_probability(int roster, int best_group, int k) {
    long long hits = 0, total = 0;
    for_each_subset(roster, k, [&](const std::vector<int>& subset) {
        ++total;
        for (int i : subset)
            if (i < best_group) {
                ++hits;
                return;
            }
    });
    return static_cast<double>(hits) / static_cast<double>(total);
}

double sign_test_p(int n, int wins) {
    // P(Bin(n, 1/2) >= wins), exact.
    long double p = 0.0L;
    for (int i = wins; i <= n; ++i) {
        long double c = 1.0L;
        for (int j = 1; j <= i; ++j) c = c * (n - i + j) / j;
        p += c;
    }
    return static_cast<double>(p / std::pow(2.0L, n));
}

}  // namespace oracles
