#include <cmath>
#include <stdexcept>
#include <string>

#include "rgate/estimation.hpp"
#include "rgate/util.hpp"

namespace rgate::se {

namespace {

// Regularized lower incomplete gamma P(a, x): series expansion for
// x < a + 1, Lentz continued fraction for the complement otherwise.
double gamma_p(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_p: bad arguments");
    if (x == 0.0) return 0.0;
    const double lg = std::lgamma(a);
    if (x < a + 1.0) {
        double ap = a;
        double sum = 1.0 / a;
        double del = sum;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::abs(del) < std::abs(sum) * 1e-16) break;
        }
        return sum * std::exp(-x + a * std::log(x) - lg);
    }
    // Continued fraction for Q(a, x).
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    const double q = std::exp(-x + a * std::log(x) - lg) * h;
    return 1.0 - q;
}

double chi2_pdf(int dof, double x) {
    if (x <= 0.0) return 0.0;
    const double k2 = dof / 2.0;
    return std::exp((k2 - 1.0) * std::log(x) - x / 2.0 - k2 * std::log(2.0) - std::lgamma(k2));
}

}  // namespace

double chi2_cdf(int dof, double x) {
    if (dof < 1) throw std::invalid_argument("chi2_cdf: dof must be >= 1");
    if (x <= 0.0) return 0.0;
    return gamma_p(dof / 2.0, x / 2.0);
}

double chi2_threshold(int dof, double p) {
    if (dof < 1) throw std::invalid_argument("chi2_threshold: dof must be >= 1");
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("chi2_threshold: p must lie in (0, 1), got " +
                                    std::to_string(p));

    // Bracket the quantile, bisect, then polish with Newton.
    double lo = 0.0;
    double hi = std::max(4.0, 2.0 * dof);
    while (chi2_cdf(dof, hi) < p) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (chi2_cdf(dof, mid) < p) lo = mid;
        else hi = mid;
        if (hi - lo < 1e-12 * std::max(1.0, hi)) break;
    }
    double x = 0.5 * (lo + hi);
    for (int i = 0; i < 8; ++i) {
        const double f = chi2_cdf(dof, x) - p;
        const double d = chi2_pdf(dof, x);
        if (d <= 0.0) break;
        const double step = f / d;
        const double next = x - step;
        if (next <= lo || next >= hi) break;
        x = next;
        if (std::abs(step) < 1e-14 * std::max(1.0, x)) break;
    }
    return x;
}

}  // namespace rgate::se
