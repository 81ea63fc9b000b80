#include "ddinfer/costmodel.hpp"

#include <cmath>

#include "ddinfer/error.hpp"

namespace ddinfer {

namespace {

double factorial(int k) {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
}

}  // namespace

double CostParams::interface_count() const {
    if (n_I) return *n_I;
    const double exponent = scaling == InterfaceScaling::surface ? static_cast<double>(d - 1) / d : static_cast<double>(d - 1);
    return std::round(std::pow(n_F, exponent));
}

void CostParams::validate() const {
    for (double v : {n, n_F, n_T, n_t, r, r_g, s})
        if (!(v > 0.0)) throw InvalidArgument("cost parameters must be positive");
    if (k < 1 || d < 1) throw InvalidArgument("cost parameters: k and d must be positive");
    if (n_F > n) throw InvalidArgument("cost parameters: n_F exceeds n");
    if (n_I && !(*n_I >= 0.0)) throw InvalidArgument("cost parameters: n_I must be nonnegative");
}

OfflineCosts offline_costs(const CostParams& p) {
    p.validate();
    const double kf = factorial(p.k);
    const double stencil = std::pow(p.s, p.k) / kf;
    const double ni = p.interface_count();
    OfflineCosts c;
    c.sfom = p.n_F * stencil * stencil * p.n_T;
    c.opinf = p.r * std::pow(std::pow(p.r + ni, p.k) / kf, 2) * p.n_T;
    c.global_opinf = std::pow(p.r_g, 2 * p.k + 1) / (kf * kf) * p.n_T;
    c.global_sfom = p.n * stencil * stencil * p.n_T;
    return c;
}

OfflineRatios offline_ratios(const CostParams& p) {
    p.validate();
    const double ni = p.interface_count();
    const int k2 = 2 * p.k;
    OfflineRatios q;
    q.vs_global_opinf = ((p.n_F / p.r) * std::pow(p.s / p.r, k2) + std::pow(1.0 + ni / p.r, k2)) *
                        std::pow(p.r_g / p.r, -k2 - 1);
    q.vs_global_sfom = p.n_F / p.n + (p.r / p.n) * std::pow(1.0 + ni / p.r, k2) * std::pow(p.s / p.r, -k2);
    return q;
}

OnlineCosts online_costs(const CostParams& p) {
    p.validate();
    const double kf = factorial(p.k);
    OnlineCosts c;
    c.sfom = p.n_F * std::pow(p.s, p.k) / kf * p.n_t;
    c.opinf = p.r * std::pow(p.r + p.interface_count(), p.k) / kf * p.n_t;
    c.fom = p.n * std::pow(p.s, p.k) / kf * p.n_t;
    return c;
}

double online_cost_ratio(const CostParams& p) {
    p.validate();
    return (p.r / p.n) * std::pow((p.r + p.interface_count()) / p.s, p.k) + p.n_F / p.n;
}

double online_speedup(const CostParams& p) { return 1.0 / online_cost_ratio(p); }

}  // namespace ddinfer
