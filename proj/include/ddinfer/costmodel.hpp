#pragma once

#include <cstddef>
#include <optional>

namespace ddinfer {

// How the interface size is estimated when it is not given explicitly.
enum class InterfaceScaling {
    surface,  // n_I ~ n_F^((d-1)/d)
    power,    // n_I ~ n_F^(d-1)
};

// Problem sizes for the asymptotic cost estimates. Costs are in relative units.
struct CostParams {
    double n = 1;    // total DOFs
    double n_F = 1;  // full-order subdomain DOFs
    std::optional<double> n_I;
    double n_T = 1;  // training snapshots
    double n_t = 1;  // online time steps
    double r = 1;    // local reduced dimension
    double r_g = 1;  // global reduced dimension
    double s = 3;    // stencil size
    int k = 1;       // polynomial order
    int d = 1;       // spatial dimension
    InterfaceScaling scaling = InterfaceScaling::surface;

    double interface_count() const;
    void validate() const;
};

struct OfflineCosts {
    double sfom = 0.0;
    double opinf = 0.0;
    double global_opinf = 0.0;
    double global_sfom = 0.0;
};

struct OfflineRatios {
    double vs_global_opinf = 0.0;  // coupled / global reduced
    double vs_global_sfom = 0.0;   // coupled / global sparse
};

struct OnlineCosts {
    double sfom = 0.0;
    double opinf = 0.0;
    double fom = 0.0;
};

OfflineCosts offline_costs(const CostParams& p);
OfflineRatios offline_ratios(const CostParams& p);
OnlineCosts online_costs(const CostParams& p);
// Coupled-over-full-order online cost ratio.
double online_cost_ratio(const CostParams& p);
// Reciprocal of online_cost_ratio.
double online_speedup(const CostParams& p);

}  // namespace ddinfer
