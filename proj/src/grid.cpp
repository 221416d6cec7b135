#include "abf/grid.hpp"

#include <cmath>
#include <cstdio>

#include "abf/errors.hpp"

namespace abf {

TorusGrid::TorusGrid(std::vector<int> resolution, int m) : res_(std::move(resolution)), m_(m) {
    if (res_.empty()) throw ContractViolation("grid: resolution must be non-empty");
    if (m_ < 1 || m_ > static_cast<int>(res_.size()))
        throw ContractViolation("grid: need 1 <= m <= n");
    size_ = 1;
    for (int r : res_) {
        if (r < 2) throw ContractViolation("grid: each axis needs at least 2 points");
        size_ *= static_cast<std::size_t>(r);
    }
    xi_size_ = 1;
    for (int a = 0; a < m_; ++a) xi_size_ *= static_cast<std::size_t>(res_[a]);
    fiber_size_ = size_ / xi_size_;
}

double TorusGrid::min_spacing() const {
    int rmax = res_[0];
    for (int r : res_)
        if (r > rmax) rmax = r;
    return 1.0 / static_cast<double>(rmax);
}

TorusGrid TorusGrid::xi_grid() const {
    std::vector<int> r(res_.begin(), res_.begin() + m_);
    return TorusGrid(std::move(r), m_);
}

TorusGrid TorusGrid::fiber_grid() const {
    if (m_ == n()) throw ContractViolation("grid: fiber requires m < n");
    std::vector<int> r(res_.begin() + m_, res_.end());
    const int fm = static_cast<int>(r.size());
    return TorusGrid(std::move(r), fm);
}

std::size_t TorusGrid::flatten(std::span<const int> idx) const {
    if (static_cast<int>(idx.size()) != n()) throw ContractViolation("grid: index arity mismatch");
    std::size_t flat = 0;
    for (int a = 0; a < n(); ++a) {
        int i = idx[a];
        if (i < 0 || i >= res_[a]) throw ContractViolation("grid: index out of range");
        flat = flat * static_cast<std::size_t>(res_[a]) + static_cast<std::size_t>(i);
    }
    return flat;
}

std::vector<int> TorusGrid::unflatten(std::size_t flat) const {
    std::vector<int> idx(n());
    for (int a = n() - 1; a >= 0; --a) {
        idx[a] = static_cast<int>(flat % static_cast<std::size_t>(res_[a]));
        flat /= static_cast<std::size_t>(res_[a]);
    }
    return idx;
}

std::vector<double> TorusGrid::point(std::size_t flat) const {
    std::vector<int> idx = unflatten(flat);
    std::vector<double> x(n());
    for (int a = 0; a < n(); ++a) x[a] = coordinate(a, idx[a]);
    return x;
}

double periodic_axis_distance(double a, double b) {
    double d = std::fabs(a - b);
    d = d - std::floor(d);
    return d <= 0.5 ? d : 1.0 - d;
}

double periodic_distance(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw ContractViolation("periodic_distance: arity mismatch");
    double s = 0.0;
    for (std::size_t a = 0; a < p.size(); ++a) {
        double d = periodic_axis_distance(p[a], q[a]);
        s += d * d;
    }
    return std::sqrt(s);
}

} // namespace abf
