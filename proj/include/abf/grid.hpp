#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace abf {

/**
 * Regular collocation grid on the flat torus [0,1)^n.
 *
 * The leading m axes form the reaction-coordinate block; the trailing n-m
 * axes are the fiber. Points are x_a = i_a / res_a and storage is row-major
 * with the last axis fastest, so each reaction-coordinate index owns one
 * contiguous fiber block.
 */
class TorusGrid {
public:
    TorusGrid(std::vector<int> resolution, int m);

    int n() const { return static_cast<int>(res_.size()); }
    int m() const { return m_; }
    const std::vector<int>& resolution() const { return res_; }
    std::size_t size() const { return size_; }
    /** Quadrature weight of one point: 1 / size. */
    double cell_volume() const { return 1.0 / static_cast<double>(size_); }
    /** Smallest grid spacing over all axes. */
    double min_spacing() const;

    /** Grid of the leading m axes (its own m equals its dimension). */
    TorusGrid xi_grid() const;
    /** Grid of the trailing n-m axes. Requires m < n. */
    TorusGrid fiber_grid() const;
    /** Number of points in the xi block / fiber block. */
    std::size_t xi_size() const { return xi_size_; }
    std::size_t fiber_size() const { return fiber_size_; }

    std::size_t flatten(std::span<const int> idx) const;
    std::vector<int> unflatten(std::size_t flat) const;
    /** Coordinates of the flat-indexed point. */
    std::vector<double> point(std::size_t flat) const;
    double coordinate(int axis, int idx) const { return static_cast<double>(idx) / res_[axis]; }

    bool operator==(const TorusGrid& other) const { return res_ == other.res_ && m_ == other.m_; }

private:
    std::vector<int> res_;
    int m_;
    std::size_t size_;
    std::size_t xi_size_;
    std::size_t fiber_size_;
};

/** Distance on the flat torus: sqrt of the sum of squared per-axis wrap distances. */
double periodic_distance(std::span<const double> p, std::span<const double> q);

/** Per-axis wrap distance on [0,1): min(|d|, 1-|d|). */
double periodic_axis_distance(double a, double b);

} // namespace abf
