#pragma once

#include <cstddef>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "matrix.hpp"

namespace spectra_gap {

enum class BoundaryCondition { dirichlet, neumann };

/// vertex: nodes at a + (i+1)h, boundary nodes dropped. cell: nodes at cell centers a + (i+1/2)h.
enum class NodeLayout { vertex, cell };

inline NodeLayout default_layout(BoundaryCondition bc) {
    return bc == BoundaryCondition::dirichlet ? NodeLayout::vertex : NodeLayout::cell;
}

/**
 * @brief Uniform grid on [a, b] with N unknowns.
 *
 * Dirichlet problems default to the vertex layout, h = (b-a)/(N+1); Neumann
 * problems use cell centers, h = (b-a)/N, with mirror ghosts. A Dirichlet
 * problem may also use cell centers (odd ghost), which lets it share nodes
 * with a Neumann problem.
 */
struct Grid1D {
    double a = 0.0;
    double b = 1.0;
    std::size_t N = 0;
    BoundaryCondition bc = BoundaryCondition::dirichlet;
    NodeLayout layout = NodeLayout::vertex;

    Grid1D(double a_, double b_, std::size_t n, BoundaryCondition bc_ = BoundaryCondition::dirichlet)
        : Grid1D(a_, b_, n, bc_, default_layout(bc_)) {}

    Grid1D(double a_, double b_, std::size_t n, BoundaryCondition bc_, NodeLayout layout_)
        : a(a_), b(b_), N(n), bc(bc_), layout(layout_) {
        require(b > a, ErrorCode::InvalidGrid, "interval needs b > a");
        require(N >= 3, ErrorCode::InvalidGrid, "need at least 3 interior points");
        require(!(bc == BoundaryCondition::neumann && layout == NodeLayout::vertex), ErrorCode::UnsupportedBC,
                "Neumann conditions use the cell-centered layout");
    }

    std::size_t size() const noexcept { return N; }
    double h() const noexcept {
        return layout == NodeLayout::vertex ? (b - a) / static_cast<double>(N + 1) : (b - a) / static_cast<double>(N);
    }
    double x(std::size_t i) const noexcept {
        return layout == NodeLayout::vertex ? a + static_cast<double>(i + 1) * h()
                                            : a + (static_cast<double>(i) + 0.5) * h();
    }
    RealVector nodes() const {
        RealVector xs(N);
        for (std::size_t i = 0; i < N; ++i) xs[i] = x(i);
        return xs;
    }
};

/**
 * @brief Tensor grid on a rectangle with an optional node-inclusion mask.
 *
 * Nodes are numbered i + N1*j; unknowns are the included nodes in that order.
 * Masked (staircase) domains are Dirichlet only.
 */
class Grid2D {
public:
    Grid2D(double a1, double b1, double a2, double b2, std::size_t n1, std::size_t n2,
           BoundaryCondition bc = BoundaryCondition::dirichlet, std::optional<std::vector<bool>> mask = std::nullopt)
        : a1_(a1), b1_(b1), a2_(a2), b2_(b2), n1_(n1), n2_(n2), bc_(bc), mask_(std::move(mask)) {
        require(b1 > a1 && b2 > a2, ErrorCode::InvalidGrid, "rectangle needs positive side lengths");
        require(n1 >= 3 && n2 >= 3, ErrorCode::InvalidGrid, "need at least 3 interior points per direction");
        unknown_.assign(n1 * n2, -1);
        if (mask_) {
            require(bc == BoundaryCondition::dirichlet, ErrorCode::UnsupportedBC, "masked domains are Dirichlet only");
            require(mask_->size() == n1 * n2, ErrorCode::DimensionMismatch, "mask size must be N1*N2");
        }
        std::size_t count = 0;
        for (std::size_t p = 0; p < n1 * n2; ++p)
            if (included(p)) unknown_[p] = static_cast<std::ptrdiff_t>(count++);
        size_ = count;
        if (mask_) {
            require(count >= 9, ErrorCode::InvalidGrid, "mask must include at least 9 nodes");
            require(connected(), ErrorCode::InvalidGrid, "mask must be connected");
        }
    }

    static Grid2D unit_square(std::size_t n, BoundaryCondition bc = BoundaryCondition::dirichlet) {
        return Grid2D(0.0, 1.0, 0.0, 1.0, n, n, bc);
    }

    std::size_t n1() const noexcept { return n1_; }
    std::size_t n2() const noexcept { return n2_; }
    BoundaryCondition bc() const noexcept { return bc_; }
    NodeLayout layout() const noexcept { return default_layout(bc_); }
    bool masked() const noexcept { return mask_.has_value(); }
    double a1() const noexcept { return a1_; }
    double b1() const noexcept { return b1_; }
    double a2() const noexcept { return a2_; }
    double b2() const noexcept { return b2_; }
    double area() const noexcept { return (b1_ - a1_) * (b2_ - a2_); }

    double h1() const noexcept { return spacing(a1_, b1_, n1_); }
    double h2() const noexcept { return spacing(a2_, b2_, n2_); }
    double cell_area() const noexcept { return h1() * h2(); }

    double x1(std::size_t i) const noexcept { return coord(a1_, h1(), i); }
    double x2(std::size_t j) const noexcept { return coord(a2_, h2(), j); }

    /// Coordinates of a possibly-boundary vertex index in [-1, N] (vertex layout).
    double x1_ext(std::ptrdiff_t i) const noexcept { return a1_ + static_cast<double>(i + 1) * h1(); }
    double x2_ext(std::ptrdiff_t j) const noexcept { return a2_ + static_cast<double>(j + 1) * h2(); }

    std::size_t node(std::size_t i, std::size_t j) const noexcept { return i + n1_ * j; }
    bool included(std::size_t node) const { return !mask_ || (*mask_)[node]; }

    /// Unknown index of node (i, j), or -1 for excluded/outside nodes.
    std::ptrdiff_t unknown(std::ptrdiff_t i, std::ptrdiff_t j) const {
        if (i < 0 || j < 0 || i >= static_cast<std::ptrdiff_t>(n1_) || j >= static_cast<std::ptrdiff_t>(n2_)) return -1;
        return unknown_[static_cast<std::size_t>(i) + n1_ * static_cast<std::size_t>(j)];
    }

    std::size_t size() const noexcept { return size_; }

    /// (i, j) of each unknown, in unknown order.
    std::vector<std::pair<std::size_t, std::size_t>> unknown_nodes() const {
        std::vector<std::pair<std::size_t, std::size_t>> out;
        out.reserve(size_);
        for (std::size_t j = 0; j < n2_; ++j)
            for (std::size_t i = 0; i < n1_; ++i)
                if (included(node(i, j))) out.emplace_back(i, j);
        return out;
    }

    /// Samples of the coordinate x_l (l = 1 or 2) at the unknowns.
    RealVector coordinate(int l) const {
        RealVector out;
        out.reserve(size_);
        for (auto [i, j] : unknown_nodes()) out.push_back(l == 1 ? x1(i) : x2(j));
        return out;
    }

private:
    double spacing(double a, double b, std::size_t n) const noexcept {
        return bc_ == BoundaryCondition::dirichlet ? (b - a) / static_cast<double>(n + 1) : (b - a) / static_cast<double>(n);
    }
    double coord(double a, double h, std::size_t i) const noexcept {
        return bc_ == BoundaryCondition::dirichlet ? a + static_cast<double>(i + 1) * h
                                                   : a + (static_cast<double>(i) + 0.5) * h;
    }

    bool connected() const {
        std::vector<bool> seen(n1_ * n2_, false);
        std::size_t start = 0;
        while (!included(start)) ++start;
        std::queue<std::size_t> todo;
        todo.push(start);
        seen[start] = true;
        std::size_t reached = 0;
        while (!todo.empty()) {
            const std::size_t p = todo.front();
            todo.pop();
            ++reached;
            const auto i = static_cast<std::ptrdiff_t>(p % n1_), j = static_cast<std::ptrdiff_t>(p / n1_);
            const std::ptrdiff_t di[] = {1, -1, 0, 0}, dj[] = {0, 0, 1, -1};
            for (int d = 0; d < 4; ++d) {
                if (unknown(i + di[d], j + dj[d]) < 0) continue;
                const std::size_t q = static_cast<std::size_t>(i + di[d]) + n1_ * static_cast<std::size_t>(j + dj[d]);
                if (!seen[q]) {
                    seen[q] = true;
                    todo.push(q);
                }
            }
        }
        return reached == size_;
    }

    double a1_, b1_, a2_, b2_;
    std::size_t n1_, n2_;
    BoundaryCondition bc_;
    std::optional<std::vector<bool>> mask_;
    std::vector<std::ptrdiff_t> unknown_;
    std::size_t size_ = 0;
};

} // namespace spectra_gap
