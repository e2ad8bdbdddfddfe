#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace chemotaxis_lab {

namespace detail {
inline void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}
}  // namespace detail

/// Cell-centered rectangular mesh on [0, L0] x [0, L1] x [0, L2].
///
/// Axes beyond `dim()` carry a single cell of unit length so that a 1D or 2D
/// grid can be traversed with the same three-index loops as a 3D one. Cells
/// are stored row-major: the last active axis varies fastest.
template <typename Scalar>
class Grid {
 public:
  using Vector3 = Eigen::Array<Scalar, 3, 1>;

  Grid() : Grid(1, Eigen::Array3i(2, 1, 1), Vector3(1, 1, 1)) {}

  Grid(int dim, const Eigen::Array3i& cells, const Vector3& lengths) : dim_(dim) {
    detail::require(dim >= 1 && dim <= 3, "grid dimension must be 1, 2 or 3");
    for (int a = 0; a < 3; ++a) {
      if (a < dim) {
        detail::require(cells(a) >= 2, "grid needs at least 2 cells on axis " + std::to_string(a));
        detail::require(lengths(a) > 0 && std::isfinite(static_cast<double>(lengths(a))),
                        "grid length must be positive on axis " + std::to_string(a));
        cells_(a) = cells(a);
        lengths_(a) = lengths(a);
      } else {
        cells_(a) = 1;
        lengths_(a) = Scalar(1);
      }
      spacing_(a) = lengths_(a) / Scalar(cells_(a));
    }
    strides_ = Eigen::Array3i(cells_(1) * cells_(2), cells_(2), 1);
  }

  /// Uniform grid: `n` cells and side length `length` on every active axis.
  static Grid uniform(int dim, int n, Scalar length = Scalar(1)) {
    return Grid(dim, Eigen::Array3i(n, n, n), Vector3(length, length, length));
  }

  int dim() const { return dim_; }
  int cells(int axis) const { return cells_(axis); }
  const Eigen::Array3i& cells() const { return cells_; }
  Scalar length(int axis) const { return lengths_(axis); }
  Scalar spacing(int axis) const { return spacing_(axis); }
  int stride(int axis) const { return strides_(axis); }
  Eigen::Index size() const { return Eigen::Index(cells_(0)) * cells_(1) * cells_(2); }

  Scalar min_spacing() const { return spacing_.head(dim_).minCoeff(); }

  Scalar cell_volume() const {
    Scalar v(1);
    for (int a = 0; a < dim_; ++a) v *= spacing_(a);
    return v;
  }

  Scalar measure() const {
    Scalar m(1);
    for (int a = 0; a < dim_; ++a) m *= lengths_(a);
    return m;
  }

  Eigen::Index index(int i0, int i1, int i2) const {
    return (Eigen::Index(i0) * cells_(1) + i1) * cells_(2) + i2;
  }

  Eigen::Array3i multi_index(Eigen::Index idx) const {
    const int i2 = int(idx % cells_(2));
    idx /= cells_(2);
    const int i1 = int(idx % cells_(1));
    return Eigen::Array3i(int(idx / cells_(1)), i1, i2);
  }

  /// Center of a cell; inactive axes report 0.
  Vector3 center(Eigen::Index idx) const {
    const Eigen::Array3i i = multi_index(idx);
    Vector3 x = Vector3::Zero();
    for (int a = 0; a < dim_; ++a) x(a) = (Scalar(i(a)) + Scalar(0.5)) * spacing_(a);
    return x;
  }

  bool operator==(const Grid& other) const {
    return dim_ == other.dim_ && (cells_ == other.cells_).all() && (lengths_ == other.lengths_).all();
  }
  bool operator!=(const Grid& other) const { return !(*this == other); }

 private:
  int dim_;
  Eigen::Array3i cells_;
  Eigen::Array3i strides_;
  Vector3 lengths_;
  Vector3 spacing_;
};

/// One value per grid cell.
template <typename Scalar>
class Field {
 public:
  using Values = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  Field() = default;
  explicit Field(const Grid<Scalar>& grid) : grid_(grid), values_(Values::Zero(grid.size())) {}

  template <typename Derived>
  Field(const Grid<Scalar>& grid, const Eigen::ArrayBase<Derived>& values) : grid_(grid), values_(values) {
    detail::require(values_.size() == grid.size(), "field size does not match grid");
  }

  static Field constant(const Grid<Scalar>& grid, Scalar c) {
    return Field(grid, Values::Constant(grid.size(), c));
  }

  /// Samples `fn(center)` at every cell center.
  template <typename Fn>
  static Field from_function(const Grid<Scalar>& grid, Fn&& fn) {
    Field f(grid);
    for (Eigen::Index k = 0; k < grid.size(); ++k) f.values_(k) = fn(grid.center(k));
    return f;
  }

  const Grid<Scalar>& grid() const { return grid_; }
  const Values& values() const { return values_; }
  Values& values() { return values_; }
  Eigen::Index size() const { return values_.size(); }

  Scalar operator[](Eigen::Index k) const { return values_(k); }
  Scalar& operator[](Eigen::Index k) { return values_(k); }

  bool all_finite() const { return values_.isFinite().all(); }

 private:
  Grid<Scalar> grid_;
  Values values_;
};

/// Fluxes on the cell faces normal to each active axis.
///
/// Along axis `a` there are `cells(a) + 1` faces per grid line; the first and
/// last of them lie on the boundary.
template <typename Scalar>
class FaceFlux {
 public:
  using Values = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  explicit FaceFlux(const Grid<Scalar>& grid) : grid_(grid) {
    for (int a = 0; a < grid.dim(); ++a) components_[a] = Values::Zero(face_count(a));
  }

  const Grid<Scalar>& grid() const { return grid_; }

  Eigen::Index face_count(int axis) const {
    Eigen::Array3i n = grid_.cells();
    n(axis) += 1;
    return Eigen::Index(n(0)) * n(1) * n(2);
  }

  /// Face `i` (in 0..cells(axis)) along `axis` on the line through (i0, i1, i2).
  Eigen::Index face_index(int axis, Eigen::Array3i i) const {
    Eigen::Array3i n = grid_.cells();
    n(axis) += 1;
    return (Eigen::Index(i(0)) * n(1) + i(1)) * n(2) + i(2);
  }

  Values& component(int axis) { return components_[axis]; }
  const Values& component(int axis) const { return components_[axis]; }

  Scalar max_abs() const {
    Scalar m(0);
    for (int a = 0; a < grid_.dim(); ++a) m = std::max(m, components_[a].abs().maxCoeff());
    return m;
  }

 private:
  Grid<Scalar> grid_;
  std::array<Values, 3> components_;
};

/// Symmetric matrix of fields, e.g. the discrete Hessian.
template <typename Scalar>
class SymmetricFieldMatrix {
 public:
  explicit SymmetricFieldMatrix(const Grid<Scalar>& grid) : dim_(grid.dim()) {
    entries_.assign(dim_ * (dim_ + 1) / 2, Field<Scalar>(grid));
  }
  int dim() const { return dim_; }
  Field<Scalar>& operator()(int i, int j) { return entries_[slot(i, j)]; }
  const Field<Scalar>& operator()(int i, int j) const { return entries_[slot(i, j)]; }

  /// Frobenius norm squared per cell, counting off-diagonal entries twice.
  typename Field<Scalar>::Values frobenius_squared() const {
    typename Field<Scalar>::Values s = Field<Scalar>::Values::Zero(entries_.front().size());
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < dim_; ++j) s += (*this)(i, j).values().square();
    return s;
  }

 private:
  int slot(int i, int j) const {
    if (i > j) std::swap(i, j);
    return i * dim_ - i * (i - 1) / 2 + (j - i);
  }
  int dim_;
  std::vector<Field<Scalar>> entries_;
};

using Gridd = Grid<double>;
using Fieldd = Field<double>;
using FaceFluxd = FaceFlux<double>;

namespace detail {

// Calls fn(first_index, stride, count) once for every grid line along `axis`.
template <typename Scalar, typename Fn>
void for_each_line(const Grid<Scalar>& grid, int axis, Fn&& fn) {
  const Eigen::Index stride = grid.stride(axis);
  const int n = grid.cells(axis);
  const Eigen::Index block = stride * n;
  for (Eigen::Index outer = 0; outer < grid.size(); outer += block)
    for (Eigen::Index inner = 0; inner < stride; ++inner) fn(outer + inner, stride, n);
}

template <typename Scalar>
void require_min_cells(const Grid<Scalar>& grid, int min_cells, const char* op) {
  for (int a = 0; a < grid.dim(); ++a)
    require(grid.cells(a) >= min_cells,
            std::string(op) + " needs at least " + std::to_string(min_cells) + " cells per axis");
}

}  // namespace detail

/// Second difference along one axis with mirror ghosts.
template <typename Scalar>
Field<Scalar> second_difference(const Field<Scalar>& f, int axis) {
  const Grid<Scalar>& g = f.grid();
  detail::require_min_cells(g, 2, "second_difference");
  Field<Scalar> out(g);
  const Scalar inv_h2 = Scalar(1) / (g.spacing(axis) * g.spacing(axis));
  const auto& in = f.values();
  auto& res = out.values();
  detail::for_each_line(g, axis, [&](Eigen::Index first, Eigen::Index s, int n) {
    for (int i = 0; i < n; ++i) {
      const Eigen::Index k = first + i * s;
      const Scalar left = i > 0 ? in(k - s) : in(k);
      const Scalar right = i < n - 1 ? in(k + s) : in(k);
      res(k) = (left - Scalar(2) * in(k) + right) * inv_h2;
    }
  });
  return out;
}

/// Five/seven-point Laplacian with zero-flux (mirror ghost) boundaries.
template <typename Scalar>
Field<Scalar> laplacian(const Field<Scalar>& f) {
  const Grid<Scalar>& g = f.grid();
  detail::require_min_cells(g, 2, "laplacian");
  Field<Scalar> out(g);
  for (int a = 0; a < g.dim(); ++a) out.values() += second_difference(f, a).values();
  return out;
}

/// Central difference along one axis; at boundary cells the mirror ghost
/// makes this the average of the interior face gradient and a zero boundary
/// face gradient.
template <typename Scalar>
Field<Scalar> derivative(const Field<Scalar>& f, int axis) {
  const Grid<Scalar>& g = f.grid();
  detail::require_min_cells(g, 2, "derivative");
  Field<Scalar> out(g);
  const Scalar inv_2h = Scalar(1) / (Scalar(2) * g.spacing(axis));
  const auto& in = f.values();
  auto& res = out.values();
  detail::for_each_line(g, axis, [&](Eigen::Index first, Eigen::Index s, int n) {
    for (int i = 0; i < n; ++i) {
      const Eigen::Index k = first + i * s;
      const Scalar left = i > 0 ? in(k - s) : in(k);
      const Scalar right = i < n - 1 ? in(k + s) : in(k);
      res(k) = (right - left) * inv_2h;
    }
  });
  return out;
}

template <typename Scalar>
std::vector<Field<Scalar>> grad_centered(const Field<Scalar>& f) {
  std::vector<Field<Scalar>> out;
  out.reserve(f.grid().dim());
  for (int a = 0; a < f.grid().dim(); ++a) out.push_back(derivative(f, a));
  return out;
}

/// Squared magnitude of the centered gradient.
template <typename Scalar>
typename Field<Scalar>::Values grad_squared(const Field<Scalar>& f) {
  typename Field<Scalar>::Values s = Field<Scalar>::Values::Zero(f.size());
  for (int a = 0; a < f.grid().dim(); ++a) s += derivative(f, a).values().square();
  return s;
}

/// Difference quotient across every interior face; boundary faces are zero.
template <typename Scalar>
FaceFlux<Scalar> face_gradient(const Field<Scalar>& f) {
  const Grid<Scalar>& g = f.grid();
  FaceFlux<Scalar> out(g);
  for (int a = 0; a < g.dim(); ++a) {
    const Scalar inv_h = Scalar(1) / g.spacing(a);
    auto& comp = out.component(a);
    const auto& in = f.values();
    for (Eigen::Index k = 0; k < g.size(); ++k) {
      Eigen::Array3i i = g.multi_index(k);
      if (i(a) == 0) continue;
      const Scalar diff = (in(k) - in(k - g.stride(a))) * inv_h;
      comp(out.face_index(a, i)) = diff;
    }
  }
  return out;
}

/// Arithmetic average of the two cells adjacent to every interior face;
/// boundary faces are zero.
template <typename Scalar>
FaceFlux<Scalar> face_average(const Field<Scalar>& f) {
  const Grid<Scalar>& g = f.grid();
  FaceFlux<Scalar> out(g);
  for (int a = 0; a < g.dim(); ++a) {
    auto& comp = out.component(a);
    const auto& in = f.values();
    for (Eigen::Index k = 0; k < g.size(); ++k) {
      Eigen::Array3i i = g.multi_index(k);
      if (i(a) == 0) continue;
      comp(out.face_index(a, i)) = Scalar(0.5) * (in(k) + in(k - g.stride(a)));
    }
  }
  return out;
}

/// Conservative divergence of a face flux. Boundary faces must carry zero
/// flux, which makes the integral of the result vanish up to round-off.
template <typename Scalar>
Field<Scalar> flux_divergence(const FaceFlux<Scalar>& flux) {
  const Grid<Scalar>& g = flux.grid();
  Field<Scalar> out(g);
  for (int a = 0; a < g.dim(); ++a) {
    const auto& comp = flux.component(a);
    const Scalar inv_h = Scalar(1) / g.spacing(a);
    for (Eigen::Index k = 0; k < g.size(); ++k) {
      Eigen::Array3i lo = g.multi_index(k);
      Eigen::Array3i hi = lo;
      hi(a) += 1;
      if (lo(a) == 0) detail::require(comp(flux.face_index(a, lo)) == Scalar(0), "nonzero flux on boundary face");
      if (hi(a) == g.cells(a))
        detail::require(comp(flux.face_index(a, hi)) == Scalar(0), "nonzero flux on boundary face");
      out[k] += (comp(flux.face_index(a, hi)) - comp(flux.face_index(a, lo))) * inv_h;
    }
  }
  return out;
}

/// Discrete Hessian: per-axis second differences on the diagonal and
/// centered cross differences off it, all with mirror ghosts.
template <typename Scalar>
SymmetricFieldMatrix<Scalar> hessian_entries(const Field<Scalar>& f) {
  const Grid<Scalar>& g = f.grid();
  detail::require_min_cells(g, 3, "hessian_entries");
  SymmetricFieldMatrix<Scalar> hess(g);
  for (int a = 0; a < g.dim(); ++a) hess(a, a) = second_difference(f, a);
  const auto& in = f.values();
  for (int a = 0; a < g.dim(); ++a) {
    for (int b = a + 1; b < g.dim(); ++b) {
      auto& res = hess(a, b).values();
      const Scalar scale = Scalar(1) / (Scalar(4) * g.spacing(a) * g.spacing(b));
      for (Eigen::Index k = 0; k < g.size(); ++k) {
        const Eigen::Array3i i = g.multi_index(k);
        auto at = [&](int da, int db) {
          Eigen::Array3i j = i;
          j(a) = std::clamp(i(a) + da, 0, g.cells(a) - 1);
          j(b) = std::clamp(i(b) + db, 0, g.cells(b) - 1);
          return in(g.index(j(0), j(1), j(2)));
        };
        res(k) = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) * scale;
      }
    }
  }
  return hess;
}

/// Midpoint rule.
template <typename Derived>
typename Derived::Scalar integrate(const Grid<typename Derived::Scalar>& grid, const Eigen::ArrayBase<Derived>& values) {
  return values.sum() * grid.cell_volume();
}

template <typename Scalar>
Scalar integrate(const Field<Scalar>& f) {
  return integrate(f.grid(), f.values());
}

/// L^p norm for p in [1, inf]; pass infinity for the max norm.
template <typename Derived>
typename Derived::Scalar lp_norm(const Grid<typename Derived::Scalar>& grid, const Eigen::ArrayBase<Derived>& values,
                                 typename Derived::Scalar p) {
  using Scalar = typename Derived::Scalar;
  detail::require(p >= Scalar(1), "lp_norm needs p >= 1");
  if (std::isinf(static_cast<double>(p))) return values.abs().maxCoeff();
  if (p == Scalar(1)) return integrate(grid, values.abs());
  if (p == Scalar(2)) return std::sqrt(integrate(grid, values.square()));
  return std::pow(integrate(grid, values.abs().pow(p)), Scalar(1) / p);
}

template <typename Scalar>
Scalar lp_norm(const Field<Scalar>& f, Scalar p) {
  return lp_norm(f.grid(), f.values(), p);
}

}  // namespace chemotaxis_lab
