#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "credlab/rational.hpp"

namespace credlab {

// Finite type grid: strictly increasing, non-negative support points.
struct TypeGrid {
  std::vector<Rat> points;
};

// Probability distribution over a TypeGrid.  Masses are exact rationals and
// must sum to one exactly.  The density convention divides each atom's mass
// by the width of its grid cell (midpoint boundaries in the interior, one
// full spacing at the ends), so an equally spaced, equal mass grid on [0,1]
// reproduces the uniform density exactly at every point.
class Distribution {
public:
  static Distribution from_points(std::vector<Rat> points,
                                  std::vector<Rat> masses);

  // Equally spaced n-point grid on [0,1] with equal masses.
  static Distribution uniform(std::size_t n);

  // Degenerate distribution putting all mass on a single point.
  static Distribution point_mass(const Rat& p);

  std::size_t size() const { return grid_.points.size(); }
  const TypeGrid& grid() const { return grid_; }
  const Rat& point(std::size_t k) const { return grid_.points[k]; }
  const Rat& mass(std::size_t k) const { return masses_[k]; }

  // F(points[k]) = P(theta <= points[k]).
  const Rat& cdf(std::size_t k) const { return cdf_[k]; }
  // P(theta < points[k]).
  Rat cdf_below(std::size_t k) const { return cdf_[k] - masses_[k]; }

  // Density under the cell-width convention; infinite-support conventions do
  // not arise on finite grids so this is always finite and positive for atoms
  // with positive mass.
  Rat density(std::size_t k) const;

  std::optional<std::size_t> index_of(const Rat& p) const;

  Rat mean() const;

private:
  Distribution() = default;
  Rat cell_width(std::size_t k) const;

  TypeGrid grid_;
  std::vector<Rat> masses_;
  std::vector<Rat> cdf_;
};

// Myerson virtual value MR(theta_k) = theta_k - (1 - F(theta_k)) / f(theta_k).
// Throws std::domain_error for atoms with zero mass (undefined density).
Rat virtual_value(const Distribution& d, std::size_t k);

// Precomputed virtual values for every grid point with positive mass.
struct VirtualValueTable {
  std::vector<Rat> values;  // aligned with grid indices; zero-mass atoms keep
                            // a placeholder of 0 and a false flag below
  std::vector<bool> defined;

  static VirtualValueTable build(const Distribution& d);
};

// Regularity: the virtual value is strictly increasing across consecutive
// positive-mass grid points.
bool is_regular(const Distribution& d);

}  // namespace credlab
