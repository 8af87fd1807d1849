#include "credlab/dist.hpp"

#include <stdexcept>

namespace credlab {

Distribution Distribution::from_points(std::vector<Rat> points,
                                       std::vector<Rat> masses) {
  if (points.empty()) throw std::invalid_argument("empty type grid");
  if (points.size() != masses.size()) {
    throw std::invalid_argument("grid/mass size mismatch");
  }
  for (std::size_t k = 0; k + 1 < points.size(); ++k) {
    if (!(points[k] < points[k + 1])) {
      throw std::invalid_argument("type grid must be strictly increasing");
    }
  }
  if (points.front() < Rat(0)) {
    throw std::invalid_argument("type grid must be non-negative");
  }
  Rat total(0);
  for (const Rat& m : masses) {
    if (m < Rat(0)) throw std::invalid_argument("negative probability mass");
    total += m;
  }
  if (!(total == Rat(1))) {
    throw std::invalid_argument("probability masses must sum to one, got " +
                                total.str());
  }
  Distribution d;
  d.grid_.points = std::move(points);
  d.masses_ = std::move(masses);
  d.cdf_.reserve(d.masses_.size());
  Rat run(0);
  for (const Rat& m : d.masses_) {
    run += m;
    d.cdf_.push_back(run);
  }
  d.cdf_.back() = Rat(1);  // exact by construction; keep it literal
  return d;
}

Distribution Distribution::uniform(std::size_t n) {
  if (n < 2) throw std::invalid_argument("uniform grid needs >= 2 points");
  std::vector<Rat> pts;
  std::vector<Rat> mass;
  pts.reserve(n);
  mass.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    pts.emplace_back(static_cast<std::int64_t>(k),
                     static_cast<std::int64_t>(n - 1));
    mass.emplace_back(1, static_cast<std::int64_t>(n));
  }
  return from_points(std::move(pts), std::move(mass));
}

Distribution Distribution::point_mass(const Rat& p) {
  return from_points({p}, {Rat(1)});
}

Rat Distribution::cell_width(std::size_t k) const {
  const auto& p = grid_.points;
  if (p.size() == 1) return Rat(1);
  if (k == 0) return p[1] - p[0];
  if (k + 1 == p.size()) return p[k] - p[k - 1];
  return (p[k + 1] - p[k - 1]) / Rat(2);
}

Rat Distribution::density(std::size_t k) const {
  return masses_[k] / cell_width(k);
}

std::optional<std::size_t> Distribution::index_of(const Rat& p) const {
  for (std::size_t k = 0; k < grid_.points.size(); ++k) {
    if (grid_.points[k] == p) return k;
  }
  return std::nullopt;
}

Rat Distribution::mean() const {
  Rat m(0);
  for (std::size_t k = 0; k < size(); ++k) m += point(k) * mass(k);
  return m;
}

Rat virtual_value(const Distribution& d, std::size_t k) {
  if (k >= d.size()) throw std::out_of_range("virtual value index");
  if (d.mass(k) == Rat(0)) {
    throw std::domain_error("virtual value undefined at zero-mass atom");
  }
  Rat tail = Rat(1) - d.cdf(k);
  return d.point(k) - tail / d.density(k);
}

VirtualValueTable VirtualValueTable::build(const Distribution& d) {
  VirtualValueTable t;
  t.values.reserve(d.size());
  t.defined.reserve(d.size());
  for (std::size_t k = 0; k < d.size(); ++k) {
    if (d.mass(k) == Rat(0)) {
      t.values.emplace_back(0);
      t.defined.push_back(false);
    } else {
      t.values.push_back(virtual_value(d, k));
      t.defined.push_back(true);
    }
  }
  return t;
}

bool is_regular(const Distribution& d) {
  bool have_prev = false;
  Rat prev(0);
  for (std::size_t k = 0; k < d.size(); ++k) {
    if (d.mass(k) == Rat(0)) continue;
    Rat mr = virtual_value(d, k);
    if (have_prev && !(prev < mr)) return false;
    prev = mr;
    have_prev = true;
  }
  return true;
}

}  // namespace credlab
