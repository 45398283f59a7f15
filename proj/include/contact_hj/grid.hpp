#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "contact_hj/common.hpp"

namespace contact_hj {

struct FullBox {};

struct Ball {
  Point center{};
  double radius = 1.0;
};

using Mask = std::variant<FullBox, Ball>;

// Axis-aligned box with an optional ball mask.
struct Domain {
  int dim = 1;
  Point lo{};
  Point hi{};
  Mask mask = FullBox{};

  bool InBox(const Point& x, double tol = 0.0) const;
  // Geometric membership: inside the box and, for balls, |x - c| <= R + tol.
  bool Contains(const Point& x, double tol = 0.0) const;
  std::string Describe() const;
};

Domain MakeBox(int dim, double lo, double hi);
Domain WithBall(Domain box, double radius, Point center = {});

// Uniform node lattice on a Domain. Nodes are indexed i + nx * j.
class UniformGrid {
 public:
  UniformGrid(Domain domain, std::array<int, 2> counts);

  const Domain& domain() const { return domain_; }
  int dim() const { return domain_.dim; }
  std::array<int, 2> counts() const { return counts_; }
  Point spacing() const { return spacing_; }
  double MinSpacing() const;
  std::size_t size() const { return in_mask_.size(); }
  std::size_t MaskedCount() const { return masked_count_; }

  Point Node(std::size_t index) const;
  std::size_t Index(int i, int j = 0) const {
    return static_cast<std::size_t>(i) + static_cast<std::size_t>(counts_[0]) * static_cast<std::size_t>(j);
  }
  std::array<int, 2> Multi(std::size_t index) const;
  bool InMask(std::size_t index) const { return in_mask_[index] != 0; }
  // Index of the in-mask node closest to x.
  std::size_t NearestNode(const Point& x) const;

  // Same box and resolution with a different mask.
  std::shared_ptr<const UniformGrid> WithMask(Mask mask) const;

 private:
  Domain domain_;
  std::array<int, 2> counts_;
  Point spacing_{};
  std::vector<std::uint8_t> in_mask_;
  std::size_t masked_count_ = 0;
};

enum class FieldKind { kDiscounted, kStateConstraint, kErgodic, kMane, kMaximalTruncated };

std::string ToString(FieldKind kind);
FieldKind FieldKindFromString(const std::string& s);

struct FieldMeta {
  double lambda = 0.0;
  double c = 0.0;
  FieldKind kind = FieldKind::kStateConstraint;
};

// Scalar values on the in-mask nodes of a grid. Out-of-mask entries exist in
// storage for indexing convenience and are never read.
class GridField {
 public:
  GridField() = default;  // empty placeholder, no grid
  GridField(std::shared_ptr<const UniformGrid> grid, double fill = 0.0, FieldMeta meta = {});
  GridField(std::shared_ptr<const UniformGrid> grid, std::vector<double> values, FieldMeta meta);

  const UniformGrid& grid() const { return *grid_; }
  const std::shared_ptr<const UniformGrid>& grid_ptr() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  const FieldMeta& meta() const { return meta_; }
  FieldMeta& meta() { return meta_; }

  double MaxAbs() const;
  double Min() const;
  // Sup-norm of (this - other) over in-mask nodes of both inside the
  // sup-norm window |x|_inf <= half_width.
  double WindowDistance(const GridField& other, double half_width) const;

 private:
  std::shared_ptr<const UniformGrid> grid_;
  std::vector<double> values_;
  FieldMeta meta_;
};

// Multilinear interpolation using in-mask nodes only. Query points may lie
// up to half a cell outside the mask; farther points raise DomainError.
double Interpolate(const GridField& field, const Point& x);
// Same rule without the distance check; x is clamped into the box first.
double InterpolateClamped(const UniformGrid& grid, const std::vector<double>& values,
                          const Point& x);

// Central differences in the interior, one-sided next to the mask boundary.
Point Gradient(const GridField& field, std::size_t node);

// Max over in-mask nodes of |second difference| / 8 summed over axes: the
// linear-interpolation error bound h^2 |u''| / 8.
double InterpolationErrorBound(const GridField& field);

// CSV: header `# kind,lambda,c,R,dx`, then `x[,y],value` per in-mask node,
// 17 significant digits.
void WriteFieldCsv(const GridField& field, const std::filesystem::path& path);
std::string FieldCsv(const GridField& field);
GridField ReadFieldCsv(const std::filesystem::path& path, std::shared_ptr<const UniformGrid> grid);

}  // namespace contact_hj
