#include "contact_hj/grid.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <limits>
#include <sstream>

#include "contact_hj/io.hpp"

namespace contact_hj {

bool Domain::InBox(const Point& x, double tol) const {
  for (int a = 0; a < dim; ++a) {
    if (x[a] < lo[a] - tol || x[a] > hi[a] + tol) return false;
  }
  return true;
}

bool Domain::Contains(const Point& x, double tol) const {
  if (!InBox(x, tol)) return false;
  if (const auto* ball = std::get_if<Ball>(&mask)) {
    return Norm(x - ball->center) <= ball->radius + tol;
  }
  return true;
}

std::string Domain::Describe() const {
  std::ostringstream os;
  os << "box [" << lo[0] << ", " << hi[0] << "]";
  if (dim == 2) os << " x [" << lo[1] << ", " << hi[1] << "]";
  if (const auto* ball = std::get_if<Ball>(&mask)) {
    os << " masked to ball R=" << ball->radius << " at " << FormatPoint(ball->center, dim);
  }
  return os.str();
}

Domain MakeBox(int dim, double lo, double hi) {
  if (dim != 1 && dim != 2) throw ConfigError("dimension must be 1 or 2");
  if (!(hi > lo)) throw ConfigError("box needs lo < hi");
  Domain d;
  d.dim = dim;
  d.lo = {lo, dim == 2 ? lo : 0.0};
  d.hi = {hi, dim == 2 ? hi : 0.0};
  return d;
}

Domain WithBall(Domain box, double radius, Point center) {
  box.mask = Ball{center, radius};
  return box;
}

// ---------------------------------------------------------------------------

UniformGrid::UniformGrid(Domain domain, std::array<int, 2> counts)
    : domain_(std::move(domain)), counts_(counts) {
  if (domain_.dim == 1) counts_[1] = 1;
  for (int a = 0; a < domain_.dim; ++a) {
    if (counts_[a] < 3) throw ConfigError("grid needs at least 3 nodes per axis");
    spacing_[a] = (domain_.hi[a] - domain_.lo[a]) / (counts_[a] - 1);
    if (!(spacing_[a] > 0.0)) throw ConfigError("grid spacing must be positive");
  }
  if (const auto* ball = std::get_if<Ball>(&domain_.mask)) {
    if (!(ball->radius > 0.0)) throw ConfigError("ball radius must be positive");
    for (int a = 0; a < domain_.dim; ++a) {
      if (ball->center[a] - ball->radius < domain_.lo[a] + spacing_[a] - 1e-12 ||
          ball->center[a] + ball->radius > domain_.hi[a] - spacing_[a] + 1e-12) {
        throw ConfigError("ball of radius " + std::to_string(ball->radius) +
                          " does not fit in the box with a one-cell margin");
      }
      if (ball->radius < spacing_[a]) {
        throw ConfigError("ball of radius " + std::to_string(ball->radius) +
                          " is thinner than one grid cell (" + std::to_string(spacing_[a]) + ")");
      }
    }
  }
  const std::size_t total = static_cast<std::size_t>(counts_[0]) * static_cast<std::size_t>(counts_[1]);
  in_mask_.resize(total);
  for (std::size_t k = 0; k < total; ++k) {
    const bool in = domain_.Contains(Node(k), 1e-12);
    in_mask_[k] = in ? 1 : 0;
    masked_count_ += in ? 1 : 0;
  }
}

double UniformGrid::MinSpacing() const {
  return domain_.dim == 1 ? spacing_[0] : std::min(spacing_[0], spacing_[1]);
}

std::array<int, 2> UniformGrid::Multi(std::size_t index) const {
  const auto nx = static_cast<std::size_t>(counts_[0]);
  return {static_cast<int>(index % nx), static_cast<int>(index / nx)};
}

Point UniformGrid::Node(std::size_t index) const {
  const auto ij = Multi(index);
  Point x{};
  for (int a = 0; a < domain_.dim; ++a) {
    // Exact at both box ends; symmetric boxes give exactly mirrored nodes.
    const double t = static_cast<double>(ij[a]) / (counts_[a] - 1);
    x[a] = ij[a] * 2 < counts_[a] - 1 ? domain_.lo[a] + (domain_.hi[a] - domain_.lo[a]) * t
                                      : domain_.hi[a] - (domain_.hi[a] - domain_.lo[a]) * (1.0 - t);
  }
  return x;
}

std::size_t UniformGrid::NearestNode(const Point& x) const {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  std::array<int, 2> guess{};
  for (int a = 0; a < domain_.dim; ++a) {
    guess[a] = std::clamp(static_cast<int>(std::lround((x[a] - domain_.lo[a]) / spacing_[a])), 0,
                          counts_[a] - 1);
  }
  const std::size_t g = Index(guess[0], guess[1]);
  if (InMask(g)) return g;
  for (std::size_t k = 0; k < size(); ++k) {
    if (!InMask(k)) continue;
    const double d = Norm(Node(k) - x);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  if (!std::isfinite(best_d)) throw DomainError("grid mask is empty");
  return best;
}

std::shared_ptr<const UniformGrid> UniformGrid::WithMask(Mask mask) const {
  Domain d = domain_;
  d.mask = std::move(mask);
  return std::make_shared<const UniformGrid>(std::move(d), counts_);
}

// ---------------------------------------------------------------------------

std::string ToString(FieldKind kind) {
  switch (kind) {
    case FieldKind::kDiscounted: return "discounted";
    case FieldKind::kStateConstraint: return "state_constraint";
    case FieldKind::kErgodic: return "ergodic";
    case FieldKind::kMane: return "mane";
    case FieldKind::kMaximalTruncated: return "maximal_truncated";
  }
  return "?";
}

FieldKind FieldKindFromString(const std::string& s) {
  for (auto k : {FieldKind::kDiscounted, FieldKind::kStateConstraint, FieldKind::kErgodic,
                 FieldKind::kMane, FieldKind::kMaximalTruncated}) {
    if (ToString(k) == s) return k;
  }
  throw ConfigError("unknown field kind '" + s + "'");
}

GridField::GridField(std::shared_ptr<const UniformGrid> grid, double fill, FieldMeta meta)
    : grid_(std::move(grid)), values_(grid_->size(), fill), meta_(meta) {}

GridField::GridField(std::shared_ptr<const UniformGrid> grid, std::vector<double> values,
                     FieldMeta meta)
    : grid_(std::move(grid)), values_(std::move(values)), meta_(meta) {
  if (values_.size() != grid_->size()) throw ConfigError("field size does not match grid");
}

double GridField::MaxAbs() const {
  double m = 0.0;
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (grid_->InMask(k)) m = std::max(m, std::abs(values_[k]));
  }
  return m;
}

double GridField::Min() const {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (grid_->InMask(k)) m = std::min(m, values_[k]);
  }
  return m;
}

double GridField::WindowDistance(const GridField& other, double half_width) const {
  double d = 0.0;
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (!grid_->InMask(k)) continue;
    const Point x = grid_->Node(k);
    bool inside = true;
    for (int a = 0; a < grid_->dim(); ++a) inside = inside && std::abs(x[a]) <= half_width + 1e-12;
    if (!inside) continue;
    d = std::max(d, std::abs(values_[k] - Interpolate(other, x)));
  }
  return d;
}

// ---------------------------------------------------------------------------

double Interpolate(const GridField& field, const Point& query) {
  const UniformGrid& g = field.grid();
  if (!g.domain().Contains(query, 0.5 * g.MinSpacing())) {
    throw DomainError("interpolation point " + FormatPoint(query, g.dim()) + " outside " +
                      g.domain().Describe());
  }
  return InterpolateClamped(g, field.values(), query);
}

double InterpolateClamped(const UniformGrid& g, const std::vector<double>& v, const Point& query) {
  const Domain& dom = g.domain();
  const Point h = g.spacing();
  const auto n = g.counts();
  std::array<int, 2> i0{0, 0};
  Point t{0.0, 0.0};
  for (int a = 0; a < g.dim(); ++a) {
    const double xa = std::clamp(query[a], dom.lo[a], dom.hi[a]);
    const double s = (xa - dom.lo[a]) / h[a];
    int i = static_cast<int>(std::floor(s));
    i = std::clamp(i, 0, n[a] - 2);
    i0[a] = i;
    t[a] = std::clamp(s - i, 0.0, 1.0);
  }
  if (g.dim() == 1) {
    const std::size_t a = g.Index(i0[0]), b = g.Index(i0[0] + 1);
    const bool ia = g.InMask(a), ib = g.InMask(b);
    if (!ia && !ib) {
      throw DomainError("no in-mask stencil node near " + FormatPoint(query, 1));
    }
    const double va = ia ? v[a] : v[b];
    const double vb = ib ? v[b] : v[a];
    if (t[0] == 0.0) return va;
    if (t[0] == 1.0) return vb;
    return (1.0 - t[0]) * va + t[0] * vb;
  }
  // 2D bilinear; corner c = (di, dj) with di, dj in {0, 1}.
  std::array<std::size_t, 4> idx{};
  std::array<bool, 4> in{};
  for (int c = 0; c < 4; ++c) {
    idx[c] = g.Index(i0[0] + (c & 1), i0[1] + (c >> 1));
    in[c] = g.InMask(idx[c]);
  }
  std::array<double, 4> cv{};
  for (int c = 0; c < 4; ++c) {
    if (in[c]) {
      cv[c] = v[idx[c]];
      continue;
    }
    // Nearest in-mask replacement: flip along axis 0, then axis 1, then both.
    const int order[3] = {c ^ 1, c ^ 2, c ^ 3};
    bool found = false;
    for (int r : order) {
      if (in[r]) {
        cv[c] = v[idx[r]];
        found = true;
        break;
      }
    }
    if (!found) throw DomainError("no in-mask stencil node near " + FormatPoint(query, 2));
  }
  const double w00 = (1.0 - t[0]) * (1.0 - t[1]);
  const double w10 = t[0] * (1.0 - t[1]);
  const double w01 = (1.0 - t[0]) * t[1];
  const double w11 = t[0] * t[1];
  double out = 0.0;
  if (w00 != 0.0) out += w00 * cv[0];
  if (w10 != 0.0) out += w10 * cv[1];
  if (w01 != 0.0) out += w01 * cv[2];
  if (w11 != 0.0) out += w11 * cv[3];
  return out;
}

Point Gradient(const GridField& field, std::size_t node) {
  const UniformGrid& g = field.grid();
  if (!g.InMask(node)) throw DomainError("gradient requested at an out-of-mask node");
  const auto ij = g.Multi(node);
  const auto n = g.counts();
  const Point h = g.spacing();
  const auto& v = field.values();
  Point grad{};
  for (int a = 0; a < g.dim(); ++a) {
    auto neighbor = [&](int step) -> std::optional<std::size_t> {
      auto m = ij;
      m[a] += step;
      if (m[a] < 0 || m[a] >= n[a]) return std::nullopt;
      const std::size_t k = g.Index(m[0], m[1]);
      if (!g.InMask(k)) return std::nullopt;
      return k;
    };
    const auto plus = neighbor(+1), minus = neighbor(-1);
    if (plus && minus) {
      grad[a] = (v[*plus] - v[*minus]) / (2.0 * h[a]);
    } else if (plus) {
      grad[a] = (v[*plus] - v[node]) / h[a];
    } else if (minus) {
      grad[a] = (v[node] - v[*minus]) / h[a];
    }
  }
  return grad;
}

double InterpolationErrorBound(const GridField& field) {
  const UniformGrid& g = field.grid();
  const auto n = g.counts();
  const auto& v = field.values();
  double bound = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!g.InMask(k)) continue;
    const auto ij = g.Multi(k);
    double local = 0.0;
    for (int a = 0; a < g.dim(); ++a) {
      auto lo = ij, hi = ij;
      lo[a] -= 1;
      hi[a] += 1;
      if (lo[a] < 0 || hi[a] >= n[a]) continue;
      const std::size_t kl = g.Index(lo[0], lo[1]), kh = g.Index(hi[0], hi[1]);
      if (!g.InMask(kl) || !g.InMask(kh)) continue;
      local += std::abs(v[kh] - 2.0 * v[k] + v[kl]) / 8.0;
    }
    bound = std::max(bound, local);
  }
  return bound;
}

// ---------------------------------------------------------------------------

std::string FieldCsv(const GridField& field) {
  const UniformGrid& g = field.grid();
  double radius = 0.0;
  if (const auto* ball = std::get_if<Ball>(&g.domain().mask)) radius = ball->radius;
  std::string out = "# kind,lambda,c,R,dx\n# " + ToString(field.meta().kind) + "," +
                    FormatDouble(field.meta().lambda) + "," + FormatDouble(field.meta().c) + "," +
                    FormatDouble(radius) + "," + FormatDouble(g.spacing()[0]) + "\n";
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!g.InMask(k)) continue;
    const Point x = g.Node(k);
    out += FormatDouble(x[0]);
    if (g.dim() == 2) out += "," + FormatDouble(x[1]);
    out += "," + FormatDouble(field[k]) + "\n";
  }
  return out;
}

void WriteFieldCsv(const GridField& field, const std::filesystem::path& path) {
  WriteFileAtomic(path, FieldCsv(field));
}

GridField ReadFieldCsv(const std::filesystem::path& path, std::shared_ptr<const UniformGrid> grid) {
  std::istringstream in(ReadFile(path));
  std::string line;
  FieldMeta meta;
  GridField field(grid, 0.0, meta);
  std::vector<std::uint8_t> seen(grid->size(), 0);
  int comment_lines = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (++comment_lines == 2) {
        std::istringstream hs(line.substr(1));
        std::string kind, lam, c;
        std::getline(hs >> std::ws, kind, ',');
        std::getline(hs, lam, ',');
        std::getline(hs, c, ',');
        field.meta().kind = FieldKindFromString(kind);
        field.meta().lambda = std::stod(lam);
        field.meta().c = std::stod(c);
      }
      continue;
    }
    std::vector<double> cols;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cols.push_back(std::strtod(cell.c_str(), nullptr));
    if (cols.size() != static_cast<std::size_t>(grid->dim()) + 1) {
      throw ConfigError("field CSV row has wrong arity: '" + line + "'");
    }
    Point x{cols[0], grid->dim() == 2 ? cols[1] : 0.0};
    const std::size_t k = grid->NearestNode(x);
    if (Norm(grid->Node(k) - x) > 1e-9 * (1.0 + Norm(x))) {
      throw ConfigError("field CSV node " + FormatPoint(x, grid->dim()) + " is not a grid node");
    }
    field[k] = cols.back();
    seen[k] = 1;
  }
  for (std::size_t k = 0; k < grid->size(); ++k) {
    if (grid->InMask(k) && !seen[k]) throw ConfigError("field CSV misses in-mask nodes");
  }
  return field;
}

}  // namespace contact_hj
