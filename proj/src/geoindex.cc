/*
 * Copyright 2026 The deployaudit Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "deployaudit/geoindex.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "deployaudit/csv.h"
#include "deployaudit/errors.h"

namespace deployaudit {
namespace {

double cross(const Vertex& a, const Vertex& b, const Vertex& p) {
  return (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
}

int orientation(const Vertex& a, const Vertex& b, const Vertex& p) {
  const double c = cross(a, b, p);
  return (c > 0) - (c < 0);
}

bool within_box(const Vertex& a, const Vertex& b, const Vertex& p) {
  return p.x >= std::min(a.x, b.x) && p.x <= std::max(a.x, b.x) &&
         p.y >= std::min(a.y, b.y) && p.y <= std::max(a.y, b.y);
}

bool on_segment(const Vertex& a, const Vertex& b, const Vertex& p) {
  return cross(a, b, p) == 0.0 && within_box(a, b, p);
}

bool segments_intersect(const Vertex& a, const Vertex& b, const Vertex& c,
                        const Vertex& d) {
  const int o1 = orientation(a, b, c);
  const int o2 = orientation(a, b, d);
  const int o3 = orientation(c, d, a);
  const int o4 = orientation(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  return (o1 == 0 && within_box(a, b, c)) || (o2 == 0 && within_box(a, b, d)) ||
         (o3 == 0 && within_box(c, d, a)) || (o4 == 0 && within_box(c, d, b));
}

void validate_ring(const std::string& cbg_id, const Ring& ring) {
  if (ring.size() < 4) {
    throw GeometryError(cbg_id, "ring has fewer than 4 positions");
  }
  if (ring.front() != ring.back()) {
    throw GeometryError(cbg_id, "ring is not closed");
  }
  for (const Vertex& v : ring) {
    if (!std::isfinite(v.x) || !std::isfinite(v.y) || v.x < -180.0 ||
        v.x > 180.0 || v.y < -90.0 || v.y > 90.0) {
      throw GeometryError(cbg_id, "coordinate out of range");
    }
  }
  const std::size_t n = ring.size() - 1;  // edges
  for (std::size_t i = 0; i < n; ++i) {
    if (ring[i] == ring[i + 1]) {
      throw GeometryError(cbg_id, "zero-length edge at position " +
                                      std::to_string(i));
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) {
        // Adjacent edges share exactly one endpoint unless they fold back.
        const Vertex& shared = j == i + 1 ? ring[j] : ring[0];
        const Vertex& p = j == i + 1 ? ring[i] : ring[1];
        const Vertex& q = j == i + 1 ? ring[j + 1] : ring[n - 1];
        const double dot =
            (shared.x - p.x) * (q.x - shared.x) + (shared.y - p.y) * (q.y - shared.y);
        if (orientation(p, shared, q) == 0 && dot < 0.0) {
          throw GeometryError(cbg_id, "ring folds back on itself at position " +
                                          std::to_string(j));
        }
        continue;
      }
      if (segments_intersect(ring[i], ring[i + 1], ring[j], ring[j + 1])) {
        throw GeometryError(cbg_id, "ring self-intersects between edges " +
                                        std::to_string(i) + " and " +
                                        std::to_string(j));
      }
    }
  }
}

}  // namespace

BoundingBox bounding_box(const MultiPolygon& shape) {
  BoundingBox box{std::numeric_limits<double>::infinity(),
                  std::numeric_limits<double>::infinity(),
                  -std::numeric_limits<double>::infinity(),
                  -std::numeric_limits<double>::infinity()};
  for (const Polygon& poly : shape) {
    for (const Ring& ring : poly.rings) {
      for (const Vertex& v : ring) {
        box.min_x = std::min(box.min_x, v.x);
        box.min_y = std::min(box.min_y, v.y);
        box.max_x = std::max(box.max_x, v.x);
        box.max_y = std::max(box.max_y, v.y);
      }
    }
  }
  return box;
}

void validate_geometry(const std::string& cbg_id, const MultiPolygon& shape) {
  if (shape.empty()) throw GeometryError(cbg_id, "empty geometry");
  for (const Polygon& poly : shape) {
    if (poly.rings.empty()) throw GeometryError(cbg_id, "polygon has no rings");
    for (const Ring& ring : poly.rings) validate_ring(cbg_id, ring);
  }
}

bool polygon_contains(const MultiPolygon& shape, GeoPoint point) {
  const Vertex p{point.longitude, point.latitude};
  for (const Polygon& poly : shape) {
    bool inside = false;
    for (const Ring& ring : poly.rings) {
      for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        const Vertex& a = ring[i];
        const Vertex& b = ring[i + 1];
        if (on_segment(a, b, p)) return true;
        if ((a.y > p.y) != (b.y > p.y)) {
          // Sign of the orientation instead of the crossing abscissa, so the
          // decision agrees with on_segment() at points within rounding of
          // the edge.
          const double o = cross(a, b, p);
          if (b.y > a.y ? o > 0.0 : o < 0.0) inside = !inside;
        }
      }
    }
    if (inside) return true;
  }
  return false;
}

SpatialIndex SpatialIndex::build(std::span<const CensusBlockGroup> cbgs,
                                 const GridOptions& options) {
  SpatialIndex index;
  std::vector<std::size_t> order(cbgs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return cbgs[a].cbg_id < cbgs[b].cbg_id;
  });
  for (std::size_t k = 0; k < order.size(); ++k) {
    const CensusBlockGroup& c = cbgs[order[k]];
    if (k > 0 && c.cbg_id == index.ids_.back()) {
      throw GeometryError(c.cbg_id, "duplicate cbg_id");
    }
    validate_geometry(c.cbg_id, c.geometry);
    index.ids_.push_back(c.cbg_id);
    index.shapes_.push_back(c.geometry);
    index.boxes_.push_back(bounding_box(c.geometry));
  }
  if (index.ids_.empty()) return index;
  if (index.ids_.size() >= std::numeric_limits<std::uint32_t>::max()) {
    throw PreconditionError("too many polygons for the spatial index");
  }

  BoundingBox& ext = index.extent_;
  ext = index.boxes_.front();
  std::vector<double> extents;
  extents.reserve(index.boxes_.size());
  for (const BoundingBox& b : index.boxes_) {
    ext.min_x = std::min(ext.min_x, b.min_x);
    ext.min_y = std::min(ext.min_y, b.min_y);
    ext.max_x = std::max(ext.max_x, b.max_x);
    ext.max_y = std::max(ext.max_y, b.max_y);
    extents.push_back(std::max(b.max_x - b.min_x, b.max_y - b.min_y));
  }
  double cell = options.cell_size;
  if (!(cell > 0.0)) {
    auto mid = extents.begin() + static_cast<std::ptrdiff_t>(extents.size() / 2);
    std::nth_element(extents.begin(), mid, extents.end());
    cell = *mid;
  }
  const double span_x = ext.max_x - ext.min_x;
  const double span_y = ext.max_y - ext.min_y;
  if (!(cell > 0.0)) cell = std::max({span_x, span_y, 1e-9});
  auto dims = [&](double c) {
    const auto cols = static_cast<std::size_t>(std::floor(span_x / c)) + 1;
    const auto rows = static_cast<std::size_t>(std::floor(span_y / c)) + 1;
    return std::pair{cols, rows};
  };
  while (true) {
    auto [cols, rows] = dims(cell);
    if (cols * rows <= std::max<std::size_t>(options.max_cells, 1)) {
      index.cols_ = cols;
      index.rows_ = rows;
      break;
    }
    cell *= 2.0;
  }
  index.cell_ = cell;

  const std::size_t n_cells = index.cols_ * index.rows_;
  std::vector<std::uint32_t> counts(n_cells + 1, 0);
  auto for_each_cell = [&](const BoundingBox& b, auto&& fn) {
    const std::size_t c0 = index.column_of(b.min_x);
    const std::size_t c1 = index.column_of(b.max_x);
    const std::size_t r0 = index.row_of(b.min_y);
    const std::size_t r1 = index.row_of(b.max_y);
    for (std::size_t r = r0; r <= r1; ++r) {
      for (std::size_t c = c0; c <= c1; ++c) fn(r * index.cols_ + c);
    }
  };
  for (const BoundingBox& b : index.boxes_) {
    for_each_cell(b, [&](std::size_t cell_id) { ++counts[cell_id + 1]; });
  }
  std::partial_sum(counts.begin(), counts.end(), counts.begin());
  index.cell_start_ = counts;
  index.cell_items_.assign(counts.back(), 0);
  std::vector<std::uint32_t> cursor(counts.begin(), counts.end() - 1);
  for (std::size_t slot = 0; slot < index.boxes_.size(); ++slot) {
    for_each_cell(index.boxes_[slot], [&](std::size_t cell_id) {
      index.cell_items_[cursor[cell_id]++] = static_cast<std::uint32_t>(slot);
    });
  }
  return index;
}

std::size_t SpatialIndex::column_of(double x) const {
  const double c = std::floor((x - extent_.min_x) / cell_);
  if (c <= 0.0) return 0;
  return std::min(static_cast<std::size_t>(c), cols_ - 1);
}

std::size_t SpatialIndex::row_of(double y) const {
  const double r = std::floor((y - extent_.min_y) / cell_);
  if (r <= 0.0) return 0;
  return std::min(static_cast<std::size_t>(r), rows_ - 1);
}

std::vector<std::size_t> SpatialIndex::candidates(GeoPoint point) const {
  std::vector<std::size_t> out;
  if (empty() || !extent_.contains(point.longitude, point.latitude)) return out;
  const std::size_t cell =
      row_of(point.latitude) * cols_ + column_of(point.longitude);
  for (std::uint32_t k = cell_start_[cell]; k < cell_start_[cell + 1]; ++k) {
    const std::uint32_t slot = cell_items_[k];
    if (boxes_[slot].contains(point.longitude, point.latitude)) {
      out.push_back(slot);
    }
  }
  return out;
}

std::optional<std::size_t> SpatialIndex::locate(GeoPoint point) const {
  if (empty() || !extent_.contains(point.longitude, point.latitude)) {
    return std::nullopt;
  }
  const std::size_t cell =
      row_of(point.latitude) * cols_ + column_of(point.longitude);
  for (std::uint32_t k = cell_start_[cell]; k < cell_start_[cell + 1]; ++k) {
    const std::uint32_t slot = cell_items_[k];
    if (boxes_[slot].contains(point.longitude, point.latitude) &&
        polygon_contains(shapes_[slot], point)) {
      return slot;
    }
  }
  return std::nullopt;
}

std::optional<std::string> SpatialIndex::assign(GeoPoint point) const {
  if (auto slot = locate(point)) return ids_[*slot];
  return std::nullopt;
}

std::vector<std::optional<std::size_t>> locate_all(
    const SpatialIndex& index, std::span<const GeoPoint> points,
    unsigned threads) {
  std::vector<std::optional<std::size_t>> out(points.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t n = points.size();
  const std::size_t shards = std::min<std::size_t>(threads, std::max<std::size_t>(n / 4096, 1));
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) out[i] = index.locate(points[i]);
  };
  if (shards <= 1) {
    work(0, n);
    return out;
  }
  std::vector<std::jthread> pool;
  for (std::size_t s = 0; s < shards; ++s) {
    pool.emplace_back(work, n * s / shards, n * (s + 1) / shards);
  }
  return out;
}

std::vector<std::optional<std::string>> assign_all(
    const SpatialIndex& index, std::span<const DetectionRecord> records,
    unsigned threads) {
  std::vector<GeoPoint> points;
  points.reserve(records.size());
  for (const auto& r : records) points.push_back({r.latitude, r.longitude});
  const auto slots = locate_all(index, points, threads);
  std::vector<std::optional<std::string>> out(records.size());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i]) out[i] = index.cbg_id(*slots[i]);
  }
  return out;
}

void write_assignments(std::ostream& out,
                       std::span<const DetectionRecord> records,
                       std::span<const std::optional<std::string>> assignments) {
  out << "image_id,cbg_id\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    out << csv::escape(records[i].image_id) << ',';
    if (i < assignments.size() && assignments[i]) out << csv::escape(*assignments[i]);
    out << '\n';
  }
}

}  // namespace deployaudit
