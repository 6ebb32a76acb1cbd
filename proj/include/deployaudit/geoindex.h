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

#ifndef DEPLOYAUDIT_GEOINDEX_H_
#define DEPLOYAUDIT_GEOINDEX_H_

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "deployaudit/types.h"

namespace deployaudit {

// Containment is computed in the (longitude, latitude) plane. At city scale
// the distortion against geodesic containment is far below image GPS error.

struct BoundingBox {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;

  bool contains(double x, double y) const {
    return x >= min_x && x <= max_x && y >= min_y && y <= max_y;
  }
};

BoundingBox bounding_box(const MultiPolygon& shape);

// Rings must be closed, have at least three distinct vertices, finite
// in-range coordinates, no zero-length edges and no self-intersections.
// Throws GeometryError naming `cbg_id`.
void validate_geometry(const std::string& cbg_id, const MultiPolygon& shape);

// Even-odd rule over every ring of every part; points on any edge count as
// inside.
bool polygon_contains(const MultiPolygon& shape, GeoPoint point);

struct GridOptions {
  // Cell edge in degrees; <= 0 picks the median polygon bounding-box extent.
  double cell_size = 0.0;
  // Cell size is doubled until the grid fits.
  std::size_t max_cells = std::size_t{1} << 22;
};

// Uniform grid over polygon bounding boxes. Immutable once built, so lookups
// are safe from any number of threads.
class SpatialIndex {
 public:
  SpatialIndex() = default;

  // Validates every geometry and rejects duplicate ids.
  static SpatialIndex build(std::span<const CensusBlockGroup> cbgs,
                            const GridOptions& options = {});

  // Slot of the containing polygon. Slots are ordered by cbg_id, so when a
  // point lies on a shared boundary the smallest id wins.
  std::optional<std::size_t> locate(GeoPoint point) const;
  std::optional<std::string> assign(GeoPoint point) const;

  // Slots whose bounding box contains the point, ascending.
  std::vector<std::size_t> candidates(GeoPoint point) const;

  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  const std::string& cbg_id(std::size_t slot) const { return ids_[slot]; }
  const std::vector<std::string>& cbg_ids() const { return ids_; }
  double cell_size() const { return cell_; }
  std::size_t columns() const { return cols_; }
  std::size_t rows() const { return rows_; }

 private:
  std::size_t column_of(double x) const;
  std::size_t row_of(double y) const;

  std::vector<std::string> ids_;
  std::vector<MultiPolygon> shapes_;
  std::vector<BoundingBox> boxes_;
  BoundingBox extent_;
  double cell_ = 1.0;
  std::size_t cols_ = 0;
  std::size_t rows_ = 0;
  std::vector<std::uint32_t> cell_start_;  // CSR offsets, size rows*cols + 1
  std::vector<std::uint32_t> cell_items_;
};

// Batch lookup sharded over `threads` workers (0 = hardware concurrency).
// Output is aligned with the input and independent of the thread count.
std::vector<std::optional<std::size_t>> locate_all(
    const SpatialIndex& index, std::span<const GeoPoint> points,
    unsigned threads = 0);

std::vector<std::optional<std::string>> assign_all(
    const SpatialIndex& index, std::span<const DetectionRecord> records,
    unsigned threads = 0);

// CSV `image_id,cbg_id`, empty cbg_id for unassigned records.
void write_assignments(std::ostream& out,
                       std::span<const DetectionRecord> records,
                       std::span<const std::optional<std::string>> assignments);

}  // namespace deployaudit

#endif  // DEPLOYAUDIT_GEOINDEX_H_
