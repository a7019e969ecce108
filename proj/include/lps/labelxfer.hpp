#pragma once

#include "lps/core.hpp"
#include "lps/io.hpp"
#include "lps/spatial_grid.hpp"

namespace lps {

/// Annotated map cloud with a prebuilt nearest-neighbor index.
struct AccumulatedMap {
  PointCloud cloud;
  LabelMap labels;
  SpatialGrid index;
};

/// Index an accumulated annotated cloud for label transfer. `radius` is the
/// transfer radius the map will be queried with; it sets the grid cell size.
AccumulatedMap build_map(PointCloud cloud, LabelMap labels, double radius = 0.10);

/// Transfer map labels onto a scan: each scan point is moved into map
/// coordinates by `pose` and takes the labels of the nearest map point within
/// `radius` (closed ball); points with no map point in range get (0, 0).
/// The rotation part of `pose` must be a proper rotation.
LabelMap transfer_labels(const PointCloud& scan, const Pose& pose, const AccumulatedMap& map,
                         double radius = 0.10);

}  // namespace lps
