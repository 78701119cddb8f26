#include "quadplan/los.hpp"

#include <algorithm>
#include <stdexcept>

namespace quadplan {

std::vector<Vec3> los_prune(const std::vector<Vec3>& path, const std::vector<Cuboid>& obstacles) {
  if (path.size() < 2) throw std::invalid_argument("los_prune: need >= 2 waypoints");

  std::vector<Vec3> out = path;
  std::size_t anchor = 0;
  std::size_t i = 0;  // counts failed probes from the tail

  while (anchor != out.size() - 1) {
    // Probe the farthest untried waypoint; the index is clamped so the probe
    // never passes the anchor, and the probe adjacent to the anchor is
    // collision-free by the input precondition, so the anchor always advances.
    const std::size_t last = out.size() - 1;
    const std::size_t probe = std::max(anchor + 1, last >= i ? last - i : anchor + 1);
    if (segment_collision_free(out[anchor], out[probe], obstacles)) {
      out.erase(out.begin() + anchor + 1, out.begin() + probe);
      anchor += 1;  // the probed waypoint, now adjacent
      i = 0;
    } else {
      ++i;
    }
  }
  return out;
}

}  // namespace quadplan
