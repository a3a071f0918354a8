#pragma once

// Brute-force reference computations, independent of the production code
// paths they verify.

#include <sulcikit/volume.hpp>

#include <vector>

namespace sulcikit::oracles {

// Direct evaluation of the paired NT-Xent objective, no log-sum-exp shift.
// rows[2k] and rows[2k+1] are positives.
double nt_xent_total(const std::vector<std::vector<double>>& rows, double temperature);

// Breadth-first flood fill; ids are 1..C in order of first voxel reached by a
// linear scan, 0 for background.
std::vector<int> flood_fill_components(const BinaryMask& mask, int connectivity);

// True when both labelings induce the same partition of the foreground.
template <typename A, typename B>
bool same_partition(const std::vector<A>& a, const std::vector<B>& b);

// Max-min over all voxel-centre pairs, distances in mm.
double hausdorff(const BinaryMask& x, const BinaryMask& y, const Vec3& spacing);

}  // namespace sulcikit::oracles
