#pragma once

#include <sulcikit/volume.hpp>

#include <cstdint>

namespace sulcikit::phantom {

// Label convention of the bundled phantom and the default config files.
inline constexpr std::uint16_t kCsf = 1;
inline constexpr std::uint16_t kGreyMatter = 2;
inline constexpr std::uint16_t kWhiteMatter = 3;
inline constexpr std::uint16_t kLeftCentralSulcus = 48;
inline constexpr std::uint16_t kRightCentralSulcus = 49;

/// Toy brain: folded WM core, GM ribbon, CSF rim, and one sulcal sheet per
/// hemisphere cut through the upper GM. `subject` varies the folding and
/// sulcus course so different subjects are not identical.
LabelVolume make_phantom(const Index3& shape = {64, 64, 48}, int subject = 0);

}  // namespace sulcikit::phantom
