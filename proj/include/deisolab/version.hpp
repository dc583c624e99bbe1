#pragma once

namespace deisolab {

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr int kFormatVersion = 1;

/// Spacing between adjacent isotopic peaks of a singly charged ion, in Da.
inline constexpr double kIsotopeSpacing = 1.003;

} // namespace deisolab
