#ifndef RDP_VERSION_HPP
#define RDP_VERSION_HPP

namespace rdp {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace rdp

#endif  // RDP_VERSION_HPP
