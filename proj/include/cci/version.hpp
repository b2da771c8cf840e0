#ifndef CCI_VERSION_HPP_
#define CCI_VERSION_HPP_

namespace cci {
inline constexpr const char* kArtifactVersion = "0.1.0";
}

#endif  // CCI_VERSION_HPP_
