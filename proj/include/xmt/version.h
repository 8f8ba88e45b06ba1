#ifndef XMT_VERSION_H_
#define XMT_VERSION_H_

namespace xmt {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace xmt

#endif  // XMT_VERSION_H_
