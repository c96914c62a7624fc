#pragma once

#include <optional>
#include <string>

#include "mulog/channelizer.hpp"
#include "mulog/image.hpp"

namespace mulog {

// Binary covariance container. Layout, all little-endian:
//   magic   "MULG" (4 bytes)
//   version u16 (currently 1)
//   width   u32
//   height  u32
//   dim     u8
//   looks   f64
//   basis   u8 (1 when a channel-basis sidecar follows the payload)
//   payload dim^2 planes of width*height f64 each, row-major: the dim
//           diagonal planes, then per superdiagonal offset the off-diagonal
//           entries as (re, im) plane pairs
//   sidecar u8 dim, then A (dim^4 f64 row-major), b (dim^2 f64),
//           phi (dim^2 f64)
// Single real planes travel as dim = 1 containers; that is also the exchange
// format of the external-denoiser protocol.
struct CovContainer {
    CovImage image;
    std::optional<ChannelBasis> basis;
};

void write_container(const std::string& path, const CovImage& img,
                     const ChannelBasis* basis = nullptr);
CovContainer read_container(const std::string& path);

// Plane convenience wrappers (dim = 1, looks field carries no meaning and is
// written as 0).
void write_plane(const std::string& path, const PlaneImage& img);
PlaneImage read_plane(const std::string& path);

} // namespace mulog
