#include "planewarp/error.hpp"

namespace planewarp {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::EmptyRegion: return "EmptyRegion";
    case Errc::InvalidCount: return "InvalidCount";
    case Errc::TooManyClusters: return "TooManyClusters";
    case Errc::NoValidPixels: return "NoValidPixels";
    case Errc::AllOutside: return "AllOutside";
    case Errc::ParseError: return "ParseError";
    case Errc::BadRotation: return "BadRotation";
    case Errc::UnsupportedFormat: return "UnsupportedFormat";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::Io: return "Io";
    case Errc::DegeneratePlane: return "DegeneratePlane";
    case Errc::DegenerateHomography: return "DegenerateHomography";
    case Errc::ZeroNormal: return "ZeroNormal";
    case Errc::NonFinite: return "NonFinite";
    case Errc::DegenerateScene: return "DegenerateScene";
  }
  return "Unknown";
}

bool is_numerical(Errc code) noexcept {
  switch (code) {
    case Errc::DegeneratePlane:
    case Errc::DegenerateHomography:
    case Errc::ZeroNormal:
    case Errc::NonFinite:
    case Errc::DegenerateScene:
    case Errc::AllOutside:
      return true;
    default:
      return false;
  }
}

}  // namespace planewarp
