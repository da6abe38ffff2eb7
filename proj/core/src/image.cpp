#include "planewarp/image.hpp"

namespace planewarp {

Image::Image(int height, int width, int channels, double fill)
    : height_(height), width_(width), channels_(channels) {
  if (height <= 0 || width <= 0) {
    throw Error(Errc::InvalidArgument, "image dimensions must be positive");
  }
  if (channels != 1 && channels != 3) {
    throw Error(Errc::InvalidArgument, "images carry 1 or 3 channels");
  }
  data_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width) *
                   static_cast<std::size_t>(channels),
               fill);
}

ScalarField extract_channel(const Image& image, int channel) {
  ScalarField out(image.height(), image.width());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      out(y, x) = image(y, x, channel);
    }
  }
  return out;
}

}  // namespace planewarp
