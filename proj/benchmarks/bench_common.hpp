#pragma once

#include "planewarp/scenegen.hpp"

namespace bench {

inline planewarp::PlanarScene scene(int size) {
  planewarp::PlanarScene s;
  const double f = 200.0 * size / 224.0;
  s.K = {f, f, (size - 1) / 2.0, (size - 1) / 2.0};
  s.width = size;
  s.height = size;
  planewarp::TexturedPlane back;
  back.origin = {0, 0, 8};
  back.normal = {0, 0, -1};
  back.u_min = back.v_min = -10;
  back.u_max = back.v_max = 10;
  back.texture.seed = 1;
  planewarp::TexturedPlane front;
  front.origin = {-1.2, 0, 4};
  front.normal = {0.2, 0, -1};
  front.u_min = -1.5;
  front.u_max = 1.5;
  front.v_min = -3;
  front.v_max = 3;
  front.texture.kind = planewarp::TextureKind::Checker;
  s.planes = {back, front};
  s.target_pose.t = {-0.2, 0.05, 0.1};
  return s;
}

}  // namespace bench
