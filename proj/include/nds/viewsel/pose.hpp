#pragma once

// Pinhole camera poses and the two on-disk pose formats.
//
// Convention: rotation is world-from-camera, right-handed, with camera axes
// +x right, +y down and +z forward (the optical axis). A pixel (u, v) maps
// to the camera-frame direction ((u - cx) / fx, (v - cy) / fy, 1).

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nds/core/error.hpp"

namespace nds {

struct CameraPose {
  double fx = 1.0, fy = 1.0, cx = 0.0, cy = 0.0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  int image_w = 1, image_h = 1;

  Eigen::Vector3d optical_axis() const { return rotation.col(2); }

  /// Unit world-space direction through pixel coordinates (u, v).
  Eigen::Vector3d ray_direction(double u, double v) const {
    const Eigen::Vector3d d_cam((u - cx) / fx, (v - cy) / fy, 1.0);
    return (rotation * d_cam).normalized();
  }
};

inline void validate_pose(const CameraPose& c) {
  if (!(c.fx > 0.0) || !(c.fy > 0.0)) throw InvalidInput("camera pose: focal lengths must be positive");
  if (c.image_w <= 0 || c.image_h <= 0) throw InvalidInput("camera pose: image size must be positive");
  if (!c.rotation.allFinite() || !c.center.allFinite()) throw InvalidInput("camera pose: non-finite entries");
  const double ortho = (c.rotation.transpose() * c.rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (ortho >= 1e-6) throw InvalidInput("camera pose: rotation is not orthonormal");
  if (std::abs(c.rotation.determinant() - 1.0) >= 1e-6) throw InvalidInput("camera pose: rotation has det != +1");
}

/// Camera at `center` looking at `target`; `up_hint` fixes the roll
/// (image -y points toward it).
inline CameraPose look_at(const Eigen::Vector3d& center, const Eigen::Vector3d& target, const Eigen::Vector3d& up_hint,
                          double f, int w, int h) {
  const Eigen::Vector3d z = (target - center).normalized();
  Eigen::Vector3d x = z.cross(up_hint);
  if (x.norm() < 1e-12) throw DegenerateGeometry("look_at: up hint is parallel to the viewing direction");
  // +y is down, so x = z × up points right.
  x.normalize();
  const Eigen::Vector3d y = z.cross(x);
  CameraPose c;
  c.fx = c.fy = f;
  c.cx = w / 2.0;
  c.cy = h / 2.0;
  c.image_w = w;
  c.image_h = h;
  c.rotation.col(0) = x;
  c.rotation.col(1) = y;
  c.rotation.col(2) = z;
  c.center = center;
  return c;
}

// ---- JSON ---------------------------------------------------------------

inline nlohmann::json to_json(const CameraPose& c) {
  nlohmann::json r = nlohmann::json::array();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r.push_back(c.rotation(i, j));
  return {{"fx", c.fx}, {"fy", c.fy}, {"cx", c.cx}, {"cy", c.cy}, {"w", c.image_w}, {"h", c.image_h},
          {"R", r}, {"center", {c.center.x(), c.center.y(), c.center.z()}}};
}

inline CameraPose pose_from_json(const nlohmann::json& j) {
  CameraPose c;
  try {
    c.fx = j.at("fx").get<double>();
    c.fy = j.at("fy").get<double>();
    c.cx = j.at("cx").get<double>();
    c.cy = j.at("cy").get<double>();
    c.image_w = j.at("w").get<int>();
    c.image_h = j.at("h").get<int>();
    const auto r = j.at("R").get<std::vector<double>>();
    const auto o = j.at("center").get<std::vector<double>>();
    if (r.size() != 9 || o.size() != 3) throw InvalidInput("pose: R needs 9 entries and center 3");
    for (int i = 0; i < 9; ++i) c.rotation(i / 3, i % 3) = r[i];
    c.center = {o[0], o[1], o[2]};
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("pose: ") + e.what());
  }
  validate_pose(c);
  return c;
}

inline std::vector<CameraPose> read_poses_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open pose file: " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("pose file " + path.string() + ": " + e.what());
  }
  if (!doc.is_array()) throw InvalidInput("pose file must hold a JSON array");
  std::vector<CameraPose> out;
  for (const auto& item : doc) out.push_back(pose_from_json(item));
  return out;
}

inline void write_poses_json(const std::filesystem::path& path, const std::vector<CameraPose>& cams) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& c : cams) doc.push_back(to_json(c));
  std::ofstream out(path);
  if (!out) throw IoError("cannot write pose file: " + path.string());
  out << doc.dump(2) << '\n';
}

// ---- LLFF poses_bounds.npy ---------------------------------------------

struct NpyArray {
  std::vector<std::size_t> shape;
  std::vector<double> values;  // C order, widened to double
};

/// Minimal .npy reader: little-endian f4/f8, C order, version 1-3.
inline NpyArray read_npy(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, "\x93NUMPY", 6) != 0) throw InvalidInput("not a .npy file: " + path.string());
  const int major = static_cast<unsigned char>(magic[6]);
  std::uint32_t header_len = 0;
  if (major == 1) {
    unsigned char b[2];
    in.read(reinterpret_cast<char*>(b), 2);
    header_len = b[0] | (b[1] << 8);
  } else {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    header_len = b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }
  std::string header(header_len, '\0');
  if (!in.read(header.data(), header_len)) throw InvalidInput("truncated .npy header");

  auto field = [&](const std::string& key) {
    const auto k = header.find("'" + key + "'");
    if (k == std::string::npos) throw InvalidInput(".npy header lacks " + key);
    return header.substr(header.find(':', k) + 1);
  };
  const std::string descr = field("descr");
  std::size_t elem = 0;
  if (descr.find("<f8") != std::string::npos) elem = 8;
  else if (descr.find("<f4") != std::string::npos) elem = 4;
  else throw InvalidInput(".npy: only little-endian float32/float64 are supported");
  const std::string fortran = field("fortran_order");
  if (fortran.substr(0, fortran.find(',')).find("True") != std::string::npos)
    throw InvalidInput(".npy: Fortran order is not supported");

  NpyArray arr;
  std::string shape = field("shape");
  shape = shape.substr(shape.find('(') + 1, shape.find(')') - shape.find('(') - 1);
  std::size_t count = 1;
  for (std::size_t pos = 0; pos < shape.size();) {
    const auto comma = shape.find(',', pos);
    const std::string tok = shape.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (tok.find_first_of("0123456789") != std::string::npos) {
      arr.shape.push_back(std::stoull(tok));
      count *= arr.shape.back();
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }

  std::vector<char> raw(count * elem);
  if (!in.read(raw.data(), static_cast<std::streamsize>(raw.size()))) throw InvalidInput("truncated .npy payload");
  arr.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (elem == 8) {
      std::memcpy(&arr.values[i], raw.data() + i * 8, 8);
    } else {
      float f;
      std::memcpy(&f, raw.data() + i * 4, 4);
      arr.values[i] = f;
    }
  }
  return arr;
}

/// Converts an N×17 poses_bounds array. Each row holds a row-major 3×5
/// matrix [down | right | back | t | (h, w, f)] followed by two depth
/// bounds; columns are reordered to (right, down, forward).
inline std::vector<CameraPose> poses_from_llff(const NpyArray& arr) {
  if (arr.shape.size() != 2 || arr.shape[1] != 17) throw InvalidInput("poses_bounds must have shape (N, 17)");
  std::vector<CameraPose> out;
  for (std::size_t n = 0; n < arr.shape[0]; ++n) {
    const double* row = arr.values.data() + n * 17;
    auto m = [&](int i, int j) { return row[i * 5 + j]; };
    CameraPose c;
    for (int i = 0; i < 3; ++i) {
      c.rotation(i, 0) = m(i, 1);
      c.rotation(i, 1) = m(i, 0);
      c.rotation(i, 2) = -m(i, 2);
      c.center(i) = m(i, 3);
    }
    const double h = m(0, 4), w = m(1, 4), f = m(2, 4);
    c.image_h = static_cast<int>(std::lround(h));
    c.image_w = static_cast<int>(std::lround(w));
    c.fx = c.fy = f;
    c.cx = w / 2.0;
    c.cy = h / 2.0;
    validate_pose(c);
    out.push_back(c);
  }
  return out;
}

inline std::vector<CameraPose> read_llff_poses(const std::filesystem::path& path) {
  return poses_from_llff(read_npy(path));
}

}  // namespace nds
