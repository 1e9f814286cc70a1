#pragma once

#include "fgl/point_cloud.hpp"

#include <cstdint>
#include <string>

namespace fgl {

enum class CloudFormat { XyzAscii, PlyAscii };

struct CloudFile {
    CloudFormat format = CloudFormat::XyzAscii;
    std::string path;
    int precision = 9;
};

/// Picks XYZ or PLY from the file extension (".ply" -> PLY, else XYZ).
CloudFormat format_from_path(const std::string& path);

/// Reads an ASCII XYZ or PLY file. XYZ lines are "x y z [nx ny nz]";
/// PLY must be ascii 1.0 with float x/y/z (+ nx/ny/nz) vertex properties.
/// Throws std::runtime_error with the offending line number on parse errors.
PointCloud read_cloud(const CloudFile& file);

/// Deterministic byte output for a given (cloud, format, precision).
void write_cloud(const PointCloud& cloud, const CloudFile& file);

struct NoiseSpec {
    double sigma = 0.0;
    uint64_t seed = 0;
};

/// Perturbs every coordinate by an independent N(0, sigma^2) draw from a
/// seeded mt19937_64 generator; normals are dropped (stale afterwards).
PointCloud add_gaussian_noise(const PointCloud& cloud, const NoiseSpec& spec);

/// One-sided nearest-neighbor MSE: mean over Y of the squared distance to
/// the closest ground-truth point.
double mse(const PointCloud& denoised, const PointCloud& ground_truth);

/// 10*log10( mean GT energy about its centroid / mse ), capped at 300 dB
/// when mse is zero.
double snr(const PointCloud& denoised, const PointCloud& ground_truth);

} // namespace fgl
