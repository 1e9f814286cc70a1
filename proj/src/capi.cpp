#include "fgl/fgl.h"

#include "fgl/cloud_io.hpp"
#include "fgl/denoise.hpp"
#include "fgl/graph.hpp"
#include "fgl/geometry.hpp"
#include "fgl/metric.hpp"

#include <cstring>
#include <fstream>
#include <string>

struct fgl_cloud {
    fgl::PointCloud cloud;
};

struct fgl_config {
    fgl::DenoiseConfig config;
};

struct fgl_report {
    std::vector<fgl::IterationReport> reports;
};

namespace {

thread_local std::string g_last_error;

int fail(int code, const std::string& message) {
    g_last_error = message;
    return code;
}

template <typename Fn>
int guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const std::invalid_argument& e) {
        return fail(FGL_INVALID_ARGUMENT, e.what());
    } catch (const std::exception& e) {
        return fail(FGL_ERROR, e.what());
    }
}

} // namespace

extern "C" {

const char* fgl_last_error(void) { return g_last_error.c_str(); }

int fgl_cloud_read(const char* path, fgl_cloud** out) {
    if (!path || !out) return fail(FGL_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        fgl::CloudFile file{fgl::format_from_path(path), path, 9};
        auto* handle = new fgl_cloud{fgl::read_cloud(file)};
        *out = handle;
        return FGL_OK;
    });
}

int fgl_cloud_write(const fgl_cloud* cloud, const char* path, const char* format, int precision) {
    if (!cloud || !path) return fail(FGL_INVALID_ARGUMENT, "null argument");
    return guarded([&]() -> int {
        fgl::CloudFile file;
        file.path = path;
        file.precision = precision > 0 ? precision : 9;
        if (!format) {
            file.format = fgl::format_from_path(path);
        } else if (std::strcmp(format, "xyz") == 0) {
            file.format = fgl::CloudFormat::XyzAscii;
        } else if (std::strcmp(format, "ply") == 0) {
            file.format = fgl::CloudFormat::PlyAscii;
        } else {
            return fail(FGL_INVALID_ARGUMENT, std::string("unknown format: ") + format);
        }
        fgl::write_cloud(cloud->cloud, file);
        return FGL_OK;
    });
}

void fgl_cloud_free(fgl_cloud* cloud) { delete cloud; }

long long fgl_cloud_size(const fgl_cloud* cloud) { return cloud ? cloud->cloud.size() : 0; }

int fgl_cloud_has_normals(const fgl_cloud* cloud) {
    return cloud && cloud->cloud.has_normals() ? 1 : 0;
}

int fgl_cloud_bbox(const fgl_cloud* cloud, double out_min[3], double out_max[3]) {
    if (!cloud || !out_min || !out_max) return fail(FGL_INVALID_ARGUMENT, "null argument");
    auto [lo, hi] = cloud->cloud.bounding_box();
    for (int a = 0; a < 3; ++a) {
        out_min[a] = lo[a];
        out_max[a] = hi[a];
    }
    return FGL_OK;
}

int fgl_cloud_add_noise(const fgl_cloud* cloud, double sigma, uint64_t seed, fgl_cloud** out) {
    if (!cloud || !out) return fail(FGL_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        *out = new fgl_cloud{fgl::add_gaussian_noise(cloud->cloud, {sigma, seed})};
        return FGL_OK;
    });
}

int fgl_mse(const fgl_cloud* denoised, const fgl_cloud* ground_truth, double* out) {
    if (!denoised || !ground_truth || !out) return fail(FGL_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        *out = fgl::mse(denoised->cloud, ground_truth->cloud);
        return FGL_OK;
    });
}

int fgl_snr(const fgl_cloud* denoised, const fgl_cloud* ground_truth, double* out) {
    if (!denoised || !ground_truth || !out) return fail(FGL_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        *out = fgl::snr(denoised->cloud, ground_truth->cloud);
        return FGL_OK;
    });
}

fgl_config* fgl_config_create(void) { return new fgl_config{}; }

void fgl_config_free(fgl_config* config) { delete config; }

int fgl_config_set_int(fgl_config* config, const char* key, long long value) {
    if (!config || !key) return fail(FGL_INVALID_ARGUMENT, "null argument");
    std::string k = key;
    auto& c = config->config;
    if (k == "patches") c.num_patches = value;
    else if (k == "patch-size") c.patch_size = value;
    else if (k == "patch-neighbors") c.patch_eps = value;
    else if (k == "max-iters") c.max_iters = static_cast<int>(value);
    else if (k == "normals-k") c.normals_k = value;
    else if (k == "seed") { c.rng_seed = static_cast<uint64_t>(value); c.learn.rng_seed = c.rng_seed; }
    else if (k == "mutual-only") c.mutual_only = value != 0;
    else if (k == "max-outer-iters") c.learn.max_outer_iters = static_cast<int>(value);
    else if (k == "max-pg-iters") c.learn.max_pg_iters = static_cast<int>(value);
    else if (k == "gamma-mode") c.gamma_mode = value == 1 ? fgl::GammaMode::Constant : fgl::GammaMode::Decay;
    else if (k == "weight-mode") {
        switch (value) {
            case 0: c.weight_mode = fgl::WeightMode::Learned; break;
            case 1: c.weight_mode = fgl::WeightMode::DiagonalOnly; break;
            case 2: c.weight_mode = fgl::WeightMode::Random; break;
            case 3: c.weight_mode = fgl::WeightMode::FeatureExp; break;
            default: return fail(FGL_INVALID_ARGUMENT, "weight-mode must be 0..3");
        }
    } else {
        return fail(FGL_INVALID_ARGUMENT, "unknown integer config key: " + k);
    }
    return FGL_OK;
}

int fgl_config_set_double(fgl_config* config, const char* key, double value) {
    if (!config || !key) return fail(FGL_INVALID_ARGUMENT, "null argument");
    std::string k = key;
    auto& c = config->config;
    if (k == "trace-bound") c.learn.trace_bound = value;
    else if (k == "gamma0") c.gamma0 = value;
    else if (k == "cg-tol") c.cg_tol = value;
    else if (k == "objective-tol") c.learn.objective_tol = value;
    else if (k == "edge-subsample") c.learn.edge_subsample_rate = value;
    else if (k == "step-size") c.learn.step_size = value;
    else return fail(FGL_INVALID_ARGUMENT, "unknown double config key: " + k);
    return FGL_OK;
}

int fgl_config_set_string(fgl_config* config, const char* key, const char* value) {
    if (!config || !key || !value) return fail(FGL_INVALID_ARGUMENT, "null argument");
    std::string k = key, v = value;
    auto& c = config->config;
    if (k == "weight-mode") {
        if (v == "learned") c.weight_mode = fgl::WeightMode::Learned;
        else if (v == "diagonal") c.weight_mode = fgl::WeightMode::DiagonalOnly;
        else if (v == "random") c.weight_mode = fgl::WeightMode::Random;
        else if (v == "feature-exp") c.weight_mode = fgl::WeightMode::FeatureExp;
        else return fail(FGL_INVALID_ARGUMENT, "unknown weight mode: " + v);
    } else if (k == "gamma-mode") {
        if (v == "constant") c.gamma_mode = fgl::GammaMode::Constant;
        else if (v == "decay") c.gamma_mode = fgl::GammaMode::Decay;
        else return fail(FGL_INVALID_ARGUMENT, "unknown gamma mode: " + v);
    } else if (k == "trace-path") {
        c.learn.trace_path = v;
    } else {
        return fail(FGL_INVALID_ARGUMENT, "unknown string config key: " + k);
    }
    return FGL_OK;
}

int fgl_denoise(const fgl_cloud* cloud, const fgl_config* config, fgl_cloud** out,
                fgl_report** report) {
    if (!cloud || !config || !out) return fail(FGL_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        auto [denoised, reports] = fgl::denoise(cloud->cloud, config->config);
        *out = new fgl_cloud{std::move(denoised)};
        if (report) *report = new fgl_report{std::move(reports)};
        return FGL_OK;
    });
}

int fgl_report_iterations(const fgl_report* report) {
    return report ? static_cast<int>(report->reports.size()) : 0;
}

int fgl_report_write(const fgl_report* report, const char* path) {
    if (!report || !path) return fail(FGL_INVALID_ARGUMENT, "null argument");
    std::ofstream out(path);
    if (!out) return fail(FGL_IO_ERROR, std::string("cannot open ") + path);
    for (const auto& r : report->reports) out << r.to_line() << '\n';
    return out ? FGL_OK : fail(FGL_IO_ERROR, std::string("write failed for ") + path);
}

void fgl_report_free(fgl_report* report) { delete report; }

int fgl_learn_metric(const fgl_cloud* cloud, const fgl_config* config, double** out_metric,
                     int* out_dim) {
    if (!cloud || !config || !out_metric || !out_dim) {
        return fail(FGL_INVALID_ARGUMENT, "null argument");
    }
    return guarded([&] {
        const auto& c = config->config;
        const auto& pc = cloud->cloud;
        pc.validate();
        c.validate(pc.size());
        // Single pass of the denoising pipeline up to metric learning.
        fgl::PointCloud with_normals = fgl::estimate_normals(pc, c.normals_k);
        auto centers = fgl::farthest_point_sample(pc, c.num_patches, c.rng_seed);
        fgl::PatchSet patches = fgl::extract_patches(pc, centers, c.patch_size);
        auto neighbors = fgl::patch_neighbors(patches, c.patch_eps);
        Eigen::MatrixXd features(pc.size(), 6);
        features.leftCols(3) = with_normals.points;
        features.rightCols(3) = *with_normals.normals;
        fgl::EdgeSet edges =
            fgl::build_correspondences(patches, neighbors, features, pc, c.mutual_only);
        Eigen::MatrixXd metric = c.weight_mode == fgl::WeightMode::DiagonalOnly
                                     ? fgl::learn_metric_diagonal_only(edges, c.learn, 6)
                                     : fgl::learn_metric(edges, c.learn, 6);
        int k = static_cast<int>(metric.rows());
        auto* data = new double[static_cast<size_t>(k) * k];
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) data[i * k + j] = metric(i, j);
        *out_metric = data;
        *out_dim = k;
        return FGL_OK;
    });
}

void fgl_matrix_free(double* matrix) { delete[] matrix; }

} // extern "C"
