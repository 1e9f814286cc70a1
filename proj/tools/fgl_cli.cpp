// Command-line front end for the feature-graph point cloud denoiser.
// Links only the public C API.

#include "fgl/fgl.h"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <string>

namespace {

struct CloudGuard {
    fgl_cloud* ptr = nullptr;
    ~CloudGuard() { fgl_cloud_free(ptr); }
};

struct ConfigGuard {
    fgl_config* ptr = fgl_config_create();
    ~ConfigGuard() { fgl_config_free(ptr); }
};

int die(const std::string& context) {
    std::fprintf(stderr, "error: %s: %s\n", context.c_str(), fgl_last_error());
    return 1;
}

double bbox_diagonal(const fgl_cloud* cloud) {
    double lo[3], hi[3];
    fgl_cloud_bbox(cloud, lo, hi);
    double sum = 0;
    for (int a = 0; a < 3; ++a) sum += (hi[a] - lo[a]) * (hi[a] - lo[a]);
    return std::sqrt(sum);
}

struct PipelineFlags {
    long long patches = 200, patch_size = 9, patch_neighbors = 3, max_iters = 7;
    long long normals_k = 12, seed = 0, max_outer = 20, max_pg = 100;
    double trace_bound = 3.0, gamma0 = 0.2, edge_subsample = 1.0, cg_tol = 1e-8;
    std::string weight_mode = "learned";
    std::string gamma_mode = "constant";
    std::string trace_path;
    bool mutual_only = false;

    void attach(CLI::App* cmd) {
        cmd->add_option("--patches", patches, "Number of patches M");
        cmd->add_option("--patch-size", patch_size, "Neighbors per patch k");
        cmd->add_option("--patch-neighbors", patch_neighbors, "Adjacent patches per patch");
        cmd->add_option("--trace-bound", trace_bound, "Metric trace bound C");
        cmd->add_option("--gamma0", gamma0, "Regularization weight at iteration 1");
        cmd->add_option("--gamma-mode", gamma_mode,
                        "constant (gamma0 every iteration) or decay (0.2^i (e-1)^(1-i) schedule)");
        cmd->add_option("--max-iters", max_iters, "Denoising iterations cap");
        cmd->add_option("--weight-mode", weight_mode,
                        "One of learned|diagonal|random|feature-exp");
        cmd->add_option("--edge-subsample", edge_subsample,
                        "Fraction of edges used for metric learning");
        cmd->add_option("--seed", seed, "RNG seed for all randomized steps");
        cmd->add_option("--normals-k", normals_k, "Neighborhood size for normal estimation");
        cmd->add_option("--max-outer-iters", max_outer, "Metric alternation cap");
        cmd->add_option("--max-pg-iters", max_pg, "Proximal gradient iteration cap");
        cmd->add_option("--cg-tol", cg_tol, "Relative residual for coordinate solves");
        cmd->add_option("--trace", trace_path, "Metric learning trace file");
        cmd->add_flag("--mutual-only", mutual_only, "Keep only mutual-nearest correspondences");
    }

    int apply(fgl_config* config) const {
        if (fgl_config_set_int(config, "patches", patches) ||
            fgl_config_set_int(config, "patch-size", patch_size) ||
            fgl_config_set_int(config, "patch-neighbors", patch_neighbors) ||
            fgl_config_set_int(config, "max-iters", max_iters) ||
            fgl_config_set_int(config, "normals-k", normals_k) ||
            fgl_config_set_int(config, "seed", seed) ||
            fgl_config_set_int(config, "mutual-only", mutual_only ? 1 : 0) ||
            fgl_config_set_int(config, "max-outer-iters", max_outer) ||
            fgl_config_set_int(config, "max-pg-iters", max_pg) ||
            fgl_config_set_double(config, "trace-bound", trace_bound) ||
            fgl_config_set_double(config, "gamma0", gamma0) ||
            fgl_config_set_double(config, "cg-tol", cg_tol) ||
            fgl_config_set_double(config, "edge-subsample", edge_subsample) ||
            fgl_config_set_string(config, "weight-mode", weight_mode.c_str()) ||
            fgl_config_set_string(config, "gamma-mode", gamma_mode.c_str())) {
            return 1;
        }
        if (!trace_path.empty() &&
            fgl_config_set_string(config, "trace-path", trace_path.c_str())) {
            return 1;
        }
        return 0;
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Feature-graph metric learning and point cloud denoising"};
    app.require_subcommand(1);

    std::string input, output, format, report_path;
    int precision = 9;

    // denoise
    auto* denoise_cmd = app.add_subcommand("denoise", "Denoise a point cloud");
    PipelineFlags denoise_flags;
    denoise_cmd->add_option("input", input, "Input cloud (xyz or ply)")->required();
    denoise_cmd->add_option("output", output, "Output cloud path")->required();
    denoise_flags.attach(denoise_cmd);
    denoise_cmd->add_option("--report", report_path, "Per-iteration report file");
    denoise_cmd->add_option("--format", format, "Output format (xyz|ply)");
    denoise_cmd->add_option("--precision", precision, "Output decimal digits");

    // add-noise
    auto* noise_cmd = app.add_subcommand("add-noise", "Add seeded Gaussian noise");
    double sigma = 0.0;
    bool sigma_relative = false;
    long long noise_seed = 0;
    noise_cmd->add_option("input", input)->required();
    noise_cmd->add_option("output", output)->required();
    noise_cmd->add_option("--sigma", sigma, "Noise standard deviation")->required();
    noise_cmd->add_flag("--sigma-relative", sigma_relative,
                        "Interpret sigma as a fraction of the bounding-box diagonal");
    noise_cmd->add_option("--seed", noise_seed, "RNG seed");
    noise_cmd->add_option("--format", format, "Output format (xyz|ply)");
    noise_cmd->add_option("--precision", precision, "Output decimal digits");

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "MSE/SNR against a ground truth");
    std::string gt_path, model_name = "-", method_name = "-";
    bool csv = false;
    double csv_sigma = 0.0;
    eval_cmd->add_option("input", input, "Denoised cloud")->required();
    eval_cmd->add_option("ground_truth", gt_path, "Ground truth cloud")->required();
    eval_cmd->add_flag("--csv", csv, "Emit a CSV row: model,sigma,method,mse,snr");
    eval_cmd->add_option("--model", model_name, "Model name for the CSV row");
    eval_cmd->add_option("--method", method_name, "Method name for the CSV row");
    eval_cmd->add_option("--sigma", csv_sigma, "Noise level for the CSV row");

    // learn-metric
    auto* learn_cmd = app.add_subcommand("learn-metric", "Learn the feature metric only");
    PipelineFlags learn_flags;
    learn_cmd->add_option("input", input)->required();
    learn_cmd->add_option("output", output, "ASCII matrix output path")->required();
    learn_flags.attach(learn_cmd);

    // info
    auto* info_cmd = app.add_subcommand("info", "Print cloud statistics");
    info_cmd->add_option("input", input)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    CloudGuard in;
    if (fgl_cloud_read(input.c_str(), &in.ptr)) return die("reading " + input);
    const char* fmt = format.empty() ? nullptr : format.c_str();

    if (denoise_cmd->parsed()) {
        ConfigGuard config;
        if (denoise_flags.apply(config.ptr)) return die("configuring denoiser");
        CloudGuard out;
        fgl_report* report = nullptr;
        if (fgl_denoise(in.ptr, config.ptr, &out.ptr, &report)) return die("denoising");
        int status = 0;
        if (!report_path.empty() && fgl_report_write(report, report_path.c_str())) {
            die("writing report");
            status = 1;
        }
        fgl_report_free(report);
        if (status) return status;
        if (fgl_cloud_write(out.ptr, output.c_str(), fmt, precision)) {
            return die("writing " + output);
        }
        return 0;
    }

    if (noise_cmd->parsed()) {
        double actual_sigma = sigma_relative ? sigma * bbox_diagonal(in.ptr) : sigma;
        CloudGuard out;
        if (fgl_cloud_add_noise(in.ptr, actual_sigma, static_cast<uint64_t>(noise_seed),
                                &out.ptr)) {
            return die("adding noise");
        }
        if (fgl_cloud_write(out.ptr, output.c_str(), fmt, precision)) {
            return die("writing " + output);
        }
        return 0;
    }

    if (eval_cmd->parsed()) {
        CloudGuard gt;
        if (fgl_cloud_read(gt_path.c_str(), &gt.ptr)) return die("reading " + gt_path);
        double mse_value = 0, snr_value = 0;
        if (fgl_mse(in.ptr, gt.ptr, &mse_value)) return die("computing mse");
        if (fgl_snr(in.ptr, gt.ptr, &snr_value)) return die("computing snr");
        if (csv) {
            std::printf("%s,%g,%s,%.6g,%.4f\n", model_name.c_str(), csv_sigma,
                        method_name.c_str(), mse_value, snr_value);
        } else {
            std::printf("mse=%.12g\nsnr=%.6f\n", mse_value, snr_value);
        }
        return 0;
    }

    if (learn_cmd->parsed()) {
        ConfigGuard config;
        if (learn_flags.apply(config.ptr)) return die("configuring learner");
        double* metric = nullptr;
        int dim = 0;
        if (fgl_learn_metric(in.ptr, config.ptr, &metric, &dim)) return die("learning metric");
        FILE* out_file = std::fopen(output.c_str(), "w");
        if (!out_file) {
            fgl_matrix_free(metric);
            std::fprintf(stderr, "error: cannot open %s for writing\n", output.c_str());
            return 1;
        }
        for (int i = 0; i < dim; ++i) {
            for (int j = 0; j < dim; ++j) {
                std::fprintf(out_file, "%.12g%c", metric[i * dim + j], j + 1 == dim ? '\n' : ' ');
            }
        }
        std::fclose(out_file);
        fgl_matrix_free(metric);
        return 0;
    }

    if (info_cmd->parsed()) {
        double lo[3], hi[3];
        fgl_cloud_bbox(in.ptr, lo, hi);
        std::printf("points=%lld\n", fgl_cloud_size(in.ptr));
        std::printf("normals=%s\n", fgl_cloud_has_normals(in.ptr) ? "yes" : "no");
        std::printf("bbox_min=%.9g %.9g %.9g\n", lo[0], lo[1], lo[2]);
        std::printf("bbox_max=%.9g %.9g %.9g\n", hi[0], hi[1], hi[2]);
        return 0;
    }
    return 2;
}
