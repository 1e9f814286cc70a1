#include "fgl/cloud_io.hpp"

#include "fgl/spatial_index.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <vector>

namespace fgl {

CloudFormat format_from_path(const std::string& path) {
    auto dot = path.find_last_of('.');
    if (dot != std::string::npos) {
        std::string ext = path.substr(dot + 1);
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (ext == "ply") return CloudFormat::PlyAscii;
    }
    return CloudFormat::XyzAscii;
}

namespace {

[[noreturn]] void parse_fail(const std::string& path, size_t line, const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

PointCloud read_xyz(std::istream& in, const std::string& path) {
    std::vector<std::array<double, 6>> rows;
    bool any_normals = false;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::array<double, 6> row{};
        int count = 0;
        double value;
        while (ls >> value) {
            if (count >= 6) parse_fail(path, line_no, "too many columns");
            row[count++] = value;
        }
        if (!ls.eof()) parse_fail(path, line_no, "malformed number");
        if (count != 3 && count != 6) parse_fail(path, line_no, "expected 3 or 6 columns");
        if (count == 6) any_normals = true;
        else if (any_normals) parse_fail(path, line_no, "inconsistent normal columns");
        rows.push_back(row);
    }
    if (rows.empty()) throw std::runtime_error(path + ": empty point cloud file");
    PointCloud cloud;
    cloud.points.resize(static_cast<Eigen::Index>(rows.size()), 3);
    if (any_normals) cloud.normals = PointMatrix(static_cast<Eigen::Index>(rows.size()), 3);
    for (size_t i = 0; i < rows.size(); ++i) {
        auto r = static_cast<Eigen::Index>(i);
        cloud.points.row(r) << rows[i][0], rows[i][1], rows[i][2];
        if (any_normals) cloud.normals->row(r) << rows[i][3], rows[i][4], rows[i][5];
    }
    return cloud;
}

PointCloud read_ply(std::istream& in, const std::string& path) {
    std::string line;
    size_t line_no = 0;
    auto next_line = [&]() {
        if (!std::getline(in, line)) parse_fail(path, line_no, "unexpected end of file");
        ++line_no;
    };

    next_line();
    if (line != "ply") parse_fail(path, line_no, "missing ply magic");
    Eigen::Index vertex_count = -1;
    std::vector<std::string> properties;
    bool in_vertex_element = false;
    for (;;) {
        next_line();
        std::istringstream ls(line);
        std::string token;
        ls >> token;
        if (token == "end_header") break;
        if (token == "comment") continue;
        if (token == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt != "ascii") parse_fail(path, line_no, "only ascii PLY is supported");
        } else if (token == "element") {
            std::string name;
            ls >> name;
            in_vertex_element = (name == "vertex");
            if (in_vertex_element) ls >> vertex_count;
        } else if (token == "property" && in_vertex_element) {
            std::string type, name;
            ls >> type >> name;
            properties.push_back(name);
        }
    }
    if (vertex_count < 1) throw std::runtime_error(path + ": PLY has no vertices");
    auto prop_index = [&](const std::string& name) {
        auto it = std::find(properties.begin(), properties.end(), name);
        return it == properties.end() ? -1 : static_cast<int>(it - properties.begin());
    };
    int ix = prop_index("x"), iy = prop_index("y"), iz = prop_index("z");
    int inx = prop_index("nx"), iny = prop_index("ny"), inz = prop_index("nz");
    if (ix < 0 || iy < 0 || iz < 0) parse_fail(path, line_no, "missing x/y/z properties");
    bool has_normals = inx >= 0 && iny >= 0 && inz >= 0;

    PointCloud cloud;
    cloud.points.resize(vertex_count, 3);
    if (has_normals) cloud.normals = PointMatrix(vertex_count, 3);
    std::vector<double> values(properties.size());
    for (Eigen::Index v = 0; v < vertex_count; ++v) {
        next_line();
        std::istringstream ls(line);
        for (auto& value : values) {
            if (!(ls >> value)) parse_fail(path, line_no, "malformed vertex line");
        }
        cloud.points.row(v) << values[ix], values[iy], values[iz];
        if (has_normals) cloud.normals->row(v) << values[inx], values[iny], values[inz];
    }
    return cloud;
}

} // namespace

PointCloud read_cloud(const CloudFile& file) {
    std::ifstream in(file.path);
    if (!in) throw std::runtime_error("cannot open " + file.path);
    PointCloud cloud = file.format == CloudFormat::PlyAscii ? read_ply(in, file.path)
                                                            : read_xyz(in, file.path);
    cloud.validate();
    return cloud;
}

void write_cloud(const PointCloud& cloud, const CloudFile& file) {
    std::ofstream out(file.path);
    if (!out) throw std::runtime_error("cannot open " + file.path + " for writing");
    out << std::setprecision(std::max(file.precision, 6));
    const bool normals = cloud.has_normals();
    if (file.format == CloudFormat::PlyAscii) {
        out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size() << "\n"
            << "property float x\nproperty float y\nproperty float z\n";
        if (normals) {
            out << "property float nx\nproperty float ny\nproperty float nz\n";
        }
        out << "end_header\n";
    }
    for (Eigen::Index i = 0; i < cloud.size(); ++i) {
        out << cloud.points(i, 0) << ' ' << cloud.points(i, 1) << ' ' << cloud.points(i, 2);
        if (normals) {
            out << ' ' << (*cloud.normals)(i, 0) << ' ' << (*cloud.normals)(i, 1) << ' '
                << (*cloud.normals)(i, 2);
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed for " + file.path);
}

PointCloud add_gaussian_noise(const PointCloud& cloud, const NoiseSpec& spec) {
    if (spec.sigma < 0) throw std::invalid_argument("sigma must be nonnegative");
    PointCloud noisy;
    noisy.points = cloud.points;
    if (spec.sigma > 0) {
        std::mt19937_64 rng(spec.seed);
        std::normal_distribution<double> gauss(0.0, spec.sigma);
        for (Eigen::Index i = 0; i < noisy.points.rows(); ++i) {
            for (int a = 0; a < 3; ++a) noisy.points(i, a) += gauss(rng);
        }
    }
    return noisy;
}

double mse(const PointCloud& denoised, const PointCloud& ground_truth) {
    if (denoised.size() < 1 || ground_truth.size() < 1) {
        throw std::invalid_argument("mse requires nonempty clouds");
    }
    SpatialIndex index(ground_truth.points);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < denoised.size(); ++i) {
        Vec3 p = denoised.points.row(i);
        Eigen::Index j = index.nearest(p);
        sum += (p - ground_truth.points.row(j).transpose()).squaredNorm();
    }
    return sum / static_cast<double>(denoised.size());
}

double snr(const PointCloud& denoised, const PointCloud& ground_truth) {
    double err = mse(denoised, ground_truth);
    Vec3 centroid = ground_truth.points.colwise().mean();
    double energy =
        (ground_truth.points.rowwise() - centroid.transpose()).rowwise().squaredNorm().mean();
    if (err <= 0.0) return 300.0;
    return std::min(300.0, 10.0 * std::log10(energy / err));
}

} // namespace fgl
