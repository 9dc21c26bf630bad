#include "simmatch/io.hpp"

#include <json.hpp>

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

namespace simmatch::io {

namespace {

bool is_blank_or_comment(const std::string& line) {
    for (char c : line) {
        if (c == '#') return true;
        if (!std::isspace(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

}  // namespace

PointCloud read_point_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open point file: " + path, path, 0);
    }
    std::vector<std::vector<double>> rows;
    std::string line;
    int lineno = 0;
    Index dim = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (is_blank_or_comment(line)) continue;
        for (char& c : line) {
            if (c == ',') c = ' ';
        }
        std::istringstream ss(line);
        std::vector<double> coords;
        std::string tok;
        while (ss >> tok) {
            char* end = nullptr;
            const double v = std::strtod(tok.c_str(), &end);
            if (end == tok.c_str() || *end != '\0') {
                throw ParseError(path + ":" + std::to_string(lineno) +
                                     ": not a number: '" + tok + "'",
                                 path, lineno);
            }
            coords.push_back(v);
        }
        if (coords.size() != 2 && coords.size() != 3) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected 2 or 3 coordinates, got " +
                                 std::to_string(coords.size()),
                             path, lineno);
        }
        if (dim == 0) {
            dim = static_cast<Index>(coords.size());
        } else if (static_cast<Index>(coords.size()) != dim) {
            throw ParseError(path + ":" + std::to_string(lineno) +
                                 ": inconsistent dimension (expected " + std::to_string(dim) + ")",
                             path, lineno);
        }
        rows.push_back(std::move(coords));
    }
    if (rows.empty()) {
        throw ParseError(path + ": no points found", path, lineno);
    }
    Matrix pts(static_cast<Index>(rows.size()), dim);
    for (Index i = 0; i < pts.rows(); ++i) {
        for (Index j = 0; j < dim; ++j) pts(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    return PointCloud(std::move(pts));
}

void write_point_file(const std::string& path, const PointCloud& cloud) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write point file: " + path);
    }
    const Matrix& pts = cloud.points();
    for (Index i = 0; i < pts.rows(); ++i) {
        for (Index j = 0; j < pts.cols(); ++j) {
            if (j) out << ' ';
            out << format_double(pts(i, j));
        }
        out << '\n';
    }
    if (!out) {
        throw std::runtime_error("write failed: " + path);
    }
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

MatchConfig read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open config file: " + path, path, 0);
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": invalid JSON: " + e.what(), path, 0);
    }
    if (!j.is_object()) {
        throw ParseError(path + ": config must be a JSON object", path, 0);
    }
    MatchConfig cfg;
    try {
        for (const auto& [key, val] : j.items()) {
            if (key == "mu") cfg.mu = val.get<double>();
            else if (key == "s_lo") cfg.s_lo = val.get<double>();
            else if (key == "s_hi") cfg.s_hi = val.get<double>();
            else if (key == "lambda_step") cfg.lambda_step = val.get<double>();
            else if (key == "fw_tol") cfg.fw_tol = val.get<double>();
            else if (key == "fw_max_iters") cfg.fw_max_iters = val.get<int>();
            else if (key == "denom_guard") cfg.denom_guard = val.get<double>();
            else if (key == "normalize") cfg.normalize = val.get<bool>();
            else if (key == "seed") cfg.seed = val.get<std::uint64_t>();
            else throw ParseError(path + ": unknown config field '" + key + "'", path, 0);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": bad config value: " + e.what(), path, 0);
    }
    cfg.validate();
    return cfg;
}

std::string config_to_json(const MatchConfig& cfg) {
    nlohmann::json j;
    j["mu"] = cfg.mu;
    j["s_lo"] = cfg.s_lo;
    j["s_hi"] = cfg.s_hi;
    j["lambda_step"] = cfg.lambda_step;
    j["fw_tol"] = cfg.fw_tol;
    j["fw_max_iters"] = cfg.fw_max_iters;
    j["denom_guard"] = cfg.denom_guard;
    j["normalize"] = cfg.normalize;
    j["seed"] = cfg.seed;
    return j.dump(2);
}

}  // namespace simmatch::io
