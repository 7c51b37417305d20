#include "sourcesink/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "sourcesink/errors.hpp"

namespace sourcesink {

namespace {

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& s, const std::string& path, int line_no) {
    const char* begin = s.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    while (end && *end == ' ') ++end;
    if (end == begin || (end && *end != '\0'))
        throw InputError(path + ":" + std::to_string(line_no) + ": malformed number '" + s + "'");
    return v;
}

std::string strip_cr(std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == '\n')) s.pop_back();
    return s;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    return f;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for reading: " + path);
    return f;
}

void finish_out(std::ofstream& f, const std::string& path) {
    f.flush();
    if (!f) throw IoError("write failed: " + path);
}

}  // namespace

void Normalization::validate() const {
    if (scale == 0.0 || !std::isfinite(scale) || !std::isfinite(x_offset) ||
        !std::isfinite(y_offset))
        throw InputError("Normalization: offsets must be finite and scale nonzero");
}

std::vector<Trajectory> load_trajectories(const std::string& path) {
    std::ifstream f = open_in(path);
    std::string line;
    int line_no = 0;
    if (!std::getline(f, line)) throw InputError(path + ": empty file");
    ++line_no;
    if (strip_cr(line) != "agent_id,t,x,y")
        throw InputError(path + ":1: expected header 'agent_id,t,x,y'");

    struct Rows {
        std::vector<double> t, x, y;
    };
    std::map<std::string, int> order;
    std::vector<std::string> ids;
    std::vector<Rows> rows;
    while (std::getline(f, line)) {
        ++line_no;
        std::string s = strip_cr(line);
        if (s.empty()) continue;
        auto fields = split_csv(s);
        if (fields.size() != 4)
            throw InputError(path + ":" + std::to_string(line_no) + ": expected 4 fields, got " +
                             std::to_string(fields.size()));
        auto [it, inserted] = order.try_emplace(fields[0], static_cast<int>(ids.size()));
        if (inserted) {
            ids.push_back(fields[0]);
            rows.emplace_back();
        }
        auto& r = rows[it->second];
        r.t.push_back(parse_double(fields[1], path, line_no));
        r.x.push_back(parse_double(fields[2], path, line_no));
        r.y.push_back(parse_double(fields[3], path, line_no));
    }

    std::vector<Trajectory> out;
    for (size_t a = 0; a < ids.size(); ++a) {
        auto& r = rows[a];
        const int n = static_cast<int>(r.t.size());
        if (n < 4) {
            std::cerr << "warning: agent '" << ids[a] << "' has " << n
                      << " samples (<4), skipping\n";
            continue;
        }
        std::vector<int> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](int i, int j) { return r.t[i] < r.t[j]; });
        Trajectory traj;
        traj.agent_id = ids[a];
        traj.t.resize(n);
        traj.x.resize(n);
        traj.y.resize(n);
        for (int i = 0; i < n; ++i) {
            traj.t[i] = r.t[idx[i]];
            traj.x[i] = r.x[idx[i]];
            traj.y[i] = r.y[idx[i]];
            if (i > 0 && traj.t[i] == traj.t[i - 1])
                throw InputError(path + ": agent '" + ids[a] + "' has duplicate timestamp " +
                                 g17(traj.t[i]));
        }
        traj.validate();
        out.push_back(std::move(traj));
    }
    return out;
}

void save_trajectories(const std::vector<Trajectory>& trajs, const std::string& path) {
    std::ofstream f = open_out(path);
    f << "agent_id,t,x,y\n";
    for (const auto& tr : trajs)
        for (int i = 0; i < tr.size(); ++i)
            f << tr.agent_id << ',' << g17(tr.t[i]) << ',' << g17(tr.x[i]) << ','
              << g17(tr.y[i]) << '\n';
    finish_out(f, path);
}

std::pair<std::vector<Trajectory>, Normalization> normalize(
    const std::vector<Trajectory>& trajs) {
    if (trajs.empty()) throw InputError("normalize: no trajectories");
    double sx = 0, sy = 0;
    long n = 0;
    for (const auto& tr : trajs) {
        sx += tr.x.sum();
        sy += tr.y.sum();
        n += tr.size();
    }
    Normalization norm;
    norm.x_offset = sx / n;
    norm.y_offset = sy / n;
    std::vector<Trajectory> out = trajs;
    for (auto& tr : out) {
        tr.x.array() -= norm.x_offset;
        tr.y.array() -= norm.y_offset;
    }
    return {std::move(out), norm};
}

std::vector<Trajectory> denormalize(const std::vector<Trajectory>& trajs,
                                    const Normalization& norm) {
    norm.validate();
    std::vector<Trajectory> out = trajs;
    for (auto& tr : out) {
        tr.x = tr.x * norm.scale;
        tr.y = tr.y * norm.scale;
        tr.x.array() += norm.x_offset;
        tr.y.array() += norm.y_offset;
    }
    return out;
}

void export_grid(const InfluenceGrid& grid, const std::string& path) {
    std::ofstream f = open_out(path);
    f << "t,x,y,lap_mean,lap_var,signed_kl\n";
    GridSpec spec;
    spec.x_bounds = grid.x_bounds;
    spec.y_bounds = grid.y_bounds;
    spec.nx = grid.nx;
    spec.ny = grid.ny;
    for (size_t k = 0; k < grid.times.size(); ++k)
        for (int j = 0; j < grid.ny; ++j)
            for (int i = 0; i < grid.nx; ++i) {
                const int idx = grid.index(static_cast<int>(k), j, i);
                f << g17(grid.times[k]) << ',' << g17(spec.x_at(i)) << ',' << g17(spec.y_at(j))
                  << ',' << g17(grid.lap_mean[idx]) << ',' << g17(grid.lap_var[idx]) << ','
                  << g17(grid.signed_kl[idx]) << '\n';
            }
    finish_out(f, path);
}

InfluenceGrid load_grid(const std::string& path) {
    std::ifstream f = open_in(path);
    std::string line;
    int line_no = 0;
    if (!std::getline(f, line)) throw InputError(path + ": empty file");
    ++line_no;
    if (strip_cr(line) != "t,x,y,lap_mean,lap_var,signed_kl")
        throw InputError(path + ":1: expected header 't,x,y,lap_mean,lap_var,signed_kl'");

    std::vector<double> times, xs, ys;
    std::vector<double> lap_mean, lap_var, skl;
    while (std::getline(f, line)) {
        ++line_no;
        std::string s = strip_cr(line);
        if (s.empty()) continue;
        auto fields = split_csv(s);
        if (fields.size() != 6)
            throw InputError(path + ":" + std::to_string(line_no) + ": expected 6 fields, got " +
                             std::to_string(fields.size()));
        double t = parse_double(fields[0], path, line_no);
        double x = parse_double(fields[1], path, line_no);
        double y = parse_double(fields[2], path, line_no);
        if (times.empty() || t != times.back()) times.push_back(t);
        if (times.size() == 1) {
            if (ys.empty() || y != ys.back()) ys.push_back(y);
            if (ys.size() == 1) xs.push_back(x);
        }
        lap_mean.push_back(parse_double(fields[3], path, line_no));
        lap_var.push_back(parse_double(fields[4], path, line_no));
        skl.push_back(parse_double(fields[5], path, line_no));
    }
    InfluenceGrid grid;
    grid.nx = static_cast<int>(xs.size());
    grid.ny = static_cast<int>(ys.size());
    grid.times = times;
    if (grid.nx < 1 || grid.ny < 1 ||
        lap_mean.size() != times.size() * static_cast<size_t>(grid.nx) * grid.ny)
        throw InputError(path + ": row count does not form a full time*ny*nx lattice");
    grid.x_bounds = {xs.front(), xs.back()};
    grid.y_bounds = {ys.front(), ys.back()};
    grid.lap_mean = Eigen::Map<Eigen::VectorXd>(lap_mean.data(), lap_mean.size());
    grid.lap_var = Eigen::Map<Eigen::VectorXd>(lap_var.data(), lap_var.size());
    grid.signed_kl = Eigen::Map<Eigen::VectorXd>(skl.data(), skl.size());
    return grid;
}

void export_mean_map(const Eigen::MatrixXd& map, const std::array<double, 2>& x_bounds,
                     const std::array<double, 2>& y_bounds, const std::string& path) {
    const int ny = static_cast<int>(map.rows()), nx = static_cast<int>(map.cols());
    if (nx < 2 || ny < 2) throw InputError("export_mean_map: map must be at least 2x2");
    std::ofstream f = open_out(path);
    f << "x,y,mean_signed_kl\n";
    for (int j = 0; j < ny; ++j) {
        const double y = y_bounds[0] + (y_bounds[1] - y_bounds[0]) * j / (ny - 1);
        for (int i = 0; i < nx; ++i) {
            const double x = x_bounds[0] + (x_bounds[1] - x_bounds[0]) * i / (nx - 1);
            f << g17(x) << ',' << g17(y) << ',' << g17(map(j, i)) << '\n';
        }
    }
    finish_out(f, path);
}

void render_heatmap(const Eigen::MatrixXd& map, const std::string& path, int scale) {
    if (map.rows() < 1 || map.cols() < 1) throw InputError("render_heatmap: empty map");
    if (scale < 1) throw InputError("render_heatmap: scale must be >= 1");
    const int ny = static_cast<int>(map.rows()), nx = static_cast<int>(map.cols());
    const double limit = map.array().abs().maxCoeff();
    std::ofstream f = open_out(path);
    f << "P6\n" << nx * scale << ' ' << ny * scale << "\n255\n";
    std::string row;
    for (int j = ny - 1; j >= 0; --j) {  // top of the image is the largest y
        row.clear();
        for (int i = 0; i < nx; ++i) {
            const double t = limit > 0 ? std::clamp(map(j, i) / limit, -1.0, 1.0) : 0.0;
            // white at 0, pure blue at -1, pure red at +1
            unsigned char r = 255, g = 255, b = 255;
            if (t < 0) {
                r = g = static_cast<unsigned char>(std::lround(255.0 * (1.0 + t)));
            } else if (t > 0) {
                g = b = static_cast<unsigned char>(std::lround(255.0 * (1.0 - t)));
            }
            for (int s = 0; s < scale; ++s) {
                row.push_back(static_cast<char>(r));
                row.push_back(static_cast<char>(g));
                row.push_back(static_cast<char>(b));
            }
        }
        for (int s = 0; s < scale; ++s) f.write(row.data(), static_cast<std::streamsize>(row.size()));
    }
    finish_out(f, path);
}

namespace {

nlohmann::json hyperparams_to_json(const KernelHyperparams& hp) {
    return {{"output_scale", hp.output_scale},
            {"length_scales", std::vector<double>(hp.length_scales.begin(), hp.length_scales.end())},
            {"noise_std", hp.noise_std}};
}

KernelHyperparams hyperparams_from_json(const nlohmann::json& j) {
    KernelHyperparams hp;
    hp.output_scale = j.at("output_scale").get<double>();
    auto ls = j.at("length_scales").get<std::vector<double>>();
    hp.length_scales = Eigen::Map<Eigen::VectorXd>(ls.data(), ls.size());
    hp.noise_std = j.at("noise_std").get<double>();
    return hp;
}

nlohmann::json gp_to_json(const GpModel& gp) {
    const auto& X = gp.inputs();
    std::vector<std::vector<double>> inputs(X.rows());
    for (int i = 0; i < X.rows(); ++i)
        inputs[i] = std::vector<double>(X.row(i).begin(), X.row(i).end());
    return {{"hyperparams", hyperparams_to_json(gp.hyperparams())},
            {"inputs", inputs},
            {"targets", std::vector<double>(gp.targets().begin(), gp.targets().end())}};
}

GpModel gp_from_json(const nlohmann::json& j) {
    KernelHyperparams hp = hyperparams_from_json(j.at("hyperparams"));
    auto rows = j.at("inputs").get<std::vector<std::vector<double>>>();
    auto targets = j.at("targets").get<std::vector<double>>();
    if (rows.empty()) return no_data_model(hp);
    Eigen::MatrixXd X(rows.size(), rows[0].size());
    for (size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != static_cast<size_t>(X.cols()))
            throw InputError("field model: ragged input rows");
        X.row(i) = Eigen::Map<Eigen::VectorXd>(rows[i].data(), rows[i].size());
    }
    Eigen::VectorXd y = Eigen::Map<Eigen::VectorXd>(targets.data(), targets.size());
    return fit(X, y, hp);
}

}  // namespace

void save_field_model(const FieldModel& model, const Normalization& norm,
                      const std::string& path) {
    nlohmann::json j = {{"format", "sourcesink-field-model"},
                        {"version", 1},
                        {"normalization",
                         {{"x_offset", norm.x_offset},
                          {"y_offset", norm.y_offset},
                          {"scale", norm.scale}}},
                        {"gp_vx", gp_to_json(model.gp_vx)},
                        {"gp_vy", gp_to_json(model.gp_vy)}};
    std::ofstream f = open_out(path);
    f << j.dump(2) << '\n';
    finish_out(f, path);
}

LoadedFieldModel load_field_model(const std::string& path) {
    std::ifstream f = open_in(path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(path + ": invalid JSON: " + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != "sourcesink-field-model")
            throw InputError(path + ": not a field model file");
        LoadedFieldModel out;
        const auto& n = j.at("normalization");
        out.norm.x_offset = n.at("x_offset").get<double>();
        out.norm.y_offset = n.at("y_offset").get<double>();
        out.norm.scale = n.at("scale").get<double>();
        out.norm.validate();
        out.model.gp_vx = gp_from_json(j.at("gp_vx"));
        out.model.gp_vy = gp_from_json(j.at("gp_vy"));
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(path + ": missing or malformed field: " + std::string(e.what()));
    }
}

}  // namespace sourcesink
