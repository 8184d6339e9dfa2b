#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "csikit/channel.hpp"
#include "csikit/common.hpp"
#include "csikit/pca.hpp"
#include "csikit/stats.hpp"

namespace csikit {

using json = nlohmann::json;

// A fully realized scene: how it was built plus the channel matrices.
struct Scene {
    GridConfig grid_config;
    ChannelConfig channel;
    CsiSet csi;

    LocationGrid grid() const { return build_grid(grid_config); }
};

inline Scene make_scene(const GridConfig& g, const ChannelConfig& c, double snr_db) {
    Scene scene;
    scene.grid_config = g;
    scene.channel = c;
    const LocationGrid grid = build_grid(g);
    scene.csi = make_csi_set(synthesize_csi(grid, c), snr_db, c.seed);
    return scene;
}

// Numbers in CSV output carry 6 significant digits.
inline std::string fmt_sig6(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0.0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

namespace detail {

inline json complex_matrix_to_json(const CMatrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            row.push_back(json::array({m(i, j).real(), m(i, j).imag()}));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline CMatrix complex_matrix_from_json(const json& rows) {
    const auto n = rows.size();
    if (n == 0) return CMatrix(0, 0);
    const auto m = rows.at(0).size();
    CMatrix out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < n; ++i) {
        const json& row = rows.at(i);
        if (row.size() != m) throw data_error("ragged complex matrix in json");
        for (std::size_t j = 0; j < m; ++j)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                Complex(row.at(j).at(0).get<double>(), row.at(j).at(1).get<double>());
    }
    return out;
}

inline json snr_to_json(double snr_db) {
    if (std::isinf(snr_db) && snr_db > 0.0) return "inf";
    return snr_db;
}

inline double snr_from_json(const json& j) {
    if (j.is_string()) {
        if (j.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
        throw data_error("snr_db string must be \"inf\"");
    }
    return j.get<double>();
}

inline json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

inline Vec3 vec3_from_json(const json& j) {
    return Vec3(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>());
}

}  // namespace detail

inline json grid_config_to_json(const GridConfig& g) {
    return json{{"x_range", json::array({g.x_min, g.x_max})},
                {"y_range", json::array({g.y_min, g.y_max})},
                {"spacing", g.spacing},
                {"z", g.z},
                {"receiver", detail::vec3_to_json(g.receiver)}};
}

inline GridConfig grid_config_from_json(const json& j) {
    GridConfig g;
    g.x_min = j.at("x_range").at(0).get<double>();
    g.x_max = j.at("x_range").at(1).get<double>();
    g.y_min = j.at("y_range").at(0).get<double>();
    g.y_max = j.at("y_range").at(1).get<double>();
    g.spacing = j.at("spacing").get<double>();
    g.z = j.at("z").get<double>();
    g.receiver = detail::vec3_from_json(j.at("receiver"));
    return g;
}

inline json channel_config_to_json(const ChannelConfig& c) {
    return json{{"f0_hz", c.f0_hz},
                {"subcarriers", c.subcarriers},
                {"scs_hz", c.scs_hz},
                {"path_loss_exponent", c.path_loss_exponent},
                {"scatterer_count", c.scatterer_count},
                {"scatterer_region",
                 json{{"min", detail::vec3_to_json(c.scatterer_region.min)},
                      {"max", detail::vec3_to_json(c.scatterer_region.max)}}},
                {"shadowing_sigma_db", c.shadowing_sigma_db},
                {"shadowing_corr_distance_m", c.shadowing_corr_distance_m},
                {"seed", c.seed}};
}

inline ChannelConfig channel_config_from_json(const json& j) {
    ChannelConfig c;
    c.f0_hz = j.at("f0_hz").get<double>();
    c.subcarriers = j.at("subcarriers").get<int>();
    c.scs_hz = j.at("scs_hz").get<double>();
    c.path_loss_exponent = j.at("path_loss_exponent").get<double>();
    c.scatterer_count = j.at("scatterer_count").get<int>();
    c.scatterer_region.min = detail::vec3_from_json(j.at("scatterer_region").at("min"));
    c.scatterer_region.max = detail::vec3_from_json(j.at("scatterer_region").at("max"));
    c.shadowing_sigma_db = j.at("shadowing_sigma_db").get<double>();
    c.shadowing_corr_distance_m = j.at("shadowing_corr_distance_m").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

inline json scene_to_json(const Scene& s) {
    return json{{"schema", "csikit.scene.v1"},
                {"grid", grid_config_to_json(s.grid_config)},
                {"channel", channel_config_to_json(s.channel)},
                {"snr_db", detail::snr_to_json(s.csi.snr_db)},
                {"noise_variance", s.csi.noise_variance},
                {"true_csi", detail::complex_matrix_to_json(s.csi.true_csi)},
                {"observed",
                 json{{"a", detail::complex_matrix_to_json(s.csi.observed_a)},
                      {"b", detail::complex_matrix_to_json(s.csi.observed_b)}}}};
}

inline Scene scene_from_json(const json& j) {
    try {
        if (j.at("schema").get<std::string>() != "csikit.scene.v1")
            throw data_error("unsupported scene schema");
        Scene s;
        s.grid_config = grid_config_from_json(j.at("grid"));
        s.channel = channel_config_from_json(j.at("channel"));
        s.csi.snr_db = detail::snr_from_json(j.at("snr_db"));
        s.csi.noise_variance = j.at("noise_variance").get<double>();
        s.csi.true_csi = detail::complex_matrix_from_json(j.at("true_csi"));
        s.csi.observed_a = detail::complex_matrix_from_json(j.at("observed").at("a"));
        s.csi.observed_b = detail::complex_matrix_from_json(j.at("observed").at("b"));
        return s;
    } catch (const json::exception& e) {
        throw data_error(std::string("malformed scene json: ") + e.what());
    }
}

inline json decomposition_to_json(const Decomposition& dec, const PcaModel& model,
                                  const std::string& user) {
    json mean = json::array();
    for (Eigen::Index i = 0; i < model.mean.size(); ++i)
        mean.push_back(json::array({model.mean(i).real(), model.mean(i).imag()}));
    json evals = json::array();
    for (Eigen::Index i = 0; i < model.eigenvalues.size(); ++i)
        evals.push_back(model.eigenvalues(i));
    return json{{"schema", "csikit.decomposition.v1"},
                {"user", user},
                {"d_hat", dec.d_hat},
                {"mean", std::move(mean)},
                {"eigenvalues", std::move(evals)},
                {"scores", detail::complex_matrix_to_json(dec.scores)},
                {"predictable", detail::complex_matrix_to_json(dec.predictable)},
                {"residual", detail::complex_matrix_to_json(dec.residual)}};
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open for writing: " + path);
    out << text;
    if (!out) throw io_error("write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void save_json(const json& j, const std::string& path) {
    write_text_file(path, j.dump(2) + "\n");
}

inline json load_json(const std::string& path) {
    try {
        return json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw data_error("json parse error in " + path + ": " + e.what());
    }
}

// One dHSIC result row; location_index is -1 for whole-matrix tests.
struct DhsicRow {
    double snr_db;
    double scs_hz;
    int d_hat;
    std::string test_kind;  // "neighborhood" or "subcarrier"
    long location_index;
    double statistic;
    double critical_value;
    double alpha;
    int B;
    bool reject;
};

inline std::string corr_pairs_csv(const CorrReport& report) {
    std::ostringstream out;
    out << "snr_db,scs_hz,d_hat,n1,n2,rho\n";
    for (const auto& p : report.per_pair)
        out << fmt_sig6(report.snr_db) << ',' << fmt_sig6(report.scs_hz) << ','
            << report.d_hat << ',' << p.n1 << ',' << p.n2 << ',' << fmt_sig6(p.rho) << '\n';
    return out.str();
}

inline std::string corr_summary_csv(const std::vector<CorrReport>& reports) {
    std::ostringstream out;
    out << "snr_db,scs_hz,d_hat,mean_abs_rho\n";
    for (const auto& r : reports)
        out << fmt_sig6(r.snr_db) << ',' << fmt_sig6(r.scs_hz) << ',' << r.d_hat << ','
            << fmt_sig6(r.mean_abs_rho) << '\n';
    return out.str();
}

inline std::string dhsic_csv(const std::vector<DhsicRow>& rows) {
    std::ostringstream out;
    out << "snr_db,scs_hz,d_hat,test_kind,location_index,statistic,critical_value,alpha,B,"
           "reject\n";
    for (const auto& r : rows)
        out << fmt_sig6(r.snr_db) << ',' << fmt_sig6(r.scs_hz) << ',' << r.d_hat << ','
            << r.test_kind << ',' << r.location_index << ',' << fmt_sig6(r.statistic) << ','
            << fmt_sig6(r.critical_value) << ',' << fmt_sig6(r.alpha) << ',' << r.B << ','
            << (r.reject ? 1 : 0) << '\n';
    return out.str();
}

inline std::string explained_variance_csv(const PcaModel& model) {
    const RVector ratio = explained_variance_ratio(model);
    std::ostringstream out;
    out << "component,eigenvalue,explained_variance_ratio\n";
    for (Eigen::Index i = 0; i < model.eigenvalues.size(); ++i)
        out << i << ',' << fmt_sig6(model.eigenvalues(i)) << ',' << fmt_sig6(ratio(i)) << '\n';
    return out.str();
}

}  // namespace csikit
