#pragma once

// Dataset interchange: JSON manifest, CSV tables, and the binary abundance
// block described in docs/file_formats.md.

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "deisolab/text.hpp"
#include "deisolab/types.hpp"
#include "deisolab/version.hpp"

namespace deisolab {

namespace fs = std::filesystem;

enum class MatrixFormat { Binary, Csv };

inline constexpr std::array<char, 8> kMatrixMagic = {'D', 'L', 'A', 'B', 'M', 'A', 'T', '\0'};
inline constexpr std::uint32_t kMatrixDtypeFloat32 = 1;

struct LoadedDataset {
    Dataset dataset;
    /// id_remap[new_id] == id used in the component file.
    std::vector<std::int64_t> id_remap;
};

namespace detail {

template <class T>
void write_le(std::ostream& out, T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    if constexpr (std::endian::native == std::endian::big) {
        auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(v);
        std::reverse(bytes.begin(), bytes.end());
        out.write(bytes.data(), sizeof(T));
    } else {
        out.write(reinterpret_cast<const char*>(&v), sizeof(T));
    }
}

template <class T>
T read_le(std::istream& in) {
    std::array<char, sizeof(T)> bytes{};
    in.read(bytes.data(), sizeof(T));
    if (!in) throw DataError("binary matrix: unexpected end of file");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
}

inline std::string resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return (path.is_absolute() ? path : base / path).string();
}

struct ComponentRow {
    std::int64_t file_id;
    double mu, sigma, area;
};

inline std::vector<ComponentRow> read_component_table(const std::string& path) {
    auto lines = text::read_lines(path);
    if (lines.empty()) throw DataError(path + ": empty component table");
    auto header = text::split(lines.front());
    if (header.size() != 4 || header[0] != "id" || header[1] != "mu" || header[2] != "sigma" || header[3] != "area") {
        throw DataError(path + ": expected header 'id,mu,sigma,area'");
    }
    std::vector<ComponentRow> rows;
    rows.reserve(lines.size() - 1);
    for (std::size_t k = 1; k < lines.size(); ++k) {
        auto f = text::split(lines[k]);
        if (f.size() != 4) throw DataError(path + ": line " + std::to_string(k + 1) + " must have 4 fields");
        ComponentRow r{text::parse_int(f[0], "component id"), text::parse_double(f[1], "mu"),
                       text::parse_double(f[2], "sigma"), text::parse_double(f[3], "area")};
        if (!std::isfinite(r.mu) || r.mu <= 0.0) throw DataError(path + ": mu must be positive and finite");
        if (!std::isfinite(r.sigma) || r.sigma <= 0.0) throw DataError(path + ": sigma must be positive and finite");
        if (!std::isfinite(r.area) || r.area < 0.0) throw DataError(path + ": area must be non-negative and finite");
        rows.push_back(r);
    }
    return rows;
}

inline PixelGrid read_grid(const std::string& path) {
    auto lines = text::read_lines(path, /*keep_comments=*/true);
    if (lines.empty()) throw DataError(path + ": empty grid file");
    int width = -1, height = -1;
    std::size_t k = 0;
    for (; k < lines.size() && lines[k].front() == '#'; ++k) {
        std::istringstream ss(lines[k].substr(1));
        std::string tok;
        while (ss >> tok) {
            if (tok.rfind("width=", 0) == 0) width = static_cast<int>(text::parse_int(tok.substr(6), "grid width"));
            if (tok.rfind("height=", 0) == 0) height = static_cast<int>(text::parse_int(tok.substr(7), "grid height"));
        }
    }
    if (width <= 0 || height <= 0) throw DataError(path + ": missing '# grid width=W height=H' preamble");
    if (k >= lines.size() || lines[k] != "index,x,y") throw DataError(path + ": expected header 'index,x,y'");
    ++k;
    std::vector<Pixel> pixels;
    pixels.reserve(lines.size() - k);
    for (; k < lines.size(); ++k) {
        auto f = text::split(lines[k]);
        if (f.size() != 3) throw DataError(path + ": grid rows must have 3 fields");
        auto idx = text::parse_int(f[0], "pixel index");
        if (idx != static_cast<std::int64_t>(pixels.size())) {
            throw DataError(path + ": pixel indices must be dense and ascending from 0");
        }
        pixels.push_back({static_cast<std::int32_t>(text::parse_int(f[1], "pixel x")),
                          static_cast<std::int32_t>(text::parse_int(f[2], "pixel y"))});
    }
    return PixelGrid(width, height, std::move(pixels));
}

/// Reads a row-major (pixel rows) matrix; `column_of[file_col]` places each file column.
inline AbundanceMatrix read_matrix_binary(const std::string& path, std::size_t expect_rows, std::size_t expect_cols,
                                          const std::vector<std::size_t>& column_of) {
    auto in = text::open_in(path, std::ios::in | std::ios::binary);
    std::array<char, 8> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != kMatrixMagic) throw DataError(path + ": bad magic, not a DLABMAT file");
    auto version = read_le<std::uint32_t>(in);
    auto dtype = read_le<std::uint32_t>(in);
    if (version != 1) throw DataError(path + ": unsupported matrix version " + std::to_string(version));
    if (dtype != kMatrixDtypeFloat32) throw DataError(path + ": unsupported dtype " + std::to_string(dtype));
    auto rows = read_le<std::uint64_t>(in);
    auto cols = read_le<std::uint64_t>(in);
    if (rows != expect_rows || cols != expect_cols) {
        throw DataError(path + ": matrix is " + std::to_string(rows) + "x" + std::to_string(cols) + ", expected " +
                        std::to_string(expect_rows) + "x" + std::to_string(expect_cols) +
                        " (pixels x components)");
    }
    AbundanceMatrix m(rows, cols);
    std::vector<char> buf(cols * sizeof(float));
    for (std::size_t r = 0; r < rows; ++r) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (!in) throw DataError(path + ": truncated matrix data");
        for (std::size_t c = 0; c < cols; ++c) {
            std::array<char, 4> b{};
            std::memcpy(b.data(), buf.data() + c * 4, 4);
            if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
            m.at(r, column_of[c]) = std::bit_cast<float>(b);
        }
    }
    if (in.peek() != std::char_traits<char>::eof()) throw DataError(path + ": trailing bytes after matrix data");
    return m;
}

inline AbundanceMatrix read_matrix_csv(const std::string& path, std::size_t expect_rows, std::size_t expect_cols,
                                       const std::vector<std::size_t>& column_of) {
    auto lines = text::read_lines(path);
    if (lines.size() != expect_rows) {
        throw DataError(path + ": matrix has " + std::to_string(lines.size()) + " rows, expected " +
                        std::to_string(expect_rows) + " (one per grid pixel)");
    }
    AbundanceMatrix m(expect_rows, expect_cols);
    for (std::size_t r = 0; r < lines.size(); ++r) {
        auto f = text::split(lines[r]);
        if (f.size() != expect_cols) {
            throw DataError(path + ": row " + std::to_string(r) + " has " + std::to_string(f.size()) +
                            " columns, expected " + std::to_string(expect_cols));
        }
        for (std::size_t c = 0; c < f.size(); ++c) {
            m.at(r, column_of[c]) = static_cast<float>(text::parse_double(f[c], "abundance"));
        }
    }
    return m;
}

inline std::vector<Envelope> read_annotations(const std::string& path,
                                              const std::unordered_map<std::int64_t, ComponentId>& id_of) {
    auto lines = text::read_lines(path);
    if (lines.empty() || lines.front() != "envelope,members") {
        throw DataError(path + ": expected header 'envelope,members'");
    }
    std::vector<Envelope> envs;
    for (std::size_t k = 1; k < lines.size(); ++k) {
        auto f = text::split(lines[k]);
        if (f.size() != 2) throw DataError(path + ": annotation rows must be 'envelope,members'");
        Envelope env;
        for (auto tok : text::split(f[1], ';')) {
            auto fid = text::parse_int(tok, "annotation member");
            auto it = id_of.find(fid);
            if (it == id_of.end()) throw DataError(path + ": annotation references unknown component " + std::string(tok));
            env.push_back(it->second);
        }
        if (env.size() < 2) throw DataError(path + ": envelope " + std::string(f[0]) + " has fewer than 2 members");
        envs.push_back(std::move(env));
    }
    return envs;
}

} // namespace detail

/// Loads and validates a dataset. Components are re-sorted ascending by mu
/// and renumbered 0..N-1; the original ids are returned in `id_remap`.
inline LoadedDataset load_dataset(const std::string& manifest_path) {
    nlohmann::json manifest;
    {
        auto in = text::open_in(manifest_path);
        try {
            in >> manifest;
        } catch (const nlohmann::json::exception& e) {
            throw DataError(manifest_path + ": invalid JSON: " + e.what());
        }
    }
    if (!manifest.is_object()) throw DataError(manifest_path + ": manifest must be a JSON object");
    if (manifest.value("format_version", 0) != kFormatVersion) {
        throw DataError(manifest_path + ": unsupported or missing format_version");
    }
    for (const char* key : {"components", "grid", "abundance"}) {
        if (!manifest.contains(key) || !manifest[key].is_string()) {
            throw DataError(manifest_path + ": manifest key '" + std::string(key) + "' must be a path string");
        }
    }
    const fs::path base = fs::path(manifest_path).parent_path();

    auto rows = detail::read_component_table(detail::resolve(base, manifest["components"].get<std::string>()));
    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return rows[a].mu < rows[b].mu; });

    LoadedDataset out;
    auto& ds = out.dataset;
    std::unordered_map<std::int64_t, ComponentId> id_of;
    std::vector<std::size_t> column_of(rows.size());
    ds.components.reserve(rows.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
        const auto& r = rows[order[k]];
        if (k > 0 && r.mu == ds.components.back().mu) {
            throw DataError("components: duplicate mu " + text::format_double(r.mu));
        }
        if (!id_of.emplace(r.file_id, static_cast<ComponentId>(k)).second) {
            throw DataError("components: duplicate id " + std::to_string(r.file_id));
        }
        ds.components.push_back({static_cast<ComponentId>(k), r.mu, r.sigma, r.area});
        out.id_remap.push_back(r.file_id);
        column_of[order[k]] = k;
    }

    ds.grid = detail::read_grid(detail::resolve(base, manifest["grid"].get<std::string>()));

    const auto matrix_path = detail::resolve(base, manifest["abundance"].get<std::string>());
    bool binary = false;
    {
        auto probe = text::open_in(matrix_path, std::ios::in | std::ios::binary);
        std::array<char, 8> magic{};
        probe.read(magic.data(), magic.size());
        binary = probe.gcount() == 8 && magic == kMatrixMagic;
    }
    ds.abundance = binary ? detail::read_matrix_binary(matrix_path, ds.grid.size(), rows.size(), column_of)
                          : detail::read_matrix_csv(matrix_path, ds.grid.size(), rows.size(), column_of);

    if (manifest.contains("annotations") && !manifest["annotations"].is_null()) {
        ds.annotations = detail::read_annotations(
            detail::resolve(base, manifest["annotations"].get<std::string>()), id_of);
    }
    ds.validate();
    return out;
}

inline void write_matrix_binary(const AbundanceMatrix& m, const std::string& path) {
    auto out = text::open_out(path, std::ios::out | std::ios::binary);
    out.write(kMatrixMagic.data(), kMatrixMagic.size());
    detail::write_le<std::uint32_t>(out, 1);
    detail::write_le<std::uint32_t>(out, kMatrixDtypeFloat32);
    detail::write_le<std::uint64_t>(out, m.rows());
    detail::write_le<std::uint64_t>(out, m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) detail::write_le<float>(out, m.at(r, c));
    }
    if (!out) throw DataError(path + ": write failed");
}

inline void write_matrix_csv(const AbundanceMatrix& m, const std::string& path) {
    auto out = text::open_out(path);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            if (c) out << ',';
            out << text::format_float(m.at(r, c));
        }
        out << '\n';
    }
}

/// Writes manifest.json plus its tables into `dir`; returns the manifest path.
inline std::string save_dataset(const Dataset& ds, const std::string& dir, MatrixFormat format = MatrixFormat::Binary) {
    ds.validate();
    fs::create_directories(dir);
    const fs::path base(dir);
    {
        auto out = text::open_out((base / "components.csv").string());
        out << "id,mu,sigma,area\n";
        for (const auto& c : ds.components) {
            out << c.id << ',' << text::format_double(c.mu) << ',' << text::format_double(c.sigma) << ','
                << text::format_double(c.area) << '\n';
        }
    }
    {
        auto out = text::open_out((base / "grid.csv").string());
        out << "# grid width=" << ds.grid.width() << " height=" << ds.grid.height() << "\nindex,x,y\n";
        const auto& px = ds.grid.pixels();
        for (std::size_t i = 0; i < px.size(); ++i) out << i << ',' << px[i].x << ',' << px[i].y << '\n';
    }
    const std::string matrix_name = format == MatrixFormat::Binary ? "abundance.bin" : "abundance.csv";
    if (format == MatrixFormat::Binary) {
        write_matrix_binary(ds.abundance, (base / matrix_name).string());
    } else {
        write_matrix_csv(ds.abundance, (base / matrix_name).string());
    }
    nlohmann::json manifest = {{"components", "components.csv"},
                               {"grid", "grid.csv"},
                               {"abundance", matrix_name},
                               {"annotations", nullptr},
                               {"format_version", kFormatVersion}};
    if (ds.annotations) {
        auto out = text::open_out((base / "annotations.csv").string());
        out << "envelope,members\n";
        for (std::size_t e = 0; e < ds.annotations->size(); ++e) {
            out << e << ',';
            const auto& env = (*ds.annotations)[e];
            for (std::size_t k = 0; k < env.size(); ++k) out << (k ? ";" : "") << env[k];
            out << '\n';
        }
        manifest["annotations"] = "annotations.csv";
    }
    const auto manifest_path = (base / "manifest.json").string();
    auto out = text::open_out(manifest_path);
    out << manifest.dump(2) << '\n';
    return manifest_path;
}

/// Accepts either a manifest file or a directory containing manifest.json.
inline std::string manifest_path_for(const std::string& in) {
    fs::path p(in);
    if (fs::is_directory(p)) return (p / "manifest.json").string();
    return p.string();
}

} // namespace deisolab
