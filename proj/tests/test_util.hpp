#pragma once

#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "deisolab/deisolab.hpp"

namespace testutil {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("deisolab_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::string str(const std::string& child = {}) const { return child.empty() ? path_.string() : (path_ / child).string(); }

private:
    std::filesystem::path path_;
};

inline deisolab::IonImage image_from(int w, int h, const std::vector<double>& v) {
    deisolab::IonImage img(w, h);
    img.values = v;
    return img;
}

/// Dataset with the given abundance columns on a full w x h raster.
inline deisolab::Dataset dataset_from_columns(int w, int h, const std::vector<std::vector<float>>& cols,
                                              const std::vector<double>& mus, double sigma = 0.08) {
    deisolab::Dataset ds;
    ds.grid = deisolab::PixelGrid::full(w, h);
    ds.abundance = deisolab::AbundanceMatrix(static_cast<std::size_t>(w) * h, cols.size());
    for (std::size_t c = 0; c < cols.size(); ++c) {
        ds.components.push_back({static_cast<deisolab::ComponentId>(c), mus[c], sigma, 1.0});
        for (std::size_t p = 0; p < cols[c].size(); ++p) ds.abundance.at(p, c) = cols[c][p];
    }
    ds.validate();
    return ds;
}

} // namespace testutil
