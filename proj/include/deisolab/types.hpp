#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "deisolab/error.hpp"

namespace deisolab {

using ComponentId = std::int32_t;

/// One Gaussian model component standing in for a spectral peak.
struct PeakComponent {
    ComponentId id = 0;
    double mu = 0.0;    // m/z location [Da]
    double sigma = 0.0; // shape parameter [Da]
    double area = 0.0;  // abundance scale, arbitrary units

    bool operator==(const PeakComponent&) const = default;
};

struct Pixel {
    std::int32_t x = 0;
    std::int32_t y = 0;

    bool operator==(const Pixel&) const = default;
};

/// Raster of measured pixels. Tissue outlines are irregular, so the pixel
/// list may cover only part of width*height. Pixel index == position in `pixels`.
class PixelGrid {
public:
    PixelGrid() = default;

    PixelGrid(std::int32_t width, std::int32_t height, std::vector<Pixel> pixels)
        : width_(width), height_(height), pixels_(std::move(pixels)) {
        if (width_ <= 0 || height_ <= 0) {
            throw DataError("pixel grid: width and height must be positive");
        }
        if (pixels_.size() > static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_)) {
            throw DataError("pixel grid: more pixels than width*height");
        }
        lookup_.assign(static_cast<std::size_t>(width_) * height_, -1);
        for (std::size_t i = 0; i < pixels_.size(); ++i) {
            const auto& p = pixels_[i];
            if (p.x < 0 || p.x >= width_ || p.y < 0 || p.y >= height_) {
                throw DataError("pixel grid: pixel " + std::to_string(i) + " lies outside the raster");
            }
            auto& slot = lookup_[raster_offset(p.x, p.y)];
            if (slot >= 0) {
                throw DataError("pixel grid: duplicate pixel (" + std::to_string(p.x) + "," +
                                std::to_string(p.y) + ")");
            }
            slot = static_cast<std::int32_t>(i);
        }
    }

    /// Full rectangular raster in row-major order.
    static PixelGrid full(std::int32_t width, std::int32_t height) {
        std::vector<Pixel> px;
        px.reserve(static_cast<std::size_t>(width) * height);
        for (std::int32_t y = 0; y < height; ++y) {
            for (std::int32_t x = 0; x < width; ++x) {
                px.push_back({x, y});
            }
        }
        return PixelGrid(width, height, std::move(px));
    }

    std::int32_t width() const noexcept { return width_; }
    std::int32_t height() const noexcept { return height_; }
    std::size_t size() const noexcept { return pixels_.size(); }
    const std::vector<Pixel>& pixels() const noexcept { return pixels_; }

    /// Pixel index at raster position, or -1 for a gap.
    std::int32_t index_at(std::int32_t x, std::int32_t y) const noexcept {
        return lookup_[raster_offset(x, y)];
    }

    std::size_t raster_offset(std::int32_t x, std::int32_t y) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    bool operator==(const PixelGrid& o) const {
        return width_ == o.width_ && height_ == o.height_ && pixels_ == o.pixels_;
    }

private:
    std::int32_t width_ = 0;
    std::int32_t height_ = 0;
    std::vector<Pixel> pixels_;
    std::vector<std::int32_t> lookup_;
};

/// Per-pixel abundance of every component. Logically rows = pixels and
/// cols = components; stored component-major so one ion image is contiguous.
class AbundanceMatrix {
public:
    AbundanceMatrix() = default;
    AbundanceMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0f) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    float at(std::size_t pixel, std::size_t component) const noexcept { return data_[component * rows_ + pixel]; }
    float& at(std::size_t pixel, std::size_t component) noexcept { return data_[component * rows_ + pixel]; }

    /// Contiguous abundance of one component over all pixels.
    const float* column(std::size_t component) const noexcept { return data_.data() + component * rows_; }
    float* column(std::size_t component) noexcept { return data_.data() + component * rows_; }

    /// Throws DataError on any negative or non-finite entry.
    void validate() const {
        for (std::size_t c = 0; c < cols_; ++c) {
            const float* col = column(c);
            for (std::size_t p = 0; p < rows_; ++p) {
                if (!std::isfinite(col[p]) || col[p] < 0.0f) {
                    throw DataError("abundance: entry (" + std::to_string(p) + "," + std::to_string(c) +
                                    ") is negative or non-finite");
                }
            }
        }
    }

    bool operator==(const AbundanceMatrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<float> data_;
};

/// Expert envelope: component ids ordered as annotated (ascending mu by convention).
using Envelope = std::vector<ComponentId>;

struct Dataset {
    std::vector<PeakComponent> components; // strictly increasing mu, id == index
    PixelGrid grid;
    AbundanceMatrix abundance;
    std::optional<std::vector<Envelope>> annotations;

    std::size_t component_count() const noexcept { return components.size(); }

    /// Checks every cross-structure invariant; throws DataError.
    void validate() const {
        for (std::size_t i = 0; i < components.size(); ++i) {
            const auto& c = components[i];
            if (c.id != static_cast<ComponentId>(i)) {
                throw DataError("dataset: component ids must be dense 0..N-1 in mu order");
            }
            if (!(c.mu > 0.0) || !std::isfinite(c.mu)) throw DataError("dataset: component mu must be positive");
            if (!(c.sigma > 0.0) || !std::isfinite(c.sigma)) throw DataError("dataset: component sigma must be positive");
            if (!(c.area >= 0.0) || !std::isfinite(c.area)) throw DataError("dataset: component area must be >= 0");
            if (i > 0 && !(components[i - 1].mu < c.mu)) {
                throw DataError("dataset: duplicate or unsorted mu at component " + std::to_string(i));
            }
        }
        if (abundance.rows() != grid.size()) {
            throw DataError("dataset: abundance has " + std::to_string(abundance.rows()) + " rows but grid has " +
                            std::to_string(grid.size()) + " pixels");
        }
        if (abundance.cols() != components.size()) {
            throw DataError("dataset: abundance has " + std::to_string(abundance.cols()) + " columns but " +
                            std::to_string(components.size()) + " components");
        }
        abundance.validate();
        if (annotations) {
            for (const auto& env : *annotations) {
                if (env.size() < 2) throw DataError("dataset: annotated envelope shorter than 2");
                for (auto id : env) {
                    if (id < 0 || static_cast<std::size_t>(id) >= components.size()) {
                        throw DataError("dataset: annotation references unknown component " + std::to_string(id));
                    }
                }
            }
        }
    }

    bool operator==(const Dataset&) const = default;
};

enum class PairLabel : std::uint8_t { NonEnvelope = 0, Envelope = 1 };

inline std::string_view to_string(PairLabel l) noexcept { return l == PairLabel::Envelope ? "E" : "nE"; }

inline PairLabel parse_label(std::string_view s) {
    if (s == "E" || s == "Envelope" || s == "1") return PairLabel::Envelope;
    if (s == "nE" || s == "NonEnvelope" || s == "0") return PairLabel::NonEnvelope;
    throw DataError("unknown pair label '" + std::string(s) + "'");
}

/// Unordered-by-construction pair key; always stored with first < second.
using PairKey = std::pair<ComponentId, ComponentId>;

} // namespace deisolab
