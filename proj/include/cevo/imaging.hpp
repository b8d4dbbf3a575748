#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cevo::imaging {

/// 8-bit grayscale image, row-major.
class GrayImage {
public:
    GrayImage() = default;
    GrayImage(int width, int height, std::uint8_t fill = 0);
    GrayImage(int width, int height, std::vector<std::uint8_t> pixels);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return pixels_.size(); }

    std::uint8_t at(int x, int y) const { return pixels_[index(x, y)]; }
    std::uint8_t& at(int x, int y) { return pixels_[index(x, y)]; }

    const std::vector<std::uint8_t>& pixels() const noexcept { return pixels_; }
    std::vector<std::uint8_t>& pixels() noexcept { return pixels_; }

    bool operator==(const GrayImage&) const = default;

private:
    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> pixels_;
};

/// One flag per B x B block; true = lost.
class LossMask {
public:
    LossMask() = default;
    LossMask(int grid_width, int grid_height, int block_size);

    int grid_width() const noexcept { return grid_width_; }
    int grid_height() const noexcept { return grid_height_; }
    int block_size() const noexcept { return block_size_; }

    bool lost(int bx, int by) const { return lost_[index(bx, by)] != 0; }
    void set_lost(int bx, int by, bool value) { lost_[index(bx, by)] = value ? 1 : 0; }

    std::size_t lost_count() const noexcept;
    std::size_t block_count() const noexcept { return lost_.size(); }

    /// True when the grid tiles an image of this size exactly.
    bool matches(const GrayImage& image) const noexcept;

    bool operator==(const LossMask&) const = default;

private:
    std::size_t index(int bx, int by) const noexcept {
        return static_cast<std::size_t>(by) * static_cast<std::size_t>(grid_width_) + static_cast<std::size_t>(bx);
    }

    int grid_width_ = 0;
    int grid_height_ = 0;
    int block_size_ = 0;
    std::vector<std::uint8_t> lost_;
};

/// Per-pixel reliability in [0, 1].
class MeritMap {
public:
    MeritMap() = default;
    MeritMap(int width, int height, double fill);

    /// 1 on pixels of intact blocks, 0 on pixels of lost blocks.
    static MeritMap from_mask(const LossMask& mask);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    double at(int x, int y) const { return merits_[index(x, y)]; }
    double& at(int x, int y) { return merits_[index(x, y)]; }
    const std::vector<double>& values() const noexcept { return merits_; }

    std::size_t zero_count() const noexcept;

private:
    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<double> merits_;
};

/// Parses binary (P5) or ASCII (P2) PGM with maxval <= 255. Pixel values are
/// kept as stored. Throws ParseError carrying the offending byte offset.
GrayImage read_pgm(std::string_view bytes);

/// Canonical P5: "P5\n<w> <h>\n255\n" followed by the raw rows.
std::string write_pgm(const GrayImage& image);

GrayImage load_pgm(const std::filesystem::path& path);
void save_pgm(const std::filesystem::path& path, const GrayImage& image);

/// Independent Bernoulli(loss_ratio) loss per block, drawn in raster order.
/// Pixels of lost blocks are zeroed.
std::pair<GrayImage, LossMask> corrupt(const GrayImage& image, double loss_ratio, int block_size, std::uint64_t seed);

double mse(const GrayImage& a, const GrayImage& b);

/// 10 log10(255^2 / mse); +infinity when the images are identical.
double psnr(const GrayImage& a, const GrayImage& b);

}  // namespace cevo::imaging
