#include "cevo/imaging.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <random>
#include <stdexcept>

#include "cevo/errors.hpp"

namespace cevo::imaging {

GrayImage::GrayImage(int width, int height, std::uint8_t fill) {
    if (width <= 0 || height <= 0) throw ConfigError("image dimensions must be positive");
    width_ = width;
    height_ = height;
    pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

GrayImage::GrayImage(int width, int height, std::vector<std::uint8_t> pixels) {
    if (width <= 0 || height <= 0) throw ConfigError("image dimensions must be positive");
    if (pixels.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw ConfigError("pixel count does not match image dimensions");
    }
    width_ = width;
    height_ = height;
    pixels_ = std::move(pixels);
}

LossMask::LossMask(int grid_width, int grid_height, int block_size) {
    if (grid_width <= 0 || grid_height <= 0 || block_size <= 0) throw ConfigError("loss mask dimensions must be positive");
    grid_width_ = grid_width;
    grid_height_ = grid_height;
    block_size_ = block_size;
    lost_.assign(static_cast<std::size_t>(grid_width) * static_cast<std::size_t>(grid_height), 0);
}

std::size_t LossMask::lost_count() const noexcept {
    return static_cast<std::size_t>(std::count(lost_.begin(), lost_.end(), std::uint8_t{1}));
}

bool LossMask::matches(const GrayImage& image) const noexcept {
    return block_size_ > 0 && grid_width_ * block_size_ == image.width() && grid_height_ * block_size_ == image.height();
}

MeritMap::MeritMap(int width, int height, double fill)
    : width_(width), height_(height), merits_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {}

MeritMap MeritMap::from_mask(const LossMask& mask) {
    const int b = mask.block_size();
    MeritMap m(mask.grid_width() * b, mask.grid_height() * b, 1.0);
    for (int by = 0; by < mask.grid_height(); ++by) {
        for (int bx = 0; bx < mask.grid_width(); ++bx) {
            if (!mask.lost(bx, by)) continue;
            for (int y = by * b; y < (by + 1) * b; ++y) {
                for (int x = bx * b; x < (bx + 1) * b; ++x) m.at(x, y) = 0.0;
            }
        }
    }
    return m;
}

std::size_t MeritMap::zero_count() const noexcept {
    return static_cast<std::size_t>(std::count(merits_.begin(), merits_.end(), 0.0));
}

namespace {

class PgmCursor {
public:
    PgmCursor(std::string_view bytes, std::size_t start) : bytes_(bytes), pos_(start) {}

    std::size_t offset() const noexcept { return pos_; }
    bool at_end() const noexcept { return pos_ >= bytes_.size(); }

    void skip_whitespace_and_comments() {
        while (pos_ < bytes_.size()) {
            const auto c = static_cast<unsigned char>(bytes_[pos_]);
            if (std::isspace(c)) {
                ++pos_;
            } else if (c == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
            } else {
                break;
            }
        }
    }

    long read_uint(const char* what) {
        skip_whitespace_and_comments();
        const std::size_t start = pos_;
        long value = 0;
        while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
            value = value * 10 + (bytes_[pos_] - '0');
            if (value > std::numeric_limits<int>::max()) throw ParseError(std::string(what) + " is too large", start);
            ++pos_;
        }
        if (pos_ == start) {
            throw ParseError(at_end() ? std::string("unexpected end of data reading ") + what
                                      : std::string("expected a decimal integer for ") + what,
                             start);
        }
        return value;
    }

    void expect_single_whitespace() {
        if (at_end() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
            throw ParseError("expected whitespace after header", pos_);
        }
        ++pos_;
    }

    std::string_view rest() const noexcept { return bytes_.substr(std::min(pos_, bytes_.size())); }

private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

GrayImage read_pgm(std::string_view bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '2')) {
        throw ParseError("not a PGM file (expected magic P5 or P2)", 0);
    }
    const bool binary = bytes[1] == '5';
    PgmCursor header(bytes, 2);
    const long width = header.read_uint("width");
    const long height = header.read_uint("height");
    header.skip_whitespace_and_comments();
    const std::size_t maxval_offset = header.offset();
    const long maxval = header.read_uint("maxval");
    if (width <= 0 || height <= 0) throw ParseError("image dimensions must be positive", 2);
    if (maxval <= 0 || maxval > 255) {
        throw ParseError("unsupported maxval " + std::to_string(maxval) + " (must be 1..255)", maxval_offset);
    }

    const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    std::vector<std::uint8_t> pixels(count);
    if (binary) {
        header.expect_single_whitespace();
        const std::size_t data_offset = header.offset();
        const auto data = header.rest();
        if (data.size() < count) {
            throw ParseError("truncated payload: expected " + std::to_string(count) + " bytes, found " +
                                 std::to_string(data.size()),
                             data_offset + data.size());
        }
        for (std::size_t i = 0; i < count; ++i) {
            pixels[i] = static_cast<std::uint8_t>(data[i]);
            if (pixels[i] > maxval) throw ParseError("pixel value exceeds maxval", data_offset + i);
        }
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            header.skip_whitespace_and_comments();
            const std::size_t at = header.offset();
            const long v = header.read_uint("pixel value");
            if (v > maxval) throw ParseError("pixel value exceeds maxval", at);
            pixels[i] = static_cast<std::uint8_t>(v);
        }
    }
    return GrayImage(static_cast<int>(width), static_cast<int>(height), std::move(pixels));
}

std::string write_pgm(const GrayImage& image) {
    std::string out = "P5\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n255\n";
    out.append(reinterpret_cast<const char*>(image.pixels().data()), image.pixels().size());
    return out;
}

GrayImage load_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return read_pgm(bytes);
}

void save_pgm(const std::filesystem::path& path, const GrayImage& image) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    const auto bytes = write_pgm(image);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::pair<GrayImage, LossMask> corrupt(const GrayImage& image, double loss_ratio, int block_size, std::uint64_t seed) {
    if (!(loss_ratio >= 0.0 && loss_ratio <= 1.0)) throw ConfigError("loss ratio must lie in [0, 1]");
    if (block_size <= 0) throw ConfigError("block size must be positive");
    if (image.width() % block_size != 0 || image.height() % block_size != 0) {
        throw ConfigError("image dimensions " + std::to_string(image.width()) + "x" + std::to_string(image.height()) +
                          " are not multiples of the block size " + std::to_string(block_size));
    }
    LossMask mask(image.width() / block_size, image.height() / block_size, block_size);
    GrayImage out = image;
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution lose(loss_ratio);
    for (int by = 0; by < mask.grid_height(); ++by) {
        for (int bx = 0; bx < mask.grid_width(); ++bx) {
            if (!lose(rng)) continue;
            mask.set_lost(bx, by, true);
            for (int y = by * block_size; y < (by + 1) * block_size; ++y) {
                for (int x = bx * block_size; x < (bx + 1) * block_size; ++x) out.at(x, y) = 0;
            }
        }
    }
    return {std::move(out), std::move(mask)};
}

double mse(const GrayImage& a, const GrayImage& b) {
    if (a.width() != b.width() || a.height() != b.height()) throw ConfigError("mse: image dimensions differ");
    if (a.size() == 0) return 0.0;
    std::uint64_t sum = 0;
    const auto& pa = a.pixels();
    const auto& pb = b.pixels();
    for (std::size_t i = 0; i < pa.size(); ++i) {
        const int d = int{pa[i]} - int{pb[i]};
        sum += static_cast<std::uint64_t>(d * d);
    }
    return static_cast<double>(sum) / static_cast<double>(pa.size());
}

double psnr(const GrayImage& a, const GrayImage& b) {
    const double err = mse(a, b);
    if (err == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(255.0 * 255.0 / err);
}

}  // namespace cevo::imaging
