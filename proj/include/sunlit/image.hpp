#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace sunlit {

/// Single-channel image, row-major, values nominally in [0, 1].
class Image {
public:
    Image() = default;
    Image(int width, int height, double fill = 0.0);
    Image(int width, int height, Eigen::VectorXd pixels);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    Eigen::Index size() const noexcept { return pixels_.size(); }

    double& operator()(int x, int y) { return pixels_[static_cast<Eigen::Index>(y) * width_ + x]; }
    double operator()(int x, int y) const { return pixels_[static_cast<Eigen::Index>(y) * width_ + x]; }

    const Eigen::VectorXd& pixels() const noexcept { return pixels_; }
    Eigen::VectorXd& pixels() noexcept { return pixels_; }

    double mean() const { return pixels_.mean(); }
    Image mirrored() const;
    void clamp(double lo = 0.0, double hi = 1.0);

    friend bool operator==(const Image& a, const Image& b) {
        return a.width_ == b.width_ && a.height_ == b.height_ && a.pixels_ == b.pixels_;
    }

private:
    int width_ = 0;
    int height_ = 0;
    Eigen::VectorXd pixels_;
};

/// Images as columns of a (pixels x count) matrix.
Eigen::MatrixXd stack_columns(std::span<const Image> images);
std::vector<Image> unstack_columns(const Eigen::MatrixXd& batch, int width, int height);

namespace io {

/// 8-bit binary PGM (P5); values are clamped to [0, 1] and rounded.
void write_pgm(const std::filesystem::path& path, const Image& img);
Image read_pgm(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const Image& img);

/// Tiles images into a grid with `columns` columns and a 1 px separator.
Image contact_sheet(std::span<const Image> images, int columns);

/// Batch blob: 8-byte little-endian header length, JSON header
/// {"format":"sunlit-f32","version":1,"shape":[n,h,w]}, then row-major
/// little-endian float32 pixels.
void write_batch_f32(const std::filesystem::path& path, std::span<const Image> images);
std::vector<Image> read_batch_f32(const std::filesystem::path& path);

} // namespace io
} // namespace sunlit
