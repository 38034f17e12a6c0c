#include "sunlit/image.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include <json.hpp>
#include <png.h>

#include "sunlit/error.hpp"

namespace sunlit {

Image::Image(int width, int height, double fill)
    : width_(width), height_(height), pixels_(Eigen::VectorXd::Constant(Eigen::Index{width} * height, fill)) {
    if (width <= 0 || height <= 0)
        throw ContractError("image dimensions must be positive");
}

Image::Image(int width, int height, Eigen::VectorXd pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (width <= 0 || height <= 0 || pixels_.size() != Eigen::Index{width} * height)
        throw ContractError("image dimensions do not match pixel count");
}

Image Image::mirrored() const {
    Image out(width_, height_);
    for (int y = 0; y < height_; ++y)
        for (int x = 0; x < width_; ++x)
            out(x, y) = (*this)(width_ - 1 - x, y);
    return out;
}

void Image::clamp(double lo, double hi) { pixels_ = pixels_.cwiseMax(lo).cwiseMin(hi); }

Eigen::MatrixXd stack_columns(std::span<const Image> images) {
    if (images.empty())
        return {};
    Eigen::MatrixXd out(images.front().size(), static_cast<Eigen::Index>(images.size()));
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (images[i].size() != out.rows())
            throw ContractError("images in a batch must share a shape");
        out.col(static_cast<Eigen::Index>(i)) = images[i].pixels();
    }
    return out;
}

std::vector<Image> unstack_columns(const Eigen::MatrixXd& batch, int width, int height) {
    std::vector<Image> out;
    out.reserve(static_cast<std::size_t>(batch.cols()));
    for (Eigen::Index c = 0; c < batch.cols(); ++c)
        out.emplace_back(width, height, Eigen::VectorXd(batch.col(c)));
    return out;
}

namespace io {

namespace {

std::uint8_t to_byte(double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

void put_u64(std::ostream& os, std::uint64_t v) {
    for (int i = 0; i < 8; ++i)
        os.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(std::istream& is) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        const int c = is.get();
        if (c == EOF)
            throw IoError("truncated batch blob");
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
    }
    return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw IoError("cannot open '" + path.string() + "' for writing");
    return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw IoError("cannot open '" + path.string() + "'");
    return is;
}

} // namespace

void write_pgm(const std::filesystem::path& path, const Image& img) {
    auto os = open_out(path);
    os << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
    for (Eigen::Index i = 0; i < img.size(); ++i)
        os.put(static_cast<char>(to_byte(img.pixels()[i])));
    if (!os)
        throw IoError("write failed for '" + path.string() + "'");
}

Image read_pgm(const std::filesystem::path& path) {
    auto is = open_in(path);
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    is >> magic;
    auto skip_comments = [&] {
        is >> std::ws;
        while (is.peek() == '#') {
            std::string line;
            std::getline(is, line);
            is >> std::ws;
        }
    };
    skip_comments();
    is >> w;
    skip_comments();
    is >> h;
    skip_comments();
    is >> maxval;
    is.get();
    if (magic != "P5" || w <= 0 || h <= 0 || maxval != 255)
        throw IoError("'" + path.string() + "' is not an 8-bit P5 PGM");
    Image img(w, h);
    for (Eigen::Index i = 0; i < img.size(); ++i) {
        const int c = is.get();
        if (c == EOF)
            throw IoError("truncated PGM '" + path.string() + "'");
        img.pixels()[i] = static_cast<double>(c) / 255.0;
    }
    return img;
}

void write_png(const std::filesystem::path& path, const Image& img) {
    std::FILE* fp = std::fopen(path.string().c_str(), "wb");
    if (!fp)
        throw IoError("cannot open '" + path.string() + "' for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw IoError("libpng failed writing '" + path.string() + "'");
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()), 8,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_byte> row(static_cast<std::size_t>(img.width()));
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x)
            row[static_cast<std::size_t>(x)] = to_byte(img(x, y));
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

Image contact_sheet(std::span<const Image> images, int columns) {
    if (images.empty() || columns <= 0)
        throw ContractError("contact sheet needs images and a positive column count");
    const int w = images.front().width();
    const int h = images.front().height();
    const int n = static_cast<int>(images.size());
    const int rows = (n + columns - 1) / columns;
    Image sheet(columns * (w + 1) - 1, rows * (h + 1) - 1, 1.0);
    for (int i = 0; i < n; ++i) {
        const int ox = (i % columns) * (w + 1);
        const int oy = (i / columns) * (h + 1);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                sheet(ox + x, oy + y) = images[static_cast<std::size_t>(i)](x, y);
    }
    return sheet;
}

void write_batch_f32(const std::filesystem::path& path, std::span<const Image> images) {
    const int h = images.empty() ? 0 : images.front().height();
    const int w = images.empty() ? 0 : images.front().width();
    const nlohmann::json header{{"format", "sunlit-f32"}, {"version", 1}, {"shape", {images.size(), h, w}}};
    const std::string text = header.dump();
    auto os = open_out(path);
    put_u64(os, text.size());
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const Image& img : images) {
        if (img.width() != w || img.height() != h)
            throw ContractError("images in a batch must share a shape");
        for (Eigen::Index i = 0; i < img.size(); ++i) {
            const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(img.pixels()[i]));
            for (int b = 0; b < 4; ++b)
                os.put(static_cast<char>((bits >> (8 * b)) & 0xff));
        }
    }
    if (!os)
        throw IoError("write failed for '" + path.string() + "'");
}

std::vector<Image> read_batch_f32(const std::filesystem::path& path) {
    auto is = open_in(path);
    const std::uint64_t len = get_u64(is);
    std::string text(len, '\0');
    is.read(text.data(), static_cast<std::streamsize>(len));
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad batch header in '" + path.string() + "': " + e.what());
    }
    if (header.value("format", "") != "sunlit-f32")
        throw IoError("'" + path.string() + "' is not a sunlit-f32 batch");
    const auto shape = header.at("shape").get<std::vector<int>>();
    std::vector<Image> out;
    for (int n = 0; n < shape.at(0); ++n) {
        Image img(shape.at(2), shape.at(1));
        for (Eigen::Index i = 0; i < img.size(); ++i) {
            std::uint32_t bits = 0;
            for (int b = 0; b < 4; ++b) {
                const int c = is.get();
                if (c == EOF)
                    throw IoError("truncated batch blob '" + path.string() + "'");
                bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(c)) << (8 * b);
            }
            img.pixels()[i] = static_cast<double>(std::bit_cast<float>(bits));
        }
        out.push_back(std::move(img));
    }
    return out;
}

} // namespace io
} // namespace sunlit
