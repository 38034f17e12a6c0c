// Versioned binary container: magic "SUNLIT\0\0", uint32 version, uint64
// header length, JSON header (kind, metadata, tensor names and shapes), then
// each tensor as row-major little-endian float64 in header order.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

namespace sunlit::io {

inline constexpr std::uint32_t kContainerVersion = 1;

struct Tensor {
    std::string name;
    std::vector<std::int64_t> shape;
    std::vector<double> data; ///< row-major
};

struct Archive {
    std::string kind;
    nlohmann::json meta = nlohmann::json::object();
    std::vector<Tensor> tensors;

    void add(std::string name, const Eigen::MatrixXd& m);
    void add(std::string name, const Eigen::VectorXd& v);
    const Tensor& get(const std::string& name) const;
    Eigen::MatrixXd matrix(const std::string& name) const;
    Eigen::VectorXd vector(const std::string& name) const;
};

void write_archive(const std::filesystem::path& path, const Archive& archive);
Archive read_archive(const std::filesystem::path& path);

/// Throws ContractError when `archive.kind` differs from `expected`.
void expect_kind(const Archive& archive, const std::string& expected);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

} // namespace sunlit::io
