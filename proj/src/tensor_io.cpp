#include "sunlit/tensor_io.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <iterator>
#include <numeric>

#include "sunlit/error.hpp"

namespace sunlit::io {

namespace {

constexpr char kMagic[8] = {'S', 'U', 'N', 'L', 'I', 'T', '\0', '\0'};

template <typename U>
void put_le(std::ostream& os, U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i)
        os.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

template <typename U>
U get_le(std::istream& is) {
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        const int c = is.get();
        if (c == EOF)
            throw IoError("truncated container");
        v |= static_cast<U>(static_cast<unsigned char>(c)) << (8 * i);
    }
    return v;
}

std::int64_t element_count(const std::vector<std::int64_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::int64_t{1}, std::multiplies<>());
}

} // namespace

void Archive::add(std::string name, const Eigen::MatrixXd& m) {
    Tensor t{std::move(name), {m.rows(), m.cols()}, {}};
    t.data.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            t.data.push_back(m(r, c));
    tensors.push_back(std::move(t));
}

void Archive::add(std::string name, const Eigen::VectorXd& v) {
    tensors.push_back({std::move(name), {v.size()}, std::vector<double>(v.data(), v.data() + v.size())});
}

const Tensor& Archive::get(const std::string& name) const {
    const auto it = std::find_if(tensors.begin(), tensors.end(), [&](const Tensor& t) { return t.name == name; });
    if (it == tensors.end())
        throw IoError("container of kind '" + kind + "' has no tensor '" + name + "'");
    return *it;
}

Eigen::MatrixXd Archive::matrix(const std::string& name) const {
    const Tensor& t = get(name);
    if (t.shape.size() != 2)
        throw IoError("tensor '" + name + "' is not a matrix");
    Eigen::MatrixXd m(t.shape[0], t.shape[1]);
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            m(r, c) = t.data[k++];
    return m;
}

Eigen::VectorXd Archive::vector(const std::string& name) const {
    const Tensor& t = get(name);
    return Eigen::Map<const Eigen::VectorXd>(t.data.data(), static_cast<Eigen::Index>(t.data.size()));
}

void write_archive(const std::filesystem::path& path, const Archive& archive) {
    nlohmann::json header{{"kind", archive.kind}, {"meta", archive.meta}, {"tensors", nlohmann::json::array()}};
    for (const Tensor& t : archive.tensors) {
        if (element_count(t.shape) != static_cast<std::int64_t>(t.data.size()))
            throw ContractError("tensor '" + t.name + "' shape does not match its data");
        header["tensors"].push_back({{"name", t.name}, {"shape", t.shape}});
    }
    const std::string text = header.dump();

    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw IoError("cannot open '" + path.string() + "' for writing");
    os.write(kMagic, sizeof kMagic);
    put_le<std::uint32_t>(os, kContainerVersion);
    put_le<std::uint64_t>(os, text.size());
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const Tensor& t : archive.tensors)
        for (double d : t.data)
            put_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(d));
    if (!os)
        throw IoError("write failed for '" + path.string() + "'");
}

Archive read_archive(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw IoError("cannot open '" + path.string() + "'");
    char magic[8];
    is.read(magic, sizeof magic);
    if (!is || !std::equal(std::begin(magic), std::end(magic), std::begin(kMagic)))
        throw IoError("'" + path.string() + "' is not a sunlit container");
    const auto version = get_le<std::uint32_t>(is);
    if (version != kContainerVersion)
        throw IoError("unsupported container version " + std::to_string(version));
    const auto len = get_le<std::uint64_t>(is);
    std::string text(len, '\0');
    is.read(text.data(), static_cast<std::streamsize>(len));

    Archive archive;
    try {
        const auto header = nlohmann::json::parse(text);
        archive.kind = header.at("kind").get<std::string>();
        archive.meta = header.value("meta", nlohmann::json::object());
        for (const auto& entry : header.at("tensors")) {
            Tensor t;
            t.name = entry.at("name").get<std::string>();
            t.shape = entry.at("shape").get<std::vector<std::int64_t>>();
            archive.tensors.push_back(std::move(t));
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad container header in '" + path.string() + "': " + e.what());
    }
    for (Tensor& t : archive.tensors) {
        t.data.resize(static_cast<std::size_t>(element_count(t.shape)));
        for (double& d : t.data)
            d = std::bit_cast<double>(get_le<std::uint64_t>(is));
    }
    return archive;
}

void expect_kind(const Archive& archive, const std::string& expected) {
    if (archive.kind != expected)
        throw ContractError("expected a '" + expected + "' container, found '" + archive.kind + "'");
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw IoError("cannot open '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw IoError("cannot open '" + path.string() + "' for writing");
    os << text;
    if (!os)
        throw IoError("write failed for '" + path.string() + "'");
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw IoError("cannot open '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

} // namespace sunlit::io
