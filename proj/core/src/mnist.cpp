#include "toma/mnist.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace toma {

namespace {

std::uint32_t read_be32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw std::runtime_error("idx: truncated header");
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
           std::uint32_t(b[3]);
}

// Center-crop or zero-pad (background -1) a raw image to side x side.
Eigen::MatrixXd fit_to_side(const Eigen::MatrixXd& raw, int side) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Constant(side, side, -1.0);
    const int ro = (static_cast<int>(raw.rows()) - side) / 2;
    const int co = (static_cast<int>(raw.cols()) - side) / 2;
    for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c) {
            const int rr = r + ro, cc = c + co;
            if (rr >= 0 && rr < raw.rows() && cc >= 0 && cc < raw.cols()) out(r, c) = raw(rr, cc);
        }
    return out;
}

}  // namespace

std::vector<Eigen::MatrixXd> load_idx_images(const std::string& path, int side, int max_count) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open idx file: " + path);
    const std::uint32_t magic = read_be32(in);
    if (magic != 0x00000803u) throw std::runtime_error("idx: bad magic in " + path);
    const int count = static_cast<int>(read_be32(in));
    const int rows = static_cast<int>(read_be32(in));
    const int cols = static_cast<int>(read_be32(in));
    if (rows <= 0 || cols <= 0 || rows > 512 || cols > 512)
        throw std::runtime_error("idx: implausible image size");

    const int n = std::min(count, max_count);
    std::vector<Eigen::MatrixXd> images;
    images.reserve(n);
    std::vector<unsigned char> buf(static_cast<size_t>(rows) * cols);
    for (int i = 0; i < n; ++i) {
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (!in) throw std::runtime_error("idx: truncated image data");
        Eigen::MatrixXd raw(rows, cols);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c)
                raw(r, c) = buf[static_cast<size_t>(r) * cols + c] / 127.5 - 1.0;
        images.push_back(fit_to_side(raw, side));
    }
    return images;
}

std::vector<Eigen::MatrixXd> synthetic_glyphs(int side) {
    const int m = side / 2;
    std::vector<Eigen::MatrixXd> glyphs(4, Eigen::MatrixXd::Constant(side, side, -1.0));
    for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c) {
            const int border = std::min({r, c, side - 1 - r, side - 1 - c});
            if (border >= 3 && border <= 5) glyphs[0](r, c) = 1.0;              // ring
            if (std::abs(r - c) <= 1 || std::abs(r + c - (side - 1)) <= 1)
                glyphs[1](r, c) = 1.0;                                          // X
            if (std::abs(c - m) <= 1 && r >= 3 && r <= side - 4)
                glyphs[2](r, c) = 1.0;                                          // bar
            const int diamond = std::abs(r - m) + std::abs(c - m);
            if (diamond >= m - 4 && diamond <= m - 2) glyphs[3](r, c) = 1.0;    // diamond
        }
    return glyphs;
}

std::vector<Eigen::MatrixXd> pick_anchor_images(const std::string& idx_path, int side, int count,
                                                Rng& rng) {
    std::vector<Eigen::MatrixXd> pool =
        idx_path.empty() ? synthetic_glyphs(side) : load_idx_images(idx_path, side);
    if (static_cast<int>(pool.size()) < count)
        throw std::runtime_error("anchor pool smaller than requested count");
    std::vector<int> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<Eigen::MatrixXd> picked;
    picked.reserve(count);
    for (int i = 0; i < count; ++i) picked.push_back(std::move(pool[order[i]]));
    return picked;
}

}  // namespace toma
