#pragma once

#include "toma/rng.hpp"

#include <Eigen/Core>
#include <string>
#include <vector>

namespace toma {

// IDX3 image loader (the classic MNIST container). Pixels are rescaled from
// [0,255] to [-1,1] and images are center-cropped / zero-padded to `side`.
// Throws std::runtime_error on I/O or format problems.
std::vector<Eigen::MatrixXd> load_idx_images(const std::string& path, int side, int max_count = 4096);

// Four deterministic digit-like glyphs, used when no IDX file is configured.
std::vector<Eigen::MatrixXd> synthetic_glyphs(int side);

// Picks `count` distinct anchor images: from the IDX file when `idx_path` is
// non-empty, otherwise the synthetic glyphs.
std::vector<Eigen::MatrixXd> pick_anchor_images(const std::string& idx_path, int side, int count,
                                                Rng& rng);

}  // namespace toma
