#pragma once

#include "vidal/model.hpp"
#include "vidal/random.hpp"

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

namespace vidal::test {

inline VideoMeta make_meta(int w, int h, std::size_t m, std::size_t k = 2)
{
    VideoMeta meta{w, h, m, {}};
    for (std::size_t c = 0; c < k; ++c)
        meta.class_names.push_back("c" + std::to_string(c));
    return meta;
}

inline Detection det(double cx, double cy, double bw, double bh, std::vector<double> probs)
{
    return {BBox{cx, cy, bw, bh}, ClassDistribution(std::move(probs))};
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag)
    {
        Rng rng(std::hash<std::string>{}(tag) ^ reinterpret_cast<std::uintptr_t>(this));
        path_ = std::filesystem::temp_directory_path() / ("vidal-" + tag + "-" + std::to_string(rng.below(1u << 30)));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// Per-pixel reference rasterizer: a pixel (x, y) is inside a box when its
/// rounded, clamped edges satisfy x0 <= x < x1.
inline std::vector<std::vector<bool>> brute_raster(const std::vector<BBox>& boxes, int w, int h)
{
    std::vector<std::vector<bool>> grid(static_cast<std::size_t>(h), std::vector<bool>(static_cast<std::size_t>(w)));
    auto edge = [](double v, int limit) {
        const double r = std::floor(v + 0.5);
        return static_cast<int>(std::clamp(r, 0.0, static_cast<double>(limit)));
    };
    for (const auto& b : boxes) {
        const int x0 = edge(b.left(), w), x1 = edge(b.right(), w);
        const int y0 = edge(b.top(), h), y1 = edge(b.bottom(), h);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                if (x >= x0 && x < x1 && y >= y0 && y < y1)
                    grid[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)] = true;
            }
        }
    }
    return grid;
}

} // namespace vidal::test
