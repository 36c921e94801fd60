#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace boundcue {

/// Integer grid coordinate. x grows rightward, y grows downward.
struct Pixel {
    int x = 0;
    int y = 0;

    friend bool operator==(const Pixel&, const Pixel&) = default;
    friend auto operator<=>(const Pixel&, const Pixel&) = default;
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Vec2&, const Vec2&) = default;
    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2 operator-() const { return {-x, -y}; }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm() const { return std::hypot(x, y); }
    Vec2 normalized() const {
        const double n = norm();
        return {x / n, y / n};
    }
    /// Counter-rotation used throughout: (-y, x).
    Vec2 perp() const { return {-y, x}; }
};

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend bool operator==(const Vec3&, const Vec3&) = default;
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }
};

/// Dense row-major 2D array.
template <typename T>
class Grid {
  public:
    Grid() = default;
    Grid(int width, int height, T fill = T{})
        : width_(width), height_(height),
          data_(static_cast<std::size_t>(checked_area(width, height)), fill) {}

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
    bool contains(Pixel p) const { return contains(p.x, p.y); }
    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }

    T& operator()(int x, int y) { return data_[index(x, y)]; }
    const T& operator()(int x, int y) const { return data_[index(x, y)]; }
    T& operator[](Pixel p) { return data_[index(p.x, p.y)]; }
    const T& operator[](Pixel p) const { return data_[index(p.x, p.y)]; }
    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    bool same_shape(const Grid<T>& o) const { return width_ == o.width_ && height_ == o.height_; }
    template <typename U>
    bool same_shape(const Grid<U>& o) const {
        return width_ == o.width() && height_ == o.height();
    }

    friend bool operator==(const Grid&, const Grid&) = default;

  private:
    static long long checked_area(int w, int h) {
        if (w < 0 || h < 0) throw std::invalid_argument("grid dimensions must be non-negative");
        return static_cast<long long>(w) * h;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

/// Binary figure support; nonzero = figure.
using Mask = Grid<std::uint8_t>;

inline bool in_mask(const Mask& m, int x, int y) { return m.contains(x, y) && m(x, y) != 0; }
inline bool in_mask(const Mask& m, Pixel p) { return in_mask(m, p.x, p.y); }

inline std::size_t mask_count(const Mask& m) {
    std::size_t n = 0;
    for (auto v : m.data()) n += v != 0;
    return n;
}

/// Neumaier compensated accumulator; order-stable sums for energy values.
class KahanSum {
  public:
    void add(double v) {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    KahanSum& operator+=(double v) {
        add(v);
        return *this;
    }
    double value() const { return sum_ + comp_; }

  private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

}  // namespace boundcue
