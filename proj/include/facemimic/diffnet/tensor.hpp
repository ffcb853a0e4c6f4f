#pragma once

#include <algorithm>
#include <cmath>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <type_traits>
#include <new>
#include <span>
#include <string>
#include <vector>

#include "facemimic/errors.hpp"

namespace facemimic::diffnet {

/// Per-sample shape (channels, height, width). Dense features are (f, 1, 1).
struct Shape {
    int c = 0;
    int h = 1;
    int w = 1;
    int size() const { return c * h * w; }
    friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& s);

/// Dense tensor laid out (batch, channel, height, width).
/// 64-byte aligned storage. Vectorized kernels peel differently at other
/// alignments, which would make results depend on where the heap put a buffer.
template <class T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t kAlign{64};

    AlignedAllocator() = default;
    template <class U>
    AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

    T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }

    template <class U>
    bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

template <class T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

template <class T>
class BasicTensor {
public:
    using value_type = T;

    BasicTensor() = default;
    BasicTensor(int n, Shape shape, T fill = T(0)) : n_(n), shape_(shape) {
        if (n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0) throw DimensionError("negative tensor dimension");
        data_.assign(static_cast<std::size_t>(n) * shape.size(), fill);
    }
    BasicTensor(int n, int c, int h, int w, T fill = T(0)) : BasicTensor(n, Shape{c, h, w}, fill) {}

    int n() const { return n_; }
    int c() const { return shape_.c; }
    int h() const { return shape_.h; }
    int w() const { return shape_.w; }
    Shape shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::span<T> values() { return data_; }
    std::span<const T> values() const { return data_; }
    T& operator[](std::size_t i) { return data_[i]; }
    T operator[](std::size_t i) const { return data_[i]; }

    T* sample(int i) { return data_.data() + static_cast<std::size_t>(i) * shape_.size(); }
    const T* sample(int i) const { return data_.data() + static_cast<std::size_t>(i) * shape_.size(); }
    T& at(int i, int ch, int y, int x) {
        return data_[((static_cast<std::size_t>(i) * shape_.c + ch) * shape_.h + y) * shape_.w + x];
    }
    T at(int i, int ch, int y, int x) const {
        return data_[((static_cast<std::size_t>(i) * shape_.c + ch) * shape_.h + y) * shape_.w + x];
    }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    /// Throws NumericError naming `where` if any value is NaN or infinite.
    /// Keeps the allocation; element values are unspecified afterwards.
    void reshape_uninitialized(int n, Shape shape) {
        n_ = n;
        shape_ = shape;
        data_.resize(static_cast<std::size_t>(n) * shape.size());
    }

    void check_finite(const char* where) const {
        // Exponent-all-ones test on the bit pattern; vectorizes, unlike an early-exit isfinite loop.
        using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
        constexpr Bits exponent = sizeof(T) == 4 ? Bits(0x7f800000u) : Bits(0x7ff0000000000000ull);
        Bits bad = 0;
        for (std::size_t i = 0; i < data_.size(); ++i) bad |= (std::bit_cast<Bits>(data_[i]) & exponent) == exponent;
        if (!bad) return;
        for (std::size_t i = 0; i < data_.size(); ++i) {
            if (!std::isfinite(data_[i])) {
                throw NumericError(std::string("non-finite value at ") + where + " (element " + std::to_string(i) +
                                   ")");
            }
        }
    }

    template <class U>
    BasicTensor<U> cast() const {
        BasicTensor<U> out(n_, shape_);
        std::copy(data_.begin(), data_.end(), out.data());
        return out;
    }

    friend bool operator==(const BasicTensor&, const BasicTensor&) = default;

private:
    int n_ = 0;
    Shape shape_;
    AlignedVector<T> data_;
};

using Tensor = BasicTensor<float>;
using TensorD = BasicTensor<double>;

}  // namespace facemimic::diffnet
