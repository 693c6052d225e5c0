#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace ribeval {

using Label = std::int32_t;
using Index = Eigen::Index;

/// Thrown for malformed or inconsistent user input (bad files, mismatched
/// shapes, violated preconditions). The CLI maps it to exit code 2.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class VolumeKind { IntensityHU, Normalized, Probability, Binary, InstanceLabel };

std::string_view to_string(VolumeKind kind);
VolumeKind volume_kind_from_string(std::string_view text);

/// Voxel counts along x, y, z.
struct Dims {
    std::array<Index, 3> n{0, 0, 0};

    Index operator[](int axis) const { return n[static_cast<std::size_t>(axis)]; }
    Index& operator[](int axis) { return n[static_cast<std::size_t>(axis)]; }
    Index voxels() const { return n[0] * n[1] * n[2]; }

    friend bool operator==(const Dims&, const Dims&) = default;
};

std::string to_string(const Dims& dims);

using Spacing = std::array<double, 3>;

/// Dense 3D grid stored x-fastest. Intensities and probabilities use float,
/// instance labels use Label.
template <typename Scalar>
class Volume {
public:
    using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

    Volume() = default;

    Volume(Dims dims, Spacing spacing, VolumeKind kind, Scalar fill = Scalar(0))
        : dims_(dims), spacing_(spacing), kind_(kind) {
        check_shape();
        data_ = Array::Constant(dims_.voxels(), fill);
    }

    Volume(Dims dims, Spacing spacing, VolumeKind kind, Array data)
        : dims_(dims), spacing_(spacing), kind_(kind), data_(std::move(data)) {
        check_shape();
        if (data_.size() != dims_.voxels())
            throw InputError("volume data length " + std::to_string(data_.size()) +
                             " does not match dims " + to_string(dims_));
    }

    const Dims& dims() const { return dims_; }
    const Spacing& spacing() const { return spacing_; }
    VolumeKind kind() const { return kind_; }
    void set_kind(VolumeKind kind) { kind_ = kind; }
    Index size() const { return data_.size(); }

    const Array& data() const { return data_; }
    Array& data() { return data_; }

    Index linear(Index x, Index y, Index z) const { return x + dims_[0] * (y + dims_[1] * z); }

    std::array<Index, 3> coords(Index linear_index) const {
        const Index x = linear_index % dims_[0];
        const Index yz = linear_index / dims_[0];
        return {x, yz % dims_[1], yz / dims_[1]};
    }

    Scalar operator()(Index x, Index y, Index z) const { return data_[linear(x, y, z)]; }
    Scalar& operator()(Index x, Index y, Index z) { return data_[linear(x, y, z)]; }
    Scalar operator[](Index i) const { return data_[i]; }
    Scalar& operator[](Index i) { return data_[i]; }

    bool same_grid(const Volume<Scalar>& other) const { return dims_ == other.dims_; }

    friend bool operator==(const Volume& a, const Volume& b) {
        return a.dims_ == b.dims_ && a.spacing_ == b.spacing_ && a.kind_ == b.kind_ &&
               (a.data_ == b.data_).all();
    }

private:
    void check_shape() const {
        for (int a = 0; a < 3; ++a) {
            if (dims_[a] <= 0) throw InputError("volume dims must be positive, got " + to_string(dims_));
            if (!(spacing_[static_cast<std::size_t>(a)] > 0.0))
                throw InputError("volume spacing must be strictly positive");
        }
    }

    Dims dims_{};
    Spacing spacing_{1.0, 1.0, 1.0};
    VolumeKind kind_ = VolumeKind::IntensityHU;
    Array data_;
};

using ScalarVolume = Volume<float>;
using LabelMap = Volume<Label>;

/// Checks the value-domain invariant of `kind` over every voxel; throws
/// InputError naming the first offending voxel.
template <typename Scalar>
void validate_kind(const Volume<Scalar>& volume);

/// Memory order of an externally supplied buffer.
enum class BufferOrder { XFastest, ZFastest };

/// Copies a caller-owned buffer into a Volume, transposing when the buffer is
/// z-fastest (C order for an array shaped [x][y][z]).
template <typename Scalar>
Volume<Scalar> volume_from_buffer(const Scalar* data, Dims dims, Spacing spacing, VolumeKind kind,
                                  BufferOrder order);

template <typename A, typename B>
void require_same_dims(const Volume<A>& a, const Volume<B>& b, std::string_view what) {
    if (!(a.dims() == b.dims()))
        throw InputError(std::string(what) + ": dims mismatch " + to_string(a.dims()) + " vs " +
                         to_string(b.dims()));
}

}  // namespace ribeval
