#include "ribeval/labeling.hpp"

#include <algorithm>
#include <map>

namespace ribeval {

Connectivity connectivity_from_int(int value) {
    if (value == 6) return Connectivity::Face6;
    if (value == 26) return Connectivity::Full26;
    throw InputError("connectivity must be 6 or 26, got " + std::to_string(value));
}

namespace {

struct Offset {
    int dx, dy, dz;
};

std::vector<Offset> backward_neighbors(Connectivity connectivity) {
    std::vector<Offset> out;
    for (int dz = -1; dz <= 0; ++dz) {
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                const bool earlier = dz < 0 || (dz == 0 && dy < 0) || (dz == 0 && dy == 0 && dx < 0);
                if (!earlier) continue;
                const int manhattan = std::abs(dx) + std::abs(dy) + std::abs(dz);
                if (connectivity == Connectivity::Face6 && manhattan != 1) continue;
                out.push_back({dx, dy, dz});
            }
        }
    }
    return out;
}

class DisjointSet {
public:
    Label make() {
        parent_.push_back(static_cast<Label>(parent_.size()));
        return parent_.back();
    }

    Label find(Label x) {
        while (parent_[static_cast<std::size_t>(x)] != x) {
            auto& p = parent_[static_cast<std::size_t>(x)];
            p = parent_[static_cast<std::size_t>(p)];
            x = p;
        }
        return x;
    }

    // The smaller root survives, so every root is the earliest provisional label of its set.
    void unite(Label a, Label b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (a < b) std::swap(a, b);
        parent_[static_cast<std::size_t>(a)] = b;
    }

    std::size_t size() const { return parent_.size(); }

private:
    std::vector<Label> parent_{0};  // slot 0 is background
};

void check_binary(const ScalarVolume& binary, const char* op) {
    const auto& d = binary.data();
    for (Index i = 0; i < d.size(); ++i) {
        if (d[i] != 0.0f && d[i] != 1.0f) {
            const auto c = binary.coords(i);
            throw InputError(std::string(op) + ": input is not binary at voxel (" + std::to_string(c[0]) + ", " +
                             std::to_string(c[1]) + ", " + std::to_string(c[2]) + ")");
        }
    }
}

}  // namespace

Labeling connected_components(const ScalarVolume& binary, Connectivity connectivity) {
    check_binary(binary, "connected_components");
    const Dims& dims = binary.dims();
    const Index nx = dims[0], ny = dims[1], nz = dims[2];
    const auto neighbors = backward_neighbors(connectivity);

    LabelMap labels(dims, binary.spacing(), VolumeKind::InstanceLabel);
    auto& out = labels.data();
    const auto& in = binary.data();
    DisjointSet sets;

    Index i = 0;
    for (Index z = 0; z < nz; ++z) {
        for (Index y = 0; y < ny; ++y) {
            for (Index x = 0; x < nx; ++x, ++i) {
                if (in[i] == 0.0f) continue;
                Label current = 0;
                for (const auto& o : neighbors) {
                    const Index qx = x + o.dx, qy = y + o.dy, qz = z + o.dz;
                    if (qx < 0 || qx >= nx || qy < 0 || qy >= ny || qz < 0) continue;
                    const Label q = out[qx + nx * (qy + ny * qz)];
                    if (q == 0) continue;
                    if (current == 0)
                        current = q;
                    else if (q != current)
                        sets.unite(current, q);
                }
                out[i] = current != 0 ? current : sets.make();
            }
        }
    }

    std::vector<Label> final_id(sets.size(), 0);
    Label next = 0;
    for (std::size_t p = 1; p < sets.size(); ++p) {
        const Label root = sets.find(static_cast<Label>(p));
        if (root == static_cast<Label>(p)) final_id[p] = ++next;
    }
    for (std::size_t p = 1; p < sets.size(); ++p)
        final_id[p] = final_id[static_cast<std::size_t>(sets.find(static_cast<Label>(p)))];

    ComponentTable table(static_cast<std::size_t>(next));
    std::vector<Eigen::Vector3d> sums(static_cast<std::size_t>(next), Eigen::Vector3d::Zero());
    for (std::size_t k = 0; k < table.size(); ++k) {
        table[k].id = static_cast<Label>(k + 1);
        table[k].bbox_min = Eigen::Array3i::Constant(std::numeric_limits<int>::max());
        table[k].bbox_max = Eigen::Array3i::Constant(-1);
    }
    i = 0;
    for (Index z = 0; z < nz; ++z) {
        for (Index y = 0; y < ny; ++y) {
            for (Index x = 0; x < nx; ++x, ++i) {
                if (out[i] == 0) continue;
                const Label id = final_id[static_cast<std::size_t>(out[i])];
                out[i] = id;
                auto& c = table[static_cast<std::size_t>(id - 1)];
                const Eigen::Array3i p(static_cast<int>(x), static_cast<int>(y), static_cast<int>(z));
                ++c.voxel_count;
                c.bbox_min = c.bbox_min.min(p);
                c.bbox_max = c.bbox_max.max(p);
                sums[static_cast<std::size_t>(id - 1)] += p.cast<double>().matrix();
            }
        }
    }
    for (std::size_t k = 0; k < table.size(); ++k)
        table[k].centroid = sums[k] / static_cast<double>(table[k].voxel_count);
    return {std::move(labels), std::move(table)};
}

ComponentTable component_stats(const LabelMap& labels) {
    std::map<Label, std::pair<Component, Eigen::Vector3d>> acc;
    const Dims& dims = labels.dims();
    Index i = 0;
    for (Index z = 0; z < dims[2]; ++z) {
        for (Index y = 0; y < dims[1]; ++y) {
            for (Index x = 0; x < dims[0]; ++x, ++i) {
                const Label id = labels[i];
                if (id <= 0) continue;
                const Eigen::Array3i p(static_cast<int>(x), static_cast<int>(y), static_cast<int>(z));
                auto [it, fresh] = acc.try_emplace(id);
                auto& [c, sum] = it->second;
                if (fresh) {
                    c.id = id;
                    c.bbox_min = p;
                    c.bbox_max = p;
                    sum.setZero();
                }
                ++c.voxel_count;
                c.bbox_min = c.bbox_min.min(p);
                c.bbox_max = c.bbox_max.max(p);
                sum += p.cast<double>().matrix();
            }
        }
    }
    ComponentTable table;
    table.reserve(acc.size());
    for (auto& [id, entry] : acc) {
        entry.first.centroid = entry.second / static_cast<double>(entry.first.voxel_count);
        table.push_back(entry.first);
    }
    return table;
}

Labeling remove_small(const Labeling& labeled, std::int64_t min_voxels) {
    Label max_id = 0;
    for (const auto& c : labeled.components) max_id = std::max(max_id, c.id);
    std::vector<Label> remap(static_cast<std::size_t>(max_id) + 1, 0);

    Labeling out;
    Label next = 0;
    for (const auto& c : labeled.components) {
        if (c.voxel_count < min_voxels) continue;
        remap[static_cast<std::size_t>(c.id)] = ++next;
        Component kept = c;
        kept.id = next;
        out.components.push_back(kept);
    }

    out.labels = labeled.labels;
    auto& d = out.labels.data();
    for (Index i = 0; i < d.size(); ++i) {
        const Label v = d[i];
        if (v == 0) continue;
        if (v < 0 || v > max_id) throw InputError("remove_small: label map holds ids missing from the component table");
        d[i] = remap[static_cast<std::size_t>(v)];
    }
    return out;
}

ScalarVolume dilate(const ScalarVolume& binary, int radius) {
    check_binary(binary, "dilate");
    if (radius < 0) throw InputError("dilate: radius must be non-negative");
    ScalarVolume out = binary;
    if (radius == 0) return out;

    const Dims& dims = binary.dims();
    const Index stride[3] = {1, dims[0], dims[0] * dims[1]};
    std::vector<Index> prefix;
    // Separable: a box max filter is three 1D max filters.
    for (int axis = 0; axis < 3; ++axis) {
        const Index len = dims[axis];
        const Index step = stride[axis];
        prefix.assign(static_cast<std::size_t>(len) + 1, 0);
        const ScalarVolume src = out;
        for (Index start = 0; start < dims.voxels(); ++start) {
            if ((start / step) % len != 0) continue;  // not the first voxel of a line along `axis`
            for (Index k = 0; k < len; ++k)
                prefix[static_cast<std::size_t>(k) + 1] =
                    prefix[static_cast<std::size_t>(k)] + (src[start + k * step] != 0.0f ? 1 : 0);
            for (Index k = 0; k < len; ++k) {
                const Index lo = std::max<Index>(0, k - radius);
                const Index hi = std::min<Index>(len - 1, k + radius);
                const bool any = prefix[static_cast<std::size_t>(hi) + 1] - prefix[static_cast<std::size_t>(lo)] > 0;
                out[start + k * step] = any ? 1.0f : 0.0f;
            }
        }
    }
    out.set_kind(VolumeKind::Binary);
    return out;
}

}  // namespace ribeval
