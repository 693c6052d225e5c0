#include "ribeval/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

#include <zlib.h>

#include <json.hpp>

namespace ribeval {

namespace fs = std::filesystem;

NiftiError::NiftiError(const std::string& what, std::uint64_t offset)
    : InputError(what + " (byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

std::string_view to_string(FractureClass c) {
    switch (c) {
        case FractureClass::BK: return "BK";
        case FractureClass::ND: return "ND";
        case FractureClass::DP: return "DP";
        case FractureClass::SG: return "SG";
        case FractureClass::UN: return "UN";
    }
    return "??";
}

FractureClass fracture_class_from_string(std::string_view token) {
    std::string upper(token);
    std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char ch) { return std::toupper(ch); });
    for (auto c : {FractureClass::BK, FractureClass::ND, FractureClass::DP, FractureClass::SG, FractureClass::UN}) {
        if (to_string(c) == upper) return c;
    }
    throw InputError("unknown class token '" + std::string(token) + "'");
}

namespace {

std::vector<char> read_file_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    unsigned char magic[2] = {0, 0};
    in.read(reinterpret_cast<char*>(magic), 2);
    const bool gzipped = in.gcount() == 2 && magic[0] == 0x1F && magic[1] == 0x8B;
    in.close();

    std::vector<char> bytes;
    if (!gzipped) {
        std::ifstream raw(path, std::ios::binary | std::ios::ate);
        const auto size = static_cast<std::size_t>(raw.tellg());
        raw.seekg(0);
        bytes.resize(size);
        raw.read(bytes.data(), static_cast<std::streamsize>(size));
        return bytes;
    }

    gzFile gz = gzopen(path.string().c_str(), "rb");
    if (!gz) throw InputError("cannot open " + path.string());
    gzbuffer(gz, 1 << 20);
    char chunk[1 << 16];
    for (;;) {
        const int got = gzread(gz, chunk, sizeof(chunk));
        if (got < 0) {
            int errnum = 0;
            const std::string msg = gzerror(gz, &errnum);
            gzclose(gz);
            throw NiftiError("gzip stream error in " + path.string() + ": " + msg, bytes.size());
        }
        if (got == 0) break;
        bytes.insert(bytes.end(), chunk, chunk + got);
    }
    gzclose(gz);
    return bytes;
}

template <typename T>
T byteswap_value(T v) {
    auto* p = reinterpret_cast<unsigned char*>(&v);
    std::reverse(p, p + sizeof(T));
    return v;
}

class HeaderReader {
public:
    HeaderReader(const std::vector<char>& bytes, bool swap) : bytes_(bytes), swap_(swap) {}

    template <typename T>
    T get(std::size_t offset) const {
        T v;
        std::memcpy(&v, bytes_.data() + offset, sizeof(T));
        return swap_ ? byteswap_value(v) : v;
    }

private:
    const std::vector<char>& bytes_;
    bool swap_;
};

constexpr std::size_t kHeaderSize = 348;
constexpr std::size_t kDimOffset = 40;
constexpr std::size_t kDatatypeOffset = 70;
constexpr std::size_t kBitpixOffset = 72;
constexpr std::size_t kPixdimOffset = 76;
constexpr std::size_t kVoxOffsetOffset = 108;
constexpr std::size_t kSlopeOffset = 112;
constexpr std::size_t kInterOffset = 116;
constexpr std::size_t kMagicOffset = 344;

struct NiftiPayload {
    Dims dims;
    Spacing spacing{};
    std::vector<char> image;  // owns the bytes the payload is read from
    std::size_t offset = 0;
    std::int16_t datatype = 0;
    bool swap = false;
    double slope = 1.0;
    double inter = 0.0;
    bool scaled = false;
};

int bits_of(std::int16_t datatype) {
    switch (datatype) {
        case 2: return 8;
        case 4: return 16;
        case 8: return 32;
        case 16: return 32;
        default: return 0;
    }
}

NiftiPayload read_nifti(const fs::path& path) {
    std::vector<char> bytes = read_file_bytes(path);
    if (bytes.size() < kHeaderSize)
        throw NiftiError("truncated NIfTI header in " + path.string(), bytes.size());

    std::int32_t sizeof_hdr;
    std::memcpy(&sizeof_hdr, bytes.data(), 4);
    bool swap = false;
    if (sizeof_hdr != 348) {
        if (byteswap_value(sizeof_hdr) == 348)
            swap = true;
        else
            throw NiftiError("sizeof_hdr is " + std::to_string(sizeof_hdr) + ", expected 348", 0);
    }
    const HeaderReader hdr(bytes, swap);

    const char* magic = bytes.data() + kMagicOffset;
    const bool single = std::memcmp(magic, "n+1\0", 4) == 0;
    const bool pair = std::memcmp(magic, "ni1\0", 4) == 0;
    if (!single && !pair) throw NiftiError("bad NIfTI magic in " + path.string(), kMagicOffset);

    const auto ndim = hdr.get<std::int16_t>(kDimOffset);
    if (ndim != 3)
        throw NiftiError("expected 3 dimensions, header has " + std::to_string(ndim), kDimOffset);
    NiftiPayload out;
    out.swap = swap;
    for (int a = 0; a < 3; ++a) {
        const std::size_t dim_at = kDimOffset + 2 * static_cast<std::size_t>(a + 1);
        const auto n = hdr.get<std::int16_t>(dim_at);
        if (n <= 0) throw NiftiError("non-positive dim[" + std::to_string(a + 1) + "]", dim_at);
        out.dims[a] = n;
        const std::size_t px_at = kPixdimOffset + 4 * static_cast<std::size_t>(a + 1);
        const auto px = hdr.get<float>(px_at);
        if (!(px > 0.0f) || !std::isfinite(px))
            throw NiftiError("non-positive pixdim[" + std::to_string(a + 1) + "]", px_at);
        out.spacing[static_cast<std::size_t>(a)] = px;
    }

    out.datatype = hdr.get<std::int16_t>(kDatatypeOffset);
    const int bits = bits_of(out.datatype);
    if (bits == 0) throw NiftiError("unsupported NIfTI datatype " + std::to_string(out.datatype), kDatatypeOffset);
    const auto bitpix = hdr.get<std::int16_t>(kBitpixOffset);
    if (bitpix != bits)
        throw NiftiError("bitpix " + std::to_string(bitpix) + " inconsistent with datatype", kBitpixOffset);

    const auto vox_offset = hdr.get<float>(kVoxOffsetOffset);
    const auto slope = hdr.get<float>(kSlopeOffset);
    const auto inter = hdr.get<float>(kInterOffset);
    if (slope != 0.0f && std::isfinite(slope) && (slope != 1.0f || inter != 0.0f)) {
        out.scaled = true;
        out.slope = slope;
        out.inter = inter;
    }

    if (single) {
        if (!(vox_offset >= 348.0f) || vox_offset != std::floor(vox_offset))
            throw NiftiError("invalid vox_offset " + std::to_string(vox_offset), kVoxOffsetOffset);
        out.offset = static_cast<std::size_t>(vox_offset);
        out.image = std::move(bytes);
    } else {
        fs::path img = path;
        img.replace_extension(".img");
        out.image = read_file_bytes(img);
        out.offset = vox_offset > 0 ? static_cast<std::size_t>(vox_offset) : 0;
    }

    const std::size_t needed =
        out.offset + static_cast<std::size_t>(out.dims.voxels()) * static_cast<std::size_t>(bits / 8);
    if (out.image.size() < needed)
        throw NiftiError("truncated NIfTI payload: need " + std::to_string(needed) + " bytes, file has " +
                             std::to_string(out.image.size()),
                         out.image.size());
    return out;
}

bool integral(double v) { return std::isfinite(v) && v == std::floor(v); }

template <typename Scalar>
Scalar checked_cast(double v, const std::string& source) {
    if constexpr (std::is_integral_v<Scalar>) {
        if (!integral(v) || v < 0 || v > 2147483647.0)
            throw InputError(source + ": label map holds non-integer or negative value " + std::to_string(v));
    }
    return static_cast<Scalar>(v);
}

template <typename Scalar>
Volume<Scalar> decode_nifti(NiftiPayload& p, VolumeKind kind, const std::string& source) {
    Volume<Scalar> out(p.dims, p.spacing, kind);
    const HeaderReader data(p.image, p.swap);
    const std::size_t width = static_cast<std::size_t>(bits_of(p.datatype) / 8);
    const Index n = out.size();
    for (Index i = 0; i < n; ++i) {
        const std::size_t at = p.offset + static_cast<std::size_t>(i) * width;
        double v = 0.0;
        switch (p.datatype) {
            case 2: v = static_cast<unsigned char>(p.image[at]); break;
            case 4: v = data.get<std::int16_t>(at); break;
            case 8: v = data.get<std::int32_t>(at); break;
            default: v = data.get<float>(at); break;
        }
        if (p.scaled) v = v * p.slope + p.inter;
        out[i] = checked_cast<Scalar>(v, source);
    }
    return out;
}

template <typename Scalar>
void write_nifti(const Volume<Scalar>& volume, const fs::path& path, NiftiType type) {
    std::vector<char> buf(352, 0);
    auto put = [&](std::size_t off, auto v) { std::memcpy(buf.data() + off, &v, sizeof(v)); };
    put(0, std::int32_t{348});
    put(kDimOffset, std::int16_t{3});
    for (int a = 0; a < 3; ++a) {
        if (volume.dims()[a] > 32767) throw InputError("dimension too large for NIfTI-1");
        put(kDimOffset + 2 * static_cast<std::size_t>(a + 1), static_cast<std::int16_t>(volume.dims()[a]));
    }
    for (int a = 4; a < 8; ++a) put(kDimOffset + 2 * static_cast<std::size_t>(a), std::int16_t{1});
    put(kDatatypeOffset, static_cast<std::int16_t>(type));
    put(kBitpixOffset, static_cast<std::int16_t>(bits_of(static_cast<std::int16_t>(type))));
    put(kPixdimOffset, 1.0f);
    for (int a = 0; a < 3; ++a)
        put(kPixdimOffset + 4 * static_cast<std::size_t>(a + 1), static_cast<float>(volume.spacing()[static_cast<std::size_t>(a)]));
    put(kVoxOffsetOffset, 352.0f);
    put(kSlopeOffset, 1.0f);
    put(kInterOffset, 0.0f);
    std::memcpy(buf.data() + kMagicOffset, "n+1\0", 4);

    const auto& d = volume.data();
    for (Index i = 0; i < d.size(); ++i) {
        const double v = static_cast<double>(d[i]);
        auto append = [&](auto x) {
            const char* b = reinterpret_cast<const char*>(&x);
            buf.insert(buf.end(), b, b + sizeof(x));
        };
        switch (type) {
            case NiftiType::UInt8: append(static_cast<std::uint8_t>(v)); break;
            case NiftiType::Int16: append(static_cast<std::int16_t>(v)); break;
            case NiftiType::Int32: append(static_cast<std::int32_t>(v)); break;
            case NiftiType::Float32: append(static_cast<float>(v)); break;
        }
    }

    const std::string name = path.filename().string();
    const bool gz = name.size() > 3 && name.substr(name.size() - 3) == ".gz";
    if (gz) {
        gzFile f = gzopen(path.string().c_str(), "wb6");
        if (!f) throw InputError("cannot write " + path.string());
        const int wrote = gzwrite(f, buf.data(), static_cast<unsigned>(buf.size()));
        gzclose(f);
        if (wrote != static_cast<int>(buf.size())) throw InputError("short write to " + path.string());
    } else {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw InputError("cannot write " + path.string());
        out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    }
}

// Raw format helpers.

struct RawPaths {
    fs::path sidecar;
    fs::path payload;
};

RawPaths raw_paths(const fs::path& path) {
    fs::path stem = path;
    const auto ext = path.extension().string();
    if (ext == ".json" || ext == ".bin") stem.replace_extension();
    fs::path sidecar = stem;
    sidecar += ".json";
    fs::path payload = stem;
    payload += ".bin";
    return {sidecar, payload};
}

std::size_t raw_size(RawType t) {
    switch (t) {
        case RawType::U8: return 1;
        case RawType::I16: return 2;
        case RawType::I32: return 4;
        case RawType::F32: return 4;
    }
    return 0;
}

struct RawPayload {
    Dims dims;
    Spacing spacing{};
    VolumeKind kind = VolumeKind::IntensityHU;
    RawType type = RawType::F32;
    std::vector<char> bytes;
};

template <typename T>
T load_le(const char* p) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) v = byteswap_value(v);
    return v;
}

template <typename T>
void store_le(std::vector<char>& out, T v) {
    if constexpr (std::endian::native == std::endian::big) v = byteswap_value(v);
    const char* b = reinterpret_cast<const char*>(&v);
    out.insert(out.end(), b, b + sizeof(T));
}

RawPayload read_raw(const fs::path& path) {
    const RawPaths paths = raw_paths(path);
    std::ifstream side(paths.sidecar);
    if (!side) throw InputError("cannot open raw sidecar " + paths.sidecar.string());
    nlohmann::json meta;
    try {
        side >> meta;
    } catch (const nlohmann::json::exception& e) {
        throw InputError("malformed raw sidecar " + paths.sidecar.string() + ": " + e.what());
    }

    RawPayload out;
    RawType& type = out.type;
    try {
        for (int a = 0; a < 3; ++a) {
            out.dims[a] = meta.at("dims").at(static_cast<std::size_t>(a)).get<Index>();
            out.spacing[static_cast<std::size_t>(a)] = meta.at("spacing").at(static_cast<std::size_t>(a)).get<double>();
        }
        type = raw_type_from_string(meta.at("dtype").get<std::string>());
        out.kind = volume_kind_from_string(meta.at("kind").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw InputError("raw sidecar " + paths.sidecar.string() + ": " + e.what());
    }
    for (int a = 0; a < 3; ++a) {
        if (out.dims[a] <= 0) throw InputError("raw sidecar " + paths.sidecar.string() + ": non-positive dims");
    }

    out.bytes = read_file_bytes(paths.payload);
    const std::size_t width = raw_size(type);
    const auto n = static_cast<std::size_t>(out.dims.voxels());
    if (out.bytes.size() != n * width)
        throw InputError("raw payload " + paths.payload.string() + " has " + std::to_string(out.bytes.size()) +
                         " bytes, sidecar implies " + std::to_string(n * width));
    return out;
}

template <typename Scalar>
Volume<Scalar> decode_raw(const RawPayload& p, const std::string& source) {
    Volume<Scalar> out(p.dims, p.spacing, p.kind);
    const std::size_t width = raw_size(p.type);
    for (Index i = 0; i < out.size(); ++i) {
        const char* at = p.bytes.data() + static_cast<std::size_t>(i) * width;
        switch (p.type) {
            case RawType::U8: out[i] = static_cast<Scalar>(static_cast<unsigned char>(*at)); break;
            case RawType::I16: out[i] = static_cast<Scalar>(load_le<std::int16_t>(at)); break;
            case RawType::I32: out[i] = static_cast<Scalar>(load_le<std::int32_t>(at)); break;
            case RawType::F32: out[i] = checked_cast<Scalar>(load_le<float>(at), source); break;
        }
    }
    return out;
}

template <typename Scalar>
void write_raw(const Volume<Scalar>& volume, const fs::path& path, RawType type) {
    const RawPaths paths = raw_paths(path);
    std::vector<char> bytes;
    bytes.reserve(static_cast<std::size_t>(volume.size()) * raw_size(type));
    for (Index i = 0; i < volume.size(); ++i) {
        const double v = static_cast<double>(volume[i]);
        switch (type) {
            case RawType::U8:
                if (!(v >= 0 && v <= 255) || !integral(v)) throw InputError("value does not fit dtype u8");
                store_le(bytes, static_cast<std::uint8_t>(v));
                break;
            case RawType::I16:
                if (!(v >= -32768 && v <= 32767) || !integral(v)) throw InputError("value does not fit dtype i16");
                store_le(bytes, static_cast<std::int16_t>(v));
                break;
            case RawType::I32:
                if (!integral(v)) throw InputError("value does not fit dtype i32");
                store_le(bytes, static_cast<std::int32_t>(volume[i]));
                break;
            case RawType::F32: store_le(bytes, static_cast<float>(volume[i])); break;
        }
    }

    nlohmann::json meta;
    meta["dims"] = {volume.dims()[0], volume.dims()[1], volume.dims()[2]};
    meta["spacing"] = volume.spacing();
    meta["dtype"] = std::string(to_string(type));
    meta["kind"] = std::string(to_string(volume.kind()));

    std::ofstream side(paths.sidecar);
    if (!side) throw InputError("cannot write " + paths.sidecar.string());
    side << meta.dump(2) << '\n';
    std::ofstream payload(paths.payload, std::ios::binary);
    if (!payload) throw InputError("cannot write " + paths.payload.string());
    payload.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

bool has_suffix(const std::string& s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    fields.push_back(trim(cur));
    return fields;
}

}  // namespace

ScalarVolume load_nifti(const fs::path& path, VolumeKind kind) {
    NiftiPayload p = read_nifti(path);
    ScalarVolume out = decode_nifti<float>(p, kind, path.string());
    if (kind == VolumeKind::Probability || kind == VolumeKind::Binary) validate_kind(out);
    return out;
}

LabelMap load_nifti_labels(const fs::path& path) {
    NiftiPayload p = read_nifti(path);
    return decode_nifti<Label>(p, VolumeKind::InstanceLabel, path.string());
}

void save_nifti(const ScalarVolume& volume, const fs::path& path, NiftiType type) { write_nifti(volume, path, type); }
void save_nifti(const LabelMap& volume, const fs::path& path, NiftiType type) { write_nifti(volume, path, type); }

std::string_view to_string(RawType t) {
    switch (t) {
        case RawType::U8: return "u8";
        case RawType::I16: return "i16";
        case RawType::I32: return "i32";
        case RawType::F32: return "f32";
    }
    return "??";
}

RawType raw_type_from_string(std::string_view text) {
    for (auto t : {RawType::U8, RawType::I16, RawType::I32, RawType::F32}) {
        if (to_string(t) == text) return t;
    }
    throw InputError("unknown raw dtype '" + std::string(text) + "'");
}

ScalarVolume load_raw(const fs::path& path) {
    RawPayload p = read_raw(path);
    ScalarVolume out = decode_raw<float>(p, path.string());
    validate_kind(out);
    return out;
}

LabelMap load_raw_labels(const fs::path& path) {
    RawPayload p = read_raw(path);
    if (p.type == RawType::I16 || p.type == RawType::I32) {
        for (std::size_t i = 0; i < p.bytes.size(); i += raw_size(p.type)) {
            const long v = p.type == RawType::I16 ? load_le<std::int16_t>(p.bytes.data() + i)
                                                   : load_le<std::int32_t>(p.bytes.data() + i);
            if (v < 0) throw InputError(path.string() + ": label map holds negative value " + std::to_string(v));
        }
    }
    LabelMap out = decode_raw<Label>(p, path.string());
    out.set_kind(VolumeKind::InstanceLabel);
    return out;
}

void save_raw(const ScalarVolume& volume, const fs::path& path, std::optional<RawType> type) {
    write_raw(volume, path, type.value_or(volume.kind() == VolumeKind::Binary ? RawType::U8 : RawType::F32));
}

void save_raw(const LabelMap& volume, const fs::path& path, std::optional<RawType> type) {
    write_raw(volume, path, type.value_or(RawType::I32));
}

ScalarVolume load_volume(const fs::path& path, VolumeKind kind) {
    const std::string name = path.filename().string();
    if (has_suffix(name, ".nii") || has_suffix(name, ".nii.gz") || has_suffix(name, ".hdr")) return load_nifti(path, kind);
    ScalarVolume v = load_raw(path);
    v.set_kind(kind);
    validate_kind(v);
    return v;
}

LabelMap load_label_map(const fs::path& path) {
    const std::string name = path.filename().string();
    if (has_suffix(name, ".nii") || has_suffix(name, ".nii.gz") || has_suffix(name, ".hdr")) return load_nifti_labels(path);
    return load_raw_labels(path);
}

std::vector<InstanceMetadata> parse_metadata(const std::string& csv_text, const std::string& source) {
    std::vector<InstanceMetadata> rows;
    std::set<Label> seen;
    std::istringstream in(csv_text);
    std::string line;
    int line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line);
        const std::string where = source + ":" + std::to_string(line_no);
        if (!header_seen) {
            if (fields.size() != 3 || fields[0] != "instance_id" || fields[1] != "confidence" || fields[2] != "class_code")
                throw InputError(where + ": expected header 'instance_id,confidence,class_code'");
            header_seen = true;
            continue;
        }
        if (fields.size() != 3) throw InputError(where + ": expected 3 fields, got " + std::to_string(fields.size()));

        InstanceMetadata row;
        long long id = 0;
        const auto& idf = fields[0];
        auto [ptr, ec] = std::from_chars(idf.data(), idf.data() + idf.size(), id);
        if (ec != std::errc() || ptr != idf.data() + idf.size() || id <= 0 || id > 2147483647)
            throw InputError(where + ": instance_id must be a positive integer, got '" + idf + "'");
        row.instance_id = static_cast<Label>(id);
        if (!seen.insert(row.instance_id).second)
            throw InputError(where + ": duplicate instance_id " + idf);

        if (!fields[1].empty()) {
            double conf = 0.0;
            const auto& cf = fields[1];
            auto [cptr, cec] = std::from_chars(cf.data(), cf.data() + cf.size(), conf);
            if (cec != std::errc() || cptr != cf.data() + cf.size())
                throw InputError(where + ": unparseable confidence '" + cf + "'");
            if (!(conf >= 0.0 && conf <= 1.0))
                throw InputError(where + ": confidence " + cf + " outside [0, 1]");
            row.confidence = conf;
        }
        if (!fields[2].empty()) {
            try {
                row.class_code = fracture_class_from_string(fields[2]);
            } catch (const InputError& e) {
                throw InputError(where + ": " + e.what());
            }
        }
        rows.push_back(row);
    }
    if (!header_seen) throw InputError(source + ": empty metadata file");
    return rows;
}

std::vector<InstanceMetadata> load_metadata(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open metadata " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_metadata(ss.str(), path.string());
}

void save_metadata(const std::vector<InstanceMetadata>& rows, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << "instance_id,confidence,class_code\n";
    for (const auto& r : rows) {
        out << r.instance_id << ',';
        if (r.confidence) {
            char buf[64];
            auto res = std::to_chars(buf, buf + sizeof(buf), *r.confidence);
            out.write(buf, res.ptr - buf);
        }
        out << ',';
        if (r.class_code) out << to_string(*r.class_code);
        out << '\n';
    }
}

void check_metadata_consistency(const LabelMap& labels, const std::vector<InstanceMetadata>& rows,
                                const std::string& context) {
    std::set<Label> present;
    const auto& d = labels.data();
    Label last = 0;
    for (Index i = 0; i < d.size(); ++i) {
        const Label v = d[i];
        if (v > 0 && v != last) {
            present.insert(v);
            last = v;
        }
    }
    std::set<Label> listed;
    for (const auto& r : rows) listed.insert(r.instance_id);
    for (Label id : present) {
        if (!listed.count(id))
            throw InputError(context + ": label " + std::to_string(id) + " has no metadata row");
    }
    for (Label id : listed) {
        if (!present.count(id))
            throw InputError(context + ": metadata row " + std::to_string(id) + " has no voxels in the label map");
    }
}

std::map<Label, double> confidences_of(const std::vector<InstanceMetadata>& rows, const std::string& context) {
    std::map<Label, double> out;
    for (const auto& r : rows) {
        if (!r.confidence)
            throw InputError(context + ": instance " + std::to_string(r.instance_id) + " has no confidence");
        out[r.instance_id] = *r.confidence;
    }
    return out;
}

std::map<Label, FractureClass> classes_of(const std::vector<InstanceMetadata>& rows, const std::string& context) {
    std::map<Label, FractureClass> out;
    for (const auto& r : rows) {
        if (!r.class_code)
            throw InputError(context + ": instance " + std::to_string(r.instance_id) + " has no class_code");
        out[r.instance_id] = *r.class_code;
    }
    return out;
}

}  // namespace ribeval
