#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ribeval/volume.hpp"

namespace ribeval {

/// Malformed NIfTI input. `offset` is the byte position of the offending field
/// (or the payload position where data ran out).
class NiftiError : public InputError {
public:
    NiftiError(const std::string& what, std::uint64_t offset);
    std::uint64_t offset() const { return offset_; }

private:
    std::uint64_t offset_;
};

enum class FractureClass { BK, ND, DP, SG, UN };

std::string_view to_string(FractureClass c);
/// Case-insensitive; throws InputError on unknown tokens.
FractureClass fracture_class_from_string(std::string_view token);

struct InstanceMetadata {
    Label instance_id = 0;
    std::optional<double> confidence;
    std::optional<FractureClass> class_code;
};

// NIfTI-1 single file (.nii, .nii.gz). Supported datatypes: uint8, int16,
// int32, float32. Only pixdim is honored; orientation is ignored.
ScalarVolume load_nifti(const std::filesystem::path& path, VolumeKind kind = VolumeKind::IntensityHU);
LabelMap load_nifti_labels(const std::filesystem::path& path);

enum class NiftiType : std::int16_t { UInt8 = 2, Int16 = 4, Int32 = 8, Float32 = 16 };

void save_nifti(const ScalarVolume& volume, const std::filesystem::path& path,
                NiftiType type = NiftiType::Float32);
void save_nifti(const LabelMap& volume, const std::filesystem::path& path,
                NiftiType type = NiftiType::Int32);

// Raw format: `<stem>.json` sidecar {dims, spacing, dtype, kind} next to a
// little-endian `<stem>.bin` payload. Either path (or the bare stem) may be given.
enum class RawType { U8, I16, I32, F32 };

std::string_view to_string(RawType t);
RawType raw_type_from_string(std::string_view text);

ScalarVolume load_raw(const std::filesystem::path& path);
LabelMap load_raw_labels(const std::filesystem::path& path);

/// Defaults: binary -> u8, instance-label -> i32, anything else -> f32.
void save_raw(const ScalarVolume& volume, const std::filesystem::path& path,
              std::optional<RawType> type = std::nullopt);
void save_raw(const LabelMap& volume, const std::filesystem::path& path,
              std::optional<RawType> type = std::nullopt);

/// Dispatches on extension: .nii / .nii.gz are NIfTI, .json / .bin are raw.
ScalarVolume load_volume(const std::filesystem::path& path, VolumeKind kind);
LabelMap load_label_map(const std::filesystem::path& path);

std::vector<InstanceMetadata> load_metadata(const std::filesystem::path& path);
std::vector<InstanceMetadata> parse_metadata(const std::string& csv_text,
                                             const std::string& source = "<memory>");
void save_metadata(const std::vector<InstanceMetadata>& rows, const std::filesystem::path& path);

/// Throws unless the positive labels present in `labels` and the metadata ids
/// are the same set.
void check_metadata_consistency(const LabelMap& labels, const std::vector<InstanceMetadata>& rows,
                                const std::string& context);

std::map<Label, double> confidences_of(const std::vector<InstanceMetadata>& rows, const std::string& context);
std::map<Label, FractureClass> classes_of(const std::vector<InstanceMetadata>& rows,
                                          const std::string& context);

}  // namespace ribeval
