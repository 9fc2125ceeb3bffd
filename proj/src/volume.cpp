#include "vascnet/volume.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "vascnet/parallel.hpp"

namespace vascnet {

namespace {
unsigned g_threads = 1;
}

unsigned thread_count() { return g_threads; }
void set_thread_count(unsigned n) { g_threads = std::max(1u, n); }

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Format: return "format";
        case ErrorKind::UnsupportedFormat: return "unsupported-format";
        case ErrorKind::Parameter: return "parameter";
        case ErrorKind::Io: return "io";
        case ErrorKind::Dimension: return "dimension";
        case ErrorKind::EmptyClass: return "empty-class";
        case ErrorKind::Degenerate: return "degenerate";
        case ErrorKind::Consistency: return "consistency";
        case ErrorKind::IncompleteLandmarks: return "incomplete-landmarks";
        case ErrorKind::Landmark: return "landmark";
        case ErrorKind::Ambiguity: return "ambiguity";
        case ErrorKind::NotFound: return "not-found";
        case ErrorKind::InsufficientScale: return "insufficient-scale";
        case ErrorKind::Undefined: return "undefined";
        case ErrorKind::Join: return "join";
        case ErrorKind::Bounds: return "bounds";
    }
    return "unknown";
}

const std::array<std::array<int, 3>, 26>& neighbor_offsets_26() {
    static const auto offsets = [] {
        std::array<std::array<int, 3>, 26> out{};
        int n = 0;
        for (int dz = -1; dz <= 1; ++dz)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx)
                    if (dx != 0 || dy != 0 || dz != 0) out[n++] = {dx, dy, dz};
        return out;
    }();
    return offsets;
}

const std::array<std::array<int, 3>, 6>& neighbor_offsets_6() {
    static const std::array<std::array<int, 3>, 6> offsets{
        {{0, 0, -1}, {0, -1, 0}, {-1, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    return offsets;
}

void validate_dims(const Dims& d) {
    if (d.nx <= 0 || d.ny <= 0 || d.nz <= 0) {
        std::ostringstream os;
        os << "invalid dims (" << d.nx << "," << d.ny << "," << d.nz << "): every axis must be positive";
        throw Error(ErrorKind::Parameter, os.str());
    }
}

void validate_spacing(const Spacing& s) {
    for (int a = 0; a < 3; ++a) {
        if (!(s[a] > 0.0) || !std::isfinite(s[a])) {
            throw Error(ErrorKind::Parameter, "spacing components must be positive and finite");
        }
    }
}

Volume3D::Volume3D(Dims dims, Spacing spacing, std::vector<float> data)
    : dims_(dims), spacing_(spacing), data_(std::move(data)) {
    validate_dims(dims_);
    validate_spacing(spacing_);
    if (data_.size() != dims_.count()) {
        throw Error(ErrorKind::Dimension, "data length " + std::to_string(data_.size()) +
                                              " does not match dims product " +
                                              std::to_string(dims_.count()));
    }
    const auto [lo, hi] = std::minmax_element(data_.begin(), data_.end());
    min_ = *lo;
    max_ = *hi;
}

BinaryVolume::BinaryVolume(Dims dims, Spacing spacing)
    : dims_(dims), spacing_(spacing) {
    validate_dims(dims_);
    validate_spacing(spacing_);
    bits_.assign(dims_.count(), 0);
}

BinaryVolume::BinaryVolume(Dims dims, Spacing spacing, std::vector<std::uint8_t> bits)
    : dims_(dims), spacing_(spacing), bits_(std::move(bits)) {
    validate_dims(dims_);
    validate_spacing(spacing_);
    if (bits_.size() != dims_.count()) {
        throw Error(ErrorKind::Dimension, "bit count does not match dims product");
    }
    for (auto& b : bits_) b = b ? 1 : 0;
}

std::size_t BinaryVolume::foreground_count() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::vector<std::size_t> BinaryVolume::foreground_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < bits_.size(); ++i)
        if (bits_[i]) out.push_back(i);
    return out;
}

void LabelMap::validate(int k) const {
    if (labels.size() != dims.count() || mask.size() != dims.count()) {
        throw Error(ErrorKind::Dimension, "label map and mask must match dims");
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (mask[i] && (labels[i] < 1 || labels[i] > k)) {
            throw Error(ErrorKind::Parameter,
                        "masked voxel " + std::to_string(i) + " has label outside 1.." + std::to_string(k));
        }
    }
}

Volume3D to_volume(const BinaryVolume& bin) {
    std::vector<float> data(bin.size());
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = bin[i] ? 1.0f : 0.0f;
    return Volume3D(bin.dims(), bin.spacing(), std::move(data));
}

BinaryVolume foreground_of(const LabelMap& labels, Spacing spacing, std::uint8_t cls) {
    std::vector<std::uint8_t> bits(labels.labels.size());
    for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = (labels.mask[i] && labels.labels[i] == cls) ? 1 : 0;
    return BinaryVolume(labels.dims, spacing, std::move(bits));
}

// ---------------------------------------------------------------------------
// Raw interchange: JSON sidecar + little-endian blob next to it.

namespace {

void write_blob(const std::filesystem::path& path, const void* data, std::size_t bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot open for writing: " + path.string());
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
    if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

std::vector<char> read_all(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open: " + path.string());
    return std::vector<char>((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_raw(const Dims& dims, const Spacing& sp, const std::string& dtype, const void* data,
               std::size_t bytes, const std::filesystem::path& sidecar) {
    auto blob = sidecar;
    blob.replace_extension(".raw");
    nlohmann::json j;
    j["dims"] = {dims.nx, dims.ny, dims.nz};
    j["spacing"] = {sp.x, sp.y, sp.z};
    j["dtype"] = dtype;
    j["order"] = "x-fastest";
    j["byte_order"] = "little";
    j["data"] = blob.filename().string();
    std::ofstream out(sidecar);
    if (!out) throw Error(ErrorKind::Io, "cannot open for writing: " + sidecar.string());
    out << j.dump(2) << "\n";
    write_blob(blob, data, bytes);
}

Volume3D read_raw(const std::filesystem::path& sidecar) {
    nlohmann::json j;
    try {
        std::ifstream in(sidecar);
        if (!in) throw Error(ErrorKind::Io, "cannot open: " + sidecar.string());
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Format, "raw sidecar is not valid JSON: " + std::string(e.what()));
    }
    auto field = [&](const char* name) -> const nlohmann::json& {
        if (!j.contains(name)) throw Error(ErrorKind::Format, std::string("raw sidecar missing field '") + name + "'");
        return j.at(name);
    };
    Dims dims;
    Spacing sp;
    try {
        const auto& d = field("dims");
        const auto& s = field("spacing");
        if (d.size() != 3) throw Error(ErrorKind::Format, "raw sidecar field 'dims' must have 3 entries");
        if (s.size() != 3) throw Error(ErrorKind::Format, "raw sidecar field 'spacing' must have 3 entries");
        dims = {d[0].get<std::int64_t>(), d[1].get<std::int64_t>(), d[2].get<std::int64_t>()};
        sp = {s[0].get<double>(), s[1].get<double>(), s[2].get<double>()};
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Format, std::string("raw sidecar dims/spacing malformed: ") + e.what());
    }
    if (dims.nx <= 0 || dims.ny <= 0 || dims.nz <= 0) throw Error(ErrorKind::Format, "raw sidecar field 'dims' must be positive");
    if (!(sp.x > 0 && sp.y > 0 && sp.z > 0)) throw Error(ErrorKind::Format, "raw sidecar field 'spacing' must be positive");
    const std::string dtype = field("dtype").get<std::string>();
    if (j.value("order", "x-fastest") != "x-fastest") throw Error(ErrorKind::UnsupportedFormat, "only x-fastest order is supported");
    if (j.value("byte_order", "little") != "little") throw Error(ErrorKind::UnsupportedFormat, "only little-endian blobs are supported");
    auto blob_path = sidecar.parent_path() / field("data").get<std::string>();
    const auto bytes = read_all(blob_path);
    const std::size_t n = dims.count();
    std::vector<float> data(n);
    auto expect = [&](std::size_t width) {
        if (bytes.size() != n * width) {
            throw Error(ErrorKind::Format, "raw blob size " + std::to_string(bytes.size()) + " does not match dims x dtype");
        }
    };
    if (dtype == "uint8") {
        expect(1);
        for (std::size_t i = 0; i < n; ++i) data[i] = static_cast<unsigned char>(bytes[i]);
    } else if (dtype == "int16") {
        expect(2);
        for (std::size_t i = 0; i < n; ++i) {
            std::int16_t v;
            std::memcpy(&v, bytes.data() + 2 * i, 2);
            data[i] = v;
        }
    } else if (dtype == "float32") {
        expect(4);
        std::memcpy(data.data(), bytes.data(), 4 * n);
    } else {
        throw Error(ErrorKind::UnsupportedFormat, "unsupported raw dtype '" + dtype + "'");
    }
    return Volume3D(dims, sp, std::move(data));
}

bool has_ext(const std::filesystem::path& p, const char* ext) {
    auto e = p.extension().string();
    std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
    return e == ext;
}

}  // namespace

// Implemented in nifti.cpp.
Volume3D read_nifti(const std::filesystem::path& path);
void write_nifti(const Dims& dims, const Spacing& sp, int datatype, const void* data, std::size_t bytes,
                 const std::filesystem::path& path);

Volume3D read_volume(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw Error(ErrorKind::Io, "no such file: " + path.string());
    if (has_ext(path, ".nii")) return read_nifti(path);
    if (has_ext(path, ".json")) return read_raw(path);
    throw Error(ErrorKind::UnsupportedFormat, "unrecognised volume extension: " + path.string());
}

void write_volume(const Volume3D& vol, const std::filesystem::path& path) {
    validate_dims(vol.dims());
    const auto bytes = vol.size() * sizeof(float);
    if (has_ext(path, ".nii")) {
        write_nifti(vol.dims(), vol.spacing(), 16, vol.data().data(), bytes, path);
    } else if (has_ext(path, ".json")) {
        write_raw(vol.dims(), vol.spacing(), "float32", vol.data().data(), bytes, path);
    } else {
        throw Error(ErrorKind::UnsupportedFormat, "unrecognised volume extension: " + path.string());
    }
}

void write_volume(const BinaryVolume& vol, const std::filesystem::path& path) {
    validate_dims(vol.dims());
    if (has_ext(path, ".nii")) {
        write_nifti(vol.dims(), vol.spacing(), 2, vol.bits().data(), vol.size(), path);
    } else if (has_ext(path, ".json")) {
        write_raw(vol.dims(), vol.spacing(), "uint8", vol.bits().data(), vol.size(), path);
    } else {
        throw Error(ErrorKind::UnsupportedFormat, "unrecognised volume extension: " + path.string());
    }
}

BinaryVolume read_binary_volume(const std::filesystem::path& path) {
    const auto v = read_volume(path);
    std::vector<std::uint8_t> bits(v.size());
    for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = v[i] >= 0.5f ? 1 : 0;
    return BinaryVolume(v.dims(), v.spacing(), std::move(bits));
}

// ---------------------------------------------------------------------------
// Resampling

namespace {

double sample_index_space(const Volume3D& vol, double u, double v, double w) {
    const auto& d = vol.dims();
    auto split = [](double c, std::int64_t n, std::int64_t& i0, std::int64_t& i1, double& f) {
        c = std::clamp(c, 0.0, static_cast<double>(n - 1));
        i0 = static_cast<std::int64_t>(std::floor(c));
        i1 = std::min(i0 + 1, n - 1);
        f = c - static_cast<double>(i0);
    };
    std::int64_t x0, x1, y0, y1, z0, z1;
    double fx, fy, fz;
    split(u, d.nx, x0, x1, fx);
    split(v, d.ny, y0, y1, fy);
    split(w, d.nz, z0, z1, fz);
    auto at = [&](std::int64_t x, std::int64_t y, std::int64_t z) { return static_cast<double>(vol.at(x, y, z)); };
    const double c00 = at(x0, y0, z0) * (1 - fx) + at(x1, y0, z0) * fx;
    const double c10 = at(x0, y1, z0) * (1 - fx) + at(x1, y1, z0) * fx;
    const double c01 = at(x0, y0, z1) * (1 - fx) + at(x1, y0, z1) * fx;
    const double c11 = at(x0, y1, z1) * (1 - fx) + at(x1, y1, z1) * fx;
    const double c0 = c00 * (1 - fy) + c10 * fy;
    const double c1 = c01 * (1 - fy) + c11 * fy;
    return c0 * (1 - fz) + c1 * fz;
}

Dims isotropic_dims(const Dims& d, const Spacing& s, double target) {
    if (!(target > 0.0) || !std::isfinite(target)) throw Error(ErrorKind::Parameter, "target spacing must be positive");
    Dims out;
    std::int64_t* o[3] = {&out.nx, &out.ny, &out.nz};
    for (int a = 0; a < 3; ++a) {
        const double extent = static_cast<double>(d[a]) * s[a];
        if (target > extent) {
            throw Error(ErrorKind::Degenerate, "target spacing " + std::to_string(target) +
                                                   " mm exceeds the physical extent along axis " + std::to_string(a));
        }
        *o[a] = std::max<std::int64_t>(1, std::llround(extent / target));
    }
    return out;
}

}  // namespace

double sample_trilinear(const Volume3D& vol, const Vec3& p) {
    const auto& s = vol.spacing();
    return sample_index_space(vol, p.x / s.x, p.y / s.y, p.z / s.z);
}

Volume3D resample_isotropic(const Volume3D& vol, double target_mm) {
    const Dims out_dims = isotropic_dims(vol.dims(), vol.spacing(), target_mm);
    const Spacing out_sp{target_mm, target_mm, target_mm};
    if (out_sp == vol.spacing() && out_dims == vol.dims()) {
        return vol;
    }
    const auto& s = vol.spacing();
    std::vector<float> out(out_dims.count());
    // Voxel boxes are aligned at the volume edge: output voxel j covers
    // [j t, (j+1) t) and samples the input at the same physical box center.
    parallel_for(static_cast<std::size_t>(out_dims.nz), [&](std::size_t zb, std::size_t ze) {
        for (auto z = static_cast<std::int64_t>(zb); z < static_cast<std::int64_t>(ze); ++z) {
            const double w = (static_cast<double>(z) + 0.5) * target_mm / s.z - 0.5;
            for (std::int64_t y = 0; y < out_dims.ny; ++y) {
                const double v = (static_cast<double>(y) + 0.5) * target_mm / s.y - 0.5;
                for (std::int64_t x = 0; x < out_dims.nx; ++x) {
                    const double u = (static_cast<double>(x) + 0.5) * target_mm / s.x - 0.5;
                    out[linear_index(out_dims, x, y, z)] = static_cast<float>(sample_index_space(vol, u, v, w));
                }
            }
        }
    });
    return Volume3D(out_dims, out_sp, std::move(out));
}

BinaryVolume resample_isotropic(const BinaryVolume& vol, double target_mm) {
    const auto fine = resample_isotropic(to_volume(vol), target_mm);
    std::vector<std::uint8_t> bits(fine.size());
    for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = fine[i] >= 0.5f ? 1 : 0;
    return BinaryVolume(fine.dims(), fine.spacing(), std::move(bits));
}

// ---------------------------------------------------------------------------
// Initial threshold

std::vector<std::uint8_t> default_mask(const Volume3D& vol) {
    std::vector<std::uint8_t> mask(vol.size());
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = vol[i] != 0.0f ? 1 : 0;
    return mask;
}

LabelMap threshold_initial(const Volume3D& vol, double percentile,
                           std::optional<std::vector<std::uint8_t>> mask) {
    if (!(percentile > 0.0 && percentile < 1.0)) {
        throw Error(ErrorKind::Parameter, "percentile must lie in (0,1), got " + std::to_string(percentile));
    }
    LabelMap out;
    out.dims = vol.dims();
    out.mask = mask ? std::move(*mask) : default_mask(vol);
    if (out.mask.size() != vol.size()) throw Error(ErrorKind::Dimension, "mask dims differ from volume dims");

    std::vector<float> values;
    values.reserve(vol.size());
    for (std::size_t i = 0; i < vol.size(); ++i)
        if (out.mask[i]) values.push_back(vol[i]);
    if (values.empty()) throw Error(ErrorKind::Parameter, "mask is empty");
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    if (*lo == *hi) throw Error(ErrorKind::Parameter, "threshold needs at least two distinct intensities");

    const auto n = values.size();
    auto rank = static_cast<std::size_t>(std::ceil(percentile * static_cast<double>(n) - 1e-9));
    rank = std::min(rank, n - 1);
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(rank), values.end());
    const float threshold = values[rank];

    out.labels.assign(vol.size(), 0);
    for (std::size_t i = 0; i < vol.size(); ++i) {
        if (out.mask[i]) out.labels[i] = vol[i] >= threshold ? 2 : 1;
    }
    return out;
}

}  // namespace vascnet
