// NIfTI-1 single-file (.nii) subset: dim, pixdim, datatype (uint8, int16,
// float32), scl_slope/scl_inter and the "n+1" magic. Everything else is
// ignored on read and zeroed on write.

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

#include "vascnet/volume.hpp"

namespace vascnet {

namespace {

constexpr int kHeaderSize = 348;
constexpr int kVoxOffset = 352;

constexpr int kOffDim = 40;
constexpr int kOffDatatype = 70;
constexpr int kOffBitpix = 72;
constexpr int kOffPixdim = 76;
constexpr int kOffVoxOffset = 108;
constexpr int kOffSclSlope = 112;
constexpr int kOffSclInter = 116;
constexpr int kOffMagic = 344;

constexpr int kDtUint8 = 2;
constexpr int kDtInt16 = 4;
constexpr int kDtFloat32 = 16;

template <typename T>
T load(const unsigned char* p, bool swap) {
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, p, sizeof(T));
    if (swap) std::reverse(buf, buf + sizeof(T));
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
}

template <typename T>
void store(unsigned char* p, T v) {
    std::memcpy(p, &v, sizeof(T));
}

}  // namespace

Volume3D read_nifti(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open: " + path.string());
    std::vector<unsigned char> hdr(kHeaderSize);
    in.read(reinterpret_cast<char*>(hdr.data()), kHeaderSize);
    if (in.gcount() != kHeaderSize) throw Error(ErrorKind::Format, "NIfTI header truncated (sizeof_hdr)");

    bool swap = false;
    const auto sizeof_hdr = load<std::int32_t>(hdr.data(), false);
    if (sizeof_hdr != kHeaderSize) {
        if (load<std::int32_t>(hdr.data(), true) == kHeaderSize) {
            swap = true;
        } else {
            throw Error(ErrorKind::Format, "NIfTI field 'sizeof_hdr' must be 348");
        }
    }
    if (std::memcmp(hdr.data() + kOffMagic, "n+1\0", 4) != 0) {
        throw Error(ErrorKind::Format, "NIfTI field 'magic' must be \"n+1\" (single-file NIfTI-1)");
    }

    std::int16_t dim[8];
    for (int i = 0; i < 8; ++i) dim[i] = load<std::int16_t>(hdr.data() + kOffDim + 2 * i, swap);
    if (dim[0] < 1 || dim[0] > 7) throw Error(ErrorKind::Format, "NIfTI field 'dim[0]' out of range");
    for (int i = 4; i <= dim[0]; ++i) {
        if (dim[i] > 1) throw Error(ErrorKind::UnsupportedFormat, "NIfTI field 'dim': only 3D volumes are supported");
    }
    Dims dims{dim[1], dim[0] >= 2 ? dim[2] : 1, dim[0] >= 3 ? dim[3] : 1};
    if (dims.nx <= 0 || dims.ny <= 0 || dims.nz <= 0) throw Error(ErrorKind::Format, "NIfTI field 'dim' has a non-positive extent");

    float pixdim[8];
    for (int i = 0; i < 8; ++i) pixdim[i] = load<float>(hdr.data() + kOffPixdim + 4 * i, swap);
    Spacing sp{pixdim[1], dim[0] >= 2 ? pixdim[2] : 1.0, dim[0] >= 3 ? pixdim[3] : 1.0};
    for (int a = 0; a < 3; ++a) {
        if (!(sp[a] > 0.0) || !std::isfinite(sp[a])) throw Error(ErrorKind::Format, "NIfTI field 'pixdim' must be positive");
    }

    const auto datatype = load<std::int16_t>(hdr.data() + kOffDatatype, swap);
    int width = 0;
    switch (datatype) {
        case kDtUint8: width = 1; break;
        case kDtInt16: width = 2; break;
        case kDtFloat32: width = 4; break;
        default:
            throw Error(ErrorKind::UnsupportedFormat, "NIfTI datatype code " + std::to_string(datatype) + " is not supported");
    }
    const float vox_offset = load<float>(hdr.data() + kOffVoxOffset, swap);
    if (!(vox_offset >= static_cast<float>(kHeaderSize))) throw Error(ErrorKind::Format, "NIfTI field 'vox_offset' is invalid");
    const float slope = load<float>(hdr.data() + kOffSclSlope, swap);
    const float inter = load<float>(hdr.data() + kOffSclInter, swap);
    const bool scaled = slope != 0.0f && std::isfinite(slope) && !(slope == 1.0f && inter == 0.0f);

    const std::size_t n = dims.count();
    std::vector<unsigned char> raw(n * static_cast<std::size_t>(width));
    in.seekg(static_cast<std::streamoff>(vox_offset));
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) throw Error(ErrorKind::Format, "NIfTI data truncated");

    std::vector<float> data(n);
    for (std::size_t i = 0; i < n; ++i) {
        const unsigned char* p = raw.data() + i * static_cast<std::size_t>(width);
        float v = 0.0f;
        switch (datatype) {
            case kDtUint8: v = static_cast<float>(*p); break;
            case kDtInt16: v = static_cast<float>(load<std::int16_t>(p, swap)); break;
            case kDtFloat32: v = load<float>(p, swap); break;
        }
        data[i] = scaled ? v * slope + inter : v;
    }
    return Volume3D(dims, sp, std::move(data));
}

void write_nifti(const Dims& dims, const Spacing& sp, int datatype, const void* data, std::size_t bytes,
                 const std::filesystem::path& path) {
    validate_dims(dims);
    if (dims.nx > 32767 || dims.ny > 32767 || dims.nz > 32767) {
        throw Error(ErrorKind::UnsupportedFormat, "NIfTI-1 dims are limited to 32767 per axis");
    }
    std::vector<unsigned char> hdr(kVoxOffset, 0);
    store<std::int32_t>(hdr.data(), kHeaderSize);
    const std::int16_t dim[8] = {3, static_cast<std::int16_t>(dims.nx), static_cast<std::int16_t>(dims.ny),
                                 static_cast<std::int16_t>(dims.nz), 1, 1, 1, 1};
    for (int i = 0; i < 8; ++i) store<std::int16_t>(hdr.data() + kOffDim + 2 * i, dim[i]);
    store<std::int16_t>(hdr.data() + kOffDatatype, static_cast<std::int16_t>(datatype));
    store<std::int16_t>(hdr.data() + kOffBitpix, static_cast<std::int16_t>(datatype == kDtUint8 ? 8 : datatype == kDtInt16 ? 16 : 32));
    const float pixdim[8] = {1.0f, static_cast<float>(sp.x), static_cast<float>(sp.y), static_cast<float>(sp.z), 0, 0, 0, 0};
    for (int i = 0; i < 8; ++i) store<float>(hdr.data() + kOffPixdim + 4 * i, pixdim[i]);
    store<float>(hdr.data() + kOffVoxOffset, static_cast<float>(kVoxOffset));
    store<float>(hdr.data() + kOffSclSlope, 1.0f);
    store<float>(hdr.data() + kOffSclInter, 0.0f);
    std::memcpy(hdr.data() + kOffMagic, "n+1\0", 4);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot open for writing: " + path.string());
    out.write(reinterpret_cast<const char*>(hdr.data()), static_cast<std::streamsize>(hdr.size()));
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
    if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

}  // namespace vascnet
