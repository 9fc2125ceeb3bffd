#include <gtest/gtest.h>

#include <fstream>

#include "test_util.hpp"
#include "vascnet/volume.hpp"

using namespace vascnet;

namespace {

Volume3D ramp(Dims d, Spacing s) {
    std::vector<float> v(d.count());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(i) * 0.5f - 3.0f;
    return Volume3D(d, s, std::move(v));
}

}  // namespace

TEST(VolumeIo, NiftiRoundTripIsBitExact) {
    test::TempDir tmp("vol");
    const Volume3D v = ramp({2, 2, 2}, {0.5, 0.75, 1.25});
    write_volume(v, tmp / "v.nii");
    const Volume3D r = read_volume(tmp / "v.nii");
    EXPECT_EQ(r.dims(), v.dims());
    EXPECT_EQ(r.spacing(), v.spacing());
    ASSERT_EQ(r.size(), v.size());
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(r[i], v[i]);
}

TEST(VolumeIo, RawSidecarRoundTrip) {
    test::TempDir tmp("vol");
    const Volume3D v = ramp({3, 4, 5}, {1, 2, 3});
    write_volume(v, tmp / "v.json");
    const Volume3D r = read_volume(tmp / "v.json");
    EXPECT_EQ(r.dims(), v.dims());
    EXPECT_EQ(r.spacing(), v.spacing());
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(r[i], v[i]);
}

TEST(VolumeIo, HeaderSpacingIsPreserved) {
    test::TempDir tmp("vol");
    const Volume3D v(Dims{64, 64, 40}, Spacing{0.52, 0.52, 0.8}, std::vector<float>(64 * 64 * 40, 1.0f));
    write_volume(v, tmp / "h.nii");
    const Volume3D r = read_volume(tmp / "h.nii");
    EXPECT_EQ(r.dims(), (Dims{64, 64, 40}));
    EXPECT_NEAR(r.spacing().x, 0.52, 1e-6);
    EXPECT_NEAR(r.spacing().y, 0.52, 1e-6);
    EXPECT_NEAR(r.spacing().z, 0.8, 1e-6);
}

TEST(VolumeIo, BadMagicIsFormatError) {
    test::TempDir tmp("vol");
    write_volume(ramp({2, 2, 2}, {}), tmp / "m.nii");
    {
        std::fstream f(tmp / "m.nii", std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(344);
        f.write("ni1\0", 4);
    }
    try {
        read_volume(tmp / "m.nii");
        FAIL() << "expected a format error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Format);
        EXPECT_NE(std::string(e.what()).find("magic"), std::string::npos);
    }
}

TEST(VolumeIo, BinaryVolumeKeepsForegroundCount) {
    test::TempDir tmp("vol");
    std::mt19937_64 rng(3);
    BinaryVolume b = test::random_mask({7, 5, 6}, 0.3, rng);
    write_volume(b, tmp / "b.nii");
    const BinaryVolume r = read_binary_volume(tmp / "b.nii");
    EXPECT_EQ(r.foreground_count(), b.foreground_count());
    EXPECT_TRUE(r == b);
}

TEST(VolumeIo, ZeroDimsRejected) {
    EXPECT_THROW(Volume3D(Dims{0, 2, 2}, Spacing{}, {}), Error);
    EXPECT_THROW(validate_dims(Dims{3, 0, 1}), Error);
}

TEST(VolumeIo, UnknownExtension) {
    test::TempDir tmp("vol");
    std::ofstream(tmp / "volume.mhd") << "x";
    EXPECT_THROW(read_volume(tmp / "missing.nii"), Error);
    try {
        read_volume(tmp / "volume.mhd");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::UnsupportedFormat);
    }
}

TEST(Resample, IdentityAtTargetSpacing) {
    const Volume3D v = ramp({4, 3, 5}, {0.5, 0.5, 0.5});
    const Volume3D r = resample_isotropic(v, 0.5);
    EXPECT_EQ(r.dims(), v.dims());
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(r[i], v[i]);
}

TEST(Resample, AnisotropicDims) {
    const Volume3D v = ramp({10, 10, 10}, {1, 1, 2});
    const Volume3D r = resample_isotropic(v, 1.0);
    EXPECT_EQ(r.dims(), (Dims{10, 10, 20}));
    EXPECT_EQ(r.spacing(), (Spacing{1, 1, 1}));
}

TEST(Resample, TrilinearMidpoint) {
    const Volume3D v(Dims{2, 1, 1}, Spacing{2, 1, 1}, {0.0f, 10.0f});
    EXPECT_DOUBLE_EQ(sample_trilinear(v, {1.0, 0, 0}), 5.0);
    EXPECT_DOUBLE_EQ(sample_trilinear(v, {-4.0, 0, 0}), 0.0);
    EXPECT_DOUBLE_EQ(sample_trilinear(v, {9.0, 0, 0}), 10.0);
}

TEST(Resample, BinaryRethreshold) {
    BinaryVolume b(Dims{4, 4, 2}, Spacing{1, 1, 2});
    for (int x = 0; x < 4; ++x)
        for (int y = 0; y < 4; ++y) b.set(x, y, 0, true);
    const BinaryVolume r = resample_isotropic(b, 1.0);
    EXPECT_EQ(r.dims(), (Dims{4, 4, 4}));
    EXPECT_TRUE(r.at(0, 0, 0));
    EXPECT_FALSE(r.at(0, 0, 3));
}

TEST(Threshold, ConstantImageRejected) {
    const Volume3D v(Dims{3, 3, 3}, Spacing{}, std::vector<float>(27, 4.0f));
    EXPECT_THROW(threshold_initial(v, 0.95), Error);
}

TEST(Threshold, TopFivePercent) {
    std::vector<float> vals(100);
    for (int i = 0; i < 100; ++i) vals[i] = static_cast<float>(i + 1);
    const Volume3D v(Dims{10, 10, 1}, Spacing{}, vals);
    const LabelMap lm = threshold_initial(v, 0.95);
    int vessel = 0;
    for (std::size_t i = 0; i < 100; ++i) {
        if (lm.labels[i] == 2) {
            ++vessel;
            EXPECT_GE(vals[i], 96.0f);
        } else {
            EXPECT_EQ(lm.labels[i], 1);
        }
    }
    EXPECT_EQ(vessel, 5);
}

TEST(Threshold, PercentileRange) {
    const Volume3D v = ramp({3, 3, 3}, {});
    EXPECT_THROW(threshold_initial(v, 1.0), Error);
    EXPECT_THROW(threshold_initial(v, 0.0), Error);
}
