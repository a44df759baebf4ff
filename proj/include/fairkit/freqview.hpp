#pragma once

#include <array>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace fairkit {

struct ImagePlane {
    int width = 0;
    int height = 0;
    std::vector<double> pixels;  // row-major, height * width

    ImagePlane() = default;
    ImagePlane(int h, int w, double fill = 0.0)
        : width(w), height(h), pixels(static_cast<std::size_t>(h) * static_cast<std::size_t>(w), fill) {}

    double& at(int y, int x) {
        return pixels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                      static_cast<std::size_t>(x)];
    }
    const double& at(int y, int x) const {
        return pixels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                      static_cast<std::size_t>(x)];
    }
};

// Multi-channel images are channel lists; RGB uses 3 equally sized planes.
using ChannelStack = std::vector<ImagePlane>;

// BT.601 luma: 0.299 R + 0.587 G + 0.114 B.
ImagePlane grayscale(const ChannelStack& rgb);

struct WaveletBands {
    ImagePlane cA;  // lowpass both axes
    ImagePlane cH;  // highpass along y (horizontal features)
    ImagePlane cV;  // highpass along x (vertical features)
    ImagePlane cD;  // highpass both axes
};

// orthonormal db4 analysis lowpass taps; highpass g[k] = (-1)^k h[7-k]
extern const std::array<double, 8> kDb4Lowpass;
std::array<double, 8> db4_highpass();

// Single-level separable 2-D db4 DWT, half-sample symmetric extension,
// critically sampled to ceil(n/2) coefficients per axis and band.
WaveletBands dwt2_db4(const ImagePlane& plane);

// Exact inverse of dwt2_db4 for the original height x width.
ImagePlane idwt2_db4(const WaveletBands& bands, int height, int width);

// Per-channel min-max normalized (cA, cH, cV); cD is dropped. A constant
// band (min = max) normalizes to all zeros.
ChannelStack frequency_view(const ImagePlane& gray);

// Batch variant; per_batch_normalization pools the min/max per channel
// across the whole batch instead of per image.
std::vector<ChannelStack> frequency_view_batch(const std::vector<ImagePlane>& grays,
                                               bool per_batch_normalization = false);

struct FusionGate {
    double w_fusion = 0.0;

    double alpha() const;  // 1 / (1 + exp(-w_fusion))
};

double fusion_alpha(double w_fusion);

struct EmbeddingPair {
    std::vector<double> f_s;
    std::vector<double> f_w;
    std::vector<double> z;  // concat(alpha * f_s, (1 - alpha) * f_w)
};

// z = concat(alpha * f_s, (1 - alpha) * f_w); lengths must match.
std::vector<double> fuse(const std::vector<double>& f_s, const std::vector<double>& f_w,
                         const FusionGate& gate);

// Opaque backbone stand-in: multi-channel image -> feature vector.
using EmbeddingProvider = std::function<std::vector<double>(const ChannelStack&)>;

EmbeddingPair embed_and_fuse(const ChannelStack& spatial, const ChannelStack& freq,
                             const EmbeddingProvider& provider, const FusionGate& gate);

// Batch assembly: spatial half first, then the frequency half (batch 2B).
std::vector<ChannelStack> concat_batch(const std::vector<ChannelStack>& spatial,
                                       const std::vector<ChannelStack>& freq);
std::pair<std::vector<ChannelStack>, std::vector<ChannelStack>> split_batch(
    const std::vector<ChannelStack>& combined);

}  // namespace fairkit
