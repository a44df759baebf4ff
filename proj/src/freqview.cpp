#include "fairkit/freqview.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>

#include <Eigen/Dense>

#include "fairkit/errors.hpp"

namespace fairkit {

const std::array<double, 8> kDb4Lowpass{
    0.23037781330885523,  0.7148465705525415,   0.6308807679295904,  -0.02798376941698385,
    -0.18703481171888114, 0.030841381835986965, 0.032883011666982945, -0.010597401784997278};

std::array<double, 8> db4_highpass() {
    std::array<double, 8> g{};
    for (int k = 0; k < 8; ++k)
        g[k] = (k % 2 == 0 ? 1.0 : -1.0) * kDb4Lowpass[static_cast<std::size_t>(7 - k)];
    return g;
}

namespace {

constexpr int kTaps = 8;
// Filter phase offset; the only alignment whose critically sampled
// symmetric-extension analysis map stays invertible for every length.
constexpr int kPhase = 3;

// half-sample symmetric extension: ..., x1, x0 | x0 .. x_{n-1} | x_{n-1}, ...
int ext_index(int j, int n) {
    while (j < 0 || j >= n) {
        if (j < 0)
            j = -1 - j;
        else
            j = 2 * n - 1 - j;
    }
    return j;
}

int half_len(int n) { return (n + 1) / 2; }

void check_plane(const ImagePlane& plane) {
    if (plane.width < kTaps || plane.height < kTaps)
        throw ValidationError("wavelet: plane must be at least 8x8");
    if (plane.pixels.size() !=
        static_cast<std::size_t>(plane.width) * static_cast<std::size_t>(plane.height))
        throw ValidationError("wavelet: pixel buffer does not match dimensions");
    for (double v : plane.pixels)
        if (!std::isfinite(v)) throw ValidationError("wavelet: non-finite pixel");
}

// lo/hi analysis of one strided signal
void dwt1(const double* x, int n, int stride, double* lo, double* hi, int out_stride) {
    const auto g = db4_highpass();
    const int m = half_len(n);
    for (int i = 0; i < m; ++i) {
        double a = 0.0;
        double d = 0.0;
        for (int k = 0; k < kTaps; ++k) {
            const double v = x[static_cast<std::ptrdiff_t>(ext_index(2 * i + k - kPhase, n)) * stride];
            a += kDb4Lowpass[static_cast<std::size_t>(k)] * v;
            d += g[static_cast<std::size_t>(k)] * v;
        }
        lo[static_cast<std::ptrdiff_t>(i) * out_stride] = a;
        hi[static_cast<std::ptrdiff_t>(i) * out_stride] = d;
    }
}

// The critically sampled analysis operator is a (2m x n) matrix; the
// inverse solves it directly (square LU for even n, least squares for the
// one-row-tall odd case). Factorizations are cached per length.
struct InverseSolver {
    bool square = false;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr;
};

Eigen::MatrixXd analysis_matrix(int n) {
    const auto g = db4_highpass();
    const int m = half_len(n);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * m, n);
    for (int i = 0; i < m; ++i) {
        for (int k = 0; k < kTaps; ++k) {
            const int j = ext_index(2 * i + k - kPhase, n);
            a(i, j) += kDb4Lowpass[static_cast<std::size_t>(k)];
            a(m + i, j) += g[static_cast<std::size_t>(k)];
        }
    }
    return a;
}

const InverseSolver& solver_for(int n) {
    static std::mutex mutex;
    static std::map<int, std::unique_ptr<InverseSolver>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(n);
    if (it == cache.end()) {
        auto solver = std::make_unique<InverseSolver>();
        Eigen::MatrixXd a = analysis_matrix(n);
        solver->square = a.rows() == a.cols();
        if (solver->square)
            solver->lu.compute(a);
        else
            solver->qr.compute(a);
        it = cache.emplace(n, std::move(solver)).first;
    }
    return *it->second;
}

// inverse of dwt1: recover the length-n signal from its lo/hi halves
void idwt1(const double* lo, const double* hi, int in_stride, int n, double* x, int stride) {
    const int m = half_len(n);
    Eigen::VectorXd y(2 * m);
    for (int i = 0; i < m; ++i) {
        y(i) = lo[static_cast<std::ptrdiff_t>(i) * in_stride];
        y(m + i) = hi[static_cast<std::ptrdiff_t>(i) * in_stride];
    }
    const InverseSolver& solver = solver_for(n);
    Eigen::VectorXd sol;
    if (solver.square)
        sol = solver.lu.solve(y);
    else
        sol = solver.qr.solve(y);
    for (int j = 0; j < n; ++j) x[static_cast<std::ptrdiff_t>(j) * stride] = sol(j);
}

ImagePlane normalize_minmax(const ImagePlane& plane, double lo, double hi) {
    ImagePlane out(plane.height, plane.width);
    if (!(hi > lo)) return out;  // degenerate band carries no texture
    const double span = hi - lo;
    for (std::size_t i = 0; i < plane.pixels.size(); ++i)
        out.pixels[i] = (plane.pixels[i] - lo) / span;
    return out;
}

std::pair<double, double> plane_range(const ImagePlane& plane) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (double v : plane.pixels) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return {lo, hi};
}

}  // namespace

ImagePlane grayscale(const ChannelStack& rgb) {
    if (rgb.size() != 3) throw ValidationError("grayscale: expected exactly 3 channels");
    const ImagePlane& r = rgb[0];
    for (const auto& c : rgb) {
        if (c.width != r.width || c.height != r.height)
            throw ValidationError("grayscale: channel dimensions disagree");
        for (double v : c.pixels)
            if (!(v >= 0.0 && v <= 1.0))
                throw ValidationError("grayscale: pixel values must lie in [0, 1]");
    }
    ImagePlane out(r.height, r.width);
    for (std::size_t i = 0; i < out.pixels.size(); ++i)
        out.pixels[i] = 0.299 * rgb[0].pixels[i] + 0.587 * rgb[1].pixels[i] +
                        0.114 * rgb[2].pixels[i];
    return out;
}

WaveletBands dwt2_db4(const ImagePlane& plane) {
    check_plane(plane);
    const int h = plane.height;
    const int w = plane.width;
    const int mw = half_len(w);
    const int mh = half_len(h);

    // rows first: lowpass/highpass along x
    ImagePlane low_x(h, mw);
    ImagePlane high_x(h, mw);
    for (int y = 0; y < h; ++y)
        dwt1(&plane.pixels[static_cast<std::size_t>(y) * static_cast<std::size_t>(w)], w, 1,
             &low_x.at(y, 0), &high_x.at(y, 0), 1);

    // then columns: lowpass/highpass along y
    WaveletBands bands{ImagePlane(mh, mw), ImagePlane(mh, mw), ImagePlane(mh, mw),
                       ImagePlane(mh, mw)};
    for (int x = 0; x < mw; ++x) {
        dwt1(&low_x.at(0, x), h, mw, &bands.cA.at(0, x), &bands.cH.at(0, x), mw);
        dwt1(&high_x.at(0, x), h, mw, &bands.cV.at(0, x), &bands.cD.at(0, x), mw);
    }
    return bands;
}

ImagePlane idwt2_db4(const WaveletBands& bands, int height, int width) {
    const int mw = half_len(width);
    const int mh = half_len(height);
    for (const ImagePlane* band : {&bands.cA, &bands.cH, &bands.cV, &bands.cD})
        if (band->width != mw || band->height != mh)
            throw ValidationError("wavelet inverse: band dimensions do not match the target size");
    if (width < kTaps || height < kTaps)
        throw ValidationError("wavelet inverse: target must be at least 8x8");

    // undo the column pass
    ImagePlane low_x(height, mw);
    ImagePlane high_x(height, mw);
    for (int x = 0; x < mw; ++x) {
        idwt1(&bands.cA.at(0, x), &bands.cH.at(0, x), mw, height, &low_x.at(0, x), mw);
        idwt1(&bands.cV.at(0, x), &bands.cD.at(0, x), mw, height, &high_x.at(0, x), mw);
    }
    // then the row pass
    ImagePlane out(height, width);
    for (int y = 0; y < height; ++y)
        idwt1(&low_x.at(y, 0), &high_x.at(y, 0), 1, width, &out.at(y, 0), 1);
    return out;
}

ChannelStack frequency_view(const ImagePlane& gray) {
    const WaveletBands bands = dwt2_db4(gray);
    ChannelStack out;
    for (const ImagePlane* band : {&bands.cA, &bands.cH, &bands.cV}) {
        auto [lo, hi] = plane_range(*band);
        out.push_back(normalize_minmax(*band, lo, hi));
    }
    return out;
}

std::vector<ChannelStack> frequency_view_batch(const std::vector<ImagePlane>& grays,
                                               bool per_batch_normalization) {
    if (!per_batch_normalization) {
        std::vector<ChannelStack> out;
        out.reserve(grays.size());
        for (const auto& g : grays) out.push_back(frequency_view(g));
        return out;
    }

    std::vector<WaveletBands> decomposed;
    decomposed.reserve(grays.size());
    std::array<double, 3> lo{};
    std::array<double, 3> hi{};
    lo.fill(std::numeric_limits<double>::infinity());
    hi.fill(-std::numeric_limits<double>::infinity());
    for (const auto& g : grays) {
        decomposed.push_back(dwt2_db4(g));
        const std::array<const ImagePlane*, 3> bands{&decomposed.back().cA, &decomposed.back().cH,
                                                     &decomposed.back().cV};
        for (std::size_t b = 0; b < 3; ++b) {
            auto [l, h] = plane_range(*bands[b]);
            lo[b] = std::min(lo[b], l);
            hi[b] = std::max(hi[b], h);
        }
    }
    std::vector<ChannelStack> out;
    out.reserve(grays.size());
    for (const auto& bands : decomposed) {
        const std::array<const ImagePlane*, 3> chans{&bands.cA, &bands.cH, &bands.cV};
        ChannelStack stack;
        for (std::size_t b = 0; b < 3; ++b)
            stack.push_back(normalize_minmax(*chans[b], lo[b], hi[b]));
        out.push_back(std::move(stack));
    }
    return out;
}

double fusion_alpha(double w_fusion) { return 1.0 / (1.0 + std::exp(-w_fusion)); }

double FusionGate::alpha() const { return fusion_alpha(w_fusion); }

std::vector<double> fuse(const std::vector<double>& f_s, const std::vector<double>& f_w,
                         const FusionGate& gate) {
    if (f_s.size() != f_w.size()) throw ValidationError("fuse: feature lengths differ");
    if (f_s.empty()) throw ValidationError("fuse: empty feature vectors");
    const double alpha = gate.alpha();
    std::vector<double> z(2 * f_s.size());
    for (std::size_t i = 0; i < f_s.size(); ++i) {
        z[i] = alpha * f_s[i];
        z[f_s.size() + i] = (1.0 - alpha) * f_w[i];
    }
    return z;
}

EmbeddingPair embed_and_fuse(const ChannelStack& spatial, const ChannelStack& freq,
                             const EmbeddingProvider& provider, const FusionGate& gate) {
    if (!provider) throw ValidationError("embed_and_fuse: missing embedding provider");
    EmbeddingPair pair;
    pair.f_s = provider(spatial);
    pair.f_w = provider(freq);
    pair.z = fuse(pair.f_s, pair.f_w, gate);
    return pair;
}

std::vector<ChannelStack> concat_batch(const std::vector<ChannelStack>& spatial,
                                       const std::vector<ChannelStack>& freq) {
    if (spatial.size() != freq.size())
        throw ValidationError("concat_batch: spatial and frequency batch sizes differ");
    std::vector<ChannelStack> out;
    out.reserve(2 * spatial.size());
    out.insert(out.end(), spatial.begin(), spatial.end());
    out.insert(out.end(), freq.begin(), freq.end());
    return out;
}

std::pair<std::vector<ChannelStack>, std::vector<ChannelStack>> split_batch(
    const std::vector<ChannelStack>& combined) {
    if (combined.size() % 2 != 0)
        throw ValidationError("split_batch: combined batch size must be even");
    const std::size_t b = combined.size() / 2;
    return {std::vector<ChannelStack>(combined.begin(), combined.begin() + static_cast<std::ptrdiff_t>(b)),
            std::vector<ChannelStack>(combined.begin() + static_cast<std::ptrdiff_t>(b), combined.end())};
}

}  // namespace fairkit
