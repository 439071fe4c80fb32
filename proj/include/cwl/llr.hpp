#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <variant>
#include <vector>

namespace cwl {

enum class KernelFamily { Epanechnikov, Biweight, Gaussian };

inline std::string_view to_string(KernelFamily f) {
    switch (f) {
    case KernelFamily::Epanechnikov:
        return "epanechnikov";
    case KernelFamily::Biweight:
        return "biweight";
    case KernelFamily::Gaussian:
        return "gaussian";
    }
    return "unknown";
}

inline std::optional<KernelFamily> parse_kernel(std::string_view s) {
    if (s == "epanechnikov") return KernelFamily::Epanechnikov;
    if (s == "biweight") return KernelFamily::Biweight;
    if (s == "gaussian") return KernelFamily::Gaussian;
    return std::nullopt;
}

/// Bandwidth given as an absolute radius.
struct FixedRadius {
    double h = 1.0;
};

/// Bandwidth given as a neighbour count: the radius reaches the k-th nearest x.
struct KNearest {
    int k = 20;
};

using BandwidthMode = std::variant<FixedRadius, KNearest>;

struct KernelSpec {
    KernelFamily family = KernelFamily::Epanechnikov;
    BandwidthMode bandwidth = KNearest{20};

    void validate() const {
        if (const auto* r = std::get_if<FixedRadius>(&bandwidth)) {
            if (!(r->h > 0.0) || !std::isfinite(r->h)) {
                throw std::invalid_argument("KernelSpec: radius must be positive");
            }
        } else if (std::get<KNearest>(bandwidth).k < 2) {
            throw std::invalid_argument("KernelSpec: neighbour count must be at least 2");
        }
    }

    /// Numeric bandwidth value used for labelling and ordering sweep results.
    double bandwidth_value() const {
        if (const auto* r = std::get_if<FixedRadius>(&bandwidth)) return r->h;
        return static_cast<double>(std::get<KNearest>(bandwidth).k);
    }
};

struct Point {
    double x = 0.0;
    double y = 0.0;
};

struct WeightedPoint {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
};

/// How a prediction was obtained when the local fit was singular.
enum class Fallback { None, WidenedH, WeightedMean, GlobalLine };

inline std::string_view to_string(Fallback f) {
    switch (f) {
    case Fallback::None:
        return "none";
    case Fallback::WidenedH:
        return "widened_h";
    case Fallback::WeightedMean:
        return "weighted_mean";
    case Fallback::GlobalLine:
        return "global_line";
    }
    return "unknown";
}

inline std::optional<Fallback> parse_fallback(std::string_view s) {
    if (s == "none") return Fallback::None;
    if (s == "widened_h") return Fallback::WidenedH;
    if (s == "weighted_mean") return Fallback::WeightedMean;
    if (s == "global_line") return Fallback::GlobalLine;
    return std::nullopt;
}

inline double kernel_profile(KernelFamily family, double u) {
    switch (family) {
    case KernelFamily::Epanechnikov:
        return u <= 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
    case KernelFamily::Biweight: {
        if (u > 1.0) return 0.0;
        const double t = 1.0 - u * u;
        return (15.0 / 16.0) * t * t;
    }
    case KernelFamily::Gaussian:
        return std::exp(-0.5 * u * u) * (std::numbers::inv_sqrtpi / std::numbers::sqrt2);
    }
    return 0.0;
}

/// D(|x_i - x_u| / h). Nonincreasing in the distance for every family.
inline double kernel_weight(KernelFamily family, double x_u, double x_i, double h) {
    if (!(h > 0.0)) {
        throw std::invalid_argument("kernel_weight: bandwidth must be positive");
    }
    return kernel_profile(family, std::abs(x_i - x_u) / h);
}

inline double kernel_weight(const KernelSpec& spec, double x_u, double x_i, double h) {
    return kernel_weight(spec.family, x_u, x_i, h);
}

/// Radius at the query point. For KNearest this is the distance to the k-th
/// nearest x; a zero distance (replicated x) is promoted to the smallest
/// positive spacing between distinct xs, or to 1 when all xs coincide.
inline double effective_bandwidth(const KernelSpec& spec, double x_u, std::span<const double> xs) {
    if (const auto* r = std::get_if<FixedRadius>(&spec.bandwidth)) {
        if (!(r->h > 0.0)) {
            throw std::invalid_argument("effective_bandwidth: radius must be positive");
        }
        return r->h;
    }
    const int k = std::get<KNearest>(spec.bandwidth).k;
    if (xs.empty()) {
        throw std::invalid_argument("effective_bandwidth: no points");
    }
    if (k < 1 || static_cast<std::size_t>(k) > xs.size()) {
        throw std::invalid_argument("effective_bandwidth: k exceeds the available points");
    }
    std::vector<double> dist(xs.size());
    std::transform(xs.begin(), xs.end(), dist.begin(),
                   [x_u](double x) { return std::abs(x - x_u); });
    std::nth_element(dist.begin(), dist.begin() + (k - 1), dist.end());
    const double kth = dist[static_cast<std::size_t>(k - 1)];
    if (kth > 0.0) {
        return kth;
    }
    std::vector<double> sorted(xs.begin(), xs.end());
    std::sort(sorted.begin(), sorted.end());
    double spacing = 0.0;
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        const double d = sorted[i] - sorted[i - 1];
        if (d > 0.0 && (spacing == 0.0 || d < spacing)) {
            spacing = d;
        }
    }
    return spacing > 0.0 ? spacing : 1.0;
}

inline std::vector<WeightedPoint> weigh(std::span<const Point> points, double x_u,
                                        KernelFamily family, double h) {
    std::vector<WeightedPoint> out;
    out.reserve(points.size());
    for (const auto& p : points) {
        out.push_back({p.x, p.y, kernel_weight(family, x_u, p.x, h)});
    }
    return out;
}

/// Weighted least-squares line through `points` evaluated at x_u. Solved in
/// closed form after centering x on its weighted mean. Returns nullopt when
/// fewer than two distinct x carry positive weight.
inline std::optional<double> weighted_line_at(std::span<const WeightedPoint> points, double x_u) {
    double sw = 0.0, swx = 0.0, swy = 0.0;
    std::optional<double> first_x;
    bool distinct = false;
    for (const auto& p : points) {
        if (!(p.w > 0.0)) continue;
        if (!first_x) {
            first_x = p.x;
        } else if (p.x != *first_x) {
            distinct = true;
        }
        sw += p.w;
        swx += p.w * p.x;
        swy += p.w * p.y;
    }
    if (!distinct) {
        return std::nullopt;
    }
    const double xbar = swx / sw;
    const double ybar = swy / sw;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& p : points) {
        if (!(p.w > 0.0)) continue;
        const double dx = p.x - xbar;
        sxx += p.w * dx * dx;
        sxy += p.w * dx * (p.y - ybar);
    }
    if (!(sxx > 0.0)) {
        return std::nullopt;
    }
    return ybar + (sxy / sxx) * (x_u - xbar);
}

inline std::optional<double> llr_solve(std::span<const Point> points, double x_u,
                                       KernelFamily family, double h) {
    const auto weighted = weigh(points, x_u, family, h);
    return weighted_line_at(weighted, x_u);
}

namespace detail {

inline std::vector<double> xs_of(std::span<const Point> points) {
    std::vector<double> xs;
    xs.reserve(points.size());
    for (const auto& p : points) xs.push_back(p.x);
    return xs;
}

} // namespace detail

/// Local linear fit at x_u. nullopt signals a singular weighted system.
inline std::optional<double> llr_fit_predict(std::span<const Point> points, double x_u,
                                             const KernelSpec& spec) {
    if (points.empty()) {
        throw std::invalid_argument("llr_fit_predict: no points");
    }
    const auto xs = detail::xs_of(points);
    const double h = effective_bandwidth(spec, x_u, xs);
    return llr_solve(points, x_u, spec.family, h);
}

struct LlrPrediction {
    double value = 0.0;
    Fallback fallback = Fallback::None;
};

inline constexpr int kMaxWidenings = 3;

/// llr_fit_predict with the singular-system fallback chain: widen h (x2, up to
/// three times), then the kernel-weighted mean, then an unweighted global line.
inline LlrPrediction llr_predict(std::span<const Point> points, double x_u,
                                 const KernelSpec& spec) {
    if (points.empty()) {
        throw std::invalid_argument("llr_predict: no points");
    }
    const auto xs = detail::xs_of(points);
    double h = effective_bandwidth(spec, x_u, xs);
    if (auto v = llr_solve(points, x_u, spec.family, h)) {
        return {*v, Fallback::None};
    }
    for (int i = 0; i < kMaxWidenings; ++i) {
        h *= 2.0;
        if (auto v = llr_solve(points, x_u, spec.family, h)) {
            return {*v, Fallback::WidenedH};
        }
    }
    const auto weighted = weigh(points, x_u, spec.family, h);
    double sw = 0.0, swy = 0.0;
    for (const auto& p : weighted) {
        sw += p.w;
        swy += p.w * p.y;
    }
    if (sw > 0.0) {
        return {swy / sw, Fallback::WeightedMean};
    }
    std::vector<WeightedPoint> flat;
    flat.reserve(points.size());
    double sy = 0.0;
    for (const auto& p : points) {
        flat.push_back({p.x, p.y, 1.0});
        sy += p.y;
    }
    if (auto v = weighted_line_at(flat, x_u)) {
        return {*v, Fallback::GlobalLine};
    }
    return {sy / static_cast<double>(points.size()), Fallback::GlobalLine};
}

/// Element-wise llr_predict over the query points.
inline std::vector<double> llr_curve(std::span<const Point> points,
                                     std::span<const double> query_xs, const KernelSpec& spec) {
    std::vector<double> out;
    out.reserve(query_xs.size());
    for (double q : query_xs) {
        out.push_back(llr_predict(points, q, spec).value);
    }
    return out;
}

} // namespace cwl
