#pragma once

#include "cwl/common.hpp"
#include "cwl/digest.hpp"
#include "cwl/llr.hpp"

#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cwl {

/// Empty utilization window: nothing stored yet at any of its TP positions.
class empty_window_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One stored parameter seen through a utilization window.
template <class T>
struct BasicWindowEntry {
    int x = 0;        ///< offset within the window, 1..n
    int tp_index = 0; ///< TP position in the pattern period
    int cycle = 0;    ///< stored cycle row
    T value{};
};

template <class T>
struct BasicUtilizationWindow {
    int n = 0;
    std::vector<BasicWindowEntry<T>> entries; ///< ordered by x, then cycle row

    std::vector<Point> points() const {
        std::vector<Point> out;
        out.reserve(entries.size());
        for (const auto& e : entries) {
            out.push_back({static_cast<double>(e.x), static_cast<double>(e.value)});
        }
        return out;
    }
};

/// m x l parameter matrix with a cyclic write cursor.
///
/// Positions p (1..m) index the TP within the pattern period, rows w (1..l)
/// index stored cycles. Each update writes cell (p, w) and advances p; w
/// advances only when p wraps, so once the matrix is full every update
/// overwrites the oldest value. t starts at 1 and counts steps taken.
template <class T>
class BasicCyclicDataset {
public:
    BasicCyclicDataset(int m, int l) : m_(m), l_(l) {
        if (m < 1 || l < 1) {
            throw std::invalid_argument("CyclicDataset: dimensions must be positive");
        }
        cells_.resize(static_cast<std::size_t>(m) * static_cast<std::size_t>(l));
    }

    int m() const noexcept { return m_; }
    int l() const noexcept { return l_; }
    int p() const noexcept { return p_; }
    int w() const noexcept { return w_; }
    long long t() const noexcept { return t_; }
    long long updates() const noexcept { return t_ - 1; }

    const std::optional<T>& cell(int position, int cycle) const {
        return cells_.at(index(position, cycle));
    }

    std::size_t populated() const {
        std::size_t n = 0;
        for (const auto& c : cells_) n += c.has_value();
        return n;
    }

    void update(T value) {
        cells_[index(p_, w_)] = std::move(value);
        ++t_;
        if (p_ < m_) {
            ++p_;
        } else {
            p_ = 1;
            w_ = w_ < l_ ? w_ + 1 : 1;
        }
    }

    /// TP position of window offset x (1..n) for a window of n ending at p.
    int window_position(int n, int x) const {
        int pos = (p_ - n + x - 1) % m_;
        if (pos < 0) pos += m_;
        return pos + 1;
    }

    /// Number of populated cells that a window of n TPs would contain.
    std::size_t populated_in_window(int n) const {
        check_window(n);
        std::size_t count = 0;
        for (int x = 1; x <= n; ++x) {
            const int pos = window_position(n, x);
            for (int c = 1; c <= l_; ++c) count += cells_[index(pos, c)].has_value();
        }
        return count;
    }

    /// The n TP positions ending at the cursor (wrapping modulo m), with every
    /// populated cycle row contributing one entry at that position's offset.
    BasicUtilizationWindow<T> extract_window(int n) const {
        check_window(n);
        BasicUtilizationWindow<T> window;
        window.n = n;
        window.entries.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(l_));
        for (int x = 1; x <= n; ++x) {
            const int pos = window_position(n, x);
            for (int c = 1; c <= l_; ++c) {
                if (const auto& v = cells_[index(pos, c)]) {
                    window.entries.push_back({x, pos, c, *v});
                }
            }
        }
        if (window.entries.empty()) {
            throw empty_window_error("extract_window: no populated cells in the window");
        }
        return window;
    }

    /// Rebuilds a dataset from raw state; used by restore().
    static BasicCyclicDataset from_state(int m, int l, int p, int w, long long t,
                                         std::vector<std::optional<T>> cells) {
        BasicCyclicDataset ds(m, l);
        if (p < 1 || p > m || w < 1 || w > l || t < 1 ||
            cells.size() != static_cast<std::size_t>(m) * static_cast<std::size_t>(l)) {
            throw data_error("CyclicDataset: inconsistent state");
        }
        ds.p_ = p;
        ds.w_ = w;
        ds.t_ = t;
        ds.cells_ = std::move(cells);
        return ds;
    }

    const std::vector<std::optional<T>>& cells() const noexcept { return cells_; }

    friend bool operator==(const BasicCyclicDataset&, const BasicCyclicDataset&) = default;

private:
    std::size_t index(int position, int cycle) const {
        if (position < 1 || position > m_ || cycle < 1 || cycle > l_) {
            throw std::out_of_range("CyclicDataset: cell out of range");
        }
        return static_cast<std::size_t>(position - 1) * static_cast<std::size_t>(l_) +
               static_cast<std::size_t>(cycle - 1);
    }

    void check_window(int n) const {
        if (n < 1 || n > m_) {
            throw std::invalid_argument("extract_window: window size must lie in [1, m]");
        }
    }

    int m_;
    int l_;
    int p_ = 1;
    int w_ = 1;
    long long t_ = 1;
    std::vector<std::optional<T>> cells_;
};

using CyclicDataset = BasicCyclicDataset<double>;
using UtilizationWindow = BasicUtilizationWindow<double>;
using WindowEntry = BasicWindowEntry<double>;

inline constexpr std::string_view kSnapshotMagic = "CWLSNAP";
inline constexpr int kSnapshotVersion = 1;

/// Text image: magic/version line, "m l p w t" line, one "flag value" line per
/// cell (position-major), then "sha256 <hex>" over everything before it.
inline std::string snapshot(const CyclicDataset& ds) {
    std::ostringstream body;
    body << kSnapshotMagic << ' ' << kSnapshotVersion << '\n';
    body << ds.m() << ' ' << ds.l() << ' ' << ds.p() << ' ' << ds.w() << ' ' << ds.t() << '\n';
    for (const auto& c : ds.cells()) {
        if (c) {
            body << "1 " << format_double(*c) << '\n';
        } else {
            body << "0 0\n";
        }
    }
    std::string text = body.str();
    text += "sha256 " + sha256_hex(text) + "\n";
    return text;
}

inline CyclicDataset restore(std::string_view image) {
    constexpr std::string_view tag = "sha256 ";
    auto pos = image.rfind(tag);
    if (pos == std::string_view::npos || (pos != 0 && image[pos - 1] != '\n')) {
        throw data_error("snapshot: checksum line missing");
    }
    const auto body = image.substr(0, pos);
    const auto stored = trim(image.substr(pos + tag.size()));
    if (stored != sha256_hex(body)) {
        throw data_error("snapshot: checksum mismatch");
    }
    std::istringstream in{std::string(body)};
    std::string magic;
    int version = 0;
    int m = 0, l = 0, p = 0, w = 0;
    long long t = 0;
    if (!(in >> magic >> version) || magic != kSnapshotMagic) {
        throw data_error("snapshot: bad magic");
    }
    if (version != kSnapshotVersion) {
        throw data_error("snapshot: unsupported version " + std::to_string(version));
    }
    if (!(in >> m >> l >> p >> w >> t) || m < 1 || l < 1) {
        throw data_error("snapshot: bad header");
    }
    std::vector<std::optional<double>> cells(static_cast<std::size_t>(m) *
                                             static_cast<std::size_t>(l));
    for (auto& c : cells) {
        int flag = 0;
        std::string value;
        if (!(in >> flag >> value)) {
            throw data_error("snapshot: truncated cell table");
        }
        if (flag == 1) {
            auto v = parse_double(value);
            if (!v) throw data_error("snapshot: bad cell value '" + value + "'");
            c = *v;
        } else if (flag != 0) {
            throw data_error("snapshot: bad populated flag");
        }
    }
    return CyclicDataset::from_state(m, l, p, w, t, std::move(cells));
}

} // namespace cwl
