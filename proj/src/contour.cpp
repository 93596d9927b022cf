#include "qba/contour.hpp"

#include <array>
#include <cstdint>
#include <unordered_map>
#include <utility>

#include "qba/error.hpp"

namespace qba {

namespace {

// Square edges: 0 bottom (j), 1 right (i+1), 2 top (j+1), 3 left (i).
using Segment = std::pair<int, int>;

struct SquareCase {
    std::array<Segment, 2> segments;
    int count;
};

// Indexed by corner bits: 1 = (i,j), 2 = (i+1,j), 4 = (i+1,j+1), 8 = (i,j+1).
// Saddles 5 and 10 hold the "centre below" split; the centre-above split
// swaps them (see square_segments).
constexpr std::array<SquareCase, 16> kCases = {{
    {{{{0, 0}, {0, 0}}}, 0},
    {{{{3, 0}, {0, 0}}}, 1},
    {{{{0, 1}, {0, 0}}}, 1},
    {{{{3, 1}, {0, 0}}}, 1},
    {{{{1, 2}, {0, 0}}}, 1},
    {{{{3, 0}, {1, 2}}}, 2},
    {{{{0, 2}, {0, 0}}}, 1},
    {{{{3, 2}, {0, 0}}}, 1},
    {{{{2, 3}, {0, 0}}}, 1},
    {{{{0, 2}, {0, 0}}}, 1},
    {{{{0, 1}, {2, 3}}}, 2},
    {{{{1, 2}, {0, 0}}}, 1},
    {{{{3, 1}, {0, 0}}}, 1},
    {{{{0, 1}, {0, 0}}}, 1},
    {{{{3, 0}, {0, 0}}}, 1},
    {{{{0, 0}, {0, 0}}}, 0},
}};

SquareCase square_segments(int bits, bool centre_above) {
    if (centre_above && bits == 5) return {{{{0, 1}, {2, 3}}}, 2};
    if (centre_above && bits == 10) return {{{{3, 0}, {1, 2}}}, 2};
    return kCases[static_cast<std::size_t>(bits)];
}

class Tracer {
public:
    Tracer(const std::vector<double>& xs, const std::vector<double>& ys,
           const std::vector<std::optional<double>>& field, double level)
        : xs_(xs), ys_(ys), field_(field), level_(level), ny_(ys.size()) {}

    std::vector<Polyline> run() {
        collect();
        return chain();
    }

private:
    double value(std::size_t i, std::size_t j) const { return *field_[i * ny_ + j]; }
    bool present(std::size_t i, std::size_t j) const { return field_[i * ny_ + j].has_value(); }

    // Horizontal edges run along x from (i,j) to (i+1,j); vertical along y.
    std::uint64_t edge_key(std::size_t i, std::size_t j, int edge) const {
        switch (edge) {
        case 0: return (static_cast<std::uint64_t>(i * ny_ + j) << 1);
        case 1: return (static_cast<std::uint64_t>((i + 1) * ny_ + j) << 1) | 1u;
        case 2: return (static_cast<std::uint64_t>(i * ny_ + j + 1) << 1);
        default: return (static_cast<std::uint64_t>(i * ny_ + j) << 1) | 1u;
        }
    }

    LatticePoint crossing(std::uint64_t key) {
        auto it = points_.find(key);
        if (it != points_.end()) return it->second;
        const std::size_t cell = static_cast<std::size_t>(key >> 1);
        const std::size_t i = cell / ny_;
        const std::size_t j = cell % ny_;
        const bool vertical = (key & 1u) != 0;
        const std::size_t i2 = vertical ? i : i + 1;
        const std::size_t j2 = vertical ? j + 1 : j;
        const double v0 = value(i, j);
        const double v1 = value(i2, j2);
        const double t = (level_ - v0) / (v1 - v0);
        LatticePoint p{xs_[i] + t * (xs_[i2] - xs_[i]), ys_[j] + t * (ys_[j2] - ys_[j])};
        points_.emplace(key, p);
        return p;
    }

    void collect() {
        for (std::size_t i = 0; i + 1 < xs_.size(); ++i) {
            for (std::size_t j = 0; j + 1 < ny_; ++j) {
                if (!(present(i, j) && present(i + 1, j) && present(i + 1, j + 1) &&
                      present(i, j + 1))) {
                    continue;
                }
                const std::array<double, 4> v = {value(i, j), value(i + 1, j), value(i + 1, j + 1),
                                                 value(i, j + 1)};
                int bits = 0;
                for (int k = 0; k < 4; ++k) {
                    if (v[static_cast<std::size_t>(k)] >= level_) bits |= 1 << k;
                }
                const bool centre_above = (v[0] + v[1] + v[2] + v[3]) / 4.0 >= level_;
                const SquareCase sc = square_segments(bits, centre_above);
                for (int s = 0; s < sc.count; ++s) {
                    const auto [e0, e1] = sc.segments[static_cast<std::size_t>(s)];
                    const std::uint64_t k0 = edge_key(i, j, e0);
                    const std::uint64_t k1 = edge_key(i, j, e1);
                    crossing(k0);
                    crossing(k1);
                    incident_[k0].push_back(segments_.size());
                    incident_[k1].push_back(segments_.size());
                    segments_.emplace_back(k0, k1);
                }
            }
        }
    }

    std::uint64_t other_end(std::size_t seg, std::uint64_t from) const {
        return segments_[seg].first == from ? segments_[seg].second : segments_[seg].first;
    }

    std::optional<std::size_t> next_unused(std::uint64_t key, const std::vector<bool>& used) const {
        for (std::size_t s : incident_.at(key)) {
            if (!used[s]) return s;
        }
        return std::nullopt;
    }

    Polyline walk(std::size_t seg, std::uint64_t start, std::vector<bool>& used) {
        Polyline line{points_.at(start)};
        std::uint64_t at = start;
        std::optional<std::size_t> cur = seg;
        while (cur) {
            used[*cur] = true;
            at = other_end(*cur, at);
            line.push_back(points_.at(at));
            cur = next_unused(at, used);
        }
        return line;
    }

    std::vector<Polyline> chain() {
        std::vector<Polyline> lines;
        std::vector<bool> used(segments_.size(), false);
        // Open polylines first, starting from an endpoint of degree one.
        for (std::size_t s = 0; s < segments_.size(); ++s) {
            if (used[s]) continue;
            for (std::uint64_t end : {segments_[s].first, segments_[s].second}) {
                if (!used[s] && incident_.at(end).size() == 1) lines.push_back(walk(s, end, used));
            }
        }
        for (std::size_t s = 0; s < segments_.size(); ++s) {
            if (!used[s]) lines.push_back(walk(s, segments_[s].first, used));
        }
        return lines;
    }

    const std::vector<double>& xs_;
    const std::vector<double>& ys_;
    const std::vector<std::optional<double>>& field_;
    double level_;
    std::size_t ny_;
    std::unordered_map<std::uint64_t, LatticePoint> points_;
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> incident_;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> segments_;
};

}  // namespace

std::vector<Polyline> iso_lines(const std::vector<double>& xs, const std::vector<double>& ys,
                                const std::vector<std::optional<double>>& field, double level) {
    if (field.size() != xs.size() * ys.size()) {
        throw Error(ErrorCode::invalid_argument, "field size does not match lattice");
    }
    return Tracer(xs, ys, field, level).run();
}

ContourSet contour_lines(const StratumResult& stratum) {
    if (stratum.valid_cells < 3) {
        throw Error(ErrorCode::too_few_valid_cells, "contours need at least three valid cells");
    }
    std::vector<std::optional<double>> field;
    field.reserve(stratum.cells.size());
    for (const SweepCell& c : stratum.cells) {
        field.push_back(c.valid ? std::optional<double>(c.or_qba) : std::nullopt);
    }

    ContourSet set;
    set.incidence = stratum.scenario.incidence;
    set.uncorrected_or = stratum.scenario.uncorrected_or;
    for (DistributionPoint p : {DistributionPoint::p25, DistributionPoint::p50, DistributionPoint::p75}) {
        const double level = stratum.row(p).or_qba;
        set.levels.push_back(
            {p, level, iso_lines(stratum.axes.sensitivities, stratum.axes.specificities, field, level)});
    }
    set.min = stratum.row(DistributionPoint::min);
    set.max = stratum.row(DistributionPoint::max);
    return set;
}

}  // namespace qba
