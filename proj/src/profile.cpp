#include "filmhom/profile.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

namespace filmhom {

namespace {

constexpr double kPi = std::numbers::pi;

double periodic_reduce(double x) {
    double r = x - std::floor(x);
    return r >= 1.0 ? 0.0 : r;
}

int wrap_index(int i, int n) {
    int r = i % n;
    return r < 0 ? r + n : r;
}

} // namespace

Profile Profile::constant(int dim) {
    if (dim < 1 || dim > 2) throw ConfigError("profile dim must be 1 or 2");
    Profile p;
    p.dim_ = dim;
    p.kind_ = Kind::Constant;
    p.name_ = "constant";
    p.finalize();
    return p;
}

Profile Profile::builtin(const std::string& name, int dim, double floor) {
    Profile p;
    p.dim_ = dim;
    p.kind_ = Kind::Builtin;
    p.name_ = name;
    p.floor_ = floor;
    if (name == "sin2-product" || name == "checkerboard") {
        if (dim != 2) throw ConfigError("builtin '" + name + "' requires dim 2");
    } else if (name == "sin2-stripe") {
        if (dim != 1 && dim != 2) throw ConfigError("builtin 'sin2-stripe' requires dim 1 or 2");
    } else {
        throw ConfigError("unknown builtin profile '" + name + "'");
    }
    if (name != "checkerboard" && !(floor >= 0.0 && floor < 1.0))
        throw ConfigError("profile floor must lie in [0, 1)");
    p.finalize();
    return p;
}

Profile Profile::sampled(int dim, int resolution, std::vector<double> values) {
    if (dim < 1 || dim > 2) throw ConfigError("profile dim must be 1 or 2");
    if (resolution < 1 || values.empty()) throw ConfigError("sampled profile has an empty grid");
    std::size_t expected = dim == 1 ? std::size_t(resolution) : std::size_t(resolution) * resolution;
    if (values.size() != expected)
        throw ConfigError("sampled profile expects " + std::to_string(expected) + " values, got " +
                          std::to_string(values.size()));
    for (double v : values)
        if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("sampled profile values must lie in [0, 1]");
    Profile p;
    p.dim_ = dim;
    p.kind_ = Kind::Sampled;
    p.name_ = "sampled";
    p.resolution_ = resolution;
    p.values_ = std::move(values);
    p.finalize();
    return p;
}

void Profile::finalize() {
    switch (kind_) {
    case Kind::Constant:
        min_value_ = sup_value_ = 1.0;
        break;
    case Kind::Builtin:
        if (name_ == "checkerboard") {
            min_value_ = 0.0;
        } else {
            min_value_ = floor_;
        }
        sup_value_ = 1.0;
        break;
    case Kind::Sampled: {
        auto [lo, hi] = std::minmax_element(values_.begin(), values_.end());
        min_value_ = *lo;
        sup_value_ = *hi;
        if (std::abs(sup_value_ - 1.0) > 1e-12)
            throw ConfigError("sampled profile must be normalized to sup f = 1 (got " + std::to_string(sup_value_) +
                              ")");
        break;
    }
    }
}

double Profile::eval(double x1, double x2) const {
    x1 = periodic_reduce(x1);
    x2 = periodic_reduce(x2);
    switch (kind_) {
    case Kind::Constant:
        return 1.0;
    case Kind::Builtin: {
        if (name_ == "sin2-stripe") {
            double s = std::sin(kPi * x1);
            return floor_ + (1.0 - floor_) * s * s;
        }
        if (name_ == "sin2-product") {
            double s1 = std::sin(kPi * x1), s2 = std::sin(kPi * x2);
            return floor_ + (1.0 - floor_) * s1 * s1 * s2 * s2;
        }
        // checkerboard
        return 0.5 + 0.5 * std::sin(2.0 * kPi * x1) * std::sin(2.0 * kPi * x2);
    }
    case Kind::Sampled: {
        const int n = resolution_;
        int i = std::min(int(x1 * n), n - 1);
        if (dim_ == 1) return values_[i];
        int j = std::min(int(x2 * n), n - 1);
        return values_[std::size_t(i) * n + j];
    }
    }
    return 0.0;
}

double Profile::eval(std::span<const double> x) const {
    return eval(x.empty() ? 0.0 : x[0], x.size() > 1 ? x[1] : 0.0);
}

Profile read_sampled_profile(std::istream& in) {
    int dim = 0, n = 0;
    if (!(in >> dim >> n)) throw ConfigError("sampled profile: missing 'dim N' header");
    if (dim < 1 || dim > 2 || n < 1) throw ConfigError("sampled profile: invalid header");
    std::size_t total = dim == 1 ? std::size_t(n) : std::size_t(n) * n;
    std::vector<double> values;
    values.reserve(total);
    std::string token;
    while (values.size() < total && in >> token) {
        std::istringstream ss(token);
        ss.imbue(std::locale::classic());
        double v;
        if (!(ss >> v)) throw ConfigError("sampled profile: bad number '" + token + "'");
        values.push_back(v);
    }
    if (values.size() != total) throw ConfigError("sampled profile: truncated grid");
    return Profile::sampled(dim, n, std::move(values));
}

Profile load_sampled_profile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open profile file '" + path + "'");
    return read_sampled_profile(in);
}

void write_sampled_profile(std::ostream& out, const Profile& profile, int resolution) {
    if (resolution < 1) throw ConfigError("sampled profile resolution must be positive");
    const double h = 1.0 / resolution;
    std::vector<double> values;
    if (profile.dim() == 1) {
        for (int i = 0; i < resolution; ++i) values.push_back(profile.eval((i + 0.5) * h));
    } else {
        for (int i = 0; i < resolution; ++i)
            for (int j = 0; j < resolution; ++j) values.push_back(profile.eval((i + 0.5) * h, (j + 0.5) * h));
    }
    const double top = *std::max_element(values.begin(), values.end());
    if (std::abs(top - 1.0) > 1e-12)
        throw ConfigError("cell centers at resolution " + std::to_string(resolution) +
                          " miss the maximum of f (largest sample " + std::to_string(top) +
                          "); pick a resolution whose centers hit sup f = 1, e.g. an odd N for the sin^2 builtins");

    std::ostringstream ss;
    ss.imbue(std::locale::classic());
    ss.precision(17);
    ss << profile.dim() << ' ' << resolution << '\n';
    const std::size_t row = profile.dim() == 1 ? values.size() : std::size_t(resolution);
    for (std::size_t k = 0; k < values.size(); ++k) ss << values[k] << ((k + 1) % row ? ' ' : '\n');
    out << ss.str();
}

std::size_t CellMask::count() const { return std::size_t(std::count(occupancy.begin(), occupancy.end(), 1)); }

bool CellMask::operator()(int i0, int i1, int i2) const {
    const int n = resolution;
    std::size_t idx = std::size_t(wrap_index(i0, n));
    if (dim > 1) idx += std::size_t(n) * wrap_index(i1, n);
    if (dim > 2) idx += std::size_t(n) * n * wrap_index(i2, n);
    return occupancy[idx] != 0;
}

CellMask superlevel_mask(const Profile& profile, double t, int resolution) {
    const double level = std::abs(t);
    if (!(level < 1.0)) throw ConfigError("superlevel_mask requires |t| < 1");
    if (resolution < 2) throw ConfigError("superlevel_mask requires N >= 2");
    CellMask mask;
    mask.dim = profile.dim();
    mask.resolution = resolution;
    mask.level = level;
    const double h = 1.0 / resolution;
    if (mask.dim == 1) {
        mask.occupancy.resize(resolution);
        for (int i = 0; i < resolution; ++i) mask.occupancy[i] = profile.eval((i + 0.5) * h) > level;
    } else {
        mask.occupancy.resize(std::size_t(resolution) * resolution);
        for (int j = 0; j < resolution; ++j)
            for (int i = 0; i < resolution; ++i)
                mask.occupancy[std::size_t(j) * resolution + i] = profile.eval((i + 0.5) * h, (j + 0.5) * h) > level;
    }
    mask.area_fraction = double(mask.count()) / double(mask.size());
    return mask;
}

CellMask roll(const CellMask& mask, std::span<const int> shift) {
    CellMask out = mask;
    const int n = mask.resolution;
    const int d = mask.dim;
    std::array<int, 3> idx{};
    for (std::size_t c = 0; c < mask.size(); ++c) {
        std::size_t rem = c;
        for (int a = 0; a < d; ++a) {
            idx[a] = int(rem % n);
            rem /= n;
        }
        std::size_t target = 0, stride = 1;
        for (int a = 0; a < d; ++a) {
            int s = a < int(shift.size()) ? shift[a] : 0;
            target += stride * std::size_t(wrap_index(idx[a] + s, n));
            stride *= n;
        }
        out.occupancy[target] = mask.occupancy[c];
    }
    return out;
}

std::vector<Eigen::VectorXi> saturated_basis(std::vector<Eigen::VectorXi> rows, int dim) {
    // Integer echelon form by repeated Euclid steps on each column.
    std::erase_if(rows, [](const Eigen::VectorXi& v) { return v.isZero(); });
    int pivot_row = 0;
    for (int col = 0; col < dim && pivot_row < int(rows.size()); ++col) {
        while (true) {
            int best = -1;
            for (int r = pivot_row; r < int(rows.size()); ++r)
                if (rows[r][col] != 0 && (best < 0 || std::abs(rows[r][col]) < std::abs(rows[best][col]))) best = r;
            if (best < 0) break;
            std::swap(rows[pivot_row], rows[best]);
            bool done = true;
            for (int r = pivot_row + 1; r < int(rows.size()); ++r) {
                if (rows[r][col] == 0) continue;
                rows[r] -= (rows[r][col] / rows[pivot_row][col]) * rows[pivot_row];
                if (rows[r][col] != 0) done = false;
            }
            if (done) {
                ++pivot_row;
                break;
            }
        }
        std::erase_if(rows, [](const Eigen::VectorXi& v) { return v.isZero(); });
    }
    rows.resize(std::min<std::size_t>(rows.size(), std::size_t(pivot_row)));
    for (auto& v : rows) {
        int g = 0;
        for (int i = 0; i < v.size(); ++i) g = std::gcd(g, std::abs(v[i]));
        if (g > 1) v /= g;
        for (int i = 0; i < v.size(); ++i) {
            if (v[i] != 0) {
                if (v[i] < 0) v = -v;
                break;
            }
        }
    }
    return rows;
}

TorusComponents torus_components(const CellMask& mask) {
    TorusComponents out;
    const int n = mask.resolution;
    const int d = mask.dim;
    const std::size_t total = mask.size();
    out.labels.assign(total, -1);

    std::vector<std::array<int, 3>> lift(total, std::array<int, 3>{0, 0, 0});
    std::vector<Eigen::VectorXi> wraps;
    std::vector<std::size_t> stack;
    std::array<std::size_t, 3> stride{1, std::size_t(n), std::size_t(n) * n};

    for (std::size_t seed = 0; seed < total; ++seed) {
        if (!mask.occupancy[seed] || out.labels[seed] >= 0) continue;
        const int label = out.count++;
        out.labels[seed] = label;
        stack.push_back(seed);
        while (!stack.empty()) {
            std::size_t c = stack.back();
            stack.pop_back();
            for (int a = 0; a < d; ++a) {
                int coord = int((c / stride[a]) % n);
                for (int dir : {-1, 1}) {
                    int next = coord + dir;
                    int crossing = 0;
                    if (next < 0) {
                        next += n;
                        crossing = -1;
                    } else if (next >= n) {
                        next -= n;
                        crossing = 1;
                    }
                    std::size_t nb = c + (std::size_t(next) - std::size_t(coord)) * stride[a];
                    if (!mask.occupancy[nb]) continue;
                    std::array<int, 3> cand = lift[c];
                    cand[a] += crossing;
                    if (out.labels[nb] < 0) {
                        out.labels[nb] = label;
                        lift[nb] = cand;
                        stack.push_back(nb);
                    } else if (cand != lift[nb]) {
                        Eigen::VectorXi z(d);
                        for (int k = 0; k < d; ++k) z[k] = cand[k] - lift[nb][k];
                        wraps.push_back(z);
                    }
                }
            }
        }
    }
    out.wrap_lattice = saturated_basis(std::move(wraps), d);
    out.rank = int(out.wrap_lattice.size());
    return out;
}

std::size_t DomainMask::count() const { return std::size_t(std::count(occupancy.begin(), occupancy.end(), 1)); }

int min_cells_for_delta(double length, double delta) { return int(std::ceil(4.0 * length / delta - 1e-9)); }

DomainMask oscillating_domain_mask(const Profile& profile, double eps, double delta, const DomainGrid& grid,
                                   bool scaled) {
    if (!(eps > 0.0) || !(delta > 0.0)) throw ConfigError("oscillating domain requires eps, delta > 0");
    const int d = profile.dim();
    if (int(grid.omega.size()) != d || int(grid.in_plane_cells.size()) != d)
        throw ConfigError("domain grid must give one length and one cell count per in-plane axis");
    if (grid.transverse_cells < 2) throw ConfigError("domain grid needs at least 2 transverse cells");

    DomainMask mask;
    mask.epsilon = eps;
    mask.delta = delta;
    mask.scaled = scaled;
    mask.half_thickness = scaled ? 1.0 : eps;
    for (int a = 0; a < d; ++a) {
        const double len = grid.omega[a];
        if (!(len > 0.0)) throw ConfigError("omega side lengths must be positive");
        const int needed = min_cells_for_delta(len, delta);
        if (grid.in_plane_cells[a] < needed)
            throw ResolutionError("grid under-resolves delta on axis " + std::to_string(a) + ": need at least " +
                                  std::to_string(needed) + " cells, got " + std::to_string(grid.in_plane_cells[a]));
        mask.cells.push_back(grid.in_plane_cells[a]);
        mask.spacing.push_back(len / grid.in_plane_cells[a]);
    }
    mask.cells.push_back(grid.transverse_cells);
    mask.spacing.push_back(2.0 * mask.half_thickness / grid.transverse_cells);

    std::size_t total = 1;
    for (int c : mask.cells) total *= std::size_t(c);
    mask.occupancy.resize(total);

    const int in0 = mask.cells[0];
    const int in1 = d > 1 ? mask.cells[1] : 1;
    const int nt = grid.transverse_cells;
    std::vector<double> height(std::size_t(in0) * in1);
    for (int j = 0; j < in1; ++j)
        for (int i = 0; i < in0; ++i) {
            double x1 = (i + 0.5) * mask.spacing[0] / delta;
            double x2 = d > 1 ? (j + 0.5) * mask.spacing[1] / delta : 0.0;
            height[std::size_t(j) * in0 + i] = mask.half_thickness * profile.eval(x1, x2);
        }
    const double hz = mask.spacing.back();
    for (int k = 0; k < nt; ++k) {
        const double z = std::abs(-mask.half_thickness + (k + 0.5) * hz);
        for (std::size_t col = 0; col < height.size(); ++col)
            mask.occupancy[std::size_t(k) * height.size() + col] = z < height[col];
    }
    return mask;
}

} // namespace filmhom
