#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "filmhom/types.hpp"

namespace filmhom {

/// A 1-periodic boundary-height function f on R^dim with values in [0,1]
/// and sup f = 1.
///
/// Three kinds are supported: the constant 1, a set of analytic builtins
/// (period-normalized, e.g. sin^2(pi x)), and sampled grids evaluated by
/// nearest-cell lookup.
class Profile {
public:
    enum class Kind { Constant, Builtin, Sampled };

    /// f == 1 on R^dim.
    static Profile constant(int dim);

    /// Builtin identifiers:
    ///   "sin2-product"  f = a + (1-a) sin^2(pi x1) sin^2(pi x2)   (dim 2)
    ///   "sin2-stripe"   f = a + (1-a) sin^2(pi x1)                (dim 1 or 2)
    ///   "checkerboard"  f = 1/2 + 1/2 sin(2 pi x1) sin(2 pi x2)   (dim 2)
    /// `floor` is the minimum a; it defaults to 1/2 and is ignored by
    /// "checkerboard".
    static Profile builtin(const std::string& name, int dim, double floor = 0.5);

    /// Values on a periodic N^dim grid, row-major (last axis fastest). The
    /// cell with index i covers [i/N, (i+1)/N) on each axis.
    static Profile sampled(int dim, int resolution, std::vector<double> values);

    int dim() const { return dim_; }
    Kind kind() const { return kind_; }
    const std::string& name() const { return name_; }
    double floor_param() const { return floor_; }
    double min_value() const { return min_value_; }
    double sup_value() const { return sup_value_; }
    int sampled_resolution() const { return resolution_; }
    const std::vector<double>& sampled_values() const { return values_; }

    double eval(std::span<const double> x) const;
    double eval(double x1, double x2 = 0.0) const;

private:
    Profile() = default;
    void finalize();

    int dim_ = 1;
    Kind kind_ = Kind::Constant;
    std::string name_ = "constant";
    double floor_ = 0.5;
    int resolution_ = 0;
    std::vector<double> values_;
    double min_value_ = 1.0;
    double sup_value_ = 1.0;
};

/// Text grid format: first line `dim N`, then N^dim reals in row-major order.
Profile read_sampled_profile(std::istream& in);
Profile load_sampled_profile(const std::string& path);
/// Samples at cell centers. Throws ConfigError when no center reaches
/// sup f = 1, since the file would not be a valid profile.
void write_sampled_profile(std::ostream& out, const Profile& profile, int resolution);

/// Cell-centered samples of the indicator of E_t = {f > |t|} on the unit
/// torus. Cells are indexed with axis 0 fastest.
struct CellMask {
    int dim = 0;
    int resolution = 0;
    double level = 0.0;
    std::vector<std::uint8_t> occupancy;
    double area_fraction = 0.0;

    std::size_t size() const { return occupancy.size(); }
    std::size_t count() const;
    bool empty() const { return count() == 0; }
    bool full() const { return count() == size(); }
    bool operator()(int i0, int i1 = 0, int i2 = 0) const;
};

CellMask superlevel_mask(const Profile& profile, double t, int resolution);

/// Shifts a mask by whole cells on the torus.
CellMask roll(const CellMask& mask, std::span<const int> shift);

/// Face-adjacent components of a mask on the periodic torus, together with
/// the lattice of integer translations under which some component maps
/// onto itself in the universal cover.
struct TorusComponents {
    std::vector<int> labels; // -1 for unoccupied cells
    int count = 0;
    std::vector<Eigen::VectorXi> wrap_lattice; // primitive, echelon form
    int rank = 0;
};

TorusComponents torus_components(const CellMask& mask);

/// Row-reduces a generating set of integer vectors to an echelon basis and
/// divides each row by its content. The result is primitive and spans the
/// same real subspace as the generators.
std::vector<Eigen::VectorXi> saturated_basis(std::vector<Eigen::VectorXi> generators, int dim);

/// Sampled oscillating domain omega x (-h, h) with h = 1 (scaled) or h = eps.
/// Cells are indexed with axis 0 fastest; the last axis is transverse.
struct DomainGrid {
    std::vector<double> omega;      // side lengths of the box omega
    std::vector<int> in_plane_cells; // cells per in-plane axis
    int transverse_cells = 16;
};

struct DomainMask {
    std::vector<int> cells; // in-plane axes then transverse
    std::vector<double> spacing;
    std::vector<std::uint8_t> occupancy;
    double epsilon = 0.0;
    double delta = 0.0;
    double half_thickness = 1.0;
    bool scaled = true;

    std::size_t count() const;
    double volume_fraction() const { return double(count()) / double(occupancy.size()); }
};

/// Occupied iff |x_n| < h f(x_alpha / delta) at the cell center, where h = 1
/// in scaled variables and h = eps otherwise. Throws ResolutionError when
/// any in-plane axis has fewer than 4 cells per delta-period.
DomainMask oscillating_domain_mask(const Profile& profile, double eps, double delta, const DomainGrid& grid,
                                   bool scaled);

int min_cells_for_delta(double length, double delta);

} // namespace filmhom
