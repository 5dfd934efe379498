#pragma once

#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "perfstokes/grid.hpp"

namespace perfstokes {

using MasksPtr = std::shared_ptr<const GridMasks>;

/// Face-centred velocity, one contiguous block of n^d values per component.
/// Solid faces hold exactly 0.
struct VelocityField {
    MasksPtr masks;
    std::vector<double> data;

    static VelocityField zeros(MasksPtr masks);

    int dim() const { return masks->grid.dim; }
    std::size_t block() const { return masks->grid.size(); }
    std::span<double> component(int c) { return {data.data() + c * block(), block()}; }
    std::span<const double> component(int c) const { return {data.data() + c * block(), block()}; }

    /// Zeroes every solid entry.
    void apply_mask();
};

/// Cell-centred pressure; inactive cells hold exactly 0.
struct PressureField {
    MasksPtr masks;
    std::vector<double> data;

    static PressureField zeros(MasksPtr masks);

    void apply_mask();
    /// Mean over active cells.
    double mean() const;
    /// Subtracts the active-cell mean.
    void remove_mean();
};

VelocityField& operator+=(VelocityField& a, const VelocityField& b);
VelocityField& operator-=(VelocityField& a, const VelocityField& b);
VelocityField& operator*=(VelocityField& a, double s);
PressureField& operator+=(PressureField& a, const PressureField& b);
PressureField& operator-=(PressureField& a, const PressureField& b);

/// Header line "dim N components" then one value per line, component-major,
/// axis 0 fastest within a component.
void write_field(std::ostream& out, const VelocityField& u);
void write_field(std::ostream& out, const PressureField& p);

}  // namespace perfstokes
