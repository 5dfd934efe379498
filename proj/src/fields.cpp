#include "perfstokes/fields.hpp"

#include <ostream>

#include "perfstokes/errors.hpp"
#include "perfstokes/format.hpp"

namespace perfstokes {

VelocityField VelocityField::zeros(MasksPtr masks) {
    VelocityField u;
    u.data.assign(static_cast<std::size_t>(masks->grid.dim) * masks->grid.size(), 0.0);
    u.masks = std::move(masks);
    return u;
}

void VelocityField::apply_mask() {
    for (int c = 0; c < dim(); ++c) {
        auto comp = component(c);
        const auto& fluid = masks->face_fluid[c];
        for (std::size_t i = 0; i < comp.size(); ++i) {
            if (!fluid[i]) comp[i] = 0.0;
        }
    }
}

PressureField PressureField::zeros(MasksPtr masks) {
    PressureField p;
    p.data.assign(masks->grid.size(), 0.0);
    p.masks = std::move(masks);
    return p;
}

void PressureField::apply_mask() {
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!masks->cell_active[i]) data[i] = 0.0;
    }
}

double PressureField::mean() const {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (masks->cell_active[i]) {
            sum += data[i];
            ++count;
        }
    }
    return count ? sum / static_cast<double>(count) : 0.0;
}

void PressureField::remove_mean() {
    const double m = mean();
    for (std::size_t i = 0; i < data.size(); ++i) {
        data[i] = masks->cell_active[i] ? data[i] - m : 0.0;
    }
}

namespace {

void check_same(const MasksPtr& a, const MasksPtr& b) {
    require(a->grid == b->grid, ErrorCode::InvalidArgument, "fields live on different grids");
}

}  // namespace

VelocityField& operator+=(VelocityField& a, const VelocityField& b) {
    check_same(a.masks, b.masks);
    for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
    return a;
}

VelocityField& operator-=(VelocityField& a, const VelocityField& b) {
    check_same(a.masks, b.masks);
    for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] -= b.data[i];
    return a;
}

VelocityField& operator*=(VelocityField& a, double s) {
    for (auto& v : a.data) v *= s;
    return a;
}

PressureField& operator+=(PressureField& a, const PressureField& b) {
    check_same(a.masks, b.masks);
    for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
    return a;
}

PressureField& operator-=(PressureField& a, const PressureField& b) {
    check_same(a.masks, b.masks);
    for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] -= b.data[i];
    return a;
}

void write_field(std::ostream& out, const VelocityField& u) {
    out << u.dim() << ' ' << u.masks->grid.n << ' ' << u.dim() << '\n';
    for (double v : u.data) out << format_real(v) << '\n';
}

void write_field(std::ostream& out, const PressureField& p) {
    out << p.masks->grid.dim << ' ' << p.masks->grid.n << ' ' << 1 << '\n';
    for (double v : p.data) out << format_real(v) << '\n';
}

}  // namespace perfstokes
