#pragma once

#include <array>
#include <optional>
#include <string_view>

#include "mobgen/types.hpp"

namespace mobgen {

/// Functional families of the distance deterrence, in their linearized form:
///   E  : ln f = t0*d
///   PE : ln f = t0*d + t1*ln d
///   L  : ln f = t0*ln^2 d + t1*ln d
///   LE : ln f = t0*ln^2 d + t1*ln d + t2*d
/// with d in kilometers.
enum class DeterrenceForm : std::uint8_t { E, PE, L, LE };

std::string_view to_string(DeterrenceForm f);
DeterrenceForm deterrence_form_from_string(std::string_view s);

/// Number of free parameters of a form.
std::size_t deterrence_param_count(DeterrenceForm f);

struct DeterrenceParams {
    DeterrenceForm form = DeterrenceForm::E;
    std::array<double, 3> theta{};          // unused trailing entries stay 0
    std::optional<double> cutoff_km;        // ln f = -inf beyond this distance

    static DeterrenceParams exponential(double t0);
};

/// Per-purpose deterrence. Purpose `home` is special cased by the choice
/// model (deterrence 1); its slot here is identity-like and unused.
struct DeterrenceSet {
    std::array<DeterrenceParams, kActivityCount> per_purpose{};

    const DeterrenceParams& for_purpose(Purpose p) const
    {
        return per_purpose[static_cast<std::size_t>(p)];
    }
    DeterrenceParams& mutable_for_purpose(Purpose p)
    {
        return per_purpose[static_cast<std::size_t>(p)];
    }

    /// Shipped German-wide defaults, including the school cutoff.
    static DeterrenceSet defaults();
};

/// Distances below this floor are clamped before the ln-based forms.
inline constexpr double kDistanceFloorKm = 0.05;

/// ln f(d) for a distance in kilometers; -infinity beyond the cutoff.
/// Distances at or below zero are clamped to the floor, never an error.
double log_deterrence(double d_km, const DeterrenceParams& params);

/// Linear-term values g_k(d) of the form, so that ln f = sum theta_k g_k(d).
std::array<double, 3> deterrence_features(double d_km, DeterrenceForm form);

} // namespace mobgen
