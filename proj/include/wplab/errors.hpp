#pragma once

#include <stdexcept>
#include <string>

namespace wplab {

// Every failure the library can signal, by name. Tests match on the code,
// messages are for humans.
enum class Errc {
    invalid_argument,
    grid_too_coarse,
    boundary_leak,
    not_normalized,
    grid_mismatch,
    species_mismatch,
    no_overlap,
    too_many_parts,
    norm_drift,
    width_too_small,
    ensemble_too_small,
    degenerate_axes,
    empty_source,
    overfilled,
    divergent_occupancy,
    config_error,
    module_error,
    io_error,
};

inline const char* errc_name(Errc c) {
    switch (c) {
    case Errc::invalid_argument:    return "InvalidArgument";
    case Errc::grid_too_coarse:     return "GridTooCoarse";
    case Errc::boundary_leak:       return "BoundaryLeak";
    case Errc::not_normalized:      return "NotNormalized";
    case Errc::grid_mismatch:       return "GridMismatch";
    case Errc::species_mismatch:    return "SpeciesMismatch";
    case Errc::no_overlap:          return "NoOverlap";
    case Errc::too_many_parts:      return "TooManyParts";
    case Errc::norm_drift:          return "NormDrift";
    case Errc::width_too_small:     return "WidthTooSmall";
    case Errc::ensemble_too_small:  return "EnsembleTooSmall";
    case Errc::degenerate_axes:     return "DegenerateAxes";
    case Errc::empty_source:        return "EmptySource";
    case Errc::overfilled:          return "Overfilled";
    case Errc::divergent_occupancy: return "DivergentOccupancy";
    case Errc::config_error:        return "ConfigError";
    case Errc::module_error:        return "ModuleError";
    case Errc::io_error:            return "IoError";
    }
    return "UnknownError";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& msg)
        : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& msg) {
    throw Error(code, msg);
}

inline void require(bool cond, Errc code, const std::string& msg) {
    if (!cond) raise(code, msg);
}

} // namespace wplab
