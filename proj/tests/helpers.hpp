#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "hef/common.hpp"

namespace hef_test {

/// Runs f, expecting it to throw hef::Error of the given kind.
template <class F> bool throws_kind(F&& f, hef::ErrorKind kind) {
    try {
        f();
    } catch (const hef::Error& e) {
        return e.kind() == kind;
    } catch (...) {
        return false;
    }
    return false;
}

/// Fresh per-test scratch directory under the build tree.
inline std::filesystem::path scratch_dir(const std::string& name) {
    std::filesystem::path p = std::filesystem::temp_directory_path() / "hef_tests" / name;
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

inline double rel_err(double analytic, double numeric) {
    double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    return std::abs(analytic - numeric) / denom;
}

/// Central finite difference of a scalar function at coordinate x, in-place.
inline double central_diff(double& x, const std::function<double()>& f, double eps = 1e-3) {
    double saved = x;
    x = saved + eps;
    double up = f();
    x = saved - eps;
    double down = f();
    x = saved;
    return (up - down) / (2.0 * eps);
}

} // namespace hef_test
