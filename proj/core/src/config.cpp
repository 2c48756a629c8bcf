#include "aircross/config.hpp"

#include <cmath>
#include <sstream>

namespace aircross {

namespace {

[[noreturn]] void fail(const std::string& what) { throw ConfigError(what); }

}  // namespace

void IntersectionConfig::validate() const {
    std::ostringstream os;
    if (!(l_c > 0.0)) fail("l_c must be positive");
    if (n_c < 2) fail("n_c must be at least 2");
    if (n_c % 2 != 0) fail("n_c must be even (half the lanes per axis serve each direction)");
    if (!(delta_t > 0.0)) fail("delta_t must be positive");
    if (!(l_v > 0.0)) fail("l_v must be positive");
    if (l_g < 0.0) fail("l_g must be nonnegative");
    if (!(d_f_min >= 0.0)) fail("d_f_min must be nonnegative");
    if (!(rho_ent > 0.0)) fail("rho_ent must be positive");
    if (l_e() < l_e_min) {
        os << "edge length l_c/(n_c+1) = " << l_e() << " is below l_e_min = " << l_e_min;
        fail(os.str());
    }
    if (usable_block_length() < seat_pitch()) {
        os << "block cannot hold a single vehicle: usable length " << usable_block_length()
           << " < seat pitch " << seat_pitch();
        fail(os.str());
    }
    if (!(v_max > 0.0)) fail("v_max must be positive");
    if (!(x2_max > 0.0)) fail("x2_max must be positive");
    if (!(x3_max > 0.0)) fail("x3_max must be positive");
    if (!(th2_max > 0.0)) fail("th2_max must be positive");
    if (!(th3_max > 0.0)) fail("th3_max must be positive");
    if (!(drag_coeff >= 0.0)) fail("drag_coeff must be nonnegative");
    if (!(mass >= 0.0)) fail("mass must be nonnegative");
    if (K_s < 3) fail("K_s must be at least 3 (four boundary conditions fix the cubic part)");
    if (K_c < 3) fail("K_c must be at least 3 (four boundary conditions fix the cubic part)");
    if (!(l_e_min > 0.0)) fail("l_e_min must be positive");
    if (v_max < base_speed()) {
        os << "v_max = " << v_max << " is below the cruise speed l_e/delta_t = " << base_speed();
        fail(os.str());
    }
}

}  // namespace aircross
