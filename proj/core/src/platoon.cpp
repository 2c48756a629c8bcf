#include "aircross/platoon.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace aircross {

int max_vehicles_per_platoon(const PlatoonSpec& spec) {
    const double usable = spec.edge_length - spec.gap_clearance;
    const int n = static_cast<int>(std::floor(usable / spec.pitch()));
    if (n < 1) {
        std::ostringstream os;
        os << "block holds no vehicle: usable length " << usable << " < seat pitch "
           << spec.pitch();
        throw ConfigError(os.str());
    }
    return n;
}

double seat_depth(const PlatoonSpec& spec, int seat) {
    if (seat < 0) throw ConfigError("seat index must be nonnegative");
    return spec.gap_clearance + spec.vehicle_length + seat * spec.pitch();
}

double seat_entry_delay(const PlatoonSpec& spec, int seat) {
    return seat_depth(spec, seat) / spec.base_speed();
}

double core_slack(const PlatoonSpec& spec) {
    const int last = max_vehicles_per_platoon(spec) - 1;
    const double front = spec.gap_clearance / 2.0;
    // Rear room of the last seat to the claim limit l_e + l_g/2; the packing
    // leaves at least min_following there, so the front room governs.
    const double rear = spec.edge_length + spec.gap_clearance / 2.0 - seat_depth(spec, last);
    return std::min(front, rear);
}

double entry_flow(int vehicles_per_block, double delta_t) {
    if (vehicles_per_block < 0) throw ConfigError("vehicles_per_block must be nonnegative");
    if (!(delta_t > 0.0)) throw ConfigError("delta_t must be positive");
    return vehicles_per_block / (4.0 * delta_t);
}

double demand_entry_flow(const IntersectionConfig& config) {
    return config.rho_ent * config.base_speed();
}

double direction_capacity(const IntersectionConfig& config) {
    const int n_v = max_vehicles_per_platoon(PlatoonSpec::from(config));
    return (config.n_c / 2) * entry_flow(n_v, config.delta_t);
}

double lane_share_cap(const IntersectionConfig& config, double flow) {
    if (!(flow > 0.0)) throw ConfigError("entry flow must be positive");
    const int n_v = max_vehicles_per_platoon(PlatoonSpec::from(config));
    return entry_flow(n_v, config.delta_t) / flow;
}

}  // namespace aircross
