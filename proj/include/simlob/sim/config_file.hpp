#pragma once

#include <filesystem>
#include <iosfwd>

#include "simlob/sim/pgps.hpp"

namespace simlob::sim {

struct SimSetup {
    PgpsParams params;
    SimConfig config;
};

// Flat key=value text; '#' starts a comment. Keys not present keep defaults.
// Unknown keys and unparsable values throw ContractError.
//
//   lambda0 c_lambda delta_s alpha mu delta
//   providers takers horizon seed p0 warmup order_volume tick_size
//   qvar_iters qvar_seed anchor (opposite_best | own_best)
SimSetup parse_sim_setup(std::istream& in, SimSetup base = {});
SimSetup load_sim_setup(const std::filesystem::path& path, SimSetup base = {});

void write_sim_setup(std::ostream& out, const SimSetup& setup);

} // namespace simlob::sim
