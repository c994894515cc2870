// Two microgrids, two units each, over a five-hour sinusoidal stretch.
// Solves the instance with every algorithm and prints the bound traces and
// the final commitment.

#include <cstdio>

#include "hqcgbda/hqcgbda.hpp"

using namespace hqcgbda;

int main() {
  GeneratorSpec spec;
  spec.n_mgs = 2;
  spec.units_per_mg = 2;
  spec.horizon_t = 5;
  spec.demand.shape = DemandShape::Sinusoidal;
  spec.demand.base = 60.0;
  spec.demand.amplitude = 25.0;
  spec.seed = 2023;
  const Instance inst = gen_instance(spec);

  std::printf("%zu microgrids, %zu units, %zu hours\n\n", inst.microgrids.size(), inst.num_units(), inst.horizon());

  for (Mode mode : {Mode::Gbda, Mode::MultiCut, Mode::Hqc}) {
    RunConfig cfg;
    cfg.mode = mode;
    cfg.sampler_kind = SamplerKind::Annealing;
    cfg.sampler.seed = 1;
    const SolveReport rep = run(inst, cfg);

    std::printf("%-9s %-16s cost %12.4f  iterations %3d\n", to_string(mode).c_str(), to_string(rep.status).c_str(),
                rep.cost, rep.iterations());
    for (const auto& r : rep.trace) {
      std::printf("    e=%-3d ub=%-14.6g lb=%-14.6g feas cuts +%zu", r.e, r.ub, r.lb, r.cuts_feas);
      if (mode == Mode::Hqc) std::printf("  qubo bits %zu", r.qubo_bits);
      std::printf("\n");
    }
    if (mode != Mode::Hqc) continue;

    std::printf("\ncommitment (rows: units, columns: hours)\n");
    std::size_t unit = 0;
    for (std::size_t k = 0; k < inst.microgrids.size(); ++k) {
      for (std::size_t i = 0; i < inst.microgrids[k].units.size(); ++i, ++unit) {
        std::printf("  mg%zu/u%zu  ", k, i);
        for (std::size_t t = 0; t < inst.horizon(); ++t) std::printf("%c", rep.u(unit, t) ? '#' : '.');
        std::printf("   p:");
        for (std::size_t t = 0; t < inst.horizon(); ++t) std::printf(" %5.1f", rep.p(unit, t));
        std::printf("\n");
      }
    }
  }
  return 0;
}
