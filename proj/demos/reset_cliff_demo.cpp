// Runs BC and MB-TAIL once on a small Reset Cliff and prints the gaps.

#include "tabular_ail.hpp"

#include <iostream>

using namespace tabular_ail;

int main() {
    const ResetCliffSpec spec{8, 3, 8, 20};
    const TabularMdp mdp = build_reset_cliff(spec);
    const Policy expert = reset_cliff_expert(spec);
    const GapOracle oracle(mdp);

    ImitationBudget budget{20, 2000};
    MbTailConfig cfg;
    cfg.rfe.constants.scale = 1.0;
    cfg.optimizer.iterations = 200;

    SamplingEnv bc_env(mdp);
    const auto bc = run_bc(bc_env, oracle, expert, budget, 1);
    SamplingEnv mb_env(mdp);
    const auto mb = run_mbtail(mb_env, oracle, expert, budget, cfg, 1);

    std::cout << "expert value " << oracle.value(expert) << '\n'
              << "bc      gap " << bc.imitation_gap << " interactions " << bc.interactions << '\n'
              << "mb-tail gap " << mb.imitation_gap << " interactions " << mb.interactions
              << " (rfe " << mb.diagnostics.rfe_episodes << ")\n";
}
