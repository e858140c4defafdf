// Minimal library walkthrough: generate a scenario corpus, fit anchors, run
// the two-stage pipeline on a crossing hazard, and print what each stage saw.

#include <iostream>

#include "planeval/pipeline.hpp"
#include "planeval/scenario_gen.hpp"

using namespace planeval;

int main() {
  GenSpec corpus_spec;
  corpus_spec.tmpl = Template::straight;
  corpus_spec.seed = 11;
  corpus_spec.count = 40;
  auto scenarios = generate(corpus_spec);
  corpus_spec.tmpl = Template::turn;
  for (auto& s : generate(corpus_spec)) scenarios.push_back(std::move(s));

  const TrajectoryCorpus corpus = corpus_from(scenarios);
  const AnchorSet anchors = fit_anchors(corpus, 16, 7);
  std::cout << "fitted " << anchors.k << " anchors over horizon " << anchors.horizon << "\n";

  GenSpec hazard;
  hazard.tmpl = Template::crossing_ped;
  hazard.seed = 3;
  hazard.count = 1;
  const Scenario scenario = generate(hazard).front();

  PlannerConfig cfg;
  cfg.selection.top_k = 8;
  const PlanResult result = plan(scenario, anchors, cfg);

  std::cout << "stage-1 favorite: candidate " << result.stage1_choice
            << " (nc " << result.candidates[result.stage1_choice].sub.nc << ")\n";
  std::cout << "final choice:     candidate " << result.final_choice
            << " (pwnc " << result.candidates[result.final_choice].fine->pwnc_total << ")\n";
  return 0;
}
