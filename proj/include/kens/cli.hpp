#pragma once

#include <vector>

#include "kens/align.hpp"
#include "kens/config.hpp"
#include "kens/eval.hpp"
#include "kens/trainer.hpp"

namespace kens {

// Loaded and split KGs plus their seed alignment stores.
struct Workspace {
  std::vector<KnowledgeGraph> kgs;
  std::vector<SeedAlignment> seeds;

  const KnowledgeGraph& kg(const std::string& id) const;
  int kg_pos(const std::string& id) const;
};

Workspace load_workspace(const RunConfig& cfg);

// Owns the alignment maps a ModelSet points into.
struct MapsHolder {
  std::vector<AlignmentMap> maps;  // one per non-target model, in model order
  ModelSet models;
};

// Predicts alignment maps between the target and every other KG and wires
// up a ModelSet for it.
MapsHolder build_model_set(const Workspace& ws, const EmbeddingSpace& space,
                           const RunConfig& cfg, int target);

int cmd_train(const RunConfig& cfg);
int cmd_align(const RunConfig& cfg);
int cmd_predict(const RunConfig& cfg);
int cmd_evaluate(const RunConfig& cfg);

// Full argv entry point; returns the process exit code
// (0 ok, 1 runtime error, 2 config error).
int run_cli(int argc, const char* const* argv);

}  // namespace kens
