#include "kens/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "kens/parallel.hpp"
#include "kens/util.hpp"

namespace kens {

const KnowledgeGraph& Workspace::kg(const std::string& id) const {
  return kgs[kg_pos(id)];
}

int Workspace::kg_pos(const std::string& id) const {
  for (size_t i = 0; i < kgs.size(); ++i)
    if (kgs[i].id == id) return static_cast<int>(i);
  throw ConfigError("unknown kg id: " + id);
}

Workspace load_workspace(const RunConfig& cfg) {
  Workspace ws;
  for (const KgSource& src : cfg.kgs) {
    KnowledgeGraph kg = load_triples(src.triples, src.id);
    split_dataset(kg, cfg.split_ratios, cfg.split_seed);
    std::ostringstream msg;
    msg << "loaded " << kg.id << ": " << kg.n_entities() << " entities, "
        << kg.n_relations() << " relations, " << kg.n_triples() << " triples (train "
        << kg.train.size() << " / valid " << kg.valid.size() << " / test "
        << kg.test.size() << ", " << kg.duplicates_dropped << " duplicates dropped)";
    log_info(msg.str());
    ws.kgs.push_back(std::move(kg));
  }
  for (const AlignmentSource& src : cfg.alignments) {
    const KnowledgeGraph& a = ws.kg(src.a);
    const KnowledgeGraph& b = ws.kg(src.b);
    SeedAlignment store = load_alignment(src.path, a, b);
    std::ostringstream msg;
    msg << "alignment " << src.a << "-" << src.b << ": " << store.pairs.size()
        << " pairs (coverage " << format_fixed6(store.coverage(a, b)) << ", "
        << store.conflicts_skipped << " conflicts skipped)";
    log_info(msg.str());
    ws.seeds.push_back(std::move(store));
  }
  if (ws.kgs.size() >= 2) {
    SchemaReport schema = validate_unified_schema(ws.kgs);
    if (!schema.non_shared.empty()) {
      std::ostringstream msg;
      msg << schema.non_shared.size() << " relation(s) used by a single KG only";
      log_info(msg.str());
    }
  }
  return ws;
}

namespace {

// Checkpoint tables must line up with the loaded vocabularies.
void check_space_matches(const EmbeddingSpace& space, const Workspace& ws,
                         const RunConfig& cfg) {
  if (space.kind != cfg.train.model)
    throw Error("model kind mismatch: config says " +
                std::string(model_kind_name(cfg.train.model)) + ", checkpoint has " +
                model_kind_name(space.kind));
  for (const KnowledgeGraph& kg : ws.kgs) {
    const int idx = space.kg_of(kg.id);
    const KgEmbedding& table = space.kgs[idx];
    if (table.entity_ids != kg.entities || table.relation_ids != kg.relations)
      throw Error("checkpoint vocabulary does not match the data for KG " + kg.id);
  }
}

int clamped_csls_k(const RunConfig& cfg, const KnowledgeGraph& a, const KnowledgeGraph& b) {
  const int32_t smaller = std::min(a.n_entities(), b.n_entities());
  return std::max(1, std::min(cfg.train.csls_k, smaller));
}

const SeedAlignment* find_seeds(const Workspace& ws, const std::string& a,
                                const std::string& b) {
  for (const SeedAlignment& s : ws.seeds)
    if ((s.kg_a == a && s.kg_b == b) || (s.kg_a == b && s.kg_b == a)) return &s;
  return nullptr;
}

}  // namespace

MapsHolder build_model_set(const Workspace& ws, const EmbeddingSpace& space,
                           const RunConfig& cfg, int target) {
  MapsHolder holder;
  holder.maps.reserve(ws.kgs.size());
  for (size_t i = 0; i < ws.kgs.size(); ++i) {
    if (static_cast<int>(i) == target) continue;
    const KnowledgeGraph& t = ws.kgs[target];
    const KnowledgeGraph& o = ws.kgs[i];
    const KnowledgeGraph& small = t.n_entities() <= o.n_entities() ? t : o;
    const KnowledgeGraph& large = t.n_entities() <= o.n_entities() ? o : t;
    const SeedAlignment* seeds = find_seeds(ws, t.id, o.id);
    holder.maps.push_back(
        predict_alignment(space, small, large, seeds, clamped_csls_k(cfg, t, o)));
  }
  holder.models.space = &space;
  holder.models.kgs = ws.kgs;
  holder.models.target = target;
  holder.models.k = cfg.k;
  holder.models.maps.assign(ws.kgs.size(), nullptr);
  size_t m = 0;
  for (size_t i = 0; i < ws.kgs.size(); ++i)
    if (static_cast<int>(i) != target) holder.models.maps[i] = &holder.maps[m++];
  return holder;
}

int cmd_train(const RunConfig& cfg) {
  Workspace ws = load_workspace(cfg);
  TrainResult result = train_joint(ws.kgs, ws.seeds, cfg.train);

  save_checkpoint(result.space, cfg.checkpoint_path());
  atomic_write(cfg.output_dir / "loss_trace.csv", [&](std::ostream& out) {
    out << "epoch";
    for (const KnowledgeGraph& kg : ws.kgs) out << ",knowledge_" << kg.id;
    out << ",alignment,self_learned_added\n";
    for (size_t e = 0; e < result.trace.size(); ++e) {
      const EpochTrace& t = result.trace[e];
      out << e;
      for (double k : t.knowledge) out << ',' << format_double(k);
      out << ',' << format_double(t.alignment) << ',' << t.self_learned_added << "\n";
    }
  });
  atomic_write(cfg.output_dir / "config.json",
               [&](std::ostream& out) { out << resolved_config_json(cfg); });

  std::ostringstream msg;
  msg << "trained " << ws.kgs.size() << " KG(s) for " << cfg.train.epochs
      << " epochs; checkpoint at " << cfg.checkpoint_path().string();
  log_info(msg.str());
  return 0;
}

int cmd_align(const RunConfig& cfg) {
  Workspace ws = load_workspace(cfg);
  EmbeddingSpace space = load_checkpoint(cfg.checkpoint_path());
  check_space_matches(space, ws, cfg);

  if (ws.kgs.size() < 2) throw Error("align needs at least two KGs");
  for (size_t i = 0; i < ws.kgs.size(); ++i) {
    for (size_t j = i + 1; j < ws.kgs.size(); ++j) {
      const KnowledgeGraph& small =
          ws.kgs[i].n_entities() <= ws.kgs[j].n_entities() ? ws.kgs[i] : ws.kgs[j];
      const KnowledgeGraph& large =
          ws.kgs[i].n_entities() <= ws.kgs[j].n_entities() ? ws.kgs[j] : ws.kgs[i];
      const SeedAlignment* seeds = find_seeds(ws, small.id, large.id);
      AlignmentMap map =
          predict_alignment(space, small, large, seeds, clamped_csls_k(cfg, small, large));
      const std::filesystem::path out =
          cfg.output_dir / ("alignment_" + small.id + "_" + large.id + ".tsv");
      save_alignment_tsv(map, small, large, out);
      std::cout << small.id << " -> " << large.id << ": " << map.matches.size()
                << " matched, " << map.unmatched_large.size() << " unmatched in "
                << large.id << " (coverage "
                << format_fixed6(static_cast<double>(map.matches.size()) /
                                 std::max<int32_t>(1, small.n_entities()))
                << "), written to " << out.string() << "\n";
    }
  }
  return 0;
}

namespace {

int target_index(const Workspace& ws, const RunConfig& cfg) {
  if (cfg.target) return ws.kg_pos(*cfg.target);
  return 0;
}

std::unordered_map<int32_t, EntityWeights> learn_boost_weights(
    const ModelSet& models, std::span<const int32_t> anchors, std::span<const double> u) {
  std::vector<EntityWeights> learned(anchors.size());
  const int64_t n = static_cast<int64_t>(anchors.size());
  if (parallel::enabled()) {
#pragma omp parallel for schedule(dynamic)
    for (int64_t i = 0; i < n; ++i) learned[i] = boost_weights(models, anchors[i], u);
  } else {
    for (int64_t i = 0; i < n; ++i) learned[i] = boost_weights(models, anchors[i], u);
  }
  std::unordered_map<int32_t, EntityWeights> cache;
  for (size_t i = 0; i < anchors.size(); ++i)
    cache.emplace(anchors[i], std::move(learned[i]));
  return cache;
}

}  // namespace

int cmd_predict(const RunConfig& cfg) {
  if (!cfg.queries) throw ConfigError("predict needs a query file ('queries')");
  Workspace ws = load_workspace(cfg);
  EmbeddingSpace space = load_checkpoint(cfg.checkpoint_path());
  check_space_matches(space, ws, cfg);

  const int target = target_index(ws, cfg);
  const KnowledgeGraph& target_kg = ws.kgs[target];
  MapsHolder holder = build_model_set(ws, space, cfg, target);
  const ModelSet& models = holder.models;

  std::ifstream in(*cfg.queries);
  if (!in) throw Error("cannot open query file: " + cfg.queries->string());
  std::vector<Query> queries;
  size_t skipped = 0;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      log_warn("query line " + std::to_string(lineno) + ": expected head\\trelation; skipped");
      ++skipped;
      continue;
    }
    const auto head = target_kg.entity_index(line.substr(0, tab));
    const auto rel = target_kg.relation_index(line.substr(tab + 1));
    if (!head || !rel) {
      log_warn("query line " + std::to_string(lineno) + ": unresolvable in KG " +
               target_kg.id + "; skipped");
      ++skipped;
      continue;
    }
    queries.push_back(Query{*head, *rel, Direction::PredictTail});
  }

  const std::vector<double> u = validation_mrr(models);
  std::unordered_map<int32_t, EntityWeights> boost_cache;
  if (cfg.mode == EnsembleMode::Boost) {
    std::vector<int32_t> anchors;
    for (const Query& q : queries) anchors.push_back(q.anchor);
    std::sort(anchors.begin(), anchors.end());
    anchors.erase(std::unique(anchors.begin(), anchors.end()), anchors.end());
    boost_cache = learn_boost_weights(models, anchors, u);
  }

  atomic_write(cfg.output_dir / "predictions.tsv", [&](std::ostream& out) {
    for (const Query& q : queries) {
      const EntityWeights* w =
          cfg.mode == EnsembleMode::Boost ? &boost_cache.at(q.anchor) : nullptr;
      const std::vector<ScoredEntity> ranked = ensemble_rank(models, q, cfg.mode, u, w);
      if (ranked.empty())
        log_warn("no nominations for query head " + target_kg.entities[q.anchor]);
      for (size_t r = 0; r < ranked.size(); ++r)
        out << target_kg.entities[q.anchor] << '\t' << target_kg.relations[q.relation]
            << '\t' << (r + 1) << '\t' << target_kg.entities[ranked[r].entity] << '\t'
            << format_fixed6(ranked[r].score) << "\n";
    }
  });

  std::cout << "predicted " << queries.size() << " queries (" << skipped
            << " skipped) in mode " << ensemble_mode_name(cfg.mode) << ", target "
            << target_kg.id << "\n";
  return 0;
}

int cmd_evaluate(const RunConfig& cfg) {
  Workspace ws = load_workspace(cfg);
  EmbeddingSpace space = load_checkpoint(cfg.checkpoint_path());
  check_space_matches(space, ws, cfg);

  static const int ks[] = {1, 3, 10};
  std::vector<int> targets;
  if (cfg.target)
    targets.push_back(ws.kg_pos(*cfg.target));
  else
    for (size_t i = 0; i < ws.kgs.size(); ++i) targets.push_back(static_cast<int>(i));

  for (int target : targets) {
    MapsHolder holder = build_model_set(ws, space, cfg, target);
    const ModelSet& models = holder.models;
    const KnowledgeGraph& kg = ws.kgs[target];

    EvalReport report = evaluate_kg(models, cfg.mode, ks);
    const std::string stem = "report_" + kg.id + "_" + ensemble_mode_name(cfg.mode);
    save_report_json(report, cfg.output_dir / (stem + ".json"));
    save_report_tsv(report, cfg.output_dir / (stem + ".tsv"));

    if (cfg.mode == EnsembleMode::Boost) {
      const std::vector<double> u = validation_mrr(models);
      std::vector<int32_t> anchors;
      for (const Triple& t : kg.test) anchors.push_back(t.head);
      std::sort(anchors.begin(), anchors.end());
      anchors.erase(std::unique(anchors.begin(), anchors.end()), anchors.end());
      auto cache = learn_boost_weights(models, anchors, u);
      atomic_write(cfg.output_dir / ("weights_" + kg.id + ".tsv"), [&](std::ostream& out) {
        for (int32_t anchor : anchors) {
          const EntityWeights& w = cache.at(anchor);
          for (int m = 0; m < models.n_models(); ++m)
            out << kg.entities[anchor] << '\t' << ws.kgs[m].id << '\t'
                << format_fixed6(w.w[m]) << "\n";
        }
      });
    }

    std::cout << kg.id << " [" << report.mode << "] n=" << report.n_queries;
    for (const auto& [k, v] : report.hits) std::cout << " hits@" << k << "=" << format_fixed6(v);
    std::cout << "\n";
  }
  return 0;
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"kens: multilingual KG completion with ensembled embeddings"};
  app.require_subcommand(1);

  std::string config_path;
  int threads = 0;
  bool deterministic = false;
  std::string mode_override, target_override;
  std::string queries_override, checkpoint_override;
  int k_override = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "run configuration (JSON)")->required();
    sub->add_option("--threads", threads, "worker thread cap (0 = hardware)");
    sub->add_flag("--deterministic", deterministic, "serial numeric paths");
    sub->add_option("--mode", mode_override, "ensemble mode: vote|mrr|boost|single");
    sub->add_option("--k", k_override, "nomination/ranking cutoff K");
    return sub;
  };

  CLI::App* train = add_common(app.add_subcommand("train", "train embeddings"));
  CLI::App* align = add_common(app.add_subcommand("align", "predict entity alignment"));
  CLI::App* predict = add_common(app.add_subcommand("predict", "answer queries"));
  CLI::App* evaluate = add_common(app.add_subcommand("evaluate", "filtered Hits@K"));
  predict->add_option("--target", target_override, "target KG id");
  evaluate->add_option("--target", target_override, "target KG id");
  predict->add_option("--queries", queries_override, "query file (head\\trelation)");
  for (CLI::App* sub : {align, predict, evaluate})
    sub->add_option("--checkpoint", checkpoint_override, "checkpoint path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    parallel::set_threads(threads);
    parallel::set_deterministic(deterministic);

    RunConfig cfg = load_run_config(config_path);
    if (!mode_override.empty()) cfg.mode = parse_ensemble_mode(mode_override);
    if (k_override > 0) cfg.k = k_override;
    if (!target_override.empty()) cfg.target = target_override;
    if (!queries_override.empty()) cfg.queries = queries_override;
    if (!checkpoint_override.empty()) cfg.checkpoint = checkpoint_override;
    if (cfg.target) {
      bool known = false;
      for (const KgSource& kg : cfg.kgs) known |= kg.id == *cfg.target;
      if (!known) throw ConfigError("target references unknown kg: " + *cfg.target);
    }

    if (train->parsed()) return cmd_train(cfg);
    if (align->parsed()) return cmd_align(cfg);
    if (predict->parsed()) return cmd_predict(cfg);
    if (evaluate->parsed()) return cmd_evaluate(cfg);
    return 2;
  } catch (const ConfigError& e) {
    log_error(e.what());
    return 2;
  } catch (const std::exception& e) {
    log_error(e.what());
    return 1;
  }
}

}  // namespace kens
