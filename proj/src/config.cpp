#include "kens/config.hpp"

#include <cmath>
#include <fstream>
#include <unordered_set>

#include <json.hpp>

namespace kens {

namespace {

using nlohmann::json;

[[noreturn]] void bad_config(const std::string& what) {
  throw ConfigError("config: " + what);
}

template <typename T>
T get_or(const json& j, const char* field, T fallback) {
  if (!j.contains(field)) return fallback;
  try {
    return j.at(field).get<T>();
  } catch (const json::exception&) {
    bad_config(std::string("field '") + field + "' has the wrong type");
  }
}

}  // namespace

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }

  RunConfig cfg;
  if (!j.contains("kgs") || !j["kgs"].is_array() || j["kgs"].empty())
    bad_config("'kgs' must be a non-empty array");
  std::unordered_set<std::string> ids;
  for (const json& jk : j["kgs"]) {
    KgSource src;
    src.id = jk.value("id", "");
    src.triples = jk.value("triples", "");
    if (src.id.empty()) bad_config("kg entry missing 'id'");
    if (src.id.find_first_of(" \t\n") != std::string::npos)
      bad_config("kg id must not contain whitespace: '" + src.id + "'");
    if (!ids.insert(src.id).second) bad_config("duplicate kg id: " + src.id);
    if (src.triples.empty()) bad_config("kg '" + src.id + "' missing 'triples'");
    if (!std::filesystem::exists(src.triples))
      bad_config("triples file not found: " + src.triples.string());
    cfg.kgs.push_back(std::move(src));
  }

  for (const json& ja : j.value("alignments", json::array())) {
    AlignmentSource src;
    src.a = ja.value("a", "");
    src.b = ja.value("b", "");
    src.path = ja.value("path", "");
    if (!ids.contains(src.a)) bad_config("alignment references unknown kg: " + src.a);
    if (!ids.contains(src.b)) bad_config("alignment references unknown kg: " + src.b);
    if (src.a == src.b) bad_config("alignment must join two different KGs");
    if (!std::filesystem::exists(src.path))
      bad_config("alignment file not found: " + src.path.string());
    cfg.alignments.push_back(std::move(src));
  }

  if (j.contains("split")) {
    const json& js = j["split"];
    if (js.contains("ratios")) {
      auto r = js["ratios"].get<std::vector<double>>();
      if (r.size() != 3) bad_config("split.ratios must have 3 entries");
      cfg.split_ratios = {r[0], r[1], r[2]};
    }
    cfg.split_seed = get_or<uint64_t>(js, "seed", cfg.split_seed);
  }
  {
    double sum = cfg.split_ratios[0] + cfg.split_ratios[1] + cfg.split_ratios[2];
    for (double r : cfg.split_ratios)
      if (!(r > 0.0)) bad_config("split.ratios: all entries must be positive");
    if (std::abs(sum - 1.0) > 1e-9) bad_config("split.ratios: entries must sum to 1");
  }

  const json jt = j.value("train", json::object());
  const ModelKind kind = parse_model_kind(get_or<std::string>(jt, "model", "transe"));
  cfg.train = TrainConfig::defaults_for(kind);
  cfg.train.dim = get_or(jt, "dim", cfg.train.dim);
  cfg.train.lr = get_or(jt, "lr", cfg.train.lr);
  cfg.train.batch_size = get_or(jt, "batch_size", cfg.train.batch_size);
  cfg.train.margin = get_or(jt, "margin", cfg.train.margin);
  cfg.train.lambda = get_or(jt, "lambda", cfg.train.lambda);
  cfg.train.l2 = get_or(jt, "l2", cfg.train.l2);
  cfg.train.negatives = get_or(jt, "negatives", cfg.train.negatives);
  cfg.train.epochs = get_or(jt, "epochs", cfg.train.epochs);
  cfg.train.selflearn_warmup = get_or(jt, "selflearn_warmup", cfg.train.selflearn_warmup);
  cfg.train.selflearn_period = get_or(jt, "selflearn_period", cfg.train.selflearn_period);
  cfg.train.csls_k = get_or(jt, "csls_k", cfg.train.csls_k);
  cfg.train.seed = get_or<uint64_t>(jt, "seed", cfg.train.seed);
  cfg.train.validate();

  const json je = j.value("ensemble", json::object());
  cfg.mode = parse_ensemble_mode(get_or<std::string>(je, "mode", "boost"));
  cfg.k = get_or(je, "k", cfg.k);
  if (cfg.k < 1) bad_config("ensemble.k must be >= 1");

  cfg.output_dir = get_or<std::string>(j, "output_dir", cfg.output_dir.string());
  if (j.contains("target")) cfg.target = j["target"].get<std::string>();
  if (cfg.target && !ids.contains(*cfg.target))
    bad_config("target references unknown kg: " + *cfg.target);
  if (j.contains("queries")) cfg.queries = std::filesystem::path(j["queries"].get<std::string>());
  if (j.contains("checkpoint"))
    cfg.checkpoint = std::filesystem::path(j["checkpoint"].get<std::string>());
  return cfg;
}

std::string resolved_config_json(const RunConfig& cfg) {
  json j;
  for (const KgSource& kg : cfg.kgs)
    j["kgs"].push_back({{"id", kg.id}, {"triples", kg.triples.string()}});
  j["alignments"] = json::array();
  for (const AlignmentSource& a : cfg.alignments)
    j["alignments"].push_back({{"a", a.a}, {"b", a.b}, {"path", a.path.string()}});
  j["split"] = {{"ratios", cfg.split_ratios}, {"seed", cfg.split_seed}};
  j["train"] = {{"model", model_kind_name(cfg.train.model)},
                {"dim", cfg.train.dim},
                {"lr", cfg.train.lr},
                {"batch_size", cfg.train.batch_size},
                {"margin", cfg.train.margin},
                {"lambda", cfg.train.lambda},
                {"l2", cfg.train.l2},
                {"negatives", cfg.train.negatives},
                {"epochs", cfg.train.epochs},
                {"selflearn_warmup", cfg.train.selflearn_warmup},
                {"selflearn_period", cfg.train.selflearn_period},
                {"csls_k", cfg.train.csls_k},
                {"seed", cfg.train.seed}};
  j["ensemble"] = {{"mode", ensemble_mode_name(cfg.mode)}, {"k", cfg.k}};
  j["output_dir"] = cfg.output_dir.string();
  if (cfg.target) j["target"] = *cfg.target;
  if (cfg.queries) j["queries"] = cfg.queries->string();
  if (cfg.checkpoint) j["checkpoint"] = cfg.checkpoint->string();
  return j.dump(2) + "\n";
}

}  // namespace kens
