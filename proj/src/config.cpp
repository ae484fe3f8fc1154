#include "fedval/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace fedval {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known,
                    const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) {
      throw std::invalid_argument("unknown config key '" + key + "' in " +
                                  where);
    }
  }
}

template <typename T>
void get_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void parse_defense(const json& j, DefenseConfig& d) {
  reject_unknown(j, {"kind", "lambda", "norm_check"}, "defense");
  if (j.contains("kind")) {
    d.kind = defense_from_name(j.at("kind"));
    d.lambda = defense_default_lambda(d.kind);
  }
  get_if(j, "lambda", d.lambda);
  get_if(j, "norm_check", d.norm_check);
}

void parse_attack(const json& j, AttackConfig& a) {
  reject_unknown(j,
                 {"kind", "noise_sigma", "lambda_grid", "extreme_manipulation"},
                 "attack");
  if (j.contains("kind")) a.kind = attack_from_name(j.at("kind"));
  get_if(j, "noise_sigma", a.noise_sigma);
  get_if(j, "extreme_manipulation", a.extreme_manipulation);
  if (j.contains("lambda_grid")) {
    const json& g = j.at("lambda_grid");
    reject_unknown(g, {"min", "max", "points"}, "attack.lambda_grid");
    get_if(g, "min", a.grid.min);
    get_if(g, "max", a.grid.max);
    get_if(g, "points", a.grid.points);
  }
}

void parse_data(const json& j, DataConfig& d) {
  reject_unknown(j,
                 {"source", "dim", "classes", "class_sep", "noise_std",
                  "shift_angle_deg", "shift_translation", "train_per_client",
                  "test_per_dist", "pubval_size", "idx_images", "idx_labels",
                  "idx_test_images", "idx_test_labels"},
                 "data");
  get_if(j, "source", d.source);
  get_if(j, "dim", d.synthetic.dim);
  get_if(j, "classes", d.synthetic.classes);
  get_if(j, "class_sep", d.synthetic.class_sep);
  get_if(j, "noise_std", d.synthetic.noise_std);
  get_if(j, "shift_angle_deg", d.synthetic.shift_angle_deg);
  get_if(j, "shift_translation", d.synthetic.shift_translation);
  get_if(j, "train_per_client", d.train_per_client);
  get_if(j, "test_per_dist", d.test_per_dist);
  get_if(j, "pubval_size", d.pubval_size);
  get_if(j, "idx_images", d.idx_images);
  get_if(j, "idx_labels", d.idx_labels);
  get_if(j, "idx_test_images", d.idx_test_images);
  get_if(j, "idx_test_labels", d.idx_test_labels);
}

void parse_train(const json& j, TrainOptions& t) {
  reject_unknown(j, {"epochs", "lr", "batch_size", "momentum"}, "train");
  get_if(j, "epochs", t.epochs);
  get_if(j, "lr", t.lr);
  get_if(j, "batch_size", t.batch_size);
  get_if(j, "momentum", t.momentum);
}

ExperimentConfig parse_config_json(const json& j) {
  reject_unknown(j,
                 {"m", "m_c", "rounds", "alpha", "val_size", "seed", "defense",
                  "attack", "fixed_point", "data", "train", "hidden_dims",
                  "shift_schedule", "resample_committees_each_round",
                  "freeze_validation", "new_clients_honest"},
                 "config");
  ExperimentConfig c;
  get_if(j, "m", c.m);
  get_if(j, "m_c", c.m_c);
  get_if(j, "rounds", c.rounds);
  get_if(j, "alpha", c.alpha);
  get_if(j, "val_size", c.val_size);
  get_if(j, "seed", c.seed);
  if (j.contains("defense")) parse_defense(j.at("defense"), c.defense);
  if (j.contains("attack")) parse_attack(j.at("attack"), c.attack);
  if (j.contains("fixed_point")) {
    const json& f = j.at("fixed_point");
    reject_unknown(f, {"ring_bits", "frac_bits"}, "fixed_point");
    get_if(f, "ring_bits", c.fixed_point.ring_bits);
    get_if(f, "frac_bits", c.fixed_point.frac_bits);
  }
  if (j.contains("data")) parse_data(j.at("data"), c.data);
  if (j.contains("train")) parse_train(j.at("train"), c.train);
  get_if(j, "hidden_dims", c.hidden_dims);
  if (j.contains("shift_schedule")) {
    for (const json& e : j.at("shift_schedule")) {
      reject_unknown(e, {"round", "kind", "count", "dist"}, "shift_schedule");
      ShiftEvent ev;
      get_if(e, "round", ev.round);
      get_if(e, "kind", ev.kind);
      get_if(e, "count", ev.count);
      get_if(e, "dist", ev.dist_id);
      c.shift_schedule.push_back(ev);
    }
  }
  get_if(j, "resample_committees_each_round",
         c.resample_committees_each_round);
  get_if(j, "freeze_validation", c.freeze_validation);
  get_if(j, "new_clients_honest", c.new_clients_honest);
  c.validate();
  return c;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (m < 1) throw std::invalid_argument("config: m must be >= 1");
  if (m_c < 0 || m_c > m) {
    throw std::invalid_argument("config: m_c must be in [0, m]");
  }
  if (rounds < 0) throw std::invalid_argument("config: rounds must be >= 0");
  if (alpha <= 0.0) throw std::invalid_argument("config: alpha must be > 0");
  if (val_size < 1) throw std::invalid_argument("config: val_size must be >= 1");
  if (defense.lambda <= 0.0) {
    throw std::invalid_argument("config: defense.lambda must be > 0");
  }
  fixed_point.validate();
  if (defense_is_crosscheck(defense.kind)) {
    // committee size must admit an honest majority drawn from the others
    if (2 * m_c + 1 > m - 1) {
      throw std::invalid_argument(
          "config: cross-client check needs 2*m_c+1 <= m-1");
    }
  }
  if (defense_needs_pubval(defense.kind) && data.pubval_size < 1) {
    throw std::invalid_argument(
        "config: defense requires a non-empty public validation set");
  }
  if (data.source != "synthetic" && data.source != "idx") {
    throw std::invalid_argument("config: data.source must be synthetic|idx");
  }
  if (data.source == "idx") {
    if (data.idx_images.empty() || data.idx_labels.empty() ||
        data.idx_test_images.empty() || data.idx_test_labels.empty()) {
      throw std::invalid_argument("config: idx source needs all four paths");
    }
    if (!shift_schedule.empty()) {
      throw std::invalid_argument(
          "config: shift_schedule requires synthetic data");
    }
  }
  if (train.lr <= 0.0) throw std::invalid_argument("config: train.lr must be > 0");
  if (attack.noise_sigma < 0.0) {
    throw std::invalid_argument("config: attack.noise_sigma must be >= 0");
  }
  int prev_round = -1;
  for (const ShiftEvent& e : shift_schedule) {
    if (e.kind != "evolve" && e.kind != "join") {
      throw std::invalid_argument("config: shift kind must be evolve|join");
    }
    if (e.round < prev_round) {
      throw std::invalid_argument("config: shift rounds must be ascending");
    }
    if (e.count < 0) throw std::invalid_argument("config: shift count < 0");
    prev_round = e.round;
  }
}

std::vector<int> ExperimentConfig::layer_dims() const {
  std::vector<int> dims;
  dims.push_back(data.synthetic.dim);
  for (int h : hidden_dims) dims.push_back(h);
  dims.push_back(data.synthetic.classes);
  return dims;
}

ExperimentConfig parse_config(const std::string& json_text) {
  return parse_config_json(json::parse(json_text));
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config not found: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  json j;
  j["m"] = c.m;
  j["m_c"] = c.m_c;
  j["rounds"] = c.rounds;
  j["alpha"] = c.alpha;
  j["val_size"] = c.val_size;
  j["seed"] = c.seed;
  j["defense"] = {{"kind", defense_name(c.defense.kind)},
                  {"lambda", c.defense.lambda},
                  {"norm_check", c.defense.norm_check}};
  j["attack"] = {{"kind", attack_name(c.attack.kind)},
                 {"noise_sigma", c.attack.noise_sigma},
                 {"lambda_grid",
                  {{"min", c.attack.grid.min},
                   {"max", c.attack.grid.max},
                   {"points", c.attack.grid.points}}},
                 {"extreme_manipulation", c.attack.extreme_manipulation}};
  j["fixed_point"] = {{"ring_bits", c.fixed_point.ring_bits},
                      {"frac_bits", c.fixed_point.frac_bits}};
  j["data"] = {{"source", c.data.source},
               {"dim", c.data.synthetic.dim},
               {"classes", c.data.synthetic.classes},
               {"class_sep", c.data.synthetic.class_sep},
               {"noise_std", c.data.synthetic.noise_std},
               {"shift_angle_deg", c.data.synthetic.shift_angle_deg},
               {"shift_translation", c.data.synthetic.shift_translation},
               {"train_per_client", c.data.train_per_client},
               {"test_per_dist", c.data.test_per_dist},
               {"pubval_size", c.data.pubval_size},
               {"idx_images", c.data.idx_images},
               {"idx_labels", c.data.idx_labels},
               {"idx_test_images", c.data.idx_test_images},
               {"idx_test_labels", c.data.idx_test_labels}};
  j["train"] = {{"epochs", c.train.epochs},
                {"lr", c.train.lr},
                {"batch_size", c.train.batch_size},
                {"momentum", c.train.momentum}};
  j["hidden_dims"] = c.hidden_dims;
  j["shift_schedule"] = json::array();
  for (const ShiftEvent& e : c.shift_schedule) {
    j["shift_schedule"].push_back({{"round", e.round},
                                   {"kind", e.kind},
                                   {"count", e.count},
                                   {"dist", e.dist_id}});
  }
  j["resample_committees_each_round"] = c.resample_committees_each_round;
  j["freeze_validation"] = c.freeze_validation;
  j["new_clients_honest"] = c.new_clients_honest;
  return j.dump(2) + "\n";
}

SweepConfig parse_sweep(const std::string& json_text) {
  const json j = json::parse(json_text);
  reject_unknown(j, {"base", "sweep"}, "sweep file");
  SweepConfig s;
  if (!j.contains("base")) {
    throw std::invalid_argument("sweep file needs a 'base' config");
  }
  s.base = parse_config_json(j.at("base"));
  if (j.contains("sweep")) {
    const json& g = j.at("sweep");
    reject_unknown(g, {"defenses", "attacks", "seeds"}, "sweep");
    if (g.contains("defenses")) {
      for (const auto& name : g.at("defenses")) {
        s.defenses.push_back(defense_from_name(name));
      }
    }
    if (g.contains("attacks")) {
      for (const auto& name : g.at("attacks")) {
        s.attacks.push_back(attack_from_name(name));
      }
    }
    if (g.contains("seeds")) {
      for (const auto& v : g.at("seeds")) {
        s.seeds.push_back(v.get<uint64_t>());
      }
    }
  }
  if (s.defenses.empty()) s.defenses.push_back(s.base.defense.kind);
  if (s.attacks.empty()) s.attacks.push_back(s.base.attack.kind);
  if (s.seeds.empty()) s.seeds.push_back(s.base.seed);
  return s;
}

SweepConfig load_sweep(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config not found: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_sweep(ss.str());
}

}  // namespace fedval
