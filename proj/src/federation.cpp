#include "fedval/federation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "fedval/rng.hpp"

namespace fedval {

std::vector<double> class_mean(int dist_id, int c, const SyntheticSpec& spec) {
  std::vector<double> mean(spec.dim, 0.0);
  const double radius = spec.class_sep / 2.0;
  const double angle = 2.0 * M_PI * c / spec.classes +
                       dist_id * spec.shift_angle_deg * M_PI / 180.0;
  mean[0] = radius * std::cos(angle) + dist_id * spec.shift_translation;
  if (spec.dim > 1) mean[1] = radius * std::sin(angle);
  return mean;
}

Dataset gen_synthetic(int dist_id, std::size_t n, int L,
                      const SyntheticSpec& spec, std::mt19937_64& rng) {
  Dataset d;
  d.dim = static_cast<std::size_t>(spec.dim);
  d.num_classes = static_cast<std::size_t>(L);
  d.x.reserve(n * d.dim);
  d.y.reserve(n);
  std::normal_distribution<double> noise(0.0, spec.noise_std);
  for (std::size_t r = 0; r < n; ++r) {
    const int c = static_cast<int>(r % L);
    const auto mean = class_mean(dist_id, c, spec);
    for (std::size_t k = 0; k < d.dim; ++k) {
      d.x.push_back(mean[k] + noise(rng));
    }
    d.y.push_back(c);
  }
  return d;
}

std::vector<Dataset> dirichlet_partition(const Dataset& d, std::size_t m,
                                         double alpha, std::mt19937_64& rng) {
  if (alpha <= 0.0) throw std::invalid_argument("alpha must be > 0");
  if (d.rows() < m) {
    throw std::invalid_argument("fewer rows than clients to partition");
  }
  const std::size_t L = d.num_classes;

  std::vector<std::vector<std::size_t>> by_class(L);
  for (std::size_t r = 0; r < d.rows(); ++r) {
    by_class[d.y[r]].push_back(r);
  }
  for (auto& rows : by_class) std::shuffle(rows.begin(), rows.end(), rng);

  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<std::vector<std::size_t>> assigned;
  for (int attempt = 0; attempt < 100; ++attempt) {
    assigned.assign(m, {});
    for (std::size_t c = 0; c < L; ++c) {
      const std::size_t n_c = by_class[c].size();
      if (n_c == 0) continue;
      std::vector<double> g(m);
      double total = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        g[j] = gamma(rng);
        total += g[j];
      }
      // largest-remainder apportionment of n_c rows
      std::vector<std::size_t> counts(m);
      std::vector<std::pair<double, std::size_t>> rem(m);
      std::size_t used = 0;
      for (std::size_t j = 0; j < m; ++j) {
        const double share = g[j] / total * static_cast<double>(n_c);
        counts[j] = static_cast<std::size_t>(share);
        used += counts[j];
        rem[j] = {share - static_cast<double>(counts[j]), j};
      }
      std::stable_sort(rem.begin(), rem.end(), [](const auto& a,
                                                  const auto& b) {
        return a.first > b.first;
      });
      for (std::size_t k = 0; used < n_c; ++k, ++used) {
        counts[rem[k % m].second] += 1;
      }
      std::size_t cursor = 0;
      for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t k = 0; k < counts[j]; ++k) {
          assigned[j].push_back(by_class[c][cursor++]);
        }
      }
    }
    const bool ok = std::all_of(assigned.begin(), assigned.end(),
                                [](const auto& v) { return !v.empty(); });
    if (ok) break;
  }
  // a degenerate tail of draws can still leave a client empty: hand over a
  // row from the largest client
  for (std::size_t j = 0; j < m; ++j) {
    if (!assigned[j].empty()) continue;
    auto largest = std::max_element(
        assigned.begin(), assigned.end(),
        [](const auto& a, const auto& b) { return a.size() < b.size(); });
    assigned[j].push_back(largest->back());
    largest->pop_back();
  }

  std::vector<Dataset> parts;
  parts.reserve(m);
  for (std::size_t j = 0; j < m; ++j) {
    parts.push_back(d.subset(assigned[j]));
  }
  return parts;
}

std::vector<uint8_t> Population::malicious_flags() const {
  std::vector<uint8_t> flags(clients.size());
  for (std::size_t i = 0; i < clients.size(); ++i) {
    flags[i] = clients[i].malicious;
  }
  return flags;
}

namespace {

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string label(const char* prefix, int round, std::size_t client) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s/r%d/c%zu", prefix, round, client);
  return buf;
}

}  // namespace

Experiment::Experiment(const ExperimentConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const int L = cfg_.data.synthetic.classes;

  Dataset source;
  if (cfg_.data.source == "idx") {
    source = load_idx_dataset(cfg_.data.idx_images, cfg_.data.idx_labels, L);
    cfg_.data.synthetic.dim = static_cast<int>(source.dim);
    // reserve the tail of the training set as the public validation data
    const std::size_t reserve =
        std::min<std::size_t>(cfg_.data.pubval_size, source.rows() / 2);
    std::vector<std::size_t> pub_idx(reserve);
    std::iota(pub_idx.begin(), pub_idx.end(), source.rows() - reserve);
    pubval_ = source.subset(pub_idx);
    std::vector<std::size_t> rest(source.rows() - reserve);
    std::iota(rest.begin(), rest.end(), 0);
    source = source.subset(rest);
  } else {
    auto rng = make_rng(cfg_.seed, "data/pool");
    source = gen_synthetic(
        0, static_cast<std::size_t>(cfg_.m) * cfg_.data.train_per_client, L,
        cfg_.data.synthetic, rng);
    auto pv_rng = make_rng(cfg_.seed, "data/pubval");
    pubval_ = gen_synthetic(0, cfg_.data.pubval_size, L, cfg_.data.synthetic,
                            pv_rng);
  }

  auto part_rng = make_rng(cfg_.seed, "data/partition");
  auto parts = dirichlet_partition(source, cfg_.m, cfg_.alpha, part_rng);
  pop_.m_c = cfg_.m_c;
  pop_.clients.resize(cfg_.m);
  for (int i = 0; i < cfg_.m; ++i) {
    pop_.clients[i].data = std::move(parts[i]);
    pop_.clients[i].malicious = i < cfg_.m_c;
    pop_.clients[i].dist_id = 0;
  }

  if (cfg_.data.source == "idx") {
    test_by_dist_[0] = load_idx_dataset(cfg_.data.idx_test_images,
                                        cfg_.data.idx_test_labels, L);
  } else {
    auto rng = make_rng(cfg_.seed, "data/test/0");
    test_by_dist_[0] = gen_synthetic(0, cfg_.data.test_per_dist, L,
                                     cfg_.data.synthetic, rng);
  }
  rebuild_test_union();

  global_ = MlpModel(cfg_.layer_dims());
  auto init_rng = make_rng(cfg_.seed, "model/init");
  global_.init_random(init_rng, 0.01);

  if (defense_is_crosscheck(cfg_.defense.kind)) {
    engine_.emplace(cfg_.fixed_point, substream(cfg_.seed, "engine"));
    resample_committees();
    // the committee precondition also needs an honest majority to exist
    int actual_malicious = 0;
    for (const auto& c : pop_.clients) actual_malicious += c.malicious;
    if (actual_malicious > cfg_.m_c) {
      throw std::invalid_argument("more malicious clients than m_c");
    }
  }

  pending_shifts_ = cfg_.shift_schedule;
  frozen_val_idx_.resize(pop_.size());

  adversary_pool_ = Dataset{};
  adversary_pool_.dim = pop_.clients.empty() ? 0 : pop_.clients[0].data.dim;
  adversary_pool_.num_classes = static_cast<std::size_t>(L);
  for (const auto& c : pop_.clients) {
    if (c.malicious) adversary_pool_.append_all(c.data);
  }
}

const CommLedger* Experiment::ledger() const {
  return engine_ ? &engine_->ledger() : nullptr;
}

void Experiment::rebuild_test_union() {
  std::set<int> active;
  for (const auto& c : pop_.clients) active.insert(c.dist_id);
  const int L = cfg_.data.synthetic.classes;
  for (int dist : active) {
    if (!test_by_dist_.contains(dist)) {
      auto rng = make_rng(cfg_.seed, "data/test/" + std::to_string(dist));
      test_by_dist_[dist] = gen_synthetic(dist, cfg_.data.test_per_dist, L,
                                          cfg_.data.synthetic, rng);
    }
  }
  test_union_ = Dataset{};
  test_union_.dim = pop_.clients[0].data.dim;
  test_union_.num_classes = static_cast<std::size_t>(L);
  for (int dist : active) test_union_.append_all(test_by_dist_[dist]);
}

void Experiment::resample_committees() {
  const uint64_t kappa = substream(cfg_.seed, "committees") ^
                         (cfg_.resample_committees_each_round
                              ? static_cast<uint64_t>(next_round_) + 1
                              : 0);
  committees_ = sample_committees(pop_.size(), cfg_.m_c, kappa);
}

void Experiment::apply_shift(const ShiftEvent& event) {
  const int L = cfg_.data.synthetic.classes;
  ShiftLogEntry logent;
  logent.round = event.round;
  logent.kind = event.kind;
  if (event.kind == "evolve") {
    if (static_cast<std::size_t>(event.count) > pop_.size()) {
      throw std::invalid_argument("evolve count exceeds active clients");
    }
    auto rng = make_rng(cfg_.seed,
                        "shift/r" + std::to_string(event.round) + "/pick");
    std::vector<int> ids(pop_.size());
    std::iota(ids.begin(), ids.end(), 0);
    for (int k = 0; k < event.count; ++k) {
      const std::size_t r = k + rng() % (ids.size() - k);
      std::swap(ids[k], ids[r]);
    }
    ids.resize(event.count);
    std::sort(ids.begin(), ids.end());
    for (int id : ids) {
      auto drng = make_rng(cfg_.seed, "shift/r" + std::to_string(event.round) +
                                          "/c" + std::to_string(id));
      pop_.clients[id].data = gen_synthetic(
          event.dist_id, cfg_.data.train_per_client, L, cfg_.data.synthetic,
          drng);
      pop_.clients[id].dist_id = event.dist_id;
      frozen_val_idx_[id].clear();
    }
    logent.clients = ids;
  } else {  // join
    const std::size_t first = pop_.size();
    for (int k = 0; k < event.count; ++k) {
      const std::size_t id = first + k;
      auto drng = make_rng(cfg_.seed, "shift/r" + std::to_string(event.round) +
                                          "/c" + std::to_string(id));
      ClientState c;
      c.data = gen_synthetic(event.dist_id, cfg_.data.train_per_client, L,
                             cfg_.data.synthetic, drng);
      c.dist_id = event.dist_id;
      c.malicious = !cfg_.new_clients_honest;
      pop_.clients.push_back(std::move(c));
      logent.clients.push_back(static_cast<int>(id));
    }
    frozen_val_idx_.resize(pop_.size());
    if (engine_) resample_committees();
  }
  rebuild_test_union();

  adversary_pool_ = Dataset{};
  adversary_pool_.dim = pop_.clients[0].data.dim;
  adversary_pool_.num_classes = static_cast<std::size_t>(L);
  for (const auto& c : pop_.clients) {
    if (c.malicious) adversary_pool_.append_all(c.data);
  }
  shift_log_.push_back(std::move(logent));
}

Dataset Experiment::validation_subset(std::size_t client, int round) {
  const Dataset& data = pop_.clients[client].data;
  const std::size_t d = static_cast<std::size_t>(cfg_.val_size);
  std::vector<std::size_t>* frozen = nullptr;
  if (cfg_.freeze_validation) {
    frozen = &frozen_val_idx_[client];
    if (!frozen->empty()) return data.subset(*frozen);
  }
  auto rng = cfg_.freeze_validation
                 ? make_rng(cfg_.seed, "val/frozen/c" + std::to_string(client))
                 : make_rng(cfg_.seed, label("val", round, client));
  std::vector<std::size_t> idx;
  idx.reserve(d);
  if (data.rows() >= d) {
    std::vector<std::size_t> all(data.rows());
    std::iota(all.begin(), all.end(), 0);
    for (std::size_t k = 0; k < d; ++k) {
      const std::size_t r = k + rng() % (all.size() - k);
      std::swap(all[k], all[r]);
    }
    idx.assign(all.begin(), all.begin() + d);
  } else {
    for (std::size_t k = 0; k < d; ++k) idx.push_back(rng() % data.rows());
  }
  if (frozen) *frozen = idx;
  return data.subset(idx);
}

std::vector<double> Experiment::train_pubval_update(int round) {
  MlpModel model = global_;
  auto rng = make_rng(cfg_.seed, "pubval/r" + std::to_string(round));
  // the server's reference update takes deterministic full-batch steps,
  // matching the number of optimizer steps a client performs per round
  TrainOptions opts = cfg_.train;
  const int client_rows = std::max(1, cfg_.data.train_per_client);
  const int steps_per_epoch =
      (client_rows + opts.batch_size - 1) / std::max(1, opts.batch_size);
  opts.epochs = cfg_.train.epochs * steps_per_epoch;
  opts.batch_size = static_cast<int>(pubval_.rows());
  return local_train(model, pubval_, opts, rng);
}

std::vector<std::vector<double>> Experiment::collect_updates(
    int round, std::vector<std::vector<double>>& clean_updates) {
  const std::size_t m = pop_.size();
  std::vector<std::vector<double>> submissions(m);
  clean_updates.assign(m, {});
  for (std::size_t i = 0; i < m; ++i) {
    const ClientState& client = pop_.clients[i];
    MlpModel model = global_;
    auto rng = make_rng(cfg_.seed, label("train", round, i));
    if (client.malicious && cfg_.attack.kind == AttackKind::label_flip) {
      const Dataset flipped = label_flip(client.data);
      submissions[i] = local_train(model, flipped, cfg_.train, rng);
      clean_updates[i] = submissions[i];
      continue;
    }
    std::vector<double> u = local_train(model, client.data, cfg_.train, rng);
    clean_updates[i] = u;
    if (client.malicious) {
      switch (cfg_.attack.kind) {
        case AttackKind::additive_noise: {
          auto nrng = make_rng(cfg_.seed, label("noise", round, i));
          u = additive_noise(u, cfg_.attack.noise_sigma, nrng);
          break;
        }
        case AttackKind::sign_flip:
          u = sign_flip(u);
          break;
        default:
          break;  // none, label_flip handled above, adaptive comes later
      }
    }
    submissions[i] = std::move(u);
  }
  return submissions;
}

void Experiment::craft_adaptive(
    std::vector<std::vector<double>>& submissions,
    const std::vector<std::vector<double>>& clean_updates, int /*round*/,
    const std::optional<double>& tau, const std::vector<double>& u_pubval) {
  AdversaryView view;
  for (std::size_t i = 0; i < pop_.size(); ++i) {
    if (pop_.clients[i].malicious) view.clean_updates.push_back(clean_updates[i]);
  }
  if (view.clean_updates.empty()) return;
  view.clean_data = &adversary_pool_;
  view.global_model = global_.params;
  view.layer_dims = cfg_.layer_dims();
  view.defense = cfg_.defense.kind;
  view.tau = tau.value_or(0.0);
  view.u_pubval = u_pubval;
  view.u_prev_global = u_prev_global_.empty()
                           ? std::vector<double>(global_.params.size(), 0.0)
                           : u_prev_global_;

  std::vector<double> crafted;
  switch (cfg_.defense.kind) {
    case DefenseKind::norm_bound_adaptive:
    case DefenseKind::norm_bound_public:
      crafted = adaptive_normbound(view, view.tau);
      break;
    case DefenseKind::norm_ball:
      crafted = adaptive_normball(view, u_pubval, view.tau);
      break;
    case DefenseKind::cosine_sim:
      crafted = adaptive_cosine(view, view.tau, cfg_.attack.grid);
      break;
    case DefenseKind::crosscheck_acc:
    case DefenseKind::crosscheck_prob:
      crafted = adaptive_crosscheck(view, cfg_.attack.grid);
      break;
    case DefenseKind::fedavg_plain: {
      // nothing to evade: push as far as the grid allows
      const auto s = estimate_direction(view);
      const std::size_t dim = s.size();
      std::vector<double> u_est(dim, 0.0);
      for (const auto& u : view.clean_updates) {
        for (std::size_t k = 0; k < dim; ++k) u_est[k] += u[k];
      }
      crafted.resize(dim);
      for (std::size_t k = 0; k < dim; ++k) {
        u_est[k] /= static_cast<double>(view.clean_updates.size());
        crafted[k] = u_est[k] - cfg_.attack.grid.max * s[k];
      }
      break;
    }
  }
  for (std::size_t i = 0; i < pop_.size(); ++i) {
    if (pop_.clients[i].malicious) submissions[i] = crafted;
  }
}

RoundMetrics Experiment::run_round() {
  const int round = next_round_;
  while (!pending_shifts_.empty() && pending_shifts_.front().round <= round) {
    apply_shift(pending_shifts_.front());
    pending_shifts_.erase(pending_shifts_.begin());
  }
  const std::size_t m = pop_.size();
  const int L = cfg_.data.synthetic.classes;

  std::vector<double> u_pubval;
  const bool adaptive = cfg_.attack.kind == AttackKind::adaptive;
  if (defense_needs_pubval(cfg_.defense.kind)) {
    u_pubval = train_pubval_update(round);
  }

  std::vector<std::vector<double>> clean_updates;
  auto submissions = collect_updates(round, clean_updates);

  if (adaptive) {
    std::optional<double> tau;
    switch (cfg_.defense.kind) {
      case DefenseKind::norm_bound_adaptive: {
        std::vector<double> norms;
        if (prev_norms_.empty()) {
          for (std::size_t i = 0; i < m; ++i) {
            if (pop_.clients[i].malicious) {
              norms.push_back(l2_norm(clean_updates[i]));
            }
          }
        } else {
          norms = prev_norms_;
        }
        tau = cfg_.defense.lambda * median_of(norms);
        break;
      }
      case DefenseKind::norm_bound_public:
        tau = l2_norm(u_pubval);
        break;
      case DefenseKind::norm_ball:
        tau = cfg_.defense.lambda * l2_norm(u_pubval);
        break;
      case DefenseKind::cosine_sim:
        tau = cfg_.defense.lambda *
              cosine(u_pubval, u_prev_global_.empty()
                                   ? std::vector<double>(
                                         global_.params.size(), 0.0)
                                   : u_prev_global_);
        break;
      default:
        break;
    }
    craft_adaptive(submissions, clean_updates, round, tau, u_pubval);
  }

  RoundMetrics metrics;
  metrics.round = round;
  metrics.attack = attack_name(cfg_.attack.kind);
  metrics.defense = defense_name(cfg_.defense.kind);

  std::vector<uint8_t> accepted;
  std::vector<double> mean_update;
  std::size_t accepted_count = 0;

  if (defense_is_crosscheck(cfg_.defense.kind)) {
    Engine& eng = *engine_;
    if (cfg_.resample_committees_each_round) resample_committees();
    const FixedParams& fp = cfg_.fixed_point;
    FixedVec prev_fixed = FixedVec::from_reals(global_.params, fp);
    std::vector<ShareVec> upd_shares;
    std::vector<ShareVec> val_shares;
    upd_shares.reserve(m);
    val_shares.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
      auto srng = make_rng(cfg_.seed, label("share", round, i));
      upd_shares.push_back(
          eng.share(FixedVec::from_reals(submissions[i], fp), srng));
      const Dataset val = validation_subset(i, round);
      auto vrng = make_rng(cfg_.seed, label("shareval", round, i));
      val_shares.push_back(eng.share(pack_dataset(val, fp), vrng));
    }
    CheckConfig ccfg;
    ccfg.variant = cfg_.defense.kind == DefenseKind::crosscheck_acc
                       ? ScoreVariant::acc
                       : ScoreVariant::prob;
    ccfg.m_c = cfg_.m_c;
    ccfg.k_frac = 1.0 - static_cast<double>(cfg_.m_c) / static_cast<double>(m);
    ccfg.norm_check = cfg_.defense.norm_check;
    ccfg.lambda = cfg_.defense.lambda;
    ccfg.layer_dims = cfg_.layer_dims();

    ScoreOverride hook;
    if (adaptive && cfg_.attack.extreme_manipulation && cfg_.m_c > 0) {
      hook = make_extreme_override(pop_.malicious_flags(), ccfg.variant, L);
    }
    CheckOutcome outcome = run_check(eng, upd_shares, val_shares, prev_fixed,
                                     committees_, ccfg, hook);
    if (observer_) observer_(round, outcome);
    AggregateResult agg = secure_aggregate(eng, upd_shares, outcome);
    accepted = outcome.accepted;
    accepted_count = agg.accepted_count;
    mean_update = std::move(agg.mean_update);
    metrics.bytes_total = eng.ledger().total_bytes();
  } else {
    switch (cfg_.defense.kind) {
      case DefenseKind::fedavg_plain:
        accepted.assign(m, 1);
        break;
      case DefenseKind::norm_bound_adaptive:
        accepted = norm_bound_adaptive(submissions, prev_norms_,
                                       cfg_.defense.lambda);
        break;
      case DefenseKind::norm_bound_public:
        accepted = norm_bound_public(submissions, u_pubval);
        break;
      case DefenseKind::norm_ball:
        accepted = norm_ball(submissions, u_pubval, cfg_.defense.lambda);
        break;
      case DefenseKind::cosine_sim: {
        const std::vector<double> prev =
            u_prev_global_.empty()
                ? std::vector<double>(global_.params.size(), 0.0)
                : u_prev_global_;
        accepted = cosine_sim(submissions, prev, u_pubval,
                              cfg_.defense.lambda);
        break;
      }
      default:
        throw std::logic_error("unhandled defense kind");
    }
    mean_update.assign(global_.params.size(), 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      if (!accepted[i]) continue;
      ++accepted_count;
      for (std::size_t k = 0; k < mean_update.size(); ++k) {
        mean_update[k] += submissions[i][k];
      }
    }
    if (accepted_count > 0) {
      for (double& v : mean_update) {
        v /= static_cast<double>(accepted_count);
      }
    } else {
      mean_update.clear();
    }
  }

  prev_norms_.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    prev_norms_[i] = l2_norm(submissions[i]);
  }

  if (!mean_update.empty()) {
    for (std::size_t k = 0; k < global_.params.size(); ++k) {
      global_.params[k] += mean_update[k];
    }
    u_prev_global_ = std::move(mean_update);
  } else {
    u_prev_global_.assign(global_.params.size(), 0.0);
  }

  metrics.accepted_count = accepted_count;
  metrics.accepted_bits.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    metrics.accepted_bits.push_back(accepted[i] ? '1' : '0');
  }
  metrics.accuracy = accuracy(global_, test_union_);
  ++next_round_;
  return metrics;
}

ExperimentResult Experiment::run(const RoundObserver& observer) {
  observer_ = observer;
  ExperimentResult result;
  result.rounds.reserve(cfg_.rounds);
  for (int t = 0; t < cfg_.rounds; ++t) {
    result.rounds.push_back(run_round());
  }
  result.final_accuracy =
      result.rounds.empty() ? accuracy(global_, test_union_)
                            : result.rounds.back().accuracy;
  if (engine_) result.ledger = engine_->ledger();
  result.shifts = shift_log_;
  observer_ = {};
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const RoundObserver& observer) {
  Experiment exp(cfg);
  return exp.run(observer);
}

std::string metrics_csv_header() {
  return "round,accuracy,accepted_count,accepted_bits,attack,defense,"
         "bytes_total";
}

std::string metrics_csv_row(const RoundMetrics& m) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%d,%.6f,%zu,", m.round, m.accuracy,
                m.accepted_count);
  std::string row = buf;
  row += m.accepted_bits;
  row += ',';
  row += m.attack;
  row += ',';
  row += m.defense;
  std::snprintf(buf, sizeof(buf), ",%llu",
                static_cast<unsigned long long>(m.bytes_total));
  row += buf;
  return row;
}

}  // namespace fedval
