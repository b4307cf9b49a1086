#include "smtw/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "smtw/threading.hpp"

namespace smtw {

namespace {

int bonus_slot(BonusKind kind) {
  for (int i = 0; i < 3; ++i) {
    if (kAnalysisBonuses[i] == kind) return i;
  }
  throw std::invalid_argument("not an analysis bonus kind");
}

double quantile(std::vector<double> sorted, double p) {
  if (sorted.empty()) return 0.0;
  const double idx = p * static_cast<double>(sorted.size() - 1);
  const size_t lo = static_cast<size_t>(idx);
  const size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = idx - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

void write_csv_double(std::ofstream& out, double v) {
  char buf[64];
  snprintf(buf, sizeof(buf), "%.17g", v);
  out << buf;
}

}  // namespace

std::vector<double> score_trajectory_smtw(const BonusNet& net, const Episode& ep) {
  std::vector<double> values;
  values.reserve(ep.length());
  auto state = net.make_state();
  for (size_t t = 0; t < ep.length(); ++t) {
    net.feed(ep.frames[t], state);
    values.push_back(net.score(state, ep.actions[t]));
  }
  return values;
}

std::vector<double> score_trajectory_count(CountBonus& table, const Episode& ep) {
  std::vector<double> values;
  values.reserve(ep.length());
  for (size_t t = 0; t < ep.length(); ++t) {
    values.push_back(table.record_and_bonus(ep.gts[t], ep.actions[t]));
  }
  return values;
}

std::vector<double> score_trajectory_rnd(RndBonus& pair, const Episode& ep) {
  std::vector<double> values;
  values.reserve(ep.length());
  for (size_t t = 0; t < ep.length(); ++t) {
    values.push_back(pair.score_and_update(ep.frames[t]));
  }
  return values;
}

std::vector<double> AnalysisResult::pooled(BehaviorKind behavior, BonusKind bonus) const {
  const int slot = bonus_slot(bonus);
  std::vector<double> out;
  for (const AnalysisCell& cell : cells) {
    if (cell.behavior != behavior) continue;
    out.insert(out.end(), cell.values[slot].begin(), cell.values[slot].end());
  }
  return out;
}

std::vector<double> AnalysisResult::instance_means(BehaviorKind behavior,
                                                   BonusKind bonus) const {
  const int slot = bonus_slot(bonus);
  std::vector<double> out;
  for (const AnalysisCell& cell : cells) {
    if (cell.behavior != behavior) continue;
    double sum = 0.0;
    for (double v : cell.values[slot]) sum += v;
    out.push_back(cell.values[slot].empty()
                      ? 0.0
                      : sum / static_cast<double>(cell.values[slot].size()));
  }
  return out;
}

AnalysisResult run_analysis(const BonusNet& bonus_net,
                            std::span<const EnvInstance> test_instances,
                            std::span<const uint64_t> train_seeds, const AnalysisConfig& cfg) {
  std::set<uint64_t> train_set(train_seeds.begin(), train_seeds.end());
  for (const EnvInstance& inst : test_instances) {
    if (train_set.count(inst.seed)) {
      throw OverlapError("run_analysis: test instance " + std::to_string(inst.seed) +
                         " appears in the training set");
    }
  }

  AnalysisResult result;
  result.cells.resize(test_instances.size() * kNumBehaviors);

  parallel_for(result.cells.size(), [&](size_t idx) {
    const size_t i = idx / kNumBehaviors;
    const size_t b = idx % kNumBehaviors;
    const EnvInstance& inst = test_instances[i];
    const BehaviorKind kind = kAllBehaviors[b];

    AnalysisCell& cell = result.cells[idx];
    cell.instance_seed = inst.seed;
    cell.behavior = kind;

    Rng behavior_rng(derive_stream(cfg.master_seed, "behavior",
                                   static_cast<uint64_t>(i) * kNumBehaviors + b));
    Episode ep = run_behavior(kind, inst, behavior_rng, cfg.behavior);
    cell.episode_length = ep.length();

    cell.values[0] = score_trajectory_smtw(bonus_net, ep);
    CountBonus table;
    cell.values[1] = score_trajectory_count(table, ep);
    // The RND pair is seeded per instance so every behavior in one
    // environment faces the same fixed target network.
    RndBonus rnd(inst.n, derive_stream(cfg.master_seed, "rnd_pair", i), cfg.rnd);
    cell.values[2] = score_trajectory_rnd(rnd, ep);
  });

  return result;
}

MeanCi bootstrap_mean(std::span<const double> instance_means, int resamples, Rng& rng) {
  MeanCi ci;
  const size_t n = instance_means.size();
  if (n == 0) return ci;
  double sum = 0.0;
  for (double v : instance_means) sum += v;
  ci.mean = sum / static_cast<double>(n);

  std::vector<double> stats(static_cast<size_t>(resamples));
  for (int r = 0; r < resamples; ++r) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += instance_means[rng.uniform_index(n)];
    stats[static_cast<size_t>(r)] = s / static_cast<double>(n);
  }
  std::sort(stats.begin(), stats.end());
  ci.lo = quantile(stats, 0.025);
  ci.hi = quantile(stats, 0.975);
  return ci;
}

std::vector<OrderingRow> pairwise_orderings(const AnalysisResult& analysis, int resamples,
                                            uint64_t seed) {
  std::vector<OrderingRow> rows;
  int pair_index = 0;
  for (BonusKind bonus : kAnalysisBonuses) {
    const auto dem_means = analysis.instance_means(BehaviorKind::kDemonstrator, bonus);
    for (BehaviorKind other : kAllBehaviors) {
      if (other == BehaviorKind::kDemonstrator) continue;
      const auto other_means = analysis.instance_means(other, bonus);
      if (dem_means.size() != other_means.size()) {
        throw std::logic_error("orderings: behaviors cover different instance sets");
      }
      std::vector<double> diffs(dem_means.size());
      for (size_t i = 0; i < diffs.size(); ++i) diffs[i] = dem_means[i] - other_means[i];

      OrderingRow row;
      row.bonus = bonus;
      row.behavior_a = BehaviorKind::kDemonstrator;
      row.behavior_b = other;
      Rng rng(derive_stream(seed, "bootstrap", static_cast<uint64_t>(pair_index++)));
      row.diff = bootstrap_mean(diffs, resamples, rng);
      row.a_ci = bootstrap_mean(dem_means, resamples, rng);
      row.b_ci = bootstrap_mean(other_means, resamples, rng);
      row.mean_a = row.a_ci.mean;
      row.mean_b = row.b_ci.mean;
      rows.push_back(row);
    }
  }
  return rows;
}

std::vector<SummaryRow> summarize(const AnalysisResult& analysis) {
  std::vector<SummaryRow> rows;
  for (BehaviorKind behavior : kAllBehaviors) {
    for (BonusKind bonus : kAnalysisBonuses) {
      std::vector<double> values = analysis.pooled(behavior, bonus);
      SummaryRow row;
      row.behavior = behavior;
      row.bonus = bonus;
      row.count = values.size();
      if (!values.empty()) {
        double sum = 0.0;
        for (double v : values) sum += v;
        row.mean = sum / static_cast<double>(values.size());
        std::sort(values.begin(), values.end());
        row.median = quantile(values, 0.5);
        row.q25 = quantile(values, 0.25);
        row.q75 = quantile(values, 0.75);
        row.min = values.front();
        row.max = values.back();
      }
      rows.push_back(row);
    }
  }
  return rows;
}

void write_raw_values_csv(const std::string& path, const AnalysisResult& analysis) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "instance_seed,behavior,bonus,step,value\n";
  for (const AnalysisCell& cell : analysis.cells) {
    for (int slot = 0; slot < 3; ++slot) {
      const char* bonus = bonus_kind_name(kAnalysisBonuses[slot]);
      for (size_t t = 0; t < cell.values[slot].size(); ++t) {
        out << cell.instance_seed << ',' << behavior_name(cell.behavior) << ',' << bonus << ','
            << t << ',';
        write_csv_double(out, cell.values[slot][t]);
        out << '\n';
      }
    }
  }
}

AnalysisResult read_raw_values_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  if (!std::getline(in, line) || line != "instance_seed,behavior,bonus,step,value") {
    throw std::runtime_error(path + ": not a raw bonus-values file");
  }
  // (instance, behavior) -> cell index
  std::map<std::pair<uint64_t, int>, size_t> index;
  AnalysisResult result;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string seed_s, behavior_s, bonus_s, step_s, value_s;
    std::getline(ss, seed_s, ',');
    std::getline(ss, behavior_s, ',');
    std::getline(ss, bonus_s, ',');
    std::getline(ss, step_s, ',');
    std::getline(ss, value_s, ',');
    const uint64_t seed = std::stoull(seed_s);
    const BehaviorKind behavior = behavior_from_name(behavior_s);
    const int slot = bonus_slot(bonus_kind_from_name(bonus_s));
    auto key = std::make_pair(seed, static_cast<int>(behavior));
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, result.cells.size()).first;
      AnalysisCell cell;
      cell.instance_seed = seed;
      cell.behavior = behavior;
      result.cells.push_back(cell);
    }
    result.cells[it->second].values[slot].push_back(std::stod(value_s));
  }
  for (AnalysisCell& cell : result.cells) cell.episode_length = cell.values[0].size();
  return result;
}

void write_summary_csv(const std::string& path, std::span<const SummaryRow> rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "behavior,bonus,count,mean,median,q25,q75,min,max\n";
  for (const SummaryRow& row : rows) {
    out << behavior_name(row.behavior) << ',' << bonus_kind_name(row.bonus) << ','
        << row.count << ',';
    write_csv_double(out, row.mean);
    out << ',';
    write_csv_double(out, row.median);
    out << ',';
    write_csv_double(out, row.q25);
    out << ',';
    write_csv_double(out, row.q75);
    out << ',';
    write_csv_double(out, row.min);
    out << ',';
    write_csv_double(out, row.max);
    out << '\n';
  }
}

void write_orderings_csv(const std::string& path, std::span<const OrderingRow> rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "bonus,behavior_a,behavior_b,mean_a,mean_b,mean_diff,diff_ci_lo,diff_ci_hi,"
         "a_ci_lo,a_ci_hi,b_ci_lo,b_ci_hi\n";
  for (const OrderingRow& row : rows) {
    out << bonus_kind_name(row.bonus) << ',' << behavior_name(row.behavior_a) << ','
        << behavior_name(row.behavior_b) << ',';
    const double cols[] = {row.mean_a, row.mean_b, row.diff.mean, row.diff.lo, row.diff.hi,
                           row.a_ci.lo, row.a_ci.hi, row.b_ci.lo,  row.b_ci.hi};
    for (size_t i = 0; i < std::size(cols); ++i) {
      write_csv_double(out, cols[i]);
      out << (i + 1 == std::size(cols) ? '\n' : ',');
    }
  }
}

void write_histograms(const std::string& dir, const AnalysisResult& analysis, int bins) {
  std::filesystem::create_directories(dir);

  for (BonusKind bonus : kAnalysisBonuses) {
    // One x-range per bonus kind so panels are comparable across behaviors.
    double lo = 0.0, hi = 1.0;
    bool any = false;
    for (BehaviorKind behavior : kAllBehaviors) {
      for (double v : analysis.pooled(behavior, bonus)) {
        if (!any) {
          lo = hi = v;
          any = true;
        }
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    if (hi <= lo) hi = lo + 1.0;

    for (BehaviorKind behavior : kAllBehaviors) {
      std::vector<double> values = analysis.pooled(behavior, bonus);
      std::vector<size_t> counts(static_cast<size_t>(bins), 0);
      for (double v : values) {
        int b = static_cast<int>((v - lo) / (hi - lo) * bins);
        b = std::clamp(b, 0, bins - 1);
        ++counts[static_cast<size_t>(b)];
      }
      size_t peak = 1;
      for (size_t c : counts) peak = std::max(peak, c);

      const int width = 640, height = 360, margin = 40;
      const double bar_w = static_cast<double>(width - 2 * margin) / bins;
      std::string path = dir + "/" + std::string(bonus_kind_name(bonus)) + "_" +
                         behavior_name(behavior) + ".svg";
      std::ofstream out(path);
      if (!out) throw std::runtime_error("cannot write " + path);
      out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
          << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
          << height << "\">\n"
          << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
          << "\" fill=\"white\"/>\n";
      for (int b = 0; b < bins; ++b) {
        const double frac =
            static_cast<double>(counts[static_cast<size_t>(b)]) / static_cast<double>(peak);
        const double bar_h = frac * (height - 2 * margin);
        char rect[256];
        snprintf(rect, sizeof(rect),
                 "<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" "
                 "fill=\"steelblue\"/>\n",
                 margin + b * bar_w, height - margin - bar_h, bar_w * 0.95, bar_h);
        out << rect;
      }
      char label[256];
      snprintf(label, sizeof(label),
               "<text x=\"%d\" y=\"%d\" font-size=\"14\">%s / %s (n=%zu, x in [%.3g, %.3g])"
               "</text>\n",
               margin, margin / 2 + 6, bonus_kind_name(bonus), behavior_name(behavior),
               values.size(), lo, hi);
      out << label;
      out << "</svg>\n";
    }
  }
}

}  // namespace smtw
