#include "wormsim/report.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include <spdlog/spdlog.h>

#include "wormsim/io.hpp"
#include "wormsim/lattice.hpp"
#include "wormsim/svg.hpp"

namespace wormsim {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string cell(double v) { return std::isnan(v) ? std::string() : format_double(v); }

std::string csv_text(const std::string& schema, const std::vector<std::string>& notes,
                     const std::vector<std::string>& header,
                     const std::vector<std::vector<std::string>>& rows) {
  std::string text = csv_version_line(schema, kReportCsvVersion) + "\n";
  for (const auto& n : notes) text += "# " + n + "\n";
  text += join_csv(header) + "\n";
  for (const auto& r : rows) text += join_csv(r) + "\n";
  return text;
}

void note_comments(svg::Document& doc, const std::vector<std::string>& notes) {
  for (const auto& n : notes) doc.comment("note: " + n);
}

}  // namespace

RunRecord load_run_record(const fs::path& run_dir) {
  RunRecord rec;
  const auto meta = read_json(run_dir / "run.json");
  rec.run_id = meta.at("run_id").get<std::string>();
  rec.config_hash = meta.at("config_hash").get<std::string>();
  rec.status = meta.value("status", "unknown");
  rec.seed = meta.at("seed").get<std::uint64_t>();
  rec.target = meta.at("target").get<int>();
  rec.adaptation = meta.at("adaptation").get<bool>();
  rec.wall_seconds = meta.value("wall_seconds", 0.0);

  const auto config = read_json(run_dir / "config.json");
  rec.n_columns = config.at("lattice").at("n_columns").get<int>();
  rec.n_levels = config.at("lattice").at("n_levels").get<int>();
  rec.lambda_0 = config.at("adaptation").at("lambda_0_mn").get<double>() * 1e-3;

  const CsvTable ep = read_csv(run_dir / "episodes.csv");
  const auto c_ep = ep.column("episode"), c_ret = ep.column("return"),
             c_max = ep.column("max_step_reward"), c_dist = ep.column("final_distance"),
             c_uns = ep.column("unstable"), c_steps = ep.column("steps");
  for (const auto& row : ep.rows)
    rec.episodes.push_back({std::stol(row[c_ep]), parse_double(row[c_ret]),
                            parse_double(row[c_max]), parse_double(row[c_dist]),
                            row[c_uns] == "1", std::stoi(row[c_steps])});
  for (std::size_t i = 0; i < rec.episodes.size(); ++i)
    if (rec.episodes[i].episode != static_cast<long>(i))
      throw std::runtime_error("episodes in '" + run_dir.string() + "' are not contiguous");

  const int n_muscles = rec.n_columns * rec.n_levels;
  rec.muscles.assign(rec.episodes.size(), std::vector<MuscleSample>(n_muscles));
  const CsvTable mu = read_csv(run_dir / "muscles.csv");
  const auto m_ep = mu.column("episode"), m_id = mu.column("muscle_id"),
             m_lam = mu.column("lambda"), m_force = mu.column("force"),
             m_act = mu.column("activation");
  for (const auto& row : mu.rows) {
    const long e = std::stol(row[m_ep]);
    const int m = std::stoi(row[m_id]);
    if (e < 0 || e >= static_cast<long>(rec.muscles.size()) || m < 0 || m >= n_muscles) continue;
    rec.muscles[e][m] = {parse_double(row[m_lam]), parse_double(row[m_force]),
                         parse_double(row[m_act])};
  }
  return rec;
}

std::vector<RunRecord> load_records(const fs::path& dir) {
  std::vector<RunRecord> records;
  if (fs::exists(dir / "run.json")) {
    records.push_back(load_run_record(dir));
    return records;
  }
  if (!fs::is_directory(dir / "runs"))
    throw std::runtime_error("'" + dir.string() + "' holds neither a run nor a sweep");
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(dir / "runs"))
    if (fs::exists(entry.path() / "run.json")) dirs.push_back(entry.path());
  std::sort(dirs.begin(), dirs.end());
  for (const auto& d : dirs) {
    RunRecord rec = load_run_record(d);
    if (rec.status != "completed") {
      spdlog::warn("skipping {} (status {})", rec.run_id, rec.status);
      continue;
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<RollingPoint> rolling_stable_mean(const std::vector<EpisodeRow>& episodes,
                                              int window) {
  std::vector<const EpisodeRow*> stable;
  for (const auto& e : episodes)
    if (!e.unstable) stable.push_back(&e);
  std::vector<RollingPoint> out;
  for (std::size_t k = 0; k < stable.size(); ++k) {
    const std::size_t first = k + 1 >= static_cast<std::size_t>(window) ? k + 1 - window : 0;
    double sum = 0.0;
    for (std::size_t i = first; i <= k; ++i) sum += stable[i]->episode_return;
    out.push_back({stable[k]->episode, sum / static_cast<double>(k - first + 1)});
  }
  return out;
}

void mean_and_std(const std::vector<double>& values, double& mean, double& std) {
  if (values.empty()) {
    mean = std = kNaN;
    return;
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  mean = sum / static_cast<double>(values.size());
  if (values.size() < 2) {
    std = 0.0;
    return;
  }
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  std = std::sqrt(ss / static_cast<double>(values.size() - 1));
}

RewardCurve reward_curve(const std::vector<RunRecord>& records, int target, int window) {
  if (window < 1) throw std::invalid_argument("rolling window must be >= 1");
  RewardCurve curve;
  curve.target = target;
  curve.window = window;
  // per arm: episode -> rolling values across seeds
  std::map<long, std::vector<double>> arms[2];
  int seeds[2] = {0, 0};
  for (const auto& rec : records) {
    if (rec.target != target) continue;
    const int arm = rec.adaptation ? 0 : 1;
    ++seeds[arm];
    const auto rolling = rolling_stable_mean(rec.episodes, window);
    if (static_cast<long>(rolling.size()) < window)
      curve.notes.push_back(rec.run_id + ": window " + std::to_string(window) +
                            " shrunk to its " + std::to_string(rolling.size()) +
                            " stable episodes");
    for (const auto& p : rolling) arms[arm][p.episode].push_back(p.value);
  }
  if (seeds[0] == 0) curve.notes.push_back("no adaptive runs for this target");
  if (seeds[1] == 0) curve.notes.push_back("no non-adaptive runs for this target");

  std::set<long> episodes;
  for (const auto& arm : arms)
    for (const auto& [e, v] : arm) episodes.insert(e);
  for (long e : episodes) {
    curve.episodes.push_back(e);
    for (int a = 0; a < 2; ++a) {
      double mean = kNaN, std = kNaN;
      const auto it = arms[a].find(e);
      if (it != arms[a].end()) mean_and_std(it->second, mean, std);
      (a == 0 ? curve.mean_adaptive : curve.mean_nonadaptive).push_back(mean);
      (a == 0 ? curve.std_adaptive : curve.std_nonadaptive).push_back(std);
    }
  }
  return curve;
}

BarChart max_reward_bars(const std::vector<RunRecord>& records) {
  BarChart chart;
  std::map<std::pair<int, int>, BarEntry> groups;  // (target, 0 adaptive / 1 not)
  std::set<int> targets;
  for (const auto& rec : records) {
    targets.insert(rec.target);
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& e : rec.episodes)
      if (!e.unstable) best = std::max(best, e.episode_return);
    if (!std::isfinite(best)) {
      chart.notes.push_back(rec.run_id + ": no stable episodes; seed left out");
      continue;
    }
    auto& entry = groups[{rec.target, rec.adaptation ? 0 : 1}];
    entry.target = rec.target;
    entry.adaptation = rec.adaptation;
    entry.seeds.push_back(rec.seed);
    entry.seed_maxima.push_back(best);
  }
  for (int t : targets)
    for (int a = 0; a < 2; ++a) {
      const auto it = groups.find({t, a});
      if (it == groups.end()) {
        chart.notes.push_back("target " + std::to_string(t) + ": no " +
                              (a == 0 ? "adaptive" : "non-adaptive") + " runs; bar omitted");
        continue;
      }
      BarEntry entry = it->second;
      mean_and_std(entry.seed_maxima, entry.mean, entry.std);
      chart.bars.push_back(std::move(entry));
    }
  return chart;
}

TraceSet adaptation_traces(const RunRecord& record) {
  TraceSet set;
  set.run_id = record.run_id;
  if (!record.adaptation)
    set.notes.push_back("adaptation disabled in this run: ceilings stay at lambda_0");
  for (std::size_t e = 0; e < record.muscles.size(); ++e)
    for (std::size_t m = 0; m < record.muscles[e].size(); ++m)
      set.points.push_back({static_cast<long>(e), static_cast<int>(m),
                            record.muscles[e][m].lambda, record.muscles[e][m].force});
  return set;
}

Heatmap activation_heatmap(const RunRecord& record, long first, long last) {
  const long n = static_cast<long>(record.muscles.size());
  if (n == 0) throw std::runtime_error(record.run_id + " has no episodes");
  Heatmap map;
  map.run_id = record.run_id;
  map.first_episode = std::clamp(first, 0L, n - 1);
  map.last_episode = std::clamp(last, map.first_episode, n - 1);
  if (map.first_episode != first || map.last_episode != last)
    map.notes.push_back("episode range clipped to " + std::to_string(map.first_episode) + ".." +
                        std::to_string(map.last_episode));
  const int n_muscles = record.n_columns * record.n_levels;
  const double count = static_cast<double>(map.last_episode - map.first_episode + 1);
  double peak = 0.0;
  for (int m = 0; m < n_muscles; ++m) {
    double sum = 0.0;
    for (long e = map.first_episode; e <= map.last_episode; ++e) sum += record.muscles[e][m].activation;
    HeatCell c{m, m % record.n_columns, m / record.n_columns, sum / count, 0.0};
    peak = std::max(peak, c.mean_activation);
    map.cells.push_back(c);
  }
  if (peak > 0.0) {
    for (auto& c : map.cells) c.normalized = c.mean_activation / peak;
  } else {
    map.notes.push_back("all activations are zero; normalization skipped");
  }
  return map;
}

std::vector<fs::path> emit_reward_curves(const std::vector<RunRecord>& records,
                                         const fs::path& out_dir, int window) {
  std::set<int> targets;
  for (const auto& r : records) targets.insert(r.target);
  std::vector<fs::path> stems;
  for (int target : targets) {
    const RewardCurve curve = reward_curve(records, target, window);
    const fs::path stem = out_dir / ("reward_curve_target" + std::to_string(target));

    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < curve.episodes.size(); ++i)
      rows.push_back({std::to_string(curve.episodes[i]), cell(curve.mean_adaptive[i]),
                      cell(curve.std_adaptive[i]), cell(curve.mean_nonadaptive[i]),
                      cell(curve.std_nonadaptive[i])});
    write_text_atomic(stem.string() + ".csv",
                      csv_text("reward_curve", curve.notes,
                               {"episode", "mean_adaptive", "std_adaptive", "mean_nonadaptive",
                                "std_nonadaptive"},
                               rows));

    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < curve.episodes.size(); ++i) {
      for (const auto& [m, s] : {std::pair{curve.mean_adaptive[i], curve.std_adaptive[i]},
                                 std::pair{curve.mean_nonadaptive[i], curve.std_nonadaptive[i]}})
        if (!std::isnan(m)) {
          lo = std::min(lo, m - s);
          hi = std::max(hi, m + s);
        }
    }
    if (!std::isfinite(lo)) lo = hi = 0.0;
    const double pad = hi > lo ? 0.05 * (hi - lo) : 1.0;
    const svg::Frame f{80, 40, 540, 300};
    const double max_ep = curve.episodes.empty() ? 1.0 : static_cast<double>(curve.episodes.back());
    const svg::Scale xs(0.0, std::max(max_ep, 1.0), f.left, f.left + f.width);
    const svg::Scale ys(lo - pad, hi + pad, f.top + f.height, f.top);
    svg::Document doc(660, 400);
    note_comments(doc, curve.notes);
    doc.text(f.left + f.width / 2, 22,
             "Target " + std::to_string(target) + ": rolling " + std::to_string(window) +
                 "-episode mean return",
             {{"text-anchor", "middle"}, {"font-size", "13"}});
    svg::axes(doc, f, xs, ys, "Episode", "Return");

    const char* colors[2] = {"#1f77b4", "#d62728"};
    const char* names[2] = {"adaptive", "nonadaptive"};
    for (int a = 0; a < 2; ++a) {
      const auto& mean = a == 0 ? curve.mean_adaptive : curve.mean_nonadaptive;
      const auto& std = a == 0 ? curve.std_adaptive : curve.std_nonadaptive;
      std::string upper, lower, line;
      for (std::size_t i = 0; i < curve.episodes.size(); ++i) {
        if (std::isnan(mean[i])) continue;
        const double x = xs(static_cast<double>(curve.episodes[i]));
        upper += svg::num(x) + "," + svg::num(ys(mean[i] + std[i])) + " ";
        lower = svg::num(x) + "," + svg::num(ys(mean[i] - std[i])) + " " + lower;
        line += svg::num(x) + "," + svg::num(ys(mean[i])) + " ";
      }
      if (line.empty()) continue;
      doc.element("polygon", {{"points", upper + lower}, {"fill", colors[a]},
                              {"fill-opacity", "0.2"}, {"stroke", "none"}});
      doc.element("polyline", {{"points", line}, {"fill", "none"}, {"stroke", colors[a]},
                               {"stroke-width", "1.5"}});
      doc.open_group({{"class", "data"}, {"data-arm", names[a]}});
      for (std::size_t i = 0; i < curve.episodes.size(); ++i) {
        if (std::isnan(mean[i])) continue;
        doc.element("circle", {{"cx", svg::num(xs(static_cast<double>(curve.episodes[i])))},
                               {"cy", svg::num(ys(mean[i]))}, {"r", "0.8"},
                               {"fill", colors[a]},
                               {"data-episode", std::to_string(curve.episodes[i])},
                               {"data-mean", cell(mean[i])}, {"data-std", cell(std[i])}});
      }
      doc.close_group();
      doc.element("rect", {{"x", svg::num(f.left + 10)}, {"y", svg::num(f.top + 8 + 16 * a)},
                           {"width", "12"}, {"height", "3"}, {"fill", colors[a]}});
      doc.text(f.left + 26, f.top + 14 + 16 * a, a == 0 ? "Adaptive" : "Non-adaptive");
    }
    write_text_atomic(stem.string() + ".svg", doc.str());
    stems.push_back(stem);
  }
  return stems;
}

fs::path emit_max_reward_bars(const std::vector<RunRecord>& records, const fs::path& out_dir) {
  const BarChart chart = max_reward_bars(records);
  const fs::path stem = out_dir / "max_reward_bars";

  std::vector<std::vector<std::string>> rows;
  for (const auto& b : chart.bars) {
    std::string seeds, maxima;
    for (std::size_t i = 0; i < b.seeds.size(); ++i) {
      if (i) {
        seeds += ';';
        maxima += ';';
      }
      seeds += std::to_string(b.seeds[i]);
      maxima += format_double(b.seed_maxima[i]);
    }
    rows.push_back({std::to_string(b.target), b.adaptation ? "1" : "0",
                    std::to_string(b.seeds.size()), format_double(b.mean), format_double(b.std),
                    seeds, maxima});
  }
  write_text_atomic(stem.string() + ".csv",
                    csv_text("max_reward_bars", chart.notes,
                             {"target", "adaptation", "n_seeds", "mean_max_return",
                              "std_max_return", "seeds", "seed_maxima"},
                             rows));

  std::vector<int> targets;
  double lo = 0.0, hi = 0.0;
  for (const auto& b : chart.bars) {
    if (targets.empty() || targets.back() != b.target) targets.push_back(b.target);
    lo = std::min(lo, b.mean - b.std);
    hi = std::max(hi, b.mean + b.std);
  }
  if (!(hi > lo)) hi = lo + 1.0;
  const double pad = 0.05 * (hi - lo);
  const double group_w = 60.0;
  const svg::Frame f{80, 40, std::max(group_w * static_cast<double>(targets.size()), 120.0), 300};
  const svg::Scale ys(lo - pad, hi + pad, f.top + f.height, f.top);
  svg::Document doc(f.left + f.width + 140, 400);
  note_comments(doc, chart.notes);
  doc.text(f.left + f.width / 2, 22, "Maximum return per seed, mean across seeds",
           {{"text-anchor", "middle"}, {"font-size", "13"}});
  svg::axes(doc, f, svg::Scale(0, 1, f.left, f.left + f.width), ys, "Target", "Max return",
            false, true);
  doc.element("line", {{"x1", svg::num(f.left)}, {"y1", svg::num(ys(0.0))},
                       {"x2", svg::num(f.left + f.width)}, {"y2", svg::num(ys(0.0))},
                       {"stroke", "#999"}});
  for (std::size_t g = 0; g < targets.size(); ++g) {
    const double gx = f.left + group_w * static_cast<double>(g);
    doc.text(gx + group_w / 2, f.top + f.height + 15, std::to_string(targets[g]),
             {{"text-anchor", "middle"}});
    for (const auto& b : chart.bars) {
      if (b.target != targets[g]) continue;
      const double x = gx + (b.adaptation ? 10.0 : 32.0);
      const double y0 = ys(0.0), y1 = ys(b.mean);
      doc.element("rect", {{"x", svg::num(x)}, {"y", svg::num(std::min(y0, y1))}, {"width", "18"},
                           {"height", svg::num(std::abs(y1 - y0))},
                           {"fill", b.adaptation ? "#1f77b4" : "#d62728"},
                           {"data-target", std::to_string(b.target)},
                           {"data-adaptation", b.adaptation ? "1" : "0"},
                           {"data-n", std::to_string(b.seeds.size())},
                           {"data-mean", format_double(b.mean)},
                           {"data-std", format_double(b.std)}});
      const double cx = x + 9;
      doc.element("line", {{"x1", svg::num(cx)}, {"y1", svg::num(ys(b.mean - b.std))},
                           {"x2", svg::num(cx)}, {"y2", svg::num(ys(b.mean + b.std))},
                           {"stroke", "#222"}});
      for (double v : {b.mean - b.std, b.mean + b.std})
        doc.element("line", {{"x1", svg::num(cx - 4)}, {"y1", svg::num(ys(v))},
                             {"x2", svg::num(cx + 4)}, {"y2", svg::num(ys(v))},
                             {"stroke", "#222"}});
    }
  }
  const double lx = f.left + f.width + 20;
  doc.element("rect", {{"x", svg::num(lx)}, {"y", svg::num(f.top)}, {"width", "12"},
                       {"height", "12"}, {"fill", "#1f77b4"}});
  doc.text(lx + 18, f.top + 10, "Adaptive");
  doc.element("rect", {{"x", svg::num(lx)}, {"y", svg::num(f.top + 18)}, {"width", "12"},
                       {"height", "12"}, {"fill", "#d62728"}});
  doc.text(lx + 18, f.top + 28, "Non-adaptive");
  write_text_atomic(stem.string() + ".svg", doc.str());
  return stem;
}

fs::path emit_adaptation_traces(const RunRecord& record, const fs::path& out_dir) {
  const TraceSet set = adaptation_traces(record);
  for (const auto& n : set.notes) spdlog::warn("{}: {}", record.run_id, n);
  const fs::path stem = out_dir / ("adaptation_traces_" + record.run_id);

  std::vector<std::vector<std::string>> rows;
  for (const auto& p : set.points)
    rows.push_back({std::to_string(p.episode), std::to_string(p.muscle_id),
                    format_double(p.lambda), format_double(p.force)});
  write_text_atomic(stem.string() + ".csv",
                    csv_text("adaptation_traces", set.notes,
                             {"episode", "muscle_id", "lambda", "force"}, rows));

  const int cols = std::max(record.n_columns, 1);
  const int n_muscles = record.n_columns * record.n_levels;
  const int panel_rows = std::max((n_muscles + cols - 1) / cols, 1);
  const double pw = 150, ph = 90, gap = 26;
  double top = 2.0 * record.lambda_0;
  for (const auto& p : set.points) top = std::max(top, p.lambda);
  const double n_ep = std::max(static_cast<double>(record.muscles.size()) - 1.0, 1.0);
  svg::Document doc(60 + cols * (pw + gap), 60 + panel_rows * (ph + gap));
  note_comments(doc, set.notes);
  doc.text(30, 20, record.run_id + ": force ceiling (blue) and force produced (red) per episode",
           {{"font-size", "13"}});
  for (int m = 0; m < n_muscles; ++m) {
    // top row of panels shows the highest level, like the worm standing up
    const int level = m / cols;
    const int column = m % cols;
    const svg::Frame f{50 + column * (pw + gap), 40 + (panel_rows - 1 - level) * (ph + gap), pw, ph};
    const svg::Scale xs(0.0, n_ep, f.left, f.left + f.width);
    const svg::Scale ys(0.0, top, f.top + f.height, f.top);
    doc.element("rect", {{"x", svg::num(f.left)}, {"y", svg::num(f.top)}, {"width", svg::num(pw)},
                         {"height", svg::num(ph)}, {"fill", "none"}, {"stroke", "#333"}});
    doc.text(f.left + 3, f.top + 11, "muscle " + std::to_string(m), {{"font-size", "9"}});
    doc.open_group({{"class", "panel"}, {"data-muscle", std::to_string(m)}});
    for (const auto& p : set.points) {
      if (p.muscle_id != m) continue;
      const double x = xs(static_cast<double>(p.episode));
      doc.open_group({{"data-episode", std::to_string(p.episode)},
                      {"data-muscle", std::to_string(p.muscle_id)},
                      {"data-lambda", format_double(p.lambda)},
                      {"data-force", format_double(p.force)}});
      doc.element("circle", {{"cx", svg::num(x)}, {"cy", svg::num(ys(p.lambda))}, {"r", "0.9"},
                             {"fill", "#1f77b4"}});
      doc.element("circle", {{"cx", svg::num(x)}, {"cy", svg::num(ys(p.force))}, {"r", "0.9"},
                             {"fill", "#d62728"}});
      doc.close_group();
    }
    doc.close_group();
  }
  write_text_atomic(stem.string() + ".svg", doc.str());
  return stem;
}

fs::path emit_activation_heatmap(const RunRecord& record, long first, long last,
                                 const fs::path& out_dir) {
  const Heatmap map = activation_heatmap(record, first, last);
  const fs::path stem = out_dir / ("activation_heatmap_" + record.run_id);
  std::vector<std::string> notes = map.notes;
  notes.insert(notes.begin(), "episodes " + std::to_string(map.first_episode) + ".." +
                                  std::to_string(map.last_episode));

  std::vector<std::vector<std::string>> rows;
  for (const auto& c : map.cells)
    rows.push_back({std::to_string(c.muscle_id), std::to_string(c.column),
                    std::to_string(c.level), format_double(c.mean_activation),
                    format_double(c.normalized)});
  write_text_atomic(stem.string() + ".csv",
                    csv_text("activation_heatmap", notes,
                             {"muscle_id", "column", "level", "mean_activation", "normalized"},
                             rows));

  std::vector<MuscleLayout> layout;
  for (const auto& c : map.cells) {
    MuscleLayout m;
    m.muscle_id = c.muscle_id;
    m.column = c.column;
    m.level = c.level;
    layout.push_back(m);
  }
  const PlanarLattice planar = unwrap_2d(layout);
  const double unit = 60.0;
  const svg::Scale xs(0.0, std::max(planar.n_columns, 1), 50, 50 + unit * std::max(planar.n_columns, 1));
  const svg::Scale ys(0.0, std::max(planar.n_levels, 1), 50 + unit * std::max(planar.n_levels, 1), 50);
  svg::Document doc(100 + unit * planar.n_columns + 80, 100 + unit * planar.n_levels);
  note_comments(doc, notes);
  doc.text(50, 25, record.run_id + ": normalized mean activation", {{"font-size", "13"}});
  for (const auto& s : planar.structure)
    doc.element("line", {{"x1", svg::num(xs(s.from.x()))}, {"y1", svg::num(ys(s.from.y()))},
                         {"x2", svg::num(xs(s.to.x()))}, {"y2", svg::num(ys(s.to.y()))},
                         {"stroke", "#7b3fa0"}, {"stroke-width", "4"}});
  for (const auto& seg : planar.muscles) {
    const HeatCell& c = map.cells[static_cast<std::size_t>(seg.id)];
    doc.element("line", {{"x1", svg::num(xs(seg.from.x()))}, {"y1", svg::num(ys(seg.from.y()))},
                         {"x2", svg::num(xs(seg.to.x()))}, {"y2", svg::num(ys(seg.to.y()))},
                         {"stroke", svg::heat_color(c.normalized)}, {"stroke-width", "6"},
                         {"stroke-linecap", "round"},
                         {"data-muscle", std::to_string(c.muscle_id)},
                         {"data-column", std::to_string(c.column)},
                         {"data-level", std::to_string(c.level)},
                         {"data-mean", format_double(c.mean_activation)},
                         {"data-normalized", format_double(c.normalized)}});
  }
  const double lx = 70 + unit * planar.n_columns;
  for (int k = 0; k <= 10; ++k) {
    const double t = 1.0 - k / 10.0;
    doc.element("rect", {{"x", svg::num(lx)}, {"y", svg::num(50 + k * 12)}, {"width", "14"},
                         {"height", "12"}, {"fill", svg::heat_color(t)}});
  }
  doc.text(lx + 18, 60, "1");
  doc.text(lx + 18, 180, "0");
  write_text_atomic(stem.string() + ".svg", doc.str());
  return stem;
}

std::vector<fs::path> emit_report(const fs::path& dir, const fs::path& out_dir, int window,
                                  long heatmap_episodes) {
  const auto records = load_records(dir);
  if (records.empty()) throw std::runtime_error("no completed runs under '" + dir.string() + "'");
  fs::create_directories(out_dir);
  std::vector<fs::path> stems = emit_reward_curves(records, out_dir, window);
  stems.push_back(emit_max_reward_bars(records, out_dir));
  for (const auto& rec : records) {
    if (rec.episodes.empty()) continue;
    stems.push_back(emit_adaptation_traces(rec, out_dir));
    const long last = static_cast<long>(rec.episodes.size()) - 1;
    stems.push_back(
        emit_activation_heatmap(rec, std::max(0L, last - heatmap_episodes + 1), last, out_dir));
  }
  return stems;
}

}  // namespace wormsim
