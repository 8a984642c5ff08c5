#ifndef WORMSIM_REPORT_HPP_
#define WORMSIM_REPORT_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace wormsim {

inline constexpr int kReportCsvVersion = 1;

struct EpisodeRow {
  long episode{};
  double episode_return{};
  double max_step_reward{};
  double final_distance{};
  bool unstable{};
  int steps{};
};

struct MuscleSample {
  double lambda{};
  double force{};
  double activation{};
};

/// Everything the emitters need from one finished run.
struct RunRecord {
  std::string run_id;
  std::string config_hash;
  std::string status;
  std::uint64_t seed{};
  int target = 1;
  bool adaptation = true;
  int n_columns{};
  int n_levels{};
  double lambda_0{};  // N
  double wall_seconds{};
  std::vector<EpisodeRow> episodes;
  std::vector<std::vector<MuscleSample>> muscles;  // [episode][muscle]
};

RunRecord load_run_record(const std::filesystem::path& run_dir);

/// A single run directory, or every run under <dir>/runs.
std::vector<RunRecord> load_records(const std::filesystem::path& dir);

/// Trailing mean (min_periods 1) over the stable episodes only, keyed by the
/// episode index it ends on.
struct RollingPoint {
  long episode{};
  double value{};
};
std::vector<RollingPoint> rolling_stable_mean(const std::vector<EpisodeRow>& episodes, int window);

/// Mean and sample standard deviation (0 for a single value).
void mean_and_std(const std::vector<double>& values, double& mean, double& std);

struct RewardCurve {
  int target{};
  int window{};
  std::vector<long> episodes;
  // NaN where an arm has no value at that episode
  std::vector<double> mean_adaptive, std_adaptive, mean_nonadaptive, std_nonadaptive;
  std::vector<std::string> notes;
};
RewardCurve reward_curve(const std::vector<RunRecord>& records, int target, int window);

struct BarEntry {
  int target{};
  bool adaptation{};
  std::vector<std::uint64_t> seeds;
  std::vector<double> seed_maxima;
  double mean{};
  double std{};
};
struct BarChart {
  std::vector<BarEntry> bars;
  std::vector<std::string> notes;
};
BarChart max_reward_bars(const std::vector<RunRecord>& records);

struct TracePoint {
  long episode{};
  int muscle_id{};
  double lambda{};
  double force{};
};
struct TraceSet {
  std::string run_id;
  std::vector<TracePoint> points;  // episode-major
  std::vector<std::string> notes;
};
TraceSet adaptation_traces(const RunRecord& record);

struct HeatCell {
  int muscle_id{};
  int column{};
  int level{};
  double mean_activation{};
  double normalized{};
};
struct Heatmap {
  std::string run_id;
  long first_episode{};
  long last_episode{};
  std::vector<HeatCell> cells;
  std::vector<std::string> notes;
};
/// Mean activation per muscle over episodes [first, last], scaled by the
/// largest mean.
Heatmap activation_heatmap(const RunRecord& record, long first, long last);

/// Each emitter writes <stem>.csv and <stem>.svg into `out_dir` and returns
/// the stem paths.
std::vector<std::filesystem::path> emit_reward_curves(const std::vector<RunRecord>& records,
                                                      const std::filesystem::path& out_dir,
                                                      int window = 50);
std::filesystem::path emit_max_reward_bars(const std::vector<RunRecord>& records,
                                           const std::filesystem::path& out_dir);
std::filesystem::path emit_adaptation_traces(const RunRecord& record,
                                             const std::filesystem::path& out_dir);
std::filesystem::path emit_activation_heatmap(const RunRecord& record, long first, long last,
                                              const std::filesystem::path& out_dir);

/// All four figure types for the runs under `dir`; the heatmap covers each
/// run's last `heatmap_episodes` episodes.
std::vector<std::filesystem::path> emit_report(const std::filesystem::path& dir,
                                               const std::filesystem::path& out_dir,
                                               int window = 50, long heatmap_episodes = 100);

}  // namespace wormsim

#endif  // WORMSIM_REPORT_HPP_
