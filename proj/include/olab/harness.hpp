#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "olab/dyadic.hpp"

namespace olab {

enum class TheoremId {
    WEAK_TYPE,
    CARLESON_EMBED,
    CARLESON_CONVERSE,
    M_CLASS_BOUND,
    M_CLASS_EQUIV,
    K_CLASS_EQUIV,
    SAWYER_SUFF,
    SAWYER_LOCAL,
    SAWYER_PQ,
    S_ALPHA_BOUND,
    S_ALPHA_NECESSITY,
    NORM_B,
    NORM_A,
    NORM_ATILDE_W,
    NORM_A_PROD,
    ORLICZ_MAX_BOUND,
    LOG_MAX_LP,
};

std::string to_string(TheoremId id);
TheoremId parse_theorem_id(const std::string& text);
const std::vector<TheoremId>& all_theorems();
bool is_two_sided(TheoremId id);

struct ExperimentConfig {
    TheoremId theorem = TheoremId::WEAK_TYPE;
    int d = 1;
    int n = 1;
    int level = 8;
    std::optional<Window> window;  // unit window of dimension d when unset
    // Growth descriptors; a single entry applies to every index.
    std::vector<std::string> phis{"power:p=2"};
    std::string psi = "power:p=2";
    double alpha = 0.0;
    // Lebesgue exponent for LOG_MAX_LP.
    double p = 2.0;
    std::vector<std::string> sigmas{"lognormal:roughness=1"};
    std::string omega = "lognormal:roughness=1";
    std::vector<std::string> functions{"lognormal:roughness=1.5"};
    bool equal_weights = false;
    std::uint64_t seed = 1;
    int trials = 20;
    std::string cube_set;  // empty: the theorem's default
    std::optional<double> bound;  // ratio bound; unset: the theorem's exact bound if any
    int test_cubes = 16;
    double doubling_limit = 100.0;

    // Not part of the experiment identity.
    int jobs = 0;
    std::string output;
    std::string format = "json";
};

// Sets one key of section [experiment], [growth], [fields] or [output]. Unknown keys throw ConfigError.
void set_config_value(ExperimentConfig& cfg, const std::string& section, const std::string& key,
                      const std::string& value);
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);
// Checks ranges and that every descriptor parses; throws ConfigError.
void validate_config(const ExperimentConfig& cfg);
nlohmann::ordered_json config_to_json(const ExperimentConfig& cfg);

// Counter-based per-trial seed; independent of scheduling.
std::uint64_t trial_seed(std::uint64_t seed, int trial);

struct TrialRecord {
    int trial = 0;
    std::uint64_t seed = 0;
    double lhs = 0.0, rhs = 0.0, ratio = 0.0;
    double lhs_fine = 0.0, rhs_fine = 0.0, ratio_fine = 0.0;
    std::optional<double> lower_ratio;
};

struct ExperimentSummary {
    double max_ratio = 0.0;
    double median_ratio = 0.0;
    double max_ratio_fine = 0.0;
    double median_ratio_fine = 0.0;
    double refinement_trend = 0.0;
    bool refinement_flag = false;
    std::optional<double> bound;
    std::optional<double> lower_min, lower_max;
};

struct ExperimentVerdict {
    bool violated = false;
    std::optional<int> trial;
    std::string reason;
};

struct ExperimentReport {
    std::string theorem_id;
    std::uint64_t seed = 0;
    nlohmann::ordered_json config;
    std::vector<TrialRecord> trials;
    ExperimentSummary summary;
    ExperimentVerdict verdict;
    std::string version;
};

extern const char* const kArtifactVersion;

ExperimentReport run_experiment(const ExperimentConfig& cfg);
// Summary and verdict from the trial records.
void summarize(ExperimentReport& report, TheoremId id, std::optional<double> bound);

struct LowerBoundProfile {
    std::vector<std::string> cubes;
    std::vector<double> ratio;
    double min = 0.0;
    double max = 0.0;
};

// Indicator test functions chi_R / |chi_R| on the instance of the given trial at level L.
LowerBoundProfile testing_function_lower_bound(const ExperimentConfig& cfg, int trial = 0);

nlohmann::ordered_json to_json(const ExperimentReport& r);
std::string to_csv(const ExperimentReport& r);
// format: json or csv
void write_report(const ExperimentReport& r, const std::string& format, const std::string& path);

struct ReportCheck {
    std::string format;
    std::size_t trials = 0;
    bool violated = false;
};

// Parses a written report and checks its schema; throws UsageError on any mismatch.
ReportCheck validate_report(std::istream& in);
ReportCheck validate_report_file(const std::string& path);

}  // namespace olab
