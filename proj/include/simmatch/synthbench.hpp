#pragma once

#include "simmatch/pathfollow.hpp"
#include "simmatch/rng.hpp"
#include "simmatch/types.hpp"

#include <optional>
#include <string>

namespace simmatch {

enum class PerturbKind { deformation, noise, outliers, occlusion, coexisting_outliers };

const char* to_string(PerturbKind k);
std::optional<PerturbKind> perturb_from_string(const std::string& s);
std::vector<PerturbKind> all_perturb_kinds();

// One synthetic trial: a random similarity transform within the stated
// bounds, followed by one category of perturbation at the given level.
struct TrialSpec {
    PerturbKind category = PerturbKind::noise;
    double level = 0.0;               // category-specific magnitude, >= 0
    double rotation_max_deg = 60.0;   // |angle| of the drawn rotation stays below this
    double scale_lo = 0.5;            // drawn scale range
    double scale_hi = 1.5;
    double translation_scale = 0.5;   // translation spread, in units of base RMS
    std::uint64_t trial_seed = 0;
};

struct TrialData {
    PointCloud model;
    PointCloud scene;
    std::vector<std::pair<Index, Index>> gt_pairs;  // surviving true correspondences
    SimilarityTransform gt_transform;
};

// Builds model/scene point sets with known ground truth. The scene is the
// transformed base followed by the category perturbation:
//   deformation          smooth field of 5 Gaussian bumps, peak displacement level*RMS each
//   noise                i.i.d. Gaussian jitter, sigma = level*RMS
//   outliers             ceil(level*m) uniform points in the 1.5x scene bounding box
//   occlusion            the ceil(level*m) points furthest along a random direction removed
//   coexisting_outliers  outliers appended to BOTH model and scene
// Throws std::invalid_argument when occlusion would remove every point.
TrialData generate_trial(const PointCloud& base, const TrialSpec& spec);

// Fraction of ground-truth pairs recovered. Throws on empty ground truth.
double accuracy(const MatchResult& result, const std::vector<std::pair<Index, Index>>& gt_pairs);

struct TrialOutcome {
    double accuracy = 0.0;  // in [0, 1]
    double runtime_seconds = 0.0;
    Index n_model = 0;
    Index n_scene = 0;
    SimilarityTransform recovered_transform;
    SimilarityTransform ground_truth_transform;
};

// Generates the trial, solves it with the path-following matcher (or the ICP
// baseline), and scores the result against the surviving true pairs.
TrialOutcome run_trial(const PointCloud& base, const TrialSpec& spec, const MatchConfig& config,
                       bool use_icp_baseline = false);

struct TrialRecord {
    PerturbKind category;
    double level;
    int trial;
    std::string method;
    double accuracy;
    double runtime_s;
};

struct SummaryRow {
    PerturbKind category;
    double level;
    std::string method;
    double mean_accuracy;
    double std_accuracy;
    double mean_runtime_s;
};

struct SuiteOptions {
    std::vector<PerturbKind> categories = all_perturb_kinds();
    std::vector<std::vector<double>> levels;  // one grid per category; default grids if empty
    int n_trials = 100;
    bool with_icp_baseline = false;
    int threads = 0;          // 0 or 1: serial; otherwise worker count
    bool record_runtime = true;  // false writes runtime 0, for reproducible artifacts
};

struct SuiteResult {
    std::vector<TrialRecord> trials;    // fixed (category, level, trial, method) order
    std::vector<SummaryRow> summary;
};

// Default per-category level grids (artifact choices; the level axes are
// stand-ins, not values quoted from anywhere).
std::vector<double> default_levels(PerturbKind k);

// Runs n_trials independent trials per (category, level) cell. Every trial
// seed derives from (config.seed, flat trial index), so serial and parallel
// executions produce identical records. ICP rows are added when requested.
SuiteResult run_suite(const PointCloud& base, const SuiteOptions& options,
                      const MatchConfig& config);

// CSV emitters. Headers:
//   trials:  category,level,trial,method,accuracy,runtime_s
//   summary: category,level,method,mean_accuracy,std_accuracy,mean_runtime_s
void write_trials_csv(const std::string& path, const std::vector<TrialRecord>& rows);
void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows);

// The bundled 60-point base shape (40-point helix plus a 20-point off-axis
// cluster that pins orientation); data/helix60.txt holds the same points.
PointCloud default_shape();

// Rotation with |angle| <= max_angle (radians), uniform axis for d = 3.
Matrix random_rotation_bounded(RngStream& rng, Index d, double max_angle);
Vector random_unit_vector(RngStream& rng, Index d);

}  // namespace simmatch
