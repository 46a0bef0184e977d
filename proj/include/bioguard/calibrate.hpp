#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bioguard/guard.hpp"
#include "bioguard/stats.hpp"

namespace bioguard {

struct CalibrateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One candidate operating point for the guard-as-classifier.
struct ThresholdVector {
    double fuzzy = 87.0;
    double semantic = 0.67;
    int longseq = 60;
    double blast_identity = 0.88;
    Tier tier = Tier::L2_human;

    friend bool operator==(const ThresholdVector&, const ThresholdVector&) = default;
};

struct LabeledPrompt {
    std::string text;
    bool harmful = false;
};

struct SweepGrid {
    std::vector<double> fuzzy;
    std::vector<double> semantic;
    std::vector<int> longseq;
    std::vector<double> blast_identity;
    std::vector<Tier> tiers;

    static SweepGrid from_json(const nlohmann::json& j, const ThresholdVector& defaults);
    std::size_t size() const;
};

struct SweepPoint {
    ThresholdVector lambda;
    ConfusionCounts counts;
    double jsr = 0.0;  // harmful prompts the guard does not block
    double fpr = 0.0;
    double recall = 0.0;
    std::optional<double> precision;
};

struct SweepResult {
    std::vector<SweepPoint> points;  // grid order
    double epsilon = 0.067;
    bool feasible = false;
    // The constrained argmin when feasible; otherwise the lowest-FPR
    // point, reported so callers can see how far the budget is missed.
    std::optional<SweepPoint> chosen;

    nlohmann::ordered_json to_json() const;
};

// Raw per-prompt signal scores, computed once; grid evaluation is pure
// re-thresholding. Scores are threshold-independent by construction (the
// BLAST score shares the screen's seed prefilter, so cached and re-scored
// routes agree bit-for-bit).
struct PromptScores {
    bool harmful = false;
    // per tier: keyword fired, fuzzy score, semantic score
    std::array<bool, 3> keyword_fired{};
    std::array<double, 3> fuzzy_score{};
    std::array<double, 3> semantic_score{};
    int longseq_len = 0;
    double blast_identity = 0.0;  // best identity at the length gate
};

std::vector<PromptScores> score_prompts(const std::vector<LabeledPrompt>& prompts,
                                        const GuardConfig& base, const GuardResources& resources,
                                        int jobs);

bool blocked_at(const PromptScores& s, const ThresholdVector& lambda, const GuardConfig& base);

// Evaluates every grid point against the cached scores and returns all
// points plus the argmin of JSR subject to FPR <= epsilon. Ties resolve by
// lower FPR, higher recall, smaller tier, then the lexicographically
// smaller threshold vector. Requires at least one harmful and one safe
// prompt and a nonempty grid.
SweepResult sweep(const std::vector<LabeledPrompt>& eval_set, const SweepGrid& grid,
                  const GuardConfig& base, const GuardResources& resources, double epsilon,
                  int jobs = 1);

struct CurvePoint {
    double x = 0.0;  // roc: fpr, pr: recall
    double y = 0.0;  // roc: recall, pr: precision
    bool pareto = false;
};

struct Curves {
    std::vector<CurvePoint> roc;  // sorted by fpr, deduplicated
    std::vector<CurvePoint> pr;   // sorted by recall; undefined-precision points dropped
};

Curves roc_pr_curves(const SweepResult& sweep);

void write_curve_csv(const std::vector<CurvePoint>& curve, const std::string& x_name,
                     const std::string& y_name, const std::string& path);

}  // namespace bioguard
