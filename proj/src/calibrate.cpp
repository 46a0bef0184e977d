#include "bioguard/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "bioguard/util.hpp"

namespace bioguard {

namespace {

nlohmann::ordered_json threshold_vector_json(const ThresholdVector& v) {
    return {
        {"fuzzy", v.fuzzy},
        {"semantic", v.semantic},
        {"longseq", v.longseq},
        {"blast_identity", v.blast_identity},
        {"tier", tier_name(v.tier)},
    };
}

nlohmann::ordered_json sweep_point_json(const SweepPoint& p) {
    nlohmann::ordered_json j;
    j["lambda"] = threshold_vector_json(p.lambda);
    j["jsr"] = p.jsr;
    j["fpr"] = p.fpr;
    j["recall"] = p.recall;
    j["precision"] = p.precision ? nlohmann::ordered_json(*p.precision)
                                 : nlohmann::ordered_json(nullptr);
    j["counts"] = {{"tp", p.counts.tp}, {"fp", p.counts.fp}, {"tn", p.counts.tn},
                   {"fn", p.counts.fn}};
    return j;
}

// True when a is strictly preferred under the documented tie-break chain:
// jsr, then lower fpr, higher recall, smaller tier, lexicographically
// smaller threshold vector.
bool better_point(const SweepPoint& a, const SweepPoint& b) {
    if (a.jsr != b.jsr) return a.jsr < b.jsr;
    if (a.fpr != b.fpr) return a.fpr < b.fpr;
    if (a.recall != b.recall) return a.recall > b.recall;
    const auto key = [](const ThresholdVector& v) {
        return std::make_tuple(v.tier, v.fuzzy, v.semantic, v.longseq, v.blast_identity);
    };
    return key(a.lambda) < key(b.lambda);
}

}  // namespace

SweepGrid SweepGrid::from_json(const nlohmann::json& j, const ThresholdVector& defaults) {
    SweepGrid g;
    g.fuzzy = j.value("fuzzy", std::vector<double>{defaults.fuzzy});
    g.semantic = j.value("semantic", std::vector<double>{defaults.semantic});
    g.longseq = j.value("longseq", std::vector<int>{defaults.longseq});
    g.blast_identity = j.value("blast_identity", std::vector<double>{defaults.blast_identity});
    if (j.contains("tier")) {
        for (const auto& name : j.at("tier")) {
            g.tiers.push_back(tier_from_name(name.get<std::string>()));
        }
    } else {
        g.tiers = {defaults.tier};
    }
    return g;
}

std::size_t SweepGrid::size() const {
    return fuzzy.size() * semantic.size() * longseq.size() * blast_identity.size() * tiers.size();
}

std::vector<PromptScores> score_prompts(const std::vector<LabeledPrompt>& prompts,
                                        const GuardConfig& base, const GuardResources& resources,
                                        int jobs) {
    std::vector<PromptScores> scores(prompts.size());
    const auto& sc = base.signals;
    parallel_for(prompts.size(), jobs, [&](std::size_t i) {
        PromptScores& s = scores[i];
        s.harmful = prompts[i].harmful;
        const NormalizedText folded = normalize(prompts[i].text);
        for (Tier t : kAllTiers) {
            const auto ti = static_cast<std::size_t>(t);
            if (sc.enabled.count(SignalKind::keyword)) {
                s.keyword_fired[ti] = !keyword_scan(folded, resources.lexicon(), t).empty();
            }
            if (sc.enabled.count(SignalKind::fuzzy)) {
                s.fuzzy_score[ti] = fuzzy_scan(folded, resources.lexicon(), t, sc).score;
            }
            if (sc.enabled.count(SignalKind::semantic)) {
                s.semantic_score[ti] =
                    semantic_scan(folded, resources.semantic_index(t), resources.embedder(), sc)
                        .score;
            }
        }
        if (sc.enabled.count(SignalKind::longseq)) {
            s.longseq_len = longseq_scan(prompts[i].text, sc).length;
        }
        if (base.blast_active()) {
            if (resources.db() == nullptr) {
                throw GuardError("BLAST screen enabled but no sequence db is loaded");
            }
            BlastThresholds th = resources.blast_thresholds();
            s.blast_identity = blast_scan(prompts[i].text, *resources.db(), th)
                                   .best_identity_gated;
        }
    });
    return scores;
}

bool blocked_at(const PromptScores& s, const ThresholdVector& lambda, const GuardConfig& base) {
    const auto ti = static_cast<std::size_t>(lambda.tier);
    const auto& enabled = base.signals.enabled;
    if (enabled.count(SignalKind::keyword) && s.keyword_fired[ti]) return true;
    if (enabled.count(SignalKind::fuzzy) && s.fuzzy_score[ti] >= lambda.fuzzy) return true;
    if (enabled.count(SignalKind::semantic) && s.semantic_score[ti] >= lambda.semantic)
        return true;
    if (enabled.count(SignalKind::longseq) && s.longseq_len >= lambda.longseq) return true;
    if (base.blast_active() && s.blast_identity >= lambda.blast_identity) return true;
    return false;
}

SweepResult sweep(const std::vector<LabeledPrompt>& eval_set, const SweepGrid& grid,
                  const GuardConfig& base, const GuardResources& resources, double epsilon,
                  int jobs) {
    const auto harmful =
        std::count_if(eval_set.begin(), eval_set.end(), [](const auto& p) { return p.harmful; });
    const auto safe = static_cast<std::ptrdiff_t>(eval_set.size()) - harmful;
    if (harmful == 0 || safe == 0) {
        throw CalibrateError("sweep needs at least one harmful and one safe prompt");
    }
    if (grid.size() == 0) throw CalibrateError("sweep grid is empty");

    const std::vector<PromptScores> scores = score_prompts(eval_set, base, resources, jobs);

    std::vector<ThresholdVector> lambdas;
    lambdas.reserve(grid.size());
    for (Tier t : grid.tiers) {
        for (double f : grid.fuzzy) {
            for (double se : grid.semantic) {
                for (int l : grid.longseq) {
                    for (double b : grid.blast_identity) {
                        lambdas.push_back({f, se, l, b, t});
                    }
                }
            }
        }
    }

    SweepResult result;
    result.epsilon = epsilon;
    result.points.resize(lambdas.size());
    parallel_for(lambdas.size(), jobs, [&](std::size_t i) {
        SweepPoint p;
        p.lambda = lambdas[i];
        for (std::size_t r = 0; r < scores.size(); ++r) {
            const bool blocked = blocked_at(scores[r], p.lambda, base);
            if (scores[r].harmful) {
                blocked ? ++p.counts.tp : ++p.counts.fn;
            } else {
                blocked ? ++p.counts.fp : ++p.counts.tn;
            }
        }
        const MetricSet m = metrics(p.counts);
        p.recall = m.recall.value_or(0.0);
        p.jsr = 1.0 - p.recall;
        p.fpr = m.fpr.value_or(0.0);
        p.precision = m.precision;
        result.points[i] = p;
    });

    const SweepPoint* best_feasible = nullptr;
    const SweepPoint* lowest_fpr = nullptr;
    for (const auto& p : result.points) {
        if (p.fpr <= epsilon && (best_feasible == nullptr || better_point(p, *best_feasible))) {
            best_feasible = &p;
        }
        if (lowest_fpr == nullptr || p.fpr < lowest_fpr->fpr ||
            (p.fpr == lowest_fpr->fpr && better_point(p, *lowest_fpr))) {
            lowest_fpr = &p;
        }
    }
    result.feasible = best_feasible != nullptr;
    result.chosen = result.feasible ? *best_feasible : *lowest_fpr;
    return result;
}

nlohmann::ordered_json SweepResult::to_json() const {
    nlohmann::ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["epsilon"] = epsilon;
    j["feasible"] = feasible;
    j["chosen"] = chosen ? sweep_point_json(*chosen) : nlohmann::ordered_json(nullptr);
    auto points_json = nlohmann::ordered_json::array();
    for (const auto& p : points) points_json.push_back(sweep_point_json(p));
    j["points"] = points_json;
    return j;
}

Curves roc_pr_curves(const SweepResult& sweep) {
    Curves out;
    for (const auto& p : sweep.points) {
        out.roc.push_back({p.fpr, p.recall, false});
        if (p.precision) out.pr.push_back({p.recall, *p.precision, false});
    }
    auto finish = [](std::vector<CurvePoint>& pts, bool higher_x_better) {
        std::sort(pts.begin(), pts.end(), [](const CurvePoint& a, const CurvePoint& b) {
            return std::tie(a.x, a.y) < std::tie(b.x, b.y);
        });
        pts.erase(std::unique(pts.begin(), pts.end(),
                              [](const CurvePoint& a, const CurvePoint& b) {
                                  return a.x == b.x && a.y == b.y;
                              }),
                  pts.end());
        for (auto& p : pts) {
            bool dominated = false;
            for (const auto& q : pts) {
                const bool x_no_worse = higher_x_better ? q.x >= p.x : q.x <= p.x;
                const bool strict = (q.x != p.x) || (q.y != p.y);
                if (x_no_worse && q.y >= p.y && strict) {
                    dominated = true;
                    break;
                }
            }
            p.pareto = !dominated;
        }
    };
    // ROC: lower fpr is better; PR: higher recall is better.
    finish(out.roc, false);
    finish(out.pr, true);
    return out;
}

void write_curve_csv(const std::vector<CurvePoint>& curve, const std::string& x_name,
                     const std::string& y_name, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw CalibrateError("cannot write curve csv: " + path);
    out << x_name << ',' << y_name << ",pareto\n";
    for (const auto& p : curve) {
        out << p.x << ',' << p.y << ',' << (p.pareto ? 1 : 0) << '\n';
    }
}

}  // namespace bioguard
