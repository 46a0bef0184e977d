#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bioguard/calibrate.hpp"
#include "bioguard/config.hpp"
#include "bioguard/guard.hpp"
#include "bioguard/redteam.hpp"
#include "bioguard/sanitizer.hpp"
#include "bioguard/stats.hpp"
#include "bioguard/toy_align.hpp"
#include "bioguard/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

struct CliError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<ordered_json> read_jsonl(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw CliError("cannot open " + path.string());
    std::vector<ordered_json> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto row = ordered_json::parse(line, nullptr, false);
        if (row.is_discarded()) {
            throw CliError(path.string() + " line " + std::to_string(line_no) +
                           ": malformed JSON");
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw CliError("cannot write " + path.string());
    out << text;
}

ordered_json interval_json(const bioguard::BinomialInterval& ci) {
    return ordered_json::array({ci.lo, ci.hi});
}

ordered_json opt_json(const std::optional<double>& v) {
    return v ? ordered_json(*v) : ordered_json(nullptr);
}

ordered_json metrics_json(const bioguard::MetricSet& m, const bioguard::RateSet& r) {
    ordered_json j;
    j["precision"] = opt_json(m.precision);
    j["recall"] = opt_json(m.recall);
    j["f1"] = opt_json(m.f1);
    j["fpr"] = opt_json(m.fpr);
    j["pre_jsr"] = opt_json(r.pre_jsr);
    j["asr"] = opt_json(r.asr);
    j["safe_accept_rate"] = opt_json(r.safe_accept_rate);
    j["pre_block_rate"] = opt_json(r.pre_block_rate);
    j["post_block_rate"] = opt_json(r.post_block_rate);
    ordered_json ci;
    for (const auto& [name, interval] : m.ci95) ci[name] = interval_json(interval);
    for (const auto& [name, interval] : r.ci95) ci[name] = interval_json(interval);
    j["ci95"] = ci;
    return j;
}

bioguard::OutcomeRow row_from_log(const ordered_json& row, bool harmful) {
    bioguard::OutcomeRow out;
    out.harmful = harmful;
    const std::string stage = row.value("intercepted_at", "none");
    out.intercepted_at = stage == "pre"    ? bioguard::InterceptStage::pre
                         : stage == "post" ? bioguard::InterceptStage::post
                                           : bioguard::InterceptStage::none;
    out.payload_in_final = row.value("payload_in_final", false);
    out.model_error = row.value("status", "ok") == "model_error";
    return out;
}

// Label lookup: inline "label" fields win, a labels file keyed by prompt
// text fills the gaps.
class LabelIndex {
public:
    void load(const fs::path& path) {
        for (const auto& row : read_jsonl(path)) {
            by_text_[row.at("text").get<std::string>()] =
                row.at("label").get<std::string>() == "harmful";
        }
    }
    std::optional<bool> lookup(const ordered_json& row, const std::string& text_key) const {
        if (row.contains("label")) return row.at("label").get<std::string>() == "harmful";
        if (!row.contains(text_key)) return std::nullopt;
        const auto it = by_text_.find(row.at(text_key).get<std::string>());
        if (it == by_text_.end()) return std::nullopt;
        return it->second;
    }

private:
    std::map<std::string, bool> by_text_;
};

void check_blast_db(std::initializer_list<const bioguard::GuardConfig*> guards,
                    const bioguard::GuardResources& resources) {
    for (const auto* guard : guards) {
        if (guard->blast_active() && resources.db() == nullptr) {
            throw bioguard::ConfigError(
                "the BLAST screen is enabled but no sequence db is loaded; pass --blast-db or "
                "disable it in the guard config");
        }
    }
}

int run_guard_command(const bioguard::AppConfig& cfg, const std::string& text,
                      const std::string& position) {
    const bioguard::GuardResources resources = bioguard::build_resources(cfg);
    const bioguard::GuardConfig& guard = position == "post" ? cfg.post_guard : cfg.pre_guard;
    check_blast_db({&guard}, resources);
    const bioguard::GuardDecision d = bioguard::run_guard(text, guard, resources);
    ordered_json out = bioguard::decision_to_json(d);
    out["position"] = position;
    out["tier"] = bioguard::tier_name(guard.signals.tier);
    std::cout << out.dump(2) << '\n';
    return 0;
}

int run_sanitize_command(const bioguard::AppConfig& cfg, const fs::path& in, const fs::path& out,
                         const std::string& tier, const std::string& policy, bool deep,
                         const fs::path& report_path) {
    const bioguard::GuardResources resources = bioguard::build_resources(cfg);
    bioguard::SanitizeOptions options;
    options.tier = bioguard::tier_from_name(tier);
    options.policy = bioguard::sanitize_policy_from_name(policy);
    options.fields = cfg.sanitize_fields;
    options.deep = deep;
    options.jobs = cfg.jobs;
    const bioguard::SanitizeReport report = bioguard::sanitize_corpus(in, out, options, resources);
    ordered_json j = report.to_json();
    j["config"] = cfg.to_json();
    if (!report_path.empty()) write_text(report_path, j.dump(2) + "\n");
    std::cout << "sanitized " << report.total << " records: " << report.removed << " removed, "
              << report.redacted << " redacted, " << report.quarantined
              << " quarantined (removal_rate=" << report.removal_rate << ")\n";
    return 0;
}

int run_pipeline_command(const bioguard::AppConfig& cfg, const fs::path& prompts_path,
                         const fs::path& out_path, const fs::path& report_path) {
    const bioguard::GuardResources resources = bioguard::build_resources(cfg);
    check_blast_db({&cfg.pre_guard, &cfg.post_guard}, resources);
    const auto gateway = bioguard::build_gateway(cfg, resources.lexicon());
    const auto rows = read_jsonl(prompts_path);

    std::vector<bioguard::PipelineOutcome> outcomes(rows.size());
    std::vector<std::optional<bool>> labels(rows.size());
    bioguard::parallel_for(rows.size(), cfg.jobs, [&](std::size_t i) {
        const std::string text = rows[i].at("text").get<std::string>();
        outcomes[i] =
            bioguard::run_pipeline(text, cfg.pre_guard, *gateway, cfg.post_guard, resources);
        if (rows[i].contains("label")) {
            labels[i] = rows[i].at("label").get<std::string>() == "harmful";
            outcomes[i].label_harmful = labels[i];
        }
    });

    std::ofstream out(out_path);
    if (!out) throw CliError("cannot write " + out_path.string());
    for (const auto& o : outcomes) out << bioguard::outcome_to_json(o).dump() << '\n';

    std::vector<bioguard::OutcomeRow> stat_rows;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (labels[i]) stat_rows.push_back(bioguard::outcome_row(outcomes[i], *labels[i]));
    }
    ordered_json report;
    report["schema_version"] = bioguard::kSchemaVersion;
    report["version"] = bioguard::kVersion;
    report["prompts"] = rows.size();
    report["labeled"] = stat_rows.size();
    report["model_calls"] = gateway->call_count();
    report["harm_judge"] = "payload_sentinel";
    if (!stat_rows.empty()) {
        const auto counts = bioguard::confusion_from_log(stat_rows);
        report["counts"] = {{"tp", counts.tp}, {"fp", counts.fp}, {"tn", counts.tn},
                            {"fn", counts.fn}};
        report["metrics"] = metrics_json(bioguard::metrics(counts), bioguard::jsr_asr(stat_rows));
    }
    report["config"] = cfg.to_json();
    if (!report_path.empty()) write_text(report_path, report.dump(2) + "\n");
    std::cout << "pipeline processed " << rows.size() << " prompts -> " << out_path.string()
              << '\n';
    return 0;
}

void write_metrics_csv(const ordered_json& metrics, const fs::path& path) {
    std::string csv = "metric,value,ci_lo,ci_hi\n";
    for (const auto& [name, value] : metrics.items()) {
        if (name == "ci95") continue;
        csv += name + ",";
        csv += value.is_null() ? "" : value.dump();
        const auto& ci = metrics.at("ci95");
        if (ci.contains(name)) {
            csv += "," + ci.at(name).at(0).dump() + "," + ci.at(name).at(1).dump();
        } else {
            csv += ",,";
        }
        csv += "\n";
    }
    write_text(path, csv);
}

int run_eval_command(const bioguard::AppConfig& cfg, const fs::path& log_path,
                     const fs::path& labels_path, const fs::path& report_path,
                     const fs::path& csv_path) {
    LabelIndex labels;
    if (!labels_path.empty()) labels.load(labels_path);
    std::vector<bioguard::OutcomeRow> stat_rows;
    std::size_t unlabeled = 0;
    for (const auto& row : read_jsonl(log_path)) {
        const auto label = labels.lookup(row, "input");
        if (!label) {
            ++unlabeled;
            continue;
        }
        stat_rows.push_back(row_from_log(row, *label));
    }
    if (stat_rows.empty()) throw CliError("no labeled outcomes in " + log_path.string());
    const auto counts = bioguard::confusion_from_log(stat_rows);
    ordered_json report;
    report["schema_version"] = bioguard::kSchemaVersion;
    report["version"] = bioguard::kVersion;
    report["rows"] = stat_rows.size();
    report["unlabeled_rows"] = unlabeled;
    report["counts"] = {{"tp", counts.tp}, {"fp", counts.fp}, {"tn", counts.tn},
                        {"fn", counts.fn}};
    report["metrics"] = metrics_json(bioguard::metrics(counts), bioguard::jsr_asr(stat_rows));
    report["config"] = cfg.to_json();
    const std::string text = report.dump(2) + "\n";
    if (!report_path.empty()) write_text(report_path, text);
    if (!csv_path.empty()) write_metrics_csv(report.at("metrics"), csv_path);
    std::cout << text;
    return 0;
}

int run_calibrate_command(const bioguard::AppConfig& cfg, const fs::path& eval_path,
                          const fs::path& grid_path, double epsilon, const fs::path& out_path,
                          const fs::path& roc_csv, const fs::path& pr_csv) {
    const bioguard::GuardResources resources = bioguard::build_resources(cfg);
    check_blast_db({&cfg.pre_guard}, resources);
    std::vector<bioguard::LabeledPrompt> prompts;
    for (const auto& row : read_jsonl(eval_path)) {
        prompts.push_back(
            {row.at("text").get<std::string>(), row.at("label").get<std::string>() == "harmful"});
    }
    bioguard::ThresholdVector defaults;
    defaults.fuzzy = cfg.pre_guard.signals.fuzzy_threshold;
    defaults.semantic = cfg.pre_guard.signals.semantic_threshold;
    defaults.longseq = cfg.pre_guard.signals.longseq_min_len;
    defaults.blast_identity = cfg.blast.identity;
    defaults.tier = cfg.pre_guard.signals.tier;
    bioguard::SweepGrid grid;
    if (!grid_path.empty()) {
        std::ifstream in(grid_path);
        if (!in) throw CliError("cannot open grid file " + grid_path.string());
        json grid_json;
        in >> grid_json;
        grid = bioguard::SweepGrid::from_json(grid_json, defaults);
    } else {
        grid = bioguard::SweepGrid::from_json(json::object(), defaults);
    }
    const bioguard::SweepResult result =
        bioguard::sweep(prompts, grid, cfg.pre_guard, resources, epsilon, cfg.jobs);
    ordered_json report = result.to_json();
    report["config"] = cfg.to_json();
    if (!out_path.empty()) write_text(out_path, report.dump(2) + "\n");
    const bioguard::Curves curves = bioguard::roc_pr_curves(result);
    if (!roc_csv.empty()) bioguard::write_curve_csv(curves.roc, "fpr", "recall", roc_csv);
    if (!pr_csv.empty()) bioguard::write_curve_csv(curves.pr, "recall", "precision", pr_csv);
    std::cout << (result.feasible ? "feasible" : "INFEASIBLE") << " at epsilon=" << epsilon;
    if (result.chosen) {
        std::cout << "; chosen jsr=" << result.chosen->jsr << " fpr=" << result.chosen->fpr
                  << " (fuzzy=" << result.chosen->lambda.fuzzy
                  << ", semantic=" << result.chosen->lambda.semantic
                  << ", longseq=" << result.chosen->lambda.longseq
                  << ", blast_identity=" << result.chosen->lambda.blast_identity
                  << ", tier=" << bioguard::tier_name(result.chosen->lambda.tier) << ")";
    }
    std::cout << '\n';
    return result.feasible ? 0 : 1;
}

int run_redteam_command(const bioguard::AppConfig& cfg, const fs::path& seeds_path, int rounds,
                        bool feedback, const fs::path& report_path, const fs::path& lexicon_out,
                        const fs::path& preferences_out) {
    if (cfg.persona != "mock-base" && cfg.persona != "mock-aligned") {
        throw bioguard::ConfigError(
            "redteam campaigns require a mock persona (the exact harm judge)");
    }
    const bioguard::GuardResources resources = bioguard::build_resources(cfg);
    check_blast_db({&cfg.pre_guard, &cfg.post_guard}, resources);
    const auto gateway = bioguard::build_gateway(cfg, resources.lexicon());
    auto* mock = dynamic_cast<bioguard::MockModel*>(gateway.get());

    std::vector<std::string> seeds;
    for (const auto& row : read_jsonl(seeds_path)) {
        seeds.push_back(row.at("prompt").get<std::string>());
    }
    bioguard::CampaignConfig campaign;
    campaign.rounds = rounds;
    campaign.seed = cfg.seed;
    campaign.feedback = feedback;
    campaign.jobs = cfg.jobs;
    const bioguard::CampaignResult result =
        bioguard::run_campaign(seeds, campaign, cfg.pre_guard, *mock, cfg.post_guard, resources);

    ordered_json report = result.report;
    report["config_full"] = cfg.to_json();
    if (!report_path.empty()) write_text(report_path, report.dump(2) + "\n");
    if (!lexicon_out.empty()) {
        std::string terms;
        for (const auto& t : result.new_terms) terms += t + "\n";
        write_text(lexicon_out, terms);
    }
    if (!preferences_out.empty()) {
        std::string lines;
        for (const auto& p : result.preferences) {
            lines += ordered_json{{"prompt", p.prompt},
                                  {"chosen", p.chosen},
                                  {"rejected", p.rejected}}
                         .dump() +
                     "\n";
        }
        write_text(preferences_out, lines);
    }
    for (const auto& round : result.rounds) {
        std::cout << "round " << round.round << ": population=" << round.population
                  << " leaked=" << round.leaked << " asr=" << (round.asr ? *round.asr : 0.0);
        if (round.asr_ci) {
            std::cout << " ci95=[" << round.asr_ci->lo << ", " << round.asr_ci->hi << "]";
        }
        std::cout << " pre=" << round.pre_blocked << " post=" << round.post_blocked
                  << " refused=" << round.refused;
        if (round.closure_leaks) std::cout << " closure_leaks=" << *round.closure_leaks;
        std::cout << '\n';
    }
    return 0;
}

int run_dpo_command(const bioguard::AppConfig& cfg, const fs::path& data_path, double beta,
                    double lr, int steps, const fs::path& curve_path, bool guard_filter) {
    std::vector<bioguard::PreferenceTriple> triples;
    for (const auto& row : read_jsonl(data_path)) {
        triples.push_back({row.at("prompt").get<std::string>(),
                           row.at("chosen").get<std::string>(),
                           row.at("rejected").get<std::string>()});
    }
    std::size_t dropped = 0;
    if (guard_filter) {
        // Curation pass: keep only triples whose chosen completion clears
        // the post-guard, so training never prefers guard-violating text.
        const bioguard::GuardResources resources = bioguard::build_resources(cfg);
        check_blast_db({&cfg.post_guard}, resources);
        std::vector<bioguard::PreferenceTriple> kept;
        for (const auto& t : triples) {
            const auto decision = bioguard::run_guard(t.chosen, cfg.post_guard, resources);
            if (decision.verdict == bioguard::Verdict::block) {
                ++dropped;
            } else {
                kept.push_back(t);
            }
        }
        triples = std::move(kept);
        if (triples.empty()) throw CliError("guard filter dropped every triple");
    }
    // Tabular policy over the candidates the data mentions, zero
    // initialized; the reference policy is the same uniform start.
    bioguard::ToyPolicy theta;
    for (const auto& t : triples) {
        auto& dist = theta.prompts[t.prompt];
        for (const auto& cand : {t.chosen, t.rejected}) {
            if (std::find(dist.candidates.begin(), dist.candidates.end(), cand) ==
                dist.candidates.end()) {
                dist.candidates.push_back(cand);
                dist.logits.push_back(0.0);
            }
        }
    }
    const bioguard::TrainResult result =
        bioguard::train_toy_dpo(theta, theta, triples, beta, lr, steps);
    if (!curve_path.empty()) bioguard::write_loss_curve_csv(result.curve, curve_path);
    ordered_json out;
    out["triples"] = triples.size();
    out["guard_filtered_out"] = dropped;
    out["steps"] = steps;
    out["initial_loss"] = result.curve.front().loss;
    out["final_loss"] = result.curve.back().loss;
    out["final_mean_margin"] = result.curve.back().mean_margin;
    std::cout << out.dump(2) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bioguard: tiered sanitization, runtime guardrails, safety statistics,\n"
                 "threshold calibration and an automated red-team loop for text LLM pipelines"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "JSON config file (flags override it)");
    std::string lexicon_dir, blast_db, tier_override;
    uint64_t seed = 0;
    int jobs = -1;
    double fuzzy_threshold = -1.0, semantic_threshold = -10.0;
    int longseq_min_len = -1;
    auto* opt_lex = app.add_option("--lexicon-dir", lexicon_dir,
                                   "directory with l1_custom.txt, l2_human.txt, l3_all.txt");
    auto* opt_db = app.add_option("--blast-db", blast_db, "FASTA db for the alignment screen");
    auto* opt_seed = app.add_option("--seed", seed, "rng seed");
    auto* opt_jobs = app.add_option("--jobs", jobs, "worker threads (0 = all cores)");
    auto* opt_tier =
        app.add_option("--tier", tier_override, "guard tier (L1_custom|L2_human|L3_all)");
    auto* opt_fuzzy =
        app.add_option("--fuzzy-threshold", fuzzy_threshold, "fuzzy partial-ratio threshold");
    auto* opt_sem =
        app.add_option("--semantic-threshold", semantic_threshold, "semantic cosine threshold");
    auto* opt_longseq =
        app.add_option("--longseq-min-len", longseq_min_len, "long-sequence length gate");
    std::string persona;
    auto* opt_persona =
        app.add_option("--persona", persona, "mock-base | mock-aligned | http | replay");

    auto* guard_cmd = app.add_subcommand("guard", "score one text and print the decision")->fallthrough();
    std::string guard_text, guard_position = "pre";
    guard_cmd->add_option("--text", guard_text, "text to score")->required();
    guard_cmd->add_option("--position", guard_position, "pre | post")
        ->check(CLI::IsMember({"pre", "post"}));

    auto* sanitize_cmd = app.add_subcommand("sanitize", "filter a JSONL corpus by tier")->fallthrough();
    std::string san_in, san_out, san_tier = "L2_human", san_policy = "remove", san_report;
    bool san_deep = false;
    sanitize_cmd->add_option("--in", san_in, "input corpus (JSONL)")->required();
    sanitize_cmd->add_option("--out", san_out, "output corpus (JSONL)")->required();
    sanitize_cmd->add_option("--tier", san_tier, "sanitization tier");
    sanitize_cmd->add_option("--policy", san_policy, "remove | redact")
        ->check(CLI::IsMember({"remove", "redact"}));
    sanitize_cmd->add_flag("--deep", san_deep, "also run fuzzy/semantic/longseq signals");
    sanitize_cmd->add_option("--report", san_report, "write the report JSON here");

    auto* pipeline_cmd =
        app.add_subcommand("pipeline", "run prompts through pre -> model -> post")->fallthrough();
    std::string pl_prompts, pl_out = "outcomes.jsonl", pl_report;
    pipeline_cmd->add_option("--prompts", pl_prompts, "prompts JSONL ({text, label?})")
        ->required();
    pipeline_cmd->add_option("--out", pl_out, "outcome log (JSONL)");
    pipeline_cmd->add_option("--report", pl_report, "metrics report JSON");

    auto* eval_cmd = app.add_subcommand("eval", "aggregate metrics over an outcome log")->fallthrough();
    std::string ev_log, ev_labels, ev_report, ev_csv;
    eval_cmd->add_option("--log", ev_log, "outcome log (JSONL)")->required();
    eval_cmd->add_option("--labels", ev_labels, "labels JSONL ({text, label})");
    eval_cmd->add_option("--report", ev_report, "write the report JSON here");
    eval_cmd->add_option("--csv", ev_csv, "write metric,value,ci_lo,ci_hi rows here");

    auto* cal_cmd = app.add_subcommand("calibrate", "sweep thresholds under an FPR budget")->fallthrough();
    std::string cal_eval, cal_grid, cal_out = "sweep.json", cal_roc, cal_pr;
    double cal_epsilon = 0.067;
    cal_cmd->add_option("--eval-set", cal_eval, "labeled prompts JSONL")->required();
    cal_cmd->add_option("--grid", cal_grid, "grid JSON (per-threshold value lists)");
    cal_cmd->add_option("--epsilon", cal_epsilon, "FPR budget");
    cal_cmd->add_option("--out", cal_out, "sweep result JSON");
    cal_cmd->add_option("--roc-csv", cal_roc, "ROC curve CSV");
    cal_cmd->add_option("--pr-csv", cal_pr, "PR curve CSV");

    auto* rt_cmd = app.add_subcommand("redteam", "run the adaptive attacker loop")->fallthrough();
    std::string rt_seeds, rt_report = "campaign.json", rt_lexicon, rt_prefs, rt_feedback = "on";
    int rt_rounds = 5;
    rt_cmd->add_option("--seeds", rt_seeds, "seed prompts JSONL ({prompt})")->required();
    rt_cmd->add_option("--rounds", rt_rounds, "max rounds");
    rt_cmd->add_option("--feedback", rt_feedback, "on | off")
        ->check(CLI::IsMember({"on", "off"}));
    rt_cmd->add_option("--report", rt_report, "campaign report JSON");
    rt_cmd->add_option("--lexicon-append", rt_lexicon, "write new guard terms here");
    rt_cmd->add_option("--preferences", rt_prefs, "write preference triples JSONL here");

    auto* dpo_cmd = app.add_subcommand("dpo", "toy preference-alignment trainer")->fallthrough();
    std::string dpo_data, dpo_curve;
    double dpo_beta = bioguard::kDefaultDpoBeta, dpo_lr = 0.5;
    int dpo_steps = 200;
    bool dpo_guard_filter = false;
    dpo_cmd->add_option("--data", dpo_data, "preference triples JSONL")->required();
    dpo_cmd->add_flag("--guard-filter", dpo_guard_filter,
                      "drop triples whose chosen completion the post-guard blocks");
    dpo_cmd->add_option("--beta", dpo_beta, "DPO temperature");
    dpo_cmd->add_option("--lr", dpo_lr, "learning rate");
    dpo_cmd->add_option("--steps", dpo_steps, "gradient steps");
    dpo_cmd->add_option("--curve", dpo_curve, "loss curve CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        bioguard::AppConfig cfg;
        if (!config_path.empty()) cfg = bioguard::AppConfig::load_file(config_path);
        if (opt_lex->count()) cfg.lexicon_dir = lexicon_dir;
        if (opt_db->count()) cfg.blast_db = blast_db;
        if (opt_seed->count()) cfg.seed = seed;
        if (opt_jobs->count()) cfg.jobs = jobs;
        if (opt_persona->count()) cfg.persona = persona;
        if (opt_tier->count()) {
            const bioguard::Tier t = bioguard::tier_from_name(tier_override);
            cfg.pre_guard.signals.tier = t;
            cfg.post_guard.signals.tier = t;
        }
        for (auto* guard : {&cfg.pre_guard, &cfg.post_guard}) {
            if (opt_fuzzy->count()) guard->signals.fuzzy_threshold = fuzzy_threshold;
            if (opt_sem->count()) guard->signals.semantic_threshold = semantic_threshold;
            if (opt_longseq->count()) guard->signals.longseq_min_len = longseq_min_len;
        }

        if (guard_cmd->parsed()) return run_guard_command(cfg, guard_text, guard_position);
        if (sanitize_cmd->parsed()) {
            return run_sanitize_command(cfg, san_in, san_out, san_tier, san_policy, san_deep,
                                        san_report);
        }
        if (pipeline_cmd->parsed()) {
            return run_pipeline_command(cfg, pl_prompts, pl_out, pl_report);
        }
        if (eval_cmd->parsed()) {
            return run_eval_command(cfg, ev_log, ev_labels, ev_report, ev_csv);
        }
        if (cal_cmd->parsed()) {
            return run_calibrate_command(cfg, cal_eval, cal_grid, cal_epsilon, cal_out, cal_roc,
                                         cal_pr);
        }
        if (rt_cmd->parsed()) {
            return run_redteam_command(cfg, rt_seeds, rt_rounds, rt_feedback == "on", rt_report,
                                       rt_lexicon, rt_prefs);
        }
        if (dpo_cmd->parsed()) {
            return run_dpo_command(cfg, dpo_data, dpo_beta, dpo_lr, dpo_steps, dpo_curve,
                                   dpo_guard_filter);
        }
        return 2;
    } catch (const bioguard::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
