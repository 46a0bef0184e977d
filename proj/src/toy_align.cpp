#include "bioguard/toy_align.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace bioguard {

namespace {

std::size_t candidate_index(const ToyPolicy::PromptDist& dist, const std::string& prompt,
                            const std::string& candidate) {
    const auto it = std::find(dist.candidates.begin(), dist.candidates.end(), candidate);
    if (it == dist.candidates.end()) {
        throw AlignError("policy has no candidate '" + candidate + "' for prompt '" + prompt +
                         "'");
    }
    return static_cast<std::size_t>(it - dist.candidates.begin());
}

const ToyPolicy::PromptDist& prompt_dist(const ToyPolicy& p, const std::string& prompt) {
    const auto it = p.prompts.find(prompt);
    if (it == p.prompts.end()) {
        throw AlignError("policy has no prompt '" + prompt + "'");
    }
    return it->second;
}

double log_sum_exp(const std::vector<double>& xs) {
    const double m = *std::max_element(xs.begin(), xs.end());
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}

double softplus(double x) {
    // log(1 + e^x), stable on both tails.
    if (x > 0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// Logit difference chosen - rejected; the softmax normalizer cancels.
double policy_margin(const ToyPolicy& p, const PreferenceTriple& t) {
    const auto& dist = prompt_dist(p, t.prompt);
    const double lc = dist.logits[candidate_index(dist, t.prompt, t.chosen)];
    const double lr = dist.logits[candidate_index(dist, t.prompt, t.rejected)];
    return lc - lr;
}

}  // namespace

double ToyPolicy::logit(const std::string& prompt, const std::string& candidate) const {
    const auto& dist = prompt_dist(*this, prompt);
    return dist.logits[candidate_index(dist, prompt, candidate)];
}

double ToyPolicy::log_prob(const std::string& prompt, const std::string& candidate) const {
    const auto& dist = prompt_dist(*this, prompt);
    return dist.logits[candidate_index(dist, prompt, candidate)] - log_sum_exp(dist.logits);
}

std::vector<double> ToyPolicy::probs(const std::string& prompt) const {
    const auto& dist = prompt_dist(*this, prompt);
    const double lse = log_sum_exp(dist.logits);
    std::vector<double> out(dist.logits.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(dist.logits[i] - lse);
    return out;
}

double dpo_loss(const ToyPolicy& theta, const ToyPolicy& ref,
                const std::vector<PreferenceTriple>& batch, double beta) {
    if (batch.empty()) throw AlignError("dpo_loss: empty batch");
    double total = 0.0;
    for (const auto& t : batch) {
        if (t.chosen == t.rejected) {
            throw AlignError("preference triple with chosen == rejected for prompt '" + t.prompt +
                             "'");
        }
        const double margin = policy_margin(theta, t) - policy_margin(ref, t);
        total += softplus(-beta * margin);
    }
    return total / static_cast<double>(batch.size());
}

PolicyGradient dpo_grad(const ToyPolicy& theta, const ToyPolicy& ref,
                        const std::vector<PreferenceTriple>& batch, double beta) {
    if (batch.empty()) throw AlignError("dpo_grad: empty batch");
    PolicyGradient grad;
    for (const auto& [prompt, dist] : theta.prompts) {
        grad[prompt].assign(dist.logits.size(), 0.0);
    }
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    for (const auto& t : batch) {
        const double margin = policy_margin(theta, t) - policy_margin(ref, t);
        // d/dm of softplus(-beta*m) = -beta * sigmoid(-beta*m)
        const double g = -beta * sigmoid(-beta * margin) * inv_n;
        const auto& dist = prompt_dist(theta, t.prompt);
        grad[t.prompt][candidate_index(dist, t.prompt, t.chosen)] += g;
        grad[t.prompt][candidate_index(dist, t.prompt, t.rejected)] -= g;
    }
    return grad;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) throw AlignError("matmul: shape mismatch");
    Matrix out(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = a.at(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols; ++j) {
                out.at(i, j) += aik * b.at(k, j);
            }
        }
    }
    return out;
}

Matrix lora_compose(const LoraFactors& f) {
    if (f.rank == 0) throw AlignError("lora_compose: rank must be positive");
    if (f.a.rows != f.rank || f.b.cols != f.rank) {
        throw AlignError("lora_compose: adapter shapes do not match rank");
    }
    if (f.b.rows != f.w0.rows || f.a.cols != f.w0.cols) {
        throw AlignError("lora_compose: adapter shapes do not match W0");
    }
    if (f.rank > std::min(f.w0.rows, f.w0.cols)) {
        throw AlignError("lora_compose: rank exceeds min(d_out, d_in)");
    }
    Matrix delta = matmul(f.b, f.a);
    const double scale = f.alpha / static_cast<double>(f.rank);
    Matrix out = f.w0;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] += scale * delta.data[i];
    }
    return out;
}

TrainResult train_toy_dpo(const ToyPolicy& theta0, const ToyPolicy& ref,
                          const std::vector<PreferenceTriple>& dataset, double beta, double lr,
                          int steps) {
    if (dataset.empty()) throw AlignError("train_toy_dpo: empty dataset");
    if (lr <= 0.0) throw AlignError("train_toy_dpo: lr must be positive");
    if (steps < 1) throw AlignError("train_toy_dpo: steps must be >= 1");

    TrainResult result;
    result.policy = theta0;
    auto mean_margin = [&](const ToyPolicy& p) {
        double s = 0.0;
        for (const auto& t : dataset) {
            s += p.log_prob(t.prompt, t.chosen) - p.log_prob(t.prompt, t.rejected);
        }
        return s / static_cast<double>(dataset.size());
    };

    for (int step = 0; step <= steps; ++step) {
        const double loss = dpo_loss(result.policy, ref, dataset, beta);
        if (!std::isfinite(loss)) {
            throw AlignError("train_toy_dpo: loss diverged at step " + std::to_string(step));
        }
        result.curve.push_back({step, loss, mean_margin(result.policy)});
        if (step == steps) break;
        const PolicyGradient grad = dpo_grad(result.policy, ref, dataset, beta);
        for (auto& [prompt, dist] : result.policy.prompts) {
            const auto& g = grad.at(prompt);
            for (std::size_t i = 0; i < dist.logits.size(); ++i) {
                dist.logits[i] -= lr * g[i];
            }
        }
    }
    return result;
}

void write_loss_curve_csv(const std::vector<TrainStats>& curve, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw AlignError("cannot write loss curve: " + path);
    out << "step,loss,mean_margin\n";
    for (const auto& row : curve) {
        out << row.step << ',' << row.loss << ',' << row.mean_margin << '\n';
    }
}

}  // namespace bioguard
