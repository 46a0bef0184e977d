#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace bioguard {

struct AlignError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tabular softmax policy: per prompt, named candidate completions with one
// logit each. pi(y|x) = softmax(logits[x])[y].
struct ToyPolicy {
    struct PromptDist {
        std::vector<std::string> candidates;
        std::vector<double> logits;
    };
    std::map<std::string, PromptDist> prompts;

    double logit(const std::string& prompt, const std::string& candidate) const;
    double log_prob(const std::string& prompt, const std::string& candidate) const;
    std::vector<double> probs(const std::string& prompt) const;
};

// {prompt, chosen, rejected} preference record.
struct PreferenceTriple {
    std::string prompt;
    std::string chosen;
    std::string rejected;
};

// Gradient with the same shape as the policy logits.
using PolicyGradient = std::map<std::string, std::vector<double>>;

// DPO objective, mean over the batch of
//   -log sigmoid(beta * [(log pi_t(y+|x) - log pi_t(y-|x))
//                        - (log pi_r(y+|x) - log pi_r(y-|x))])
inline constexpr double kDefaultDpoBeta = 0.1;

double dpo_loss(const ToyPolicy& theta, const ToyPolicy& ref,
                const std::vector<PreferenceTriple>& batch, double beta = kDefaultDpoBeta);

// Analytic gradient of dpo_loss with respect to theta's logits. The
// normalization terms cancel inside each log-prob difference, so only the
// chosen/rejected logits of each triple carry gradient.
PolicyGradient dpo_grad(const ToyPolicy& theta, const ToyPolicy& ref,
                        const std::vector<PreferenceTriple>& batch,
                        double beta = kDefaultDpoBeta);

// Dense row-major matrix, just big enough for the adapter math.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    friend bool operator==(const Matrix&, const Matrix&) = default;
};

Matrix matmul(const Matrix& a, const Matrix& b);

// Low-rank adapter composition W = W0 + (alpha / r) * B * A with
// A: r x d_in, B: d_out x r.
struct LoraFactors {
    Matrix w0;  // d_out x d_in
    Matrix a;   // r x d_in
    Matrix b;   // d_out x r
    double alpha = 1.0;
    std::size_t rank = 1;
};

Matrix lora_compose(const LoraFactors& f);

struct TrainStats {
    int step = 0;
    double loss = 0.0;
    double mean_margin = 0.0;  // mean over triples of the theta log-prob margin
};

struct TrainResult {
    ToyPolicy policy;
    std::vector<TrainStats> curve;  // steps + 1 rows, row 0 is pre-training
};

// Plain gradient descent on dpo_loss. Throws on an empty dataset, bad
// hyperparameters, or a non-finite loss (divergence, with the step index
// in the message).
TrainResult train_toy_dpo(const ToyPolicy& theta0, const ToyPolicy& ref,
                          const std::vector<PreferenceTriple>& dataset, double beta, double lr,
                          int steps);

void write_loss_curve_csv(const std::vector<TrainStats>& curve, const std::string& path);

}  // namespace bioguard
