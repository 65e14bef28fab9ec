#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "demonet/graph.hpp"
#include "demonet/model.hpp"
#include "demonet/tape.hpp"

namespace demonet {

struct TrainConfig {
    double lr = 0.005;
    double dropout = 0.6;
    double l2 = 0.0005;
    int patience = 100;
    int max_epochs = 1000;
    std::uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;

    void validate() const;
};

template <typename Real>
struct AdamState {
    std::vector<Matrix<Real>> m, v;
    long step = 0;
};

// One bias-corrected Adam update. A fresh state is sized from params.
template <typename Real>
void adam_step(AdamState<Real>& state, std::vector<Matrix<Real>>& params, const std::vector<Matrix<Real>>& grads,
               const TrainConfig& cfg);

// Cross-entropy over the masked rows plus lambda times the squared Frobenius
// norm of every parameter.
template <typename Real>
Var loss_with_l2(Tape<Real>& tape, Var logits, std::span<const int> labels, std::span<const std::size_t> mask,
                 std::span<const Var> params, double lambda);

// Accuracy with ties broken toward the lowest class id.
double accuracy(const Matrix<double>& logits, std::span<const int> labels, std::span<const std::size_t> rows);

struct Evaluation {
    double accuracy = 0;
    double loss = 0;
};

// Dropout-free accuracy and cross-entropy on the given rows.
template <typename Real>
Evaluation evaluate(const Model<Real>& model, const ModelInput<Real>& in, std::span<const int> labels,
                    std::span<const std::size_t> rows);

// Patience counter on validation accuracy. The snapshot also moves on an
// accuracy tie with lower loss; only a strict accuracy gain resets patience.
class EarlyStopping {
public:
    explicit EarlyStopping(int patience) : patience_(patience) {}

    // Returns true when this epoch becomes the best snapshot.
    bool observe(int epoch, double val_acc, double val_loss);
    bool should_stop() const { return stale_ >= patience_; }
    int best_epoch() const { return best_epoch_; }
    double best_accuracy() const { return best_acc_; }

private:
    int patience_;
    int stale_ = 0;
    int best_epoch_ = 0;
    double best_acc_ = -1;
    double best_loss_ = 0;
};

struct FitResult {
    int epochs_run = 0;
    int best_epoch = 0;
    double train_acc = 0;
    double val_acc = 0;
    double test_acc = 0;
    double wall_ms_per_epoch = 0;
    std::vector<double> train_loss;  // per epoch, before the update
    std::vector<double> val_accuracy;
    std::size_t unseen_degree_nodes = 0;
};

// Full-batch training with fresh dropout masks every epoch. The model ends up
// holding the parameters of the best validation epoch.
template <typename Real>
FitResult fit(Model<Real>& model, const ModelInput<Real>& in, std::span<const int> labels, const SplitSpec& split,
              const TrainConfig& cfg);

struct Summary {
    double mean = 0;
    double std = 0;  // population standard deviation
};

Summary summarize(std::span<const double> values);

}  // namespace demonet
