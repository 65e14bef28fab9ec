#include "demonet/training.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "demonet/errors.hpp"

namespace demonet {

void TrainConfig::validate() const {
    if (!(lr > 0)) throw ValidationError("learning rate must be positive");
    if (dropout < 0 || dropout >= 1) throw ValidationError("dropout probability must be in [0, 1)");
    if (l2 < 0) throw ValidationError("L2 weight must be nonnegative");
    if (patience < 1) throw ValidationError("patience must be at least 1");
    if (max_epochs < 1) throw ValidationError("max_epochs must be at least 1");
}

template <typename Real>
void adam_step(AdamState<Real>& state, std::vector<Matrix<Real>>& params, const std::vector<Matrix<Real>>& grads,
               const TrainConfig& cfg) {
    if (grads.size() != params.size()) throw ShapeError("one gradient per parameter expected");
    if (state.m.empty()) {
        for (const auto& p : params) {
            state.m.emplace_back(p.rows(), p.cols());
            state.v.emplace_back(p.rows(), p.cols());
        }
    }
    if (state.m.size() != params.size()) throw ShapeError("optimizer state does not match the parameters");
    ++state.step;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (std::size_t p = 0; p < params.size(); ++p) {
        if (!params[p].same_shape(grads[p]) || !params[p].same_shape(state.m[p])) {
            throw ShapeError("gradient shape mismatch for parameter " + std::to_string(p));
        }
        auto pv = params[p].data();
        auto gv = grads[p].data();
        auto mv = state.m[p].data();
        auto vv = state.v[p].data();
        for (std::size_t i = 0; i < pv.size(); ++i) {
            const double g = static_cast<double>(gv[i]);
            const double m = cfg.beta1 * static_cast<double>(mv[i]) + (1.0 - cfg.beta1) * g;
            const double v = cfg.beta2 * static_cast<double>(vv[i]) + (1.0 - cfg.beta2) * g * g;
            mv[i] = static_cast<Real>(m);
            vv[i] = static_cast<Real>(v);
            pv[i] -= static_cast<Real>(cfg.lr * (m / c1) / (std::sqrt(v / c2) + cfg.adam_eps));
        }
    }
}

template <typename Real>
Var loss_with_l2(Tape<Real>& tape, Var logits, std::span<const int> labels, std::span<const std::size_t> mask,
                 std::span<const Var> params, double lambda) {
    Var loss = softmax_xent_loss(tape, logits, labels, mask);
    if (lambda == 0) return loss;
    for (Var p : params) loss = add(tape, loss, scale(tape, sum_squares(tape, p), static_cast<Real>(lambda)));
    return loss;
}

double accuracy(const Matrix<double>& logits, std::span<const int> labels, std::span<const std::size_t> rows) {
    if (rows.empty()) throw ValidationError("accuracy over an empty index set");
    std::size_t correct = 0;
    for (std::size_t r : rows) {
        auto row = logits.row(r);
        std::size_t best = 0;
        for (std::size_t c = 1; c < row.size(); ++c) {
            if (row[c] > row[best]) best = c;
        }
        if (static_cast<int>(best) == labels[r]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(rows.size());
}

template <typename Real>
Evaluation evaluate(const Model<Real>& model, const ModelInput<Real>& in, std::span<const int> labels,
                    std::span<const std::size_t> rows) {
    if (rows.empty()) throw ValidationError("evaluation over an empty index set");
    Tape<Real> tape;
    const auto pass = model.forward(tape, in);
    Evaluation e;
    e.loss = static_cast<double>(tape.value(softmax_xent_loss(tape, pass.logits, labels, rows))(0, 0));
    e.accuracy = accuracy(Matrix<double>::cast(tape.value(pass.logits)), labels, rows);
    return e;
}

bool EarlyStopping::observe(int epoch, double val_acc, double val_loss) {
    if (val_acc > best_acc_) {
        best_acc_ = val_acc;
        best_loss_ = val_loss;
        best_epoch_ = epoch;
        stale_ = 0;
        return true;
    }
    ++stale_;
    if (val_acc == best_acc_ && val_loss < best_loss_) {
        best_loss_ = val_loss;
        best_epoch_ = epoch;
        return true;
    }
    return false;
}

template <typename Real>
FitResult fit(Model<Real>& model, const ModelInput<Real>& in, std::span<const int> labels, const SplitSpec& split,
              const TrainConfig& cfg) {
    cfg.validate();
    if (split.train.empty()) throw ValidationError("no labeled training examples");
    // An empty validation split leaves early stopping to watch the training set.
    const std::vector<std::size_t>& monitor = split.val.empty() ? split.train : split.val;

    Rng dropout_rng(cfg.seed);
    AdamState<Real> adam;
    EarlyStopping stopper(cfg.patience);
    std::vector<Matrix<Real>> best = model.parameters();
    FitResult result;
    result.unseen_degree_nodes = in.unseen_degree_nodes;

    const auto start = std::chrono::steady_clock::now();
    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        {
            Tape<Real> tape;
            std::vector<Matrix<Real>> masks;
            if (cfg.dropout > 0) masks = model.dropout_masks(in, cfg.dropout, dropout_rng);
            const auto pass = model.forward(tape, in, cfg.dropout > 0 ? &masks : nullptr);
            Var loss = loss_with_l2(tape, pass.logits, labels, split.train, pass.params, cfg.l2);
            result.train_loss.push_back(static_cast<double>(tape.value(loss)(0, 0)));
            tape.backward(loss);
            std::vector<Matrix<Real>> grads;
            grads.reserve(pass.params.size());
            for (Var p : pass.params) grads.push_back(tape.grad(p));
            adam_step(adam, model.parameters(), grads, cfg);
        }
        const Evaluation val = evaluate(model, in, labels, monitor);
        result.val_accuracy.push_back(val.accuracy);
        result.epochs_run = epoch;
        if (stopper.observe(epoch, val.accuracy, val.loss)) best = model.parameters();
        if (stopper.should_stop()) break;
    }
    const double elapsed =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    result.wall_ms_per_epoch = elapsed / result.epochs_run;

    model.parameters() = std::move(best);
    result.best_epoch = stopper.best_epoch();
    result.train_acc = evaluate(model, in, labels, split.train).accuracy;
    result.val_acc = split.val.empty() ? std::numeric_limits<double>::quiet_NaN()
                                       : evaluate(model, in, labels, split.val).accuracy;
    result.test_acc = split.test.empty() ? std::numeric_limits<double>::quiet_NaN()
                                         : evaluate(model, in, labels, split.test).accuracy;
    return result;
}

Summary summarize(std::span<const double> values) {
    Summary s;
    if (values.empty()) return s;
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    double ss = 0;
    for (double x : values) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size()));
    return s;
}

template void adam_step(AdamState<float>&, std::vector<Matrix<float>>&, const std::vector<Matrix<float>>&,
                        const TrainConfig&);
template void adam_step(AdamState<double>&, std::vector<Matrix<double>>&, const std::vector<Matrix<double>>&,
                        const TrainConfig&);
template Var loss_with_l2(Tape<float>&, Var, std::span<const int>, std::span<const std::size_t>, std::span<const Var>,
                          double);
template Var loss_with_l2(Tape<double>&, Var, std::span<const int>, std::span<const std::size_t>,
                          std::span<const Var>, double);
template Evaluation evaluate(const Model<float>&, const ModelInput<float>&, std::span<const int>,
                             std::span<const std::size_t>);
template Evaluation evaluate(const Model<double>&, const ModelInput<double>&, std::span<const int>,
                             std::span<const std::size_t>);
template FitResult fit(Model<float>&, const ModelInput<float>&, std::span<const int>, const SplitSpec&,
                       const TrainConfig&);
template FitResult fit(Model<double>&, const ModelInput<double>&, std::span<const int>, const SplitSpec&,
                       const TrainConfig&);

}  // namespace demonet
