#include <cmath>
#include <numeric>

#include "hiepar/encoder.hpp"

namespace hiepar::encoder {

namespace {

// Adam with bias correction; moments live in tensors congruent to the model.
class AdamOptimizer {
 public:
  AdamOptimizer(const ModelDims& dims, const TrainConfig& config)
      : first_(ModelParams::zeros(dims)), second_(ModelParams::zeros(dims)), config_(config) {}

  void step(ModelParams& params, ModelParams& gradient) {
    ++steps_;
    const double correction1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
    const double correction2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
    auto p = params.tensors();
    auto g = gradient.tensors();
    auto m = first_.tensors();
    auto v = second_.tensors();
    for (std::size_t k = 0; k < p.size(); ++k) {
      for (std::size_t i = 0; i < p[k].values.size(); ++i) {
        const double grad = g[k].values[i];
        double& mean = m[k].values[i];
        double& var = v[k].values[i];
        mean = config_.beta1 * mean + (1.0 - config_.beta1) * grad;
        var = config_.beta2 * var + (1.0 - config_.beta2) * grad * grad;
        p[k].values[i] -= config_.learning_rate * (mean / correction1) /
                          (std::sqrt(var / correction2) + config_.epsilon);
      }
    }
  }

 private:
  ModelParams first_;
  ModelParams second_;
  const TrainConfig& config_;
  std::size_t steps_ = 0;
};

}  // namespace

ModelParams initial_params(const TrainConfig& config) {
  auto rng = RandomStream::named(config.seed, "init");
  return ModelParams::random(config.dims, rng, config.init_scale);
}

TrainResult train(std::span<const Example> examples, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  if (examples.empty()) throw Error("train: no training profiles");
  if (config.batch_size == 0) throw Error("train: batch_size must be positive");
  if (!(config.learning_rate > 0.0)) throw Error("train: learning_rate must be positive");

  TrainResult result{initial_params(config), {}};
  AdamOptimizer optimizer(config.dims, config);
  auto shuffle_rng = RandomStream::named(config.seed, "shuffle");

  std::vector<std::size_t> order(examples.size());
  std::vector<Example> batch;
  batch.reserve(config.batch_size);
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle_rng.shuffle(order);

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      batch.clear();
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      for (std::size_t i = start; i < end; ++i) batch.push_back(examples[order[i]]);
      auto [loss, gradient] = param_gradients(batch, result.params);
      if (!std::isfinite(loss)) {
        throw Error("train: loss diverged (non-finite) in epoch " + std::to_string(epoch));
      }
      epoch_loss += loss * static_cast<double>(batch.size());
      optimizer.step(result.params, gradient);
    }
    epoch_loss /= static_cast<double>(examples.size());
    if (!std::isfinite(epoch_loss) || !result.params.all_finite()) {
      throw Error("train: loss diverged (non-finite) in epoch " + std::to_string(epoch));
    }
    result.loss_history.push_back(epoch_loss);
    if (on_epoch) on_epoch(epoch, epoch_loss);
  }
  return result;
}

TrainResult train(const std::vector<corpus::ReviewerProfile>& profiles, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  std::vector<Example> examples;
  examples.reserve(profiles.size());
  for (const auto& profile : profiles) examples.push_back({&profile.document, &profile.label_set});
  return train(examples, config, on_epoch);
}

}  // namespace hiepar::encoder
