#include "wsketch/finetune.hpp"

#include <cmath>
#include <string>

#include "wsketch/analysis.hpp"

namespace wsketch {
namespace {

std::vector<float> to_floats(const Matrix& m) {
  std::vector<float> out(static_cast<std::size_t>(m.size()));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(m.data()[i]);
  return out;
}

Matrix from_floats(std::span<const float> v, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = v[static_cast<std::size_t>(i)];
  return m;
}

void check_layers(const ToyModel& model, const FakeCompressConfig& config) {
  for (std::size_t l : config.layers) {
    if (l >= model.layers().size()) {
      throw ContractError("compressed layer index " + std::to_string(l) + " out of range");
    }
  }
}

// Pooled relative error over several layers.
struct ErrorPool {
  std::vector<float> original;
  std::vector<float> approx;

  void add(std::span<const float> o, std::span<const float> a) {
    original.insert(original.end(), o.begin(), o.end());
    approx.insert(approx.end(), a.begin(), a.end());
  }
  double mean() const { return report(original, approx, 0.0).mean_relative_error; }
};

}  // namespace

std::string_view to_string(TrainMode m) noexcept {
  switch (m) {
    case TrainMode::kSteMultiRow: return "ste";
    case TrainMode::kAggregatedSingleRow: return "aggregated";
    case TrainMode::kUncompressed: return "uncompressed";
  }
  return "unknown";
}

TrainMode parse_train_mode(std::string_view name) {
  if (name == "ste") return TrainMode::kSteMultiRow;
  if (name == "aggregated") return TrainMode::kAggregatedSingleRow;
  if (name == "uncompressed") return TrainMode::kUncompressed;
  throw ContractError("unknown training mode '" + std::string(name) + "'");
}

SketchConfig FakeCompressConfig::layer_config(std::size_t layer) const {
  SketchConfig c = sketch;
  c.seed = unit_seed(sketch.seed, layer);
  return c;
}

FakeCompressResult fake_compress_forward(const ToyModel& model, const FakeCompressConfig& config,
                                         const Batch& batch) {
  check_layers(model, config);
  FakeCompressResult r;
  for (std::size_t l : config.layers) {
    const Matrix& w = model.layers()[l].weight;
    const std::vector<float> flat = to_floats(w);
    r.states.push_back(compress_unit(flat, config.layer_config(l)));
    const std::vector<float> dec = decompress_unit(r.states.back(), flat.size());
    r.decompressed.push_back(from_floats(dec, w.rows(), w.cols()));
  }
  r.loss = with_layers(model, config.layers, r.decompressed).loss(batch);
  return r;
}

ToyModel with_layers(const ToyModel& model, std::span<const std::size_t> layers,
                     std::span<const Matrix> weights) {
  if (layers.size() != weights.size()) throw ContractError("layer/weight count mismatch");
  std::vector<DenseLayer> out = model.layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i] >= out.size()) throw ContractError("layer index out of range");
    if (weights[i].rows() != out[layers[i]].weight.rows() ||
        weights[i].cols() != out[layers[i]].weight.cols()) {
      throw ContractError("replacement weight shape mismatch");
    }
    out[layers[i]].weight = weights[i];
  }
  return ToyModel(std::move(out));
}

Matrix ste_backward(const Matrix& grad_decompressed, const Matrix& original) {
  if (grad_decompressed.rows() != original.rows() || grad_decompressed.cols() != original.cols()) {
    throw ContractError("gradient shape does not match the weight shape");
  }
  return grad_decompressed;
}

std::vector<double> aggregated_backward(std::span<const double> member_grads,
                                        std::span<const std::uint64_t> mapping,
                                        std::size_t shared_count) {
  if (member_grads.size() != mapping.size()) {
    throw ContractError("member gradient and mapping lengths differ");
  }
  std::vector<double> shared(shared_count, 0.0);
  for (std::size_t a = 0; a < mapping.size(); ++a) {
    if (mapping[a] >= shared_count) throw ContractError("mapping slot out of range");
    shared[mapping[a]] += member_grads[a];
  }
  return shared;
}

DivergenceError::DivergenceError(std::size_t step, double loss)
    : Error("training diverged at step " + std::to_string(step) + " (loss " +
            std::to_string(loss) + ")"),
      step_(step) {}

TrainRun train(const ToyModel& model, const RegressionTask& task, const TrainConfig& config) {
  if (config.steps == 0) throw ContractError("steps must be >= 1");
  if (config.batch_size == 0) throw ContractError("batch size must be >= 1");
  const bool compressed = config.mode != TrainMode::kUncompressed;
  const auto& layers = config.compression.layers;
  if (compressed) {
    check_layers(model, config.compression);
    config.compression.sketch.validate();
  }

  TrainRun run;
  run.mode = config.mode;
  run.steps = config.steps;
  run.history.reserve(config.steps);
  std::vector<DenseLayer> params = model.layers();
  std::mt19937_64 rng(config.data_seed);

  // Aggregated mode: shared vectors, fixed address -> slot bindings, and the
  // pre-trained weights as the error reference.
  std::vector<std::vector<double>> shared;
  std::vector<std::vector<std::uint64_t>> mapping;
  std::vector<std::vector<float>> reference;
  if (config.mode == TrainMode::kAggregatedSingleRow) {
    if (config.compression.sketch.rows != 1) {
      throw ContractError("aggregated mode trains a single-row sketch");
    }
    for (std::size_t l : layers) {
      reference.push_back(to_floats(params[l].weight));
      SketchConfig c = config.compression.layer_config(l);
      c.variant = Variant::kAbsMaxMin;
      const SketchState s = compress_unit(reference.back(), c);
      shared.emplace_back(s.values().begin(), s.values().end());
      std::vector<std::uint64_t> map(reference.back().size());
      for (std::uint64_t a = 0; a < map.size(); ++a) map[a] = s.column_of(0, a);
      mapping.push_back(std::move(map));
    }
  }
  if (compressed) {
    for (std::size_t l : layers) run.state_elements += config.compression.layer_config(l).cell_count();
  }

  auto expand = [&](std::size_t i) {
    const Matrix& w = params[layers[i]].weight;
    Matrix m(w.rows(), w.cols());
    for (Eigen::Index a = 0; a < m.size(); ++a) m.data()[a] = shared[i][mapping[i][a]];
    return m;
  };
  auto shared_error = [&] {
    ErrorPool pool;
    for (std::size_t i = 0; i < layers.size(); ++i) pool.add(reference[i], to_floats(expand(i)));
    return pool.mean();
  };

  std::vector<std::vector<std::uint64_t>> winners(layers.size());
  for (std::size_t t = 0; t < config.steps; ++t) {
    StepRecord rec;
    rec.step = t;
    rec.learning_rate =
        config.learning_rate * (1.0 - static_cast<double>(t) / static_cast<double>(config.steps));
    const Batch batch = task.sample(rng, config.batch_size);

    Gradients g;
    if (config.mode == TrainMode::kSteMultiRow) {
      const ToyModel current(params);
      FakeCompressResult fc = fake_compress_forward(current, config.compression, batch);
      g = with_layers(current, layers, fc.decompressed).loss_and_gradients(batch);
      ErrorPool pool;
      for (std::size_t i = 0; i < layers.size(); ++i) {
        const std::vector<float> orig = to_floats(params[layers[i]].weight);
        const std::vector<float> dec = to_floats(fc.decompressed[i]);
        pool.add(orig, dec);
        const SketchState& s = fc.states[i];
        std::vector<std::uint64_t> win(orig.size());
        for (std::uint64_t a = 0; a < orig.size(); ++a) {
          if (std::fabs(dec[a]) > std::fabs(orig[a])) run.underestimate_held = false;
          const Retrieval d = s.retrieve_detail(a);
          win[a] = std::uint64_t{d.row} * s.columns() + d.column;
          if (t > 0 && win[a] != winners[i][a]) ++rec.binding_changes;
        }
        winners[i] = std::move(win);
        g.weight[layers[i]] = ste_backward(g.weight[layers[i]], params[layers[i]].weight);
      }
      rec.mean_relative_error = pool.mean();
    } else if (config.mode == TrainMode::kAggregatedSingleRow) {
      std::vector<Matrix> expanded;
      for (std::size_t i = 0; i < layers.size(); ++i) expanded.push_back(expand(i));
      g = with_layers(ToyModel(params), layers, expanded).loss_and_gradients(batch);
      rec.mean_relative_error = shared_error();
    } else {
      g = ToyModel(params).loss_and_gradients(batch);
    }
    rec.loss = g.loss;
    if (!std::isfinite(g.loss)) throw DivergenceError(t, g.loss);

    std::vector<bool> frozen(params.size(), false);
    if (config.mode == TrainMode::kAggregatedSingleRow) {
      // The shared vectors replace the designated weights as parameters.
      for (std::size_t i = 0; i < layers.size(); ++i) {
        const Matrix& gw = g.weight[layers[i]];
        const auto sg = aggregated_backward(std::span<const double>(gw.data(), gw.size()),
                                            mapping[i], shared[i].size());
        for (std::size_t s = 0; s < sg.size(); ++s) shared[i][s] -= rec.learning_rate * sg[s];
        frozen[layers[i]] = true;
      }
    }
    for (std::size_t l = 0; l < params.size(); ++l) {
      if (!frozen[l]) params[l].weight -= rec.learning_rate * g.weight[l];
      params[l].bias -= rec.learning_rate * g.bias[l];
    }
    run.total_binding_changes += rec.binding_changes;
    run.history.push_back(rec);
  }

  const Batch& eval = task.eval_set();
  if (config.mode == TrainMode::kSteMultiRow) {
    const ToyModel current(params);
    FakeCompressResult fc = fake_compress_forward(current, config.compression, eval);
    run.eval_loss = fc.loss;
    run.deployed = with_layers(current, layers, fc.decompressed).layers();
    ErrorPool pool;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      pool.add(to_floats(params[layers[i]].weight), to_floats(fc.decompressed[i]));
    }
    run.final_relative_error = pool.mean();
  } else if (config.mode == TrainMode::kAggregatedSingleRow) {
    std::vector<Matrix> expanded;
    for (std::size_t i = 0; i < layers.size(); ++i) expanded.push_back(expand(i));
    const ToyModel deployed = with_layers(ToyModel(params), layers, expanded);
    run.eval_loss = deployed.loss(eval);
    run.deployed = deployed.layers();
    run.final_relative_error = shared_error();
  } else {
    run.deployed = params;
    run.eval_loss = ToyModel(params).loss(eval);
  }
  if (!std::isfinite(run.eval_loss)) throw DivergenceError(config.steps, run.eval_loss);
  return run;
}

CompressOnlyResult compress_only(const ToyModel& model, const FakeCompressConfig& config,
                                 const Batch& eval) {
  const FakeCompressResult fc = fake_compress_forward(model, config, eval);
  ErrorPool pool;
  for (std::size_t i = 0; i < config.layers.size(); ++i) {
    pool.add(to_floats(model.layers()[config.layers[i]].weight), to_floats(fc.decompressed[i]));
  }
  return {fc.loss, pool.mean()};
}

DemoSetup prepare_demo(const DemoScenario& s) {
  ToyModelConfig teacher;
  teacher.hidden = s.hidden;
  teacher.seed = mix64(s.seed * 4 + 1);
  ToyModelConfig student = teacher;
  student.seed = mix64(s.seed * 4 + 2);

  RegressionTask task(teacher, s.eval_size, mix64(s.seed * 4 + 3));
  TrainConfig pre;
  pre.mode = TrainMode::kUncompressed;
  pre.steps = s.pretrain_steps;
  pre.learning_rate = s.pretrain_learning_rate;
  pre.batch_size = s.batch_size;
  pre.data_seed = mix64(s.seed * 4 + 4);
  ToyModel pretrained(train(ToyModel(student), task, pre).deployed);

  const std::uint64_t k = s.hidden * s.hidden;
  FakeCompressConfig ste;
  ste.layers = {1};
  ste.sketch.variant = Variant::kAbsMaxMin;
  ste.sketch.rows = s.ste_rows;
  ste.sketch.columns = columns_for_rate(k, s.rate, s.ste_rows);
  ste.sketch.seed = mix64(s.seed ^ 0x5eed);
  FakeCompressConfig agg = ste;
  agg.sketch.rows = 1;
  agg.sketch.columns = ste.sketch.columns * s.ste_rows;
  return {std::move(task), std::move(pretrained), std::move(ste), std::move(agg)};
}

TrainConfig demo_train_config(const DemoScenario& s, const DemoSetup& setup, TrainMode mode) {
  TrainConfig c;
  c.mode = mode;
  c.steps = s.steps;
  c.learning_rate = s.learning_rate;
  c.batch_size = s.batch_size;
  c.data_seed = mix64(s.seed * 4 + 5);
  c.compression = mode == TrainMode::kAggregatedSingleRow ? setup.aggregated : setup.ste;
  return c;
}

}  // namespace wsketch
