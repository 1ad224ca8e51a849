#include "wsketch/cli.hpp"

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wsketch/analysis.hpp"
#include "wsketch/container.hpp"
#include "wsketch/distribution.hpp"
#include "wsketch/error.hpp"
#include "wsketch/finetune.hpp"
#include "wsketch/importance.hpp"
#include "wsketch/memory_model.hpp"
#include "wsketch/pipeline.hpp"

namespace wsketch::cli {
namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct CompressArgs {
  std::string input, output, importance;
  double rate = 0.5;
  std::uint32_t rows = kDefaultRows;
  std::uint64_t seed = 0;
  std::string variant = "absmaxmin";
  std::string granularity = "layer";
  std::string quant = "none";
  std::uint32_t group_size = kDefaultGroupSize;
  std::size_t topk = 0;
  std::uint64_t min_columns = kDefaultColumnFloor;
  bool test_hash = false;
  unsigned threads = 1;
};

void do_compress(const CompressArgs& a, std::ostream& out) {
  CompressOptions o;
  o.rate = a.rate;
  o.rows = a.rows;
  o.seed = a.seed;
  o.variant = parse_variant(a.variant);
  o.granularity = parse_granularity(a.granularity);
  o.quant = {parse_quant(a.quant), a.group_size};
  o.topk = a.topk;
  o.column_floor = a.min_columns;
  o.test_hash = a.test_hash;
  o.threads = a.threads;
  if (!a.importance.empty()) {
    const Tensor scores = read_tensor(a.importance);
    if (scores.ndim() != 1) throw ContractError("importance tensor must be 1-D");
    o.importance.emplace(scores.data.begin(), scores.data.end());
  }
  const SketchContainer c = compress_tensor(read_tensor(a.input), o);
  write_sketch(a.output, c);

  const CompressionSummary s = summarize(c);
  out << "units=" << s.unit_count << '\n'
      << "weights=" << s.weight_count << '\n'
      << "state_elements=" << s.state_elements << '\n'
      << "outliers=" << s.outlier_count << '\n'
      << "rate=" << num(a.rate) << '\n'
      << "equivalent_bits="
      << num(equivalent_bits(a.rate, o.quant.bits) +
             32.0 * static_cast<double>(s.outlier_count) / static_cast<double>(s.weight_count))
      << '\n'
      << "achieved_rate=" << num(s.compression_rate) << '\n'
      << "achieved_equivalent_bits=" << num(s.equivalent_bits) << '\n'
      << "input_bytes=" << s.input_bytes << '\n'
      << "payload_bytes=" << s.payload_bytes << '\n'
      << "serialized_bytes=" << s.serialized_bytes << '\n'
      << "payload_ratio=" << num(s.payload_ratio) << '\n'
      << "header_overhead=" << num(s.header_overhead) << '\n';
}

void do_stats(const std::string& original, const std::string& sketch, bool json,
              std::ostream& out) {
  const Tensor t = read_tensor(original);
  const SketchContainer c = read_sketch(sketch);
  if (t.shape != c.shape) throw ContractError("original tensor shape differs from the sketch");
  std::vector<SketchState> states;
  for (const auto& u : c.units) states.push_back(dequantize_state(u.state));
  CompressionReport r = report(t.data, decompress_container(c).data, unoccupied_fraction(states));
  r.quantized = c.quant.active();
  out << (json ? to_json(r) + "\n" : to_key_value(r));
}

struct BoundArgs {
  double p = 0.9;
  std::string dist = "normal";
  std::string samples;
  std::uint64_t k = 80000;
  std::uint64_t m = 10000;
  std::uint64_t buckets = 10000;
  std::uint64_t seed = 1;
};

void do_bound(const BoundArgs& a, std::ostream& out) {
  Distribution d = normal_distribution();
  if (a.dist == "laplace") {
    d = laplace_distribution();
  } else if (a.dist == "empirical") {
    if (a.samples.empty()) throw ContractError("--dist empirical needs --samples");
    const Tensor s = read_tensor(a.samples);
    d = empirical_distribution({s.data.begin(), s.data.end()});
  } else if (a.dist != "normal") {
    throw ContractError("unknown distribution '" + a.dist + "'");
  }
  const BoundVerification v = verify_bound(d, a.k, a.m, a.p, a.buckets, a.seed);
  out << "dist=" << a.dist << '\n'
      << "p=" << num(a.p) << '\n'
      << "k=" << a.k << '\n'
      << "m=" << a.m << '\n'
      << "L=" << num(v.bound_at_mean_load) << '\n'
      << "coverage=" << num(v.coverage) << '\n'
      << "buckets=" << v.buckets << '\n'
      << "standard_error=" << num(v.standard_error) << '\n'
      << "holds=" << (v.coverage >= a.p - 3 * v.standard_error ? "yes" : "no") << '\n';
}

void do_compare(const std::string& input, double rate, std::uint32_t rows, std::uint64_t seed,
                bool test_hash, std::ostream& out) {
  const Tensor t = read_tensor(input);
  std::vector<SketchConfig> configs;
  for (Variant v : kAllVariants) {
    configs.push_back({v, rows, columns_for_rate(t.size(), rate, rows), seed, test_hash});
  }
  out << "variant\tmean_relative_error\tmax_relative_error\tsign_error_rate\tuntouched\t"
         "unoccupied\n";
  for (const auto& c : compare_variants(t.data, configs)) {
    out << to_string(c.config.variant) << '\t' << num(c.report.mean_relative_error) << '\t'
        << num(c.report.max_relative_error) << '\t' << num(c.report.sign_error_rate) << '\t'
        << num(c.report.untouched_fraction) << '\t' << num(c.report.unoccupied_fraction) << '\n';
  }
}

void do_importance(const std::string& input, const std::string& output, std::size_t buckets,
                   std::ostream& out) {
  ImportanceProfile p = activation_importance(read_tensor(input));
  if (buckets > 0) p = bucketize(p, buckets);
  out << "channels=" << p.scores.size() << '\n'
      << "samples=" << p.sample_count << '\n'
      << "layer_importance=" << num(layer_importance(p)) << '\n';
  if (!output.empty()) {
    write_tensor(output, Tensor({p.scores.size()}, std::vector<float>(p.scores.begin(), p.scores.end())));
  } else {
    for (std::size_t i = 0; i < p.scores.size(); ++i) out << i << '\t' << num(p.scores[i]) << '\n';
  }
}

void do_finetune(const std::string& mode_name, const DemoScenario& s, std::ostream& out) {
  const TrainMode mode = parse_train_mode(mode_name);
  const DemoSetup setup = prepare_demo(s);
  const TrainRun run = train(setup.pretrained, setup.task, demo_train_config(s, setup, mode));
  out << "step\tloss\tmean_relative_error\tbinding_changes\n";
  for (const auto& h : run.history) {
    out << h.step << '\t' << num(h.loss) << '\t' << num(h.mean_relative_error) << '\t'
        << h.binding_changes << '\n';
  }
  out << "# mode=" << to_string(mode) << " eval_loss=" << num(run.eval_loss)
      << " final_relative_error=" << num(run.final_relative_error)
      << " state_elements=" << run.state_elements << '\n';
  if (mode != TrainMode::kUncompressed) {
    const auto& cfg = mode == TrainMode::kSteMultiRow ? setup.ste : setup.aggregated;
    const CompressOnlyResult base = compress_only(setup.pretrained, cfg, setup.task.eval_set());
    out << "# compress_only eval_loss=" << num(base.eval_loss)
        << " relative_error=" << num(base.mean_relative_error) << '\n';
  }
}

void do_memest(const std::vector<std::uint64_t>& layers, const std::vector<std::uint64_t>& sketches,
               std::ostream& out) {
  const PeakMemoryEstimate e = peak_memory_estimate(layers, sketches);
  out << "peak=" << e.peak << '\n' << "baseline=" << e.baseline << '\n';
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sketch-based weight compression toolkit", "wsketch-cli"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "wsketch-cli 1.0");

  CompressArgs ca;
  auto* compress = app.add_subcommand("compress", "Compress a tensor into a sketch container");
  compress->add_option("--input,-i", ca.input, "Input tensor (.ust)")->required()->check(CLI::ExistingFile);
  compress->add_option("--output,-o", ca.output, "Output sketch (.usk)")->required();
  compress->add_option("--rate", ca.rate, "State elements per weight")->check(CLI::PositiveNumber);
  compress->add_option("--rows", ca.rows, "Sketch rows")->check(CLI::Range(1, 255));
  compress->add_option("--seed", ca.seed, "Master hash seed");
  compress->add_option("--variant", ca.variant, "absmaxmin | absminmax | countmin");
  compress->add_option("--granularity", ca.granularity, "uniform | row | layer");
  compress->add_option("--importance", ca.importance, "1-D score tensor, one per unit")
      ->check(CLI::ExistingFile);
  compress->add_option("--quant", ca.quant, "none | q8 | q4");
  compress->add_option("--group-size", ca.group_size, "Quantization group size")
      ->check(CLI::PositiveNumber);
  compress->add_option("--topk", ca.topk, "Outliers kept per unit");
  compress->add_option("--min-columns", ca.min_columns, "Column floor per unit");
  compress->add_flag("--test-hash", ca.test_hash, "Identity hash (addr mod columns)");
  compress->add_option("--threads", ca.threads, "Worker threads")->check(CLI::PositiveNumber);

  std::string dec_in, dec_out;
  auto* decompress = app.add_subcommand("decompress", "Rebuild a tensor from a sketch container");
  decompress->add_option("--input,-i", dec_in, "Sketch (.usk)")->required()->check(CLI::ExistingFile);
  decompress->add_option("--output,-o", dec_out, "Output tensor (.ust)")->required();

  std::string st_orig, st_sketch;
  bool st_json = false;
  auto* stats = app.add_subcommand("stats", "Error statistics of a sketch against its original");
  stats->add_option("--original", st_orig, "Original tensor")->required()->check(CLI::ExistingFile);
  stats->add_option("--sketch", st_sketch, "Sketch container")->required()->check(CLI::ExistingFile);
  stats->add_flag("--json", st_json, "JSON output");

  BoundArgs ba;
  auto* bound = app.add_subcommand("bound", "Per-bucket minimum bound with Monte Carlo coverage");
  bound->add_option("--p", ba.p, "Target probability")->check(CLI::Range(0.0, 1.0));
  bound->add_option("--dist", ba.dist, "normal | laplace | empirical");
  bound->add_option("--samples", ba.samples, "Sample tensor for --dist empirical")
      ->check(CLI::ExistingFile);
  bound->add_option("--k", ba.k, "Weights per round")->check(CLI::PositiveNumber);
  bound->add_option("--m", ba.m, "Buckets")->check(CLI::PositiveNumber);
  bound->add_option("--buckets", ba.buckets, "Minimum occupied buckets to test");
  bound->add_option("--seed", ba.seed, "Monte Carlo seed");

  std::string cmp_in;
  double cmp_rate = 0.5;
  std::uint32_t cmp_rows = kDefaultRows;
  std::uint64_t cmp_seed = 0;
  bool cmp_test_hash = false;
  auto* compare = app.add_subcommand("compare", "Compare sketch variants at equal state size");
  compare->add_option("--input,-i", cmp_in, "Tensor")->required()->check(CLI::ExistingFile);
  compare->add_option("--rate", cmp_rate, "State elements per weight")->check(CLI::PositiveNumber);
  compare->add_option("--rows", cmp_rows, "Sketch rows")->check(CLI::Range(1, 255));
  compare->add_option("--seed", cmp_seed, "Hash seed");
  compare->add_flag("--test-hash", cmp_test_hash, "Identity hash");

  std::string imp_in, imp_out;
  std::size_t imp_buckets = 0;
  auto* importance = app.add_subcommand("importance", "Channel importance from activations");
  importance->add_option("--activations", imp_in, "[N, d] activation tensor")
      ->required()
      ->check(CLI::ExistingFile);
  importance->add_option("--output,-o", imp_out, "Write scores as a 1-D tensor");
  importance->add_option("--buckets", imp_buckets, "Collapse scores into this many size classes");

  std::string ft_mode = "ste";
  DemoScenario ft;
  auto* finetune = app.add_subcommand("demo-finetune", "Toy finetuning under fake compression");
  finetune->add_option("--mode", ft_mode, "ste | aggregated | uncompressed");
  finetune->add_option("--steps", ft.steps, "Training steps")->check(CLI::PositiveNumber);
  finetune->add_option("--seed", ft.seed, "Scenario seed");
  finetune->add_option("--lr", ft.learning_rate, "Initial learning rate")->check(CLI::PositiveNumber);
  finetune->add_option("--rate", ft.rate, "State elements per weight")->check(CLI::PositiveNumber);
  finetune->add_option("--rows", ft.ste_rows, "Rows of the multi-row sketch")->check(CLI::Range(1, 255));
  finetune->add_option("--hidden", ft.hidden, "Hidden width")->check(CLI::PositiveNumber);
  finetune->add_option("--pretrain-steps", ft.pretrain_steps, "Steps before compression")
      ->check(CLI::PositiveNumber);
  finetune->add_option("--batch", ft.batch_size, "Batch size")->check(CLI::PositiveNumber);

  std::vector<std::uint64_t> mem_layers, mem_sketches;
  auto* memest = app.add_subcommand("memest", "Peak memory of layer-by-layer decompression");
  memest->add_option("--layers", mem_layers, "Layer sizes in bytes")->required()->delimiter(',');
  memest->add_option("--sketches", mem_sketches, "Sketch sizes in bytes")->required()->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return e.get_exit_code() != 0 ? e.get_exit_code() : 2;
  }

  try {
    if (*compress) do_compress(ca, out);
    if (*decompress) write_tensor(dec_out, decompress_container(read_sketch(dec_in)));
    if (*stats) do_stats(st_orig, st_sketch, st_json, out);
    if (*bound) do_bound(ba, out);
    if (*compare) do_compare(cmp_in, cmp_rate, cmp_rows, cmp_seed, cmp_test_hash, out);
    if (*importance) do_importance(imp_in, imp_out, imp_buckets, out);
    if (*finetune) do_finetune(ft_mode, ft, out);
    if (*memest) do_memest(mem_layers, mem_sketches, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace wsketch::cli
