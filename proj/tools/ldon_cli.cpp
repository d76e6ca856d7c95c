// ldon: command-line driver for the latent DeepONet experiment.
//
//   ldon gen-data        --config exp.cfg --out run/
//   ldon fit-reducer     --config exp.cfg --out run/
//   ldon train-operator  --config exp.cfg --out run/ [--seed 3]
//   ldon evaluate        --config exp.cfg --out run/
//   ldon compare         --config exp.cfg --out run/
//   ldon export run/operator.ldon
//
// Exit status: 0 ok, 2 configuration error, 3 missing or unreadable
// artifact, 4 numerical failure.

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>

#include "ldon/error.hpp"
#include "ldon/metrics.hpp"
#include "ldon/pipeline.hpp"

namespace fs = std::filesystem;
using namespace ldon;

namespace {

struct Options {
  std::string config;
  std::vector<std::string> overrides;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  std::string artifact;
};

struct Context {
  ExperimentConfig cfg;
  fs::path out;
  std::uint64_t seed = 0;
  bool quiet = false;

  void log(const std::string& msg) const {
    if (!quiet) std::cerr << "ldon: " << msg << "\n";
  }
  fs::path path(const std::string& name) const { return out / name; }
};

Context make_context(const Options& o) {
  Context ctx;
  if (!o.config.empty()) ctx.cfg = load_config(o.config);
  for (const auto& s : o.overrides) apply_override(ctx.cfg, s);
  if (!o.out.empty()) ctx.cfg.output_dir = o.out;
  if (o.seed) ctx.cfg.seeds = {*o.seed};
  ctx.cfg.validate();
  ctx.out = ctx.cfg.output_dir;
  ctx.seed = ctx.cfg.seeds.front();
  ctx.quiet = o.quiet;
  for (const auto& w : ctx.cfg.warnings) ctx.log("warning: " + w);
  return ctx;
}

void gen_data(const Context& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto ds = generate_dataset(ctx.cfg);
  write_tensor_container(ctx.path("dataset.ldon"), to_container(ds));
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ctx.log("wrote " + ctx.path("dataset.ldon").string() + " (" + std::to_string(ds.samples()) + " samples, " +
          std::to_string(s) + " s)");
}

void fit_reducer_cmd(const Context& ctx) {
  const auto ds = dataset_from_container(read_tensor_container(ctx.path("dataset.ldon")));
  const auto r = fit_reducer(ctx.cfg, ds, ctx.cfg.reducer_d, ctx.seed);
  write_tensor_container(ctx.path("reducer.ldon"), to_container(r));
  const auto snaps = assemble_snapshots(ds, SnapshotMode::combined);
  ctx.log("wrote " + ctx.path("reducer.ldon").string() + " (reconstruction MSE " +
          format_real(reconstruction_mse(r, snaps.rows)) + ")");
}

void train_operator_cmd(const Context& ctx) {
  const auto ds = dataset_from_container(read_tensor_container(ctx.path("dataset.ldon")));
  std::shared_ptr<ReducerModel> reducer;
  if (ctx.cfg.operator_kind == OperatorKind::latent) {
    reducer = std::make_shared<ReducerModel>(reducer_from_container(read_tensor_container(ctx.path("reducer.ldon"))));
  }
  const std::size_t d = reducer ? reducer->latent_dim : 0;
  auto op = train_operator(ctx.cfg, ds, ctx.cfg.operator_kind, d, ctx.seed, reducer);
  for (const auto& w : op.report.warnings) ctx.log("warning: " + w);
  const TensorContainer c = op.fno ? to_container(*op.fno) : to_container(*op.deeponet);
  write_tensor_container(ctx.path("operator.ldon"), c);
  write_text_atomic(ctx.path("report.json"), report_json(op.report));
  ctx.log("wrote " + ctx.path("operator.ldon").string() + " (test MSE " + format_real(op.report.decoded_mse) + ")");
}

void evaluate_cmd(const Context& ctx) {
  const auto ds = dataset_from_container(read_tensor_container(ctx.path("dataset.ldon")));
  const auto c = read_tensor_container(ctx.path("operator.ldon"));
  TrainedOperator op;
  std::size_t d = 0;
  std::uint64_t seed = 0;
  if (artifact_kind(c) == "fno") {
    op.kind = OperatorKind::fno;
    op.fno = std::make_shared<FnoModel>(fno_from_container(c));
    seed = op.fno->config().seed;
  } else {
    op.deeponet = std::make_shared<DeepOnetModel>(deeponet_from_container(c));
    seed = op.deeponet->config().seed;
    if (op.deeponet->config().mode == DeepOnetMode::latent) {
      op.kind = OperatorKind::latent;
      op.reducer = std::make_shared<ReducerModel>(reducer_from_container(read_tensor_container(ctx.path("reducer.ldon"))));
      d = op.reducer->latent_dim;
    } else {
      op.kind = OperatorKind::full;
    }
  }
  std::string csv = "model,d,seed,split,mse\n";
  const auto row = [&](const std::string& split, std::size_t begin, std::size_t end) {
    const Matrix truth = ds.outputs.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin));
    const double mse = evaluate_mse(predict_rows(op, ds, begin, end), truth);
    csv += operator_name(op.kind) + "," + (d ? std::to_string(d) : "") + "," + std::to_string(seed) + "," + split +
           "," + format_real(mse) + "\n";
    ctx.log(split + " MSE " + format_real(mse));
  };
  row("train", 0, ds.n_train);
  if (ds.n_test() > 0) row("test", ds.n_train, ds.samples());
  write_text_atomic(ctx.path("evaluate.csv"), csv);
}

void compare_cmd(const Context& ctx) {
  const auto ds = generate_dataset(ctx.cfg);
  const auto rows = run_compare(ctx.cfg, ds, thread_budget());
  for (const auto& r : rows) {
    const std::string tag = r.model + (r.model == "latent" ? "_d" + std::to_string(r.d) : "") + "_seed" +
                            std::to_string(r.seed);
    write_text_atomic(ctx.path("reports/" + tag + ".json"), report_json(r.report));
    ctx.log(tag + ": MSE " + format_real(r.mse) + ", " + format_real(r.seconds) + " s");
  }
  write_text_atomic(ctx.path("compare.csv"), compare_csv(rows));
  write_text_atomic(ctx.path("compare_mse.csv"), compare_mse_csv(rows));
}

void export_cmd(const Options& o) {
  const fs::path src = o.artifact;
  const auto c = read_tensor_container(src);
  fs::path dst = src;
  dst += ".csv";
  write_text_atomic(dst, export_csv(c));
  if (!o.quiet) std::cerr << "ldon: wrote " << dst.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent DeepONet experiment driver"};
  app.require_subcommand(1);
  Options o;
  auto common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config, "key = value configuration file");
    sub->add_option("--set", o.overrides, "override one key (key=value); repeatable")->take_all();
    sub->add_option("--out", o.out, "output directory (overrides output.dir)");
    sub->add_option("--seed", o.seed, "run a single seed");
    sub->add_flag("--quiet", o.quiet, "suppress progress messages");
  };
  auto* gen = app.add_subcommand("gen-data", "generate the diffusion dataset");
  auto* fit = app.add_subcommand("fit-reducer", "fit the dimension reducer on the dataset");
  auto* train = app.add_subcommand("train-operator", "train the configured operator");
  auto* eval = app.add_subcommand("evaluate", "write train/test MSE of the trained operator");
  auto* cmp = app.add_subcommand("compare", "run the model x seed comparison matrix");
  auto* exp = app.add_subcommand("export", "dump an artifact to CSV");
  for (auto* s : {gen, fit, train, eval, cmp}) common(s);
  exp->add_option("artifact", o.artifact, "container file")->required();
  exp->add_flag("--quiet", o.quiet, "suppress progress messages");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (exp->parsed()) {
      export_cmd(o);
      return 0;
    }
    const Context ctx = make_context(o);
    if (gen->parsed()) gen_data(ctx);
    if (fit->parsed()) fit_reducer_cmd(ctx);
    if (train->parsed()) train_operator_cmd(ctx);
    if (eval->parsed()) evaluate_cmd(ctx);
    if (cmp->parsed()) compare_cmd(ctx);
  } catch (const MissingArtifact& e) {
    std::cerr << "ldon: " << e.what() << " (run the producing subcommand first)\n";
    return 3;
  } catch (const ArtifactError& e) {
    std::cerr << "ldon: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "ldon: numeric failure: " << e.what() << "\n";
    return 4;
  } catch (const ConfigError& e) {
    std::cerr << "ldon: config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "ldon: invalid configuration: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "ldon: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
