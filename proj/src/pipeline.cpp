#include "ldon/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

#include "ldon/error.hpp"
#include "ldon/metrics.hpp"

namespace ldon {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Tensor matrix_tensor(const Matrix& m) {
  return Tensor({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())},
                std::vector<double>(m.data(), m.data() + m.size()));
}

Matrix tensor_matrix(const Tensor& t) {
  if (t.rank() != 2) throw ArtifactError("expected a rank-2 tensor, got " + shape_str(t.shape()));
  Matrix m(static_cast<Eigen::Index>(t.extent(0)), static_cast<Eigen::Index>(t.extent(1)));
  std::copy(t.data().begin(), t.data().end(), m.data());
  return m;
}

Tensor vector_tensor(const std::vector<double>& v) { return Tensor({v.size()}, v); }

std::vector<double> tensor_vector(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

std::vector<std::size_t> split_sizes(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(std::stoull(item));
  return out;
}

using Manifest = std::map<std::string, std::string>;

const std::string& need(const Manifest& m, const std::string& key) {
  auto it = m.find(key);
  if (it == m.end()) throw ArtifactError("manifest lacks '" + key + "'");
  return it->second;
}

std::size_t need_size(const Manifest& m, const std::string& key) {
  try {
    return std::stoull(need(m, key));
  } catch (const std::logic_error&) {
    throw ArtifactError("manifest entry '" + key + "' is not an integer");
  }
}

void expect_kind(const TensorContainer& c, const std::string& kind) {
  const auto got = artifact_kind(c);
  if (got != kind) throw ArtifactError("expected a " + kind + " artifact, found '" + got + "'");
}

void store_params(TensorContainer& c, const ParamStore& store) {
  for (const auto& p : store.params()) c.add("param." + p.name, p.value);
}

void load_params(const TensorContainer& c, ParamStore& store) {
  for (auto& p : store.params()) {
    const auto& t = c.get("param." + p.name);
    if (t.shape() != p.value.shape()) {
      throw ArtifactError("parameter '" + p.name + "' has shape " + shape_str(t.shape()) + ", expected " +
                          shape_str(p.value.shape()));
    }
    p.value = t;
  }
}

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::sine: return "sine";
  }
  return "identity";
}

Activation activation_from(const std::string& s) {
  if (s == "identity") return Activation::identity;
  if (s == "relu") return Activation::relu;
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "sine") return Activation::sine;
  throw ArtifactError("unknown activation '" + s + "'");
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

Matrix normalize(const Matrix& m, const MinMax& n) {
  return m.unaryExpr([&](double v) { return n.normalize(v); });
}

Matrix denormalize(const Matrix& m, const MinMax& n) {
  return m.unaryExpr([&](double v) { return n.denormalize(v); });
}

// [N, m_t*points] shares its row-major layout with [N*m_t, points].
Matrix encode_trajectories(const ReducerModel& r, const Matrix& normalized, std::size_t mt) {
  const Eigen::Index pts = normalized.cols() / static_cast<Eigen::Index>(mt);
  Matrix slices = Eigen::Map<const Matrix>(normalized.data(), normalized.rows() * static_cast<Eigen::Index>(mt), pts);
  const Matrix z = r.encode(slices);
  return Eigen::Map<const Matrix>(z.data(), normalized.rows(), static_cast<Eigen::Index>(mt) * z.cols());
}

std::size_t reducer_parameters(const ReducerModel& r) {
  if (r.kind == ReducerKind::mlae) return r.params.scalar_count();
  return static_cast<std::size_t>(r.basis.size() + r.mean.size());
}

}  // namespace

std::string operator_name(OperatorKind k) {
  switch (k) {
    case OperatorKind::latent: return "latent";
    case OperatorKind::full: return "full";
    case OperatorKind::fno: return "fno";
  }
  return "";
}

std::string report_json(const RunReport& r) {
  nlohmann::ordered_json j;
  j["config_hash"] = r.config_hash;
  j["model"] = r.model;
  j["reducer"] = r.reducer;
  j["d"] = r.d;
  j["seed"] = r.seed;
  j["train_loss"] = r.train_loss;
  j["reducer_loss"] = r.reducer_loss;
  auto& v = j["validation_mse"] = nlohmann::ordered_json::array();
  for (const auto& [epoch, mse] : r.validation_mse) v.push_back({{"epoch", epoch}, {"mse", mse}});
  j["latent_mse"] = r.latent_mse ? nlohmann::ordered_json(*r.latent_mse) : nlohmann::ordered_json(nullptr);
  j["decoded_mse"] = r.decoded_mse;
  j["seconds"] = r.seconds;
  j["parameters"] = r.parameters;
  j["warnings"] = r.warnings;
  return j.dump(2) + "\n";
}

std::string artifact_kind(const TensorContainer& c) {
  const auto m = parse_manifest(c.manifest);
  auto it = m.find("kind");
  return it == m.end() ? std::string() : it->second;
}

// ---------------------------------------------------------------------------

TensorContainer to_container(const FieldDataset& ds) {
  ds.validate();
  TensorContainer c;
  c.add("inputs", matrix_tensor(ds.inputs));
  c.add("outputs", matrix_tensor(ds.outputs));
  c.add("zeta", vector_tensor(ds.zeta));
  c.add("normalization", Tensor({4}, {ds.input_norm.min, ds.input_norm.max, ds.output_norm.min, ds.output_norm.max}));
  c.manifest = format_manifest({{"kind", "dataset"},
                                {"nx", std::to_string(ds.nx)},
                                {"ny", std::to_string(ds.ny)},
                                {"m_t", std::to_string(ds.m_t)},
                                {"n_train", std::to_string(ds.n_train)}});
  return c;
}

FieldDataset dataset_from_container(const TensorContainer& c) {
  expect_kind(c, "dataset");
  const auto m = parse_manifest(c.manifest);
  FieldDataset ds;
  ds.nx = need_size(m, "nx");
  ds.ny = need_size(m, "ny");
  ds.m_t = need_size(m, "m_t");
  ds.n_train = need_size(m, "n_train");
  ds.inputs = tensor_matrix(c.get("inputs"));
  ds.outputs = tensor_matrix(c.get("outputs"));
  ds.zeta = tensor_vector(c.get("zeta"));
  const auto norm = tensor_vector(c.get("normalization"));
  if (norm.size() != 4) throw ArtifactError("dataset normalization must hold 4 values");
  ds.input_norm = {norm[0], norm[1]};
  ds.output_norm = {norm[2], norm[3]};
  try {
    ds.validate();
  } catch (const ShapeError& e) {
    throw ArtifactError(std::string("inconsistent dataset artifact: ") + e.what());
  }
  return ds;
}

TensorContainer to_container(const ReducerModel& r) {
  TensorContainer c;
  Manifest m{{"kind", "reducer"},
             {"reducer", r.kind == ReducerKind::mlae ? "mlae" : "pca"},
             {"d", std::to_string(r.latent_dim)},
             {"input_dim", std::to_string(r.input_dim)}};
  if (r.kind == ReducerKind::mlae) {
    m["widths"] = join_sizes(r.widths);
    store_params(c, r.params);
  } else {
    c.add("mean", Tensor({static_cast<std::size_t>(r.mean.size())},
                         std::vector<double>(r.mean.data(), r.mean.data() + r.mean.size())));
    c.add("basis", matrix_tensor(r.basis));
  }
  if (!r.training_log.empty()) c.add("training_log", vector_tensor(r.training_log));
  c.manifest = format_manifest(m);
  return c;
}

ReducerModel reducer_from_container(const TensorContainer& c) {
  expect_kind(c, "reducer");
  const auto m = parse_manifest(c.manifest);
  ReducerModel r;
  r.latent_dim = need_size(m, "d");
  r.input_dim = need_size(m, "input_dim");
  const auto& kind = need(m, "reducer");
  if (kind == "mlae") {
    r.kind = ReducerKind::mlae;
    r.widths = split_sizes(need(m, "widths"));
    if (r.widths.size() < 2) throw ArtifactError("reducer widths list too short");
    const std::size_t half = r.widths.size() - 1;
    // Shapes only; the values are overwritten below.
    for (std::size_t i = 0; i < half; ++i) {
      r.params.add("ae" + std::to_string(i) + ".w", Tensor::zeros({r.widths[i], r.widths[i + 1]}));
      r.params.add("ae" + std::to_string(i) + ".b", Tensor::zeros({r.widths[i + 1]}));
    }
    for (std::size_t i = 0; i < half; ++i) {
      r.params.add("ae" + std::to_string(half + i) + ".w", Tensor::zeros({r.widths[half - i], r.widths[half - i - 1]}));
      r.params.add("ae" + std::to_string(half + i) + ".b", Tensor::zeros({r.widths[half - i - 1]}));
    }
    load_params(c, r.params);
  } else if (kind == "pca") {
    r.kind = ReducerKind::pca;
    const auto mean = tensor_vector(c.get("mean"));
    r.mean = Eigen::Map<const Vector>(mean.data(), static_cast<Eigen::Index>(mean.size()));
    r.basis = tensor_matrix(c.get("basis"));
    if (static_cast<std::size_t>(r.basis.rows()) != r.input_dim ||
        static_cast<std::size_t>(r.basis.cols()) != r.latent_dim || mean.size() != r.input_dim) {
      throw ArtifactError("pca basis does not match the manifest sizes");
    }
  } else {
    throw ArtifactError("unknown reducer kind '" + kind + "'");
  }
  if (c.contains("training_log")) r.training_log = tensor_vector(c.get("training_log"));
  return r;
}

TensorContainer to_container(const DeepOnetModel& model) {
  const auto& cfg = model.config();
  TensorContainer c;
  store_params(c, model.params());
  const auto& bn = model.batch_norm();
  for (std::size_t i = 0; i < bn.size(); ++i) {
    if (!bn[i].initialized) continue;
    c.add("bn" + std::to_string(i) + ".mean", vector_tensor(bn[i].mean));
    c.add("bn" + std::to_string(i) + ".var", vector_tensor(bn[i].var));
  }
  c.manifest = format_manifest({{"kind", "deeponet"},
                                {"mode", cfg.mode == DeepOnetMode::latent ? "latent" : "full"},
                                {"branch", cfg.branch == BranchKind::conv ? "conv" : "dense"},
                                {"p", std::to_string(cfg.p)},
                                {"input_rows", std::to_string(cfg.input_rows)},
                                {"input_cols", std::to_string(cfg.input_cols)},
                                {"output_dim", std::to_string(cfg.output_dim)},
                                {"conv_filters", join_sizes(cfg.conv_filters)},
                                {"dense_width", std::to_string(cfg.dense_width)},
                                {"trunk_width", std::to_string(cfg.trunk_width)},
                                {"trunk_layers", std::to_string(cfg.trunk_layers)},
                                {"seed", std::to_string(cfg.seed)}});
  return c;
}

DeepOnetModel deeponet_from_container(const TensorContainer& c) {
  expect_kind(c, "deeponet");
  const auto m = parse_manifest(c.manifest);
  DeepOnetConfig cfg;
  cfg.mode = need(m, "mode") == "latent" ? DeepOnetMode::latent : DeepOnetMode::full;
  cfg.branch = need(m, "branch") == "conv" ? BranchKind::conv : BranchKind::dense;
  cfg.p = need_size(m, "p");
  cfg.input_rows = need_size(m, "input_rows");
  cfg.input_cols = need_size(m, "input_cols");
  cfg.output_dim = need_size(m, "output_dim");
  cfg.conv_filters = split_sizes(need(m, "conv_filters"));
  cfg.dense_width = need_size(m, "dense_width");
  cfg.trunk_width = need_size(m, "trunk_width");
  cfg.trunk_layers = need_size(m, "trunk_layers");
  cfg.seed = need_size(m, "seed");
  DeepOnetModel model(cfg);
  load_params(c, model.params());
  auto& bn = model.batch_norm();
  for (std::size_t i = 0; i < bn.size(); ++i) {
    const std::string name = "bn" + std::to_string(i);
    if (!c.contains(name + ".mean")) continue;
    bn[i].mean = tensor_vector(c.get(name + ".mean"));
    bn[i].var = tensor_vector(c.get(name + ".var"));
    if (bn[i].mean.size() != cfg.conv_filters[i] || bn[i].var.size() != cfg.conv_filters[i]) {
      throw ArtifactError("batch-norm statistics for layer " + std::to_string(i) + " have the wrong width");
    }
    bn[i].initialized = true;
  }
  return model;
}

TensorContainer to_container(const FnoModel& model) {
  const auto& cfg = model.config();
  TensorContainer c;
  store_params(c, model.params());
  c.manifest = format_manifest({{"kind", "fno"},
                                {"width", std::to_string(cfg.width)},
                                {"layers", std::to_string(cfg.layers)},
                                {"modes", std::to_string(cfg.modes)},
                                {"activation", activation_name(cfg.activation)},
                                {"nx", std::to_string(model.nx())},
                                {"ny", std::to_string(model.ny())},
                                {"seed", std::to_string(cfg.seed)}});
  return c;
}

FnoModel fno_from_container(const TensorContainer& c) {
  expect_kind(c, "fno");
  const auto m = parse_manifest(c.manifest);
  FnoConfig cfg;
  cfg.width = need_size(m, "width");
  cfg.layers = need_size(m, "layers");
  cfg.modes = need_size(m, "modes");
  cfg.activation = activation_from(need(m, "activation"));
  cfg.seed = need_size(m, "seed");
  FnoModel model(cfg, need_size(m, "nx"), need_size(m, "ny"));
  load_params(c, model.params());
  return model;
}

// ---------------------------------------------------------------------------

FieldDataset generate_dataset(const ExperimentConfig& cfg) { return generate_diffusion_dataset(cfg.data); }

ReducerModel fit_reducer(const ExperimentConfig& cfg, const FieldDataset& ds, std::size_t d, std::uint64_t seed) {
  const auto snaps = assemble_snapshots(ds, SnapshotMode::combined);
  if (cfg.reducer_kind == ReducerKind::pca) return fit_pca(snaps, d);
  MlaeConfig mc;
  mc.latent_dim = d;
  mc.epochs = cfg.reducer_epochs;
  mc.batch_size = cfg.reducer_batch;
  mc.learning_rate = cfg.reducer_lr;
  mc.seed = seed;
  return fit_mlae(snaps, mc);
}

DeepOnetModel make_full_deeponet(const ExperimentConfig& cfg, std::uint64_t seed) {
  auto dc = full_deeponet_config(cfg.data.grf.nx, cfg.data.grf.ny, cfg.operator_p, seed);
  if (cfg.operator_branch == "dense") dc.branch = BranchKind::dense;
  return DeepOnetModel(dc);
}

DeepOnetModel make_latent_deeponet(const ExperimentConfig& cfg, std::size_t d, std::uint64_t seed,
                                   std::vector<std::string>* warnings) {
  auto dc = latent_deeponet_config(d, cfg.operator_p, seed, warnings);
  if (cfg.operator_branch == "dense" && dc.branch == BranchKind::conv) {
    dc.branch = BranchKind::dense;
    dc.input_rows = 1;
    dc.input_cols = d;
  }
  DeepOnetModel latent(dc);
  const std::size_t full = make_full_deeponet(cfg, seed).parameter_count();
  if (latent.parameter_count() >= full) {
    throw ShapeError("latent DeepONet has " + std::to_string(latent.parameter_count()) +
                     " parameters, not fewer than the full model's " + std::to_string(full));
  }
  return latent;
}

FnoModel make_fno(const ExperimentConfig& cfg, std::uint64_t seed) {
  FnoConfig fc;
  fc.width = cfg.fno_width;
  fc.layers = cfg.fno_layers;
  fc.modes = cfg.fno_modes;
  fc.seed = seed;
  return FnoModel(fc, cfg.data.grf.nx, cfg.data.grf.ny);
}

Matrix predict_rows(const TrainedOperator& op, const FieldDataset& ds, std::size_t begin, std::size_t end) {
  if (begin >= end || end > ds.samples()) throw ShapeError("predict_rows: invalid row range");
  const Matrix raw = ds.inputs.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin));
  switch (op.kind) {
    case OperatorKind::latent:
      return l_deeponet_predict(*op.reducer, *op.deeponet, raw, ds.zeta, ds.input_norm, ds.output_norm);
    case OperatorKind::full:
      return denormalize(op.deeponet->predict(normalize(raw, ds.input_norm), ds.zeta), ds.output_norm);
    case OperatorKind::fno:
      return denormalize(op.fno->rollout(normalize(raw, ds.output_norm), ds.m_t), ds.output_norm);
  }
  return {};
}

TrainedOperator train_operator(const ExperimentConfig& cfg, const FieldDataset& ds, OperatorKind kind, std::size_t d,
                               std::uint64_t seed, std::shared_ptr<ReducerModel> reducer) {
  ds.validate();
  TrainedOperator op;
  op.kind = kind;
  auto& rep = op.report;
  rep.config_hash = config_hash(cfg);
  rep.model = operator_name(kind);
  rep.seed = seed;

  const auto ntr = static_cast<Eigen::Index>(ds.n_train);
  std::size_t eval_begin = ds.n_train;
  if (ds.n_test() == 0) {
    eval_begin = 0;
    rep.warnings.push_back("dataset has no test split; metrics use the training rows");
  }
  const auto eval_rows = static_cast<Eigen::Index>(ds.samples() - eval_begin);

  TrainOptions opts;
  opts.epochs = kind == OperatorKind::fno ? cfg.fno_epochs : cfg.operator_epochs;
  opts.batch_size = kind == OperatorKind::fno ? cfg.fno_batch : cfg.operator_batch;
  opts.learning_rate = kind == OperatorKind::fno ? cfg.fno_lr : cfg.operator_lr;
  opts.seed = seed;
  opts.validate_every = cfg.validate_every;
  const Matrix eval_truth = ds.outputs.bottomRows(eval_rows);
  opts.validate = [&] { return evaluate_mse(predict_rows(op, ds, eval_begin, ds.samples()), eval_truth); };

  TrainLog log;
  if (kind == OperatorKind::latent) {
    rep.d = d;
    if (!reducer) {
      const auto t0 = Clock::now();
      reducer = std::make_shared<ReducerModel>(fit_reducer(cfg, ds, d, seed));
      rep.seconds["reducer"] = since(t0);
    } else if (reducer->latent_dim != d) {
      throw ShapeError("reducer has d=" + std::to_string(reducer->latent_dim) + ", operator expects d=" +
                       std::to_string(d));
    }
    op.reducer = reducer;
    rep.reducer = reducer->kind == ReducerKind::mlae ? "mlae" : "pca";
    rep.reducer_loss = reducer->training_log;
    rep.parameters["reducer"] = reducer_parameters(*reducer);

    auto t0 = Clock::now();
    const Matrix xin = reducer->encode(ds.normalized_inputs());
    const Matrix yout = encode_trajectories(*reducer, ds.normalized_outputs(), ds.m_t);
    rep.seconds["encode"] = since(t0);

    op.deeponet = std::make_shared<DeepOnetModel>(make_latent_deeponet(cfg, d, seed, &rep.warnings));
    rep.parameters["operator"] = op.deeponet->parameter_count();
    rep.parameters["full_operator_reference"] = make_full_deeponet(cfg, seed).parameter_count();
    log = train_deeponet(*op.deeponet, {xin.topRows(ntr), yout.topRows(ntr), ds.zeta}, opts);
    rep.latent_mse =
        evaluate_mse(op.deeponet->predict(xin.bottomRows(eval_rows), ds.zeta), yout.bottomRows(eval_rows));
  } else if (kind == OperatorKind::full) {
    op.deeponet = std::make_shared<DeepOnetModel>(make_full_deeponet(cfg, seed));
    rep.parameters["operator"] = op.deeponet->parameter_count();
    const Matrix xin = ds.normalized_inputs().topRows(ntr);
    const Matrix yout = ds.normalized_outputs().topRows(ntr);
    log = train_deeponet(*op.deeponet, {xin, yout, ds.zeta}, opts);
  } else {
    op.fno = std::make_shared<FnoModel>(make_fno(cfg, seed));
    rep.parameters["operator"] = op.fno->parameter_count();
    const Matrix u0 = normalize(ds.inputs.topRows(ntr), ds.output_norm);
    const Matrix traj = ds.normalized_outputs().topRows(ntr);
    log = train_fno(*op.fno, u0, traj, opts);
  }
  rep.train_loss = log.epoch_loss;
  rep.validation_mse = log.validation;
  rep.seconds["operator"] = log.seconds;

  const auto t0 = Clock::now();
  rep.decoded_mse = evaluate_mse(predict_rows(op, ds, eval_begin, ds.samples()), eval_truth);
  rep.seconds["evaluate"] = since(t0);
  return op;
}

// ---------------------------------------------------------------------------

std::size_t thread_budget() {
  if (const char* env = std::getenv("LDON_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) throw ConfigError(std::string("LDON_THREADS must be a positive integer, got '") + env + "'");
    return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<CompareRow> run_compare(const ExperimentConfig& cfg, const FieldDataset& ds, std::size_t threads) {
  struct Job {
    OperatorKind kind;
    std::size_t d;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const auto& name : cfg.compare_models) {
    const OperatorKind kind = name == "latent" ? OperatorKind::latent : name == "full" ? OperatorKind::full : OperatorKind::fno;
    const std::vector<std::size_t> ds_list = kind == OperatorKind::latent ? cfg.compare_d : std::vector<std::size_t>{0};
    for (auto d : ds_list) {
      for (auto seed : cfg.seeds) jobs.push_back({kind, d, seed});
    }
  }

  std::vector<CompareRow> rows(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        const auto& job = jobs[i];
        auto op = train_operator(cfg, ds, job.kind, job.d, job.seed);
        auto& row = rows[i];
        row.model = operator_name(job.kind);
        row.d = job.d;
        row.seed = job.seed;
        row.mse = op.report.decoded_mse;
        row.seconds = op.report.seconds.at("operator");
        row.parameters = op.report.parameters.at("operator");
        row.report = std::move(op.report);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min(threads, jobs.size()));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return rows;
}

std::string compare_csv(const std::vector<CompareRow>& rows) {
  std::string out = "model,d,seed,mse,wallclock\n";
  for (const auto& r : rows) {
    out += r.model + "," + (r.model == "latent" ? std::to_string(r.d) : "") + "," + std::to_string(r.seed) + "," +
           format_real(r.mse) + "," + format_real(r.seconds) + "\n";
  }
  return out;
}

std::string compare_mse_csv(const std::vector<CompareRow>& rows) {
  std::string out = "model,d,seed,mse,params\n";
  for (const auto& r : rows) {
    out += r.model + "," + (r.model == "latent" ? std::to_string(r.d) : "") + "," + std::to_string(r.seed) + "," +
           format_real(r.mse) + "," + std::to_string(r.parameters) + "\n";
  }
  return out;
}

std::string export_csv(const TensorContainer& c) {
  std::string out = "tensor,index,value\n";
  for (const auto& [k, v] : parse_manifest(c.manifest)) {
    out += std::string(kManifestName) + "," + csv_field(k) + "," + csv_field(v) + "\n";
  }
  for (const auto& [name, t] : c.tensors) {
    auto data = t.data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      out += csv_field(name) + "," + std::to_string(i) + "," + format_real(data[i]) + "\n";
    }
  }
  return out;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw ArtifactError("cannot open " + tmp.string() + " for writing");
    f << text;
    if (!f) throw ArtifactError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace ldon
