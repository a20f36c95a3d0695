#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "tpr/analysis.hpp"
#include "tpr/encodings.hpp"
#include "tpr/errors.hpp"
#include "tpr/interventions.hpp"
#include "tpr/io.hpp"
#include "tpr/probes.hpp"

namespace tpr::cli {
namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;
namespace iv = interventions;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_text(const std::string& path, const std::string& text) {
  io::atomic_write(path, [&](std::ostream& os) { os << text; });
}

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::string with_extension(const std::string& path, const char* ext) {
  fs::path p(path);
  p.replace_extension(ext);
  return p.string();
}

json to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json edits_json(const std::vector<othello::Edit>& edits) {
  json a = json::array();
  for (const auto& e : edits) {
    a.push_back({{"square", e.square.token()}, {"from", othello::to_string(e.from)}, {"to", othello::to_string(e.to)}});
  }
  return a;
}

json moves_json(iv::MoveSet m) {
  json a = json::array();
  for (const auto& s : m.squares()) a.push_back(s.token());
  return a;
}

Dataset load_dataset(const std::string& path) { return read_dataset(path); }

// --------------------------------------------------------------------------
// gen-data

struct GenDataOpts {
  std::string source = "random-coding";
  int d_model = 512;
  std::size_t train = 50'000;
  std::size_t val = 512;
  std::size_t test = 1'000;
  std::uint64_t seed = 0;
  int layer = 0;
  std::string out;
};

json cmd_gen_data(const GenDataOpts& o) {
  const auto src = parse_source(o.source);
  if (!src || *src == Source::External) throw UsageError("--source must be random-coding or ood");
  if (o.d_model < 1) throw UsageError("--d-model must be positive");
  const auto book = RandomCodingBook::generate(o.d_model, o.seed);
  DatasetSplits splits = build_dataset(*src, book, {o.train, o.val, o.test}, o.seed);
  fs::create_directories(o.out);

  json config = {{"source", o.source}, {"d_model", o.d_model}, {"train", o.train}, {"val", o.val},
                 {"test", o.test},     {"seed", o.seed},       {"layer", o.layer}, {"out", o.out}};
  json files = json::object(), counts = json::object();
  for (auto* d : {&splits.train, &splits.val, &splits.test}) {
    d->layer = o.layer;
    const std::string name = to_string(d->split);
    const std::string path = (fs::path(o.out) / (name + ".tprds")).string();
    write_dataset(path, *d);
    files[name] = path;
    counts[name] = d->size();
  }
  json summary = {{"command", "gen-data"}, {"config", config}, {"codebook_seed", o.seed},
                  {"files", files},        {"counts", counts}};
  write_json((fs::path(o.out) / "gen-data.json").string(), summary);
  return summary;
}

// --------------------------------------------------------------------------
// train / eval

struct TrainOpts {
  std::string probe;
  int dr = 52, df = 2, du = 8, dv = 8;
  std::string data;
  int d_model = 0;
  TrainConfig cfg;
  double init_std = 0.02;
  std::string out;
  std::string metrics;
};

ProbeKind parse_kind(const std::string& s) {
  if (s == "linear") return ProbeKind::Linear;
  if (s == "bilinear") return ProbeKind::Bilinear;
  if (s == "trilinear") return ProbeKind::Trilinear;
  throw UsageError("unknown probe family '" + s + "'");
}

json cmd_train(const TrainOpts& o) {
  const ProbeKind kind = parse_kind(o.probe);
  const fs::path dir(o.data);
  const Dataset train_set = load_dataset((dir / "train.tprds").string());
  const Dataset val_set = load_dataset((dir / "val.tprds").string());
  const Dataset test_set = load_dataset((dir / "test.tprds").string());
  for (const Dataset* d : {&train_set, &val_set, &test_set}) {
    if (d->d_model != train_set.d_model || (o.d_model > 0 && d->d_model != o.d_model)) {
      throw DimensionMismatch("dataset d_model " + std::to_string(d->d_model) + " does not match the requested " +
                              std::to_string(o.d_model > 0 ? o.d_model : train_set.d_model));
    }
  }
  ProbeDims dims{kind, train_set.d_model, 0, 0, 0, 0};
  if (kind == ProbeKind::Bilinear) {
    dims.d_r = o.dr;
    dims.d_f = o.df;
  } else if (kind == ProbeKind::Trilinear) {
    dims.d_u = o.du;
    dims.d_v = o.dv;
    dims.d_f = o.df;
  }
  if (std::min({o.dr, o.df, o.du, o.dv}) < 1) throw UsageError("probe dimensions must be positive");

  const TrainResult r = train(init_probe(dims, o.cfg.seed, o.init_std), train_set, val_set, o.cfg);
  const double acc = accuracy(r.probe, test_set);
  save_probe(o.out, r.probe);

  json config = {{"probe", o.probe},
                 {"d_model", dims.d_model},
                 {"data", o.data},
                 {"out", o.out},
                 {"lr", o.cfg.lr},
                 {"weight_decay", o.cfg.weight_decay},
                 {"batch_size", o.cfg.batch_size},
                 {"epochs", o.cfg.epochs},
                 {"patience", o.cfg.patience},
                 {"validate_every", o.cfg.validate_every},
                 {"seed", o.cfg.seed},
                 {"init_std", o.init_std},
                 {"betas", {o.cfg.beta1, o.cfg.beta2}},
                 {"eps", o.cfg.eps},
                 {"layer", train_set.layer}};
  if (kind == ProbeKind::Bilinear) {
    config["dr"] = o.dr;
    config["df"] = o.df;
  } else if (kind == ProbeKind::Trilinear) {
    config["du"] = o.du;
    config["dv"] = o.dv;
    config["df"] = o.df;
  }
  json validations = json::array();
  for (const auto& v : r.history.validations) {
    validations.push_back({{"step", v.step}, {"loss", v.loss}, {"accuracy", v.accuracy}});
  }
  json metrics = {{"command", "train"},
                  {"config", config},
                  {"test_accuracy", acc},
                  {"param_count", param_count(r.probe)},
                  {"history",
                   {{"steps", r.history.steps},
                    {"best_step", r.history.best_step},
                    {"best_val_loss", r.history.best_val_loss},
                    {"early_stopped", r.history.early_stopped},
                    {"validations", validations},
                    {"train_loss", r.history.train_loss}}}};
  write_json(o.metrics.empty() ? with_extension(o.out, ".json") : o.metrics, metrics);
  return {{"command", "train"}, {"checkpoint", o.out}, {"test_accuracy", acc}, {"param_count", param_count(r.probe)}};
}

struct EvalOpts {
  std::string probe;
  std::string data;
  std::string out;
};

json cmd_eval(const EvalOpts& o) {
  const Probe p = load_probe(o.probe);
  const Dataset d = load_dataset(o.data);
  if (d.d_model != d_model_of(p)) throw DimensionMismatch("dataset and probe differ in d_model");
  json j = {{"command", "eval"},
            {"config", {{"probe", o.probe}, {"data", o.data}, {"out", o.out}}},
            {"kind", to_string(kind_of(p))},
            {"d_model", d.d_model},
            {"n_samples", d.size()},
            {"param_count", param_count(p)},
            {"accuracy", accuracy(p, d)}};
  if (!o.out.empty()) write_json(o.out, j);
  return j;
}

// --------------------------------------------------------------------------
// analyze

struct AnalyzeOpts {
  std::string probe;
  std::string linear;
  std::string tpr;
  std::string data;
  std::string out;
  std::string summary;
  std::string target;
  std::vector<int> ks;
  int dims = 2;
  int neighbors = 8;
  std::uint64_t seed = 0;
};

/// One embedding per square: R for bilinear probes, u_i (x) v_j for
/// trilinear probes.
Eigen::MatrixXd role_matrix(const Probe& p) {
  if (auto* b = std::get_if<BilinearProbe>(&p)) return b->R;
  if (auto* t = std::get_if<TrilinearProbe>(&p)) {
    Eigen::MatrixXd out(64, t->d_u() * t->d_v());
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j)
        for (int a = 0; a < t->d_u(); ++a)
          for (int b = 0; b < t->d_v(); ++b) out(8 * i + j, a * t->d_v() + b) = t->U(i, a) * t->V(j, b);
    return out;
  }
  throw UsageError("this analysis needs a bilinear or trilinear probe");
}

Eigen::MatrixXd embedding(const Probe& p, const std::string& target) {
  if (target == "role") return role_matrix(p);
  if (target == "filler") {
    if (auto* b = std::get_if<BilinearProbe>(&p)) return b->F;
    if (auto* t = std::get_if<TrilinearProbe>(&p)) return t->F;
  }
  if (auto* t = std::get_if<TrilinearProbe>(&p)) {
    if (target == "row") return t->U;
    if (target == "column") return t->V;
  }
  throw UsageError("target '" + target + "' is not available for a " + to_string(kind_of(p)) + " probe");
}

void emit(const AnalyzeOpts& o, const std::string& body, json& summary) {
  write_text(o.out, body);
  write_json(o.summary.empty() ? with_extension(o.out, ".json") : o.summary, summary);
}

json base_summary(const char* metric, const json& config) {
  return {{"command", "analyze"}, {"metric", metric}, {"value", nullptr}, {"config", config}};
}

json cmd_effective(const AnalyzeOpts& o) {
  const Probe p = load_probe(o.probe);
  const LinearProbe eff = analysis::effective_linear_probe(p);
  std::mt19937_64 rng(o.seed);
  std::normal_distribution<double> n(0.0, 1.0);
  double worst = 0;
  for (int t = 0; t < 100; ++t) {
    Eigen::VectorXd h(d_model_of(p));
    for (auto& x : h) x = n(rng);
    const Logits a = linear_forward(eff, h), b = forward(p, h);
    worst = std::max(worst, (a - b).norm() / std::max(b.norm(), 1e-300));
  }
  save_probe(o.out, eff);
  json s = base_summary("effective-probe-max-relative-deviation",
                        {{"probe", o.probe}, {"out", o.out}, {"seed", o.seed}, {"inputs", 100}});
  s["value"] = worst;
  write_json(o.summary.empty() ? with_extension(o.out, ".json") : o.summary, s);
  return s;
}

json cmd_cosine(const AnalyzeOpts& o) {
  const LinearProbe a = analysis::effective_linear_probe(load_probe(o.linear));
  const LinearProbe b = analysis::effective_linear_probe(load_probe(o.tpr));
  const analysis::SquareColorMatrix c = analysis::mean_centered_cosine(a, b);
  json s = base_summary("mean-centered-cosine", {{"linear", o.linear}, {"tpr", o.tpr}, {"out", o.out}});
  s["value"] = c.mean();
  s["min"] = c.minCoeff();
  emit(o, analysis::matrix_csv(c), s);
  return s;
}

json cmd_svd_sweep(const AnalyzeOpts& o) {
  if (o.ks.empty()) throw UsageError("--k needs at least one rank");
  std::vector<int> ks = o.ks;
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  const LinearProbe p = analysis::effective_linear_probe(load_probe(o.probe));
  const Dataset test = load_dataset(o.data);
  if (test.d_model != p.d_model()) throw DimensionMismatch("dataset and probe differ in d_model");

  std::ostringstream csv;
  csv.precision(17);
  csv << "k,params,accuracy,frobenius_error\n";
  json rows = json::array(), violations = json::array();
  bool acc_monotone = true, err_monotone = true;
  double prev_acc = -1, prev_err = INFINITY;
  int prev_k = 0;
  for (int k : ks) {
    const analysis::TruncatedSvd t = analysis::truncated_svd_probe(p, k);
    const double acc = accuracy(t.probe, test);
    csv << k << ',' << t.params << ',' << acc << ',' << t.frobenius_error << '\n';
    rows.push_back({{"k", k}, {"params", t.params}, {"accuracy", acc}, {"frobenius_error", t.frobenius_error}});
    if (acc < prev_acc) {
      acc_monotone = false;
      violations.push_back({{"k_prev", prev_k}, {"k", k}, {"accuracy_prev", prev_acc}, {"accuracy", acc}});
    }
    err_monotone = err_monotone && t.frobenius_error <= prev_err;
    prev_acc = acc;
    prev_err = t.frobenius_error;
    prev_k = k;
  }
  json s = base_summary("svd-sweep", {{"probe", o.probe}, {"data", o.data}, {"k", ks}, {"out", o.out}});
  s["value"] = {{"accuracy_non_decreasing", acc_monotone},
                {"frobenius_non_increasing", err_monotone},
                {"violations", violations}};
  s["rows"] = rows;
  emit(o, csv.str(), s);
  return s;
}

json cmd_knn(const AnalyzeOpts& o) {
  const analysis::KnnReport r = analysis::knn_neighbor_classification(role_matrix(load_probe(o.probe)));
  std::ostringstream csv;
  csv.precision(17);
  csv << "relation,count,fraction\n";
  json fractions = json::object();
  for (int i = 0; i < analysis::kNumRelations; ++i) {
    const auto rel = static_cast<analysis::Relation>(i);
    csv << analysis::to_string(rel) << ',' << r.counts[static_cast<std::size_t>(i)] << ','
        << r.fractions[static_cast<std::size_t>(i)] << '\n';
    fractions[analysis::to_string(rel)] = r.fractions[static_cast<std::size_t>(i)];
  }
  json s = base_summary("knn-neighbor-fractions", {{"probe", o.probe}, {"distance", "cosine"}, {"out", o.out}});
  s["value"] = fractions;
  s["total"] = r.total;
  emit(o, csv.str(), s);
  return s;
}

json cmd_gapsim(const AnalyzeOpts& o) {
  const Eigen::MatrixXd R = role_matrix(load_probe(o.probe));
  const analysis::GapSim g = analysis::gapsim(R);
  json s = base_summary("gapsim-r2", {{"probe", o.probe}, {"out", o.out}});
  s["value"] = analysis::gapsim_r2(R);
  emit(o, analysis::matrix_csv(g.mean), s);
  return s;
}

json cmd_pca(const AnalyzeOpts& o) {
  const Probe p = load_probe(o.probe);
  const std::string target = o.target.empty() ? "filler" : o.target;
  Eigen::MatrixXd X;
  if (target == "binding") {
    if (o.data.empty()) throw UsageError("--target binding needs --data");
    const Dataset d = load_dataset(o.data);
    if (d.d_model != d_model_of(p)) throw DimensionMismatch("dataset and probe differ in d_model");
    const Eigen::MatrixXd H = d.activations.cast<double>();
    if (auto* b = std::get_if<BilinearProbe>(&p)) {
      X = H * b->M.transpose();
    } else if (auto* t = std::get_if<TrilinearProbe>(&p)) {
      X = H * t->M.transpose();
    } else {
      throw UsageError("binding PCA needs a bilinear or trilinear probe");
    }
  } else {
    X = embedding(p, target);
  }
  const analysis::Pca r = analysis::pca(X, o.dims);
  json s = base_summary("pca-explained-variance",
                        {{"probe", o.probe}, {"target", target}, {"data", o.data}, {"dims", o.dims}, {"out", o.out}});
  s["value"] = to_json(r.explained_variance);
  s["variances"] = to_json(r.variances);
  emit(o, analysis::matrix_csv(r.coords), s);
  return s;
}

json cmd_isomap(const AnalyzeOpts& o) {
  const std::string target = o.target.empty() ? "role" : o.target;
  const analysis::Isomap r = analysis::isomap(embedding(load_probe(o.probe), target), o.neighbors, o.dims);
  json s = base_summary("isomap-eigenvalues", {{"probe", o.probe},
                                                {"target", target},
                                                {"neighbors", o.neighbors},
                                                {"dims", o.dims},
                                                {"out", o.out}});
  s["value"] = to_json(r.eigenvalues);
  s["clipped_negative_eigenvalues"] = r.clipped;
  emit(o, analysis::matrix_csv(r.coords), s);
  return s;
}

json cmd_gram(const AnalyzeOpts& o) {
  const std::string target = o.target.empty() ? "role" : o.target;
  const analysis::GramReport r = analysis::gram_report(embedding(load_probe(o.probe), target));
  const Eigen::MatrixXd off = r.gram - Eigen::MatrixXd::Identity(r.gram.rows(), r.gram.cols());
  json s = base_summary("gram-singular-values", {{"probe", o.probe}, {"target", target}, {"out", o.out}});
  s["value"] = to_json(r.singular_values);
  s["max_offdiagonal_deviation"] = off.cwiseAbs().maxCoeff();
  emit(o, analysis::matrix_csv(r.gram), s);
  return s;
}

// --------------------------------------------------------------------------
// intervene

struct InterveneOpts {
  std::string probe;
  int cases = 1000;
  int edits = 1;
  std::vector<double> grid = iv::default_grid();
  std::uint64_t seed = 0;
  std::uint64_t model_seed = 0;
  std::string activations;
  std::string out;
  std::string manifest;
  int layer = 0;
};

json cmd_intervene(const InterveneOpts& o) {
  if (o.cases < 1 || o.edits < 1) throw UsageError("--cases and --edits must be positive");
  for (double g : o.grid) {
    if (!(g > 0)) throw UsageError("--grid values must be positive");
  }
  const Probe p = load_probe(o.probe);
  json config = {{"probe", o.probe}, {"cases", o.cases}, {"edits", o.edits}, {"grid", o.grid},
                 {"seed", o.seed},   {"layer", o.layer}, {"out", o.out}};

  if (!o.activations.empty()) {
    const Dataset src = load_dataset(o.activations);
    const iv::InterventionExport ex = iv::export_interventions(p, src, o.cases, o.edits, o.grid, o.seed);
    const std::string manifest = o.manifest.empty() ? with_extension(o.out, ".json") : o.manifest;
    config["mode"] = "export";
    config["activations"] = o.activations;
    config["manifest"] = manifest;
    json cases = json::array();
    for (std::size_t c = 0; c < ex.cases.size(); ++c) {
      const auto& ec = ex.cases[c];
      cases.push_back({{"sample", ec.sample},
                       {"first_row", c * ex.grid.size()},
                       {"edits", edits_json(ec.target.edits)},
                       {"target_moves", moves_json(ec.target_moves)}});
    }
    write_dataset(o.out, ex.activations);
    json m = {{"command", "intervene"}, {"config", config},      {"n_cases", ex.cases.size()},
              {"k_edits", o.edits},     {"grid", ex.grid},       {"rows_per_case", ex.grid.size()},
              {"cases", cases}};
    write_json(manifest, m);
    return {{"command", "intervene"}, {"mode", "export"}, {"rows", ex.activations.size()}, {"manifest", manifest}};
  }

  const iv::SyntheticModel model(RandomCodingBook::generate(d_model_of(p), o.model_seed));
  const auto cases = iv::build_cases(o.cases, o.edits, o.seed);
  const iv::SweepReport r = iv::sweep_evaluate(model, p, cases, o.grid);
  config["mode"] = "synthetic";
  config["model_seed"] = o.model_seed;
  json per_case = json::array();
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& c = r.per_case[i];
    per_case.push_back({{"transcript", othello::format_transcript(cases[i].transcript)},
                        {"edits", edits_json(cases[i].target.edits)},
                        {"best_error", c.best_error},
                        {"null_error", c.null_error},
                        {"best_scales", c.best_scales},
                        {"evaluations", c.evaluations}});
  }
  json report = {{"command", "intervene"},
                 {"config", config},
                 {"n_cases", r.n_cases},
                 {"k_edits", r.k_edits},
                 {"grid", r.grid},
                 {"activation_scale", r.activation_scale},
                 {"search", r.search},
                 {"mean_best_error", r.mean_best_error},
                 {"null_baseline_error", r.null_baseline_error},
                 {"per_case", per_case}};
  write_json(o.out, report);
  json brief = report;
  brief.erase("per_case");
  return brief;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tensor-product probes for Othello board-state representations", "tpr"};
  app.require_subcommand(1);

  GenDataOpts gd;
  auto* gen = app.add_subcommand("gen-data", "Generate random-coding or OOD activation datasets");
  gen->add_option("--source", gd.source, "random-coding or ood")->capture_default_str();
  gen->add_option("--d-model", gd.d_model, "Activation dimension")->capture_default_str();
  gen->add_option("--train", gd.train, "Training samples")->capture_default_str();
  gen->add_option("--val", gd.val, "Validation samples")->capture_default_str();
  gen->add_option("--test", gd.test, "Test samples")->capture_default_str();
  gen->add_option("--seed", gd.seed, "Codebook and sampling seed")->capture_default_str();
  gen->add_option("--layer", gd.layer, "Layer tag stored in the files")->capture_default_str();
  gen->add_option("--out", gd.out, "Output directory")->required();

  TrainOpts tr;
  auto* trn = app.add_subcommand("train", "Train a probe on a generated dataset directory");
  trn->add_option("--probe", tr.probe, "linear, bilinear or trilinear")->required();
  trn->add_option("--dr", tr.dr, "Role dimension")->capture_default_str();
  trn->add_option("--df", tr.df, "Filler dimension")->capture_default_str();
  trn->add_option("--du", tr.du, "Row dimension")->capture_default_str();
  trn->add_option("--dv", tr.dv, "Column dimension")->capture_default_str();
  trn->add_option("--data", tr.data, "Directory with train/val/test.tprds")->required();
  trn->add_option("--d-model", tr.d_model, "Expected activation dimension (0 accepts any)")->capture_default_str();
  trn->add_option("--lr", tr.cfg.lr)->capture_default_str();
  trn->add_option("--wd", tr.cfg.weight_decay, "Weight decay")->capture_default_str();
  trn->add_option("--batch", tr.cfg.batch_size)->capture_default_str();
  trn->add_option("--epochs", tr.cfg.epochs)->capture_default_str();
  trn->add_option("--patience", tr.cfg.patience)->capture_default_str();
  trn->add_option("--validate-every", tr.cfg.validate_every)->capture_default_str();
  trn->add_option("--seed", tr.cfg.seed, "Initialisation and shuffle seed")->capture_default_str();
  trn->add_option("--init-std", tr.init_std)->capture_default_str();
  trn->add_option("--out", tr.out, "Checkpoint path (.tprpb)")->required();
  trn->add_option("--metrics", tr.metrics, "Metrics JSON path (default: checkpoint with .json)");

  EvalOpts ev;
  auto* evl = app.add_subcommand("eval", "Accuracy of a checkpoint on a dataset file");
  evl->add_option("--probe", ev.probe, "Checkpoint")->required();
  evl->add_option("--data", ev.data, "Dataset file")->required();
  evl->add_option("--out", ev.out, "Optional JSON output path");

  AnalyzeOpts an;
  auto* ana = app.add_subcommand("analyze", "Probe geometry and comparison analyses");
  ana->require_subcommand(1);
  auto common = [&](CLI::App* sub, bool probe = true) {
    if (probe) sub->add_option("--probe", an.probe, "Checkpoint")->required();
    sub->add_option("--out", an.out, "Primary output path")->required();
    sub->add_option("--summary", an.summary, "Summary JSON path (default: output with .json)");
    return sub;
  };
  auto* a_eff = common(ana->add_subcommand("effective", "Effective linear probe of a TPR probe"));
  a_eff->add_option("--seed", an.seed, "Seed for the identity check inputs")->capture_default_str();
  auto* a_cos = common(ana->add_subcommand("cosine", "Mean-centred cosine between two probes"), false);
  a_cos->add_option("--linear", an.linear, "Linear probe checkpoint")->required();
  a_cos->add_option("--tpr", an.tpr, "TPR probe checkpoint")->required();
  auto* a_svd = common(ana->add_subcommand("svd-sweep", "Accuracy of rank-k truncations of the probe"));
  a_svd->add_option("--data", an.data, "Test dataset file")->required();
  a_svd->add_option("--k", an.ks, "Comma separated ranks")->delimiter(',')->required();
  auto* a_knn = common(ana->add_subcommand("knn", "Board relations of nearest role embeddings"));
  auto* a_gap = common(ana->add_subcommand("gapsim", "Role similarity by row and column gap"));
  auto* a_pca = common(ana->add_subcommand("pca", "PCA of filler, role or binding vectors"));
  a_pca->add_option("--target", an.target, "filler, role or binding")->capture_default_str();
  a_pca->add_option("--data", an.data, "Dataset file for --target binding");
  a_pca->add_option("--dims", an.dims)->capture_default_str();
  auto* a_iso = common(ana->add_subcommand("isomap", "Isomap of role embeddings"));
  a_iso->add_option("--target", an.target, "role, row, column or filler");
  a_iso->add_option("--neighbors", an.neighbors)->capture_default_str();
  a_iso->add_option("--dims", an.dims)->capture_default_str();
  auto* a_gram = common(ana->add_subcommand("gram", "Normalised Gram matrix and singular values"));
  a_gram->add_option("--target", an.target, "role, row, column or filler");

  InterveneOpts in;
  auto* itv = app.add_subcommand("intervene", "Intervention sweep on the synthetic model or export for an external one");
  itv->add_option("--probe", in.probe, "Checkpoint")->required();
  itv->add_option("--cases", in.cases)->capture_default_str();
  itv->add_option("--edits", in.edits, "Squares changed per case")->capture_default_str();
  itv->add_option("--grid", in.grid, "Comma separated scales")->delimiter(',');
  itv->add_option("--seed", in.seed, "Case seed")->capture_default_str();
  itv->add_option("--model-seed", in.model_seed, "Codebook seed of the synthetic model")->capture_default_str();
  itv->add_option("--activations", in.activations, "External activations: export intervened vectors instead");
  itv->add_option("--manifest", in.manifest, "Export manifest path (default: output with .json)");
  itv->add_option("--layer", in.layer, "Layer tag")->capture_default_str();
  itv->add_option("--out", in.out, "Report JSON, or intervened .tprds in export mode")->required();

  std::vector<std::string> storage{"tpr"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : storage) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }

  try {
    json result;
    if (gen->parsed()) result = cmd_gen_data(gd);
    else if (trn->parsed()) result = cmd_train(tr);
    else if (evl->parsed()) result = cmd_eval(ev);
    else if (itv->parsed()) result = cmd_intervene(in);
    else if (a_eff->parsed()) result = cmd_effective(an);
    else if (a_cos->parsed()) result = cmd_cosine(an);
    else if (a_svd->parsed()) result = cmd_svd_sweep(an);
    else if (a_knn->parsed()) result = cmd_knn(an);
    else if (a_gap->parsed()) result = cmd_gapsim(an);
    else if (a_pca->parsed()) result = cmd_pca(an);
    else if (a_iso->parsed()) result = cmd_isomap(an);
    else if (a_gram->parsed()) result = cmd_gram(an);
    out << result.dump(2) << '\n';
    return kOk;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const DimensionMismatch& e) {
    err << "shape mismatch: " << e.what() << '\n';
    return kShape;
  } catch (const InsufficientDimension& e) {
    err << "shape mismatch: " << e.what() << '\n';
    return kShape;
  } catch (const FormatError& e) {
    err << "bad file: " << e.what() << '\n';
    return kIo;
  } catch (const std::ios_base::failure& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const fs::filesystem_error& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace tpr::cli
