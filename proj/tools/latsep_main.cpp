#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <json.hpp>

#include <latsep/editor.hpp>
#include <latsep/io.hpp>
#include <latsep/losses.hpp>
#include <latsep/metrics.hpp>
#include <latsep/synthetic.hpp>

namespace {

using json = nlohmann::ordered_json;
using namespace latsep;

// shortest decimal form that round-trips to the same double
std::string fmt(double v) {
  char buf[32];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

Space parse_space(const std::string& s) {
  if (s == "orig") return Space::kOriginal;
  if (s == "proxy") return Space::kProxy;
  throw std::runtime_error("--space must be 'orig' or 'proxy', got '" + s + "'");
}

Mat codes_in_space(const ModelBundle& bundle, const LabeledLatentDataset& dataset, Space space) {
  if (dataset.dim() != bundle.flow.dim())
    throw std::runtime_error("dataset dimension does not match the model");
  return space == Space::kProxy ? bundle.flow.forward(dataset.codes) : dataset.codes;
}

const SvmHyperplane& hyperplane_for(const ModelBundle& bundle, Space space, int attribute) {
  const auto& set = bundle.hyperplanes(space == Space::kProxy);
  if (set.empty())
    throw std::runtime_error(std::string("model has no SVM hyperplanes for the ") +
                             (space == Space::kProxy ? "proxy" : "original") +
                             " space; run eval-separability with --model-out first");
  if (attribute < 0 || attribute >= static_cast<int>(set.size()))
    throw std::runtime_error("--attr out of range");
  return set[static_cast<std::size_t>(attribute)];
}

void write_report(const json& report, const std::string& path) {
  atomic_write(path, report.dump(2) + "\n");
}

std::string config_echo_string(const TrainConfig& c) {
  return "lr=" + fmt(c.lr) + ";beta1=" + fmt(c.beta1) + ";beta2=" + fmt(c.beta2) +
         ";batch=" + std::to_string(c.batch_size) + ";epochs=" + std::to_string(c.epochs) +
         ";lambda_lm=" + fmt(c.lambda_lm) + ";lambda_ap=" + fmt(c.lambda_ap) +
         ";edit_range=" + fmt(c.edit_step_range) + ";seed=" + std::to_string(c.seed);
}

// ---- subcommand bodies ----------------------------------------------------

struct GenArgs {
  std::string out;
  std::uint64_t seed = 0;
  int n = 4000;
  int attrs = 4;
  int dim = 32;
  double entangle = 2.0;
  double rho = 0.3;
  double gamma = 1.0;
};

void run_gen(const GenArgs& a) {
  WorldSpec spec;
  spec.num_attributes = a.attrs;
  spec.dim = a.dim;
  spec.nonlinearity = a.entangle;
  spec.correlation = a.rho;
  spec.margin = a.gamma;
  spec.seed = a.seed;
  const LabeledLatentDataset dataset = generate_world(spec, a.n, a.seed);
  save_dataset(dataset, a.out);
  std::cout << "wrote " << a.out << " (" << a.n << " samples, dim " << a.dim << ", " << a.attrs
            << " attributes)\n";
}

struct PretrainArgs {
  std::string dataset, out;
  std::uint64_t seed = 0;
  int epochs = 50;
  double lr = 1e-2;
  int layers = 3;
  int hidden = 0;
};

void run_pretrain(const PretrainArgs& a) {
  const LabeledLatentDataset dataset = load_dataset(a.dataset);
  ModelBundle bundle;
  bundle.bank = pretrain_bank(dataset, a.epochs, a.lr, a.seed);
  bundle.flow = init_flow(dataset.dim(), a.layers, a.hidden, a.seed);
  bundle.seed = a.seed;
  save_model(bundle, a.out);
  std::cout << "wrote " << a.out << " (" << bundle.bank.size() << " frozen classifiers, "
            << bundle.flow.num_layers() << "-layer identity flow)\n";
}

struct TrainArgs {
  std::string dataset, model, out, loss_log;
  TrainConfig config;
};

void run_train(TrainArgs a) {
  const LabeledLatentDataset dataset = load_dataset(a.dataset);
  ModelBundle bundle = load_model(a.model);
  if (a.loss_log.empty()) a.loss_log = a.out + ".losslog";

  std::ostringstream log;
  log << "epoch,batch,loss_attribute,loss_large_margin,loss_preservation,loss_total\n";
  bundle.flow = train_proxy(dataset, bundle.bank, std::move(bundle.flow), a.config, &log);
  atomic_write(a.loss_log, log.str());

  // retraining invalidates any stored editing hyperplanes
  bundle.svm_original.clear();
  bundle.svm_proxy.clear();
  bundle.config_echo = config_echo_string(a.config);
  bundle.seed = a.config.seed;
  save_model(bundle, a.out);
  std::cout << "wrote " << a.out << " and " << a.loss_log << "\n";
}

struct SeparabilityArgs {
  std::string dataset, model, out, model_out, space = "orig";
  std::uint64_t seed = 0;
  SvmParams svm;
};

void run_separability(const SeparabilityArgs& a) {
  const Space space = parse_space(a.space);
  const LabeledLatentDataset dataset = load_dataset(a.dataset);
  ModelBundle bundle = load_model(a.model);
  const Mat codes = codes_in_space(bundle, dataset, space);

  const SeparabilityReport report =
      separability(codes, dataset.labels, dataset.attribute_names, a.seed, a.svm);

  json out;
  out["command"] = "eval-separability";
  out["config"] = {{"dataset", a.dataset}, {"model", a.model},
                   {"space", a.space},     {"seed", a.seed},
                   {"svm_lambda", a.svm.lambda}, {"svm_epochs", a.svm.epochs},
                   {"model_config", bundle.config_echo}};
  out["attributes"] = report.attribute_names;
  out["accuracy"] = report.accuracy;
  out["skipped"] = report.skipped;
  out["min_accuracy"] = report.min_accuracy;
  out["max_accuracy"] = report.max_accuracy;
  out["mean_accuracy"] = report.mean_accuracy;
  write_report(out, a.out);

  if (!a.model_out.empty()) {
    std::vector<SvmHyperplane> set(report.hyperplanes.size());
    for (std::size_t k = 0; k < report.hyperplanes.size(); ++k) {
      set[k] = report.hyperplanes[k];
      if (set[k].weight.size() == 0) {  // skipped attribute, store a null plane
        set[k].weight = Vec::Zero(dataset.dim());
        set[k].attribute = static_cast<int>(k);
      }
    }
    if (space == Space::kProxy)
      bundle.svm_proxy = std::move(set);
    else
      bundle.svm_original = std::move(set);
    save_model(bundle, a.model_out);
  }

  std::cout << "separability (" << a.space << "): min " << report.min_accuracy << " max "
            << report.max_accuracy << " mean " << report.mean_accuracy << "\n";
}

struct DciArgs {
  std::string dataset, model, out, space = "orig";
  std::uint64_t seed = 0;
  int samples = 2000;
  double lasso_alpha = 0.05;
  int lasso_iters = 1000;
};

void run_dci(const DciArgs& a) {
  const Space space = parse_space(a.space);
  const LabeledLatentDataset dataset = load_dataset(a.dataset);
  const ModelBundle bundle = load_model(a.model);
  const Mat codes = codes_in_space(bundle, dataset, space);

  const DciResult result =
      dci(codes, dataset.labels, a.samples, a.lasso_alpha, a.seed, a.lasso_iters);

  json out;
  out["command"] = "eval-dci";
  out["config"] = {{"dataset", a.dataset}, {"model", a.model},
                   {"space", a.space},     {"seed", a.seed},
                   {"samples", a.samples}, {"lasso_alpha", a.lasso_alpha},
                   {"lasso_iters", a.lasso_iters}, {"model_config", bundle.config_echo}};
  out["disentanglement"] = result.report.disentanglement;
  out["completeness"] = result.report.completeness;
  out["informativeness"] = result.report.informativeness;
  out["degenerate"] = result.report.degenerate;
  json importance = json::array();
  for (Eigen::Index k = 0; k < result.importance.rows(); ++k) {
    json row = json::array();
    for (Eigen::Index d = 0; d < result.importance.cols(); ++d) row.push_back(result.importance(k, d));
    importance.push_back(std::move(row));
  }
  out["importance"] = std::move(importance);
  write_report(out, a.out);

  std::cout << "dci (" << a.space << "): D " << result.report.disentanglement << " C "
            << result.report.completeness << " I " << result.report.informativeness << "\n";
}

struct FlipsArgs {
  std::string dataset, model, out;
  double alpha = 3.0;
  int attr = -1;  // -1: every attribute
};

void run_flips(const FlipsArgs& a) {
  const LabeledLatentDataset dataset = load_dataset(a.dataset);
  const ModelBundle bundle = load_model(a.model);
  if (bundle.svm_original.empty() || bundle.svm_proxy.empty())
    throw std::runtime_error(
        "model needs SVM hyperplanes for both spaces; run eval-separability with --model-out for "
        "--space orig and --space proxy first");

  std::vector<int> attrs;
  if (a.attr >= 0)
    attrs.push_back(a.attr);
  else
    for (int k = 0; k < bundle.bank.size(); ++k) attrs.push_back(k);

  json rows = json::array();
  for (int k : attrs) {
    const double orig = flip_rate(bundle.bank, dataset.codes,
                                  hyperplane_for(bundle, Space::kOriginal, k), a.alpha, nullptr);
    const double proxy = flip_rate(bundle.bank, dataset.codes,
                                   hyperplane_for(bundle, Space::kProxy, k), a.alpha, &bundle.flow);
    rows.push_back({{"attribute", dataset.attribute_names[static_cast<std::size_t>(k)]},
                    {"index", k},
                    {"flip_rate_original", orig},
                    {"flip_rate_proxy", proxy}});
    std::cout << "attr " << k << ": flip rate original " << orig << ", proxy " << proxy << "\n";
  }

  json out;
  out["command"] = "eval-flips";
  out["config"] = {{"dataset", a.dataset}, {"model", a.model}, {"alpha", a.alpha},
                   {"attr", a.attr},       {"model_config", bundle.config_echo}};
  out["flips"] = std::move(rows);
  write_report(out, a.out);
}

struct EditArgs {
  std::string dataset, model, out, space = "proxy";
  int attr = 0;
  double alpha = 0.0;
  double target_dist = 0.0;
  bool has_alpha = false;
  bool has_target = false;
};

void run_edit(const EditArgs& a) {
  if (a.has_alpha == a.has_target)
    throw std::runtime_error("edit needs exactly one of --alpha or --target-dist");
  const Space space = parse_space(a.space);
  LabeledLatentDataset dataset = load_dataset(a.dataset);
  const ModelBundle bundle = load_model(a.model);
  if (dataset.dim() != bundle.flow.dim())
    throw std::runtime_error("dataset dimension does not match the model");
  const SvmHyperplane& h = hyperplane_for(bundle, space, a.attr);

  EditRequest request;
  request.attribute = a.attr;
  request.space = space;
  request.mode = a.has_alpha ? EditRequest::Mode::kFixedStep : EditRequest::Mode::kToTargetDistance;
  request.amount = a.has_alpha ? a.alpha : a.target_dist;
  dataset.codes = apply_edit(&bundle.flow, dataset.codes, h, request);
  save_dataset(dataset, a.out);
  std::cout << "wrote " << a.out << "\n";
}

struct PlotArgs {
  std::string dataset, model, out, space = "proxy";
  int attr = 0;  // label used for coloring
  int attr_x = 0;
  int attr_y = 1;
};

void run_plot(const PlotArgs& a) {
  const Space space = parse_space(a.space);
  const LabeledLatentDataset dataset = load_dataset(a.dataset);
  const ModelBundle bundle = load_model(a.model);
  if (a.attr < 0 || a.attr >= dataset.num_attributes())
    throw std::runtime_error("--attr out of range");
  const Mat codes = codes_in_space(bundle, dataset, space);
  const Vec x = hyperplane_for(bundle, space, a.attr_x).signed_distances(codes);
  const Vec y = hyperplane_for(bundle, space, a.attr_y).signed_distances(codes);

  const double pad_x = 0.05 * std::max(1e-12, x.maxCoeff() - x.minCoeff());
  const double pad_y = 0.05 * std::max(1e-12, y.maxCoeff() - y.minCoeff());
  const double x0 = x.minCoeff() - pad_x, x1 = x.maxCoeff() + pad_x;
  const double y0 = y.minCoeff() - pad_y, y1 = y.maxCoeff() + pad_y;
  const double width = 640.0, height = 640.0, margin = 48.0;
  auto sx = [&](double v) { return margin + (v - x0) / (x1 - x0) * (width - 2 * margin); };
  auto sy = [&](double v) { return height - margin - (v - y0) / (y1 - y0) * (height - 2 * margin); };

  std::string svg;
  char buf[256];
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"640\" "
         "viewBox=\"0 0 640 640\">\n";
  svg += "<rect width=\"640\" height=\"640\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%.1f\" y=\"%.1f\" font-size=\"14\">axis x: attr %d, axis y: attr %d, "
                "color: attr %d (%s)</text>\n",
                margin, margin - 24.0, a.attr_x, a.attr_y, a.attr,
                dataset.attribute_names[static_cast<std::size_t>(a.attr)].c_str());
  svg += buf;
  for (Eigen::Index i = 0; i < codes.rows(); ++i) {
    const char* color = dataset.labels(i, a.attr) ? "#d62728" : "#1f77b4";
    std::snprintf(buf, sizeof(buf), "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"2.5\" fill=\"%s\"/>\n",
                  sx(x(i)), sy(y(i)), color);
    svg += buf;
  }
  svg += "</svg>\n";
  atomic_write(a.out, svg);
  std::cout << "wrote " << a.out << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"supervised proxy latent space: training, editing and evaluation"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* cmd_gen = app.add_subcommand("gen-synthetic", "generate an entangled labeled dataset");
  cmd_gen->add_option("--out", gen.out, "output dataset file")->required();
  cmd_gen->add_option("--seed", gen.seed, "world and sampling seed");
  cmd_gen->add_option("--n", gen.n, "number of samples")->check(CLI::Range(1, 1 << 30));
  cmd_gen->add_option("--attrs", gen.attrs, "number of binary attributes");
  cmd_gen->add_option("--dim", gen.dim, "latent dimension");
  cmd_gen->add_option("--entangle", gen.entangle, "warp strength a in x + a*tanh(x)");
  cmd_gen->add_option("--rho", gen.rho, "pairwise factor correlation in [0,1)");
  cmd_gen->add_option("--gamma", gen.gamma, "factor magnitude");

  PretrainArgs pre;
  auto* cmd_pre = app.add_subcommand("pretrain-classifiers",
                                     "pretrain and freeze the per-attribute linear classifiers");
  cmd_pre->add_option("--dataset", pre.dataset, "input dataset")->required();
  cmd_pre->add_option("--out", pre.out, "output model file")->required();
  cmd_pre->add_option("--seed", pre.seed, "seed");
  cmd_pre->add_option("--epochs", pre.epochs, "gradient-descent steps")
      ->check(CLI::Range(1, 1 << 30));
  cmd_pre->add_option("--lr", pre.lr, "learning rate");
  cmd_pre->add_option("--layers", pre.layers, "coupling layers of the fresh identity flow");
  cmd_pre->add_option("--hidden", pre.hidden, "hidden width (0 = latent dimension)");

  TrainArgs train;
  auto* cmd_train = app.add_subcommand("train-proxy", "train the flow into the proxy space");
  cmd_train->add_option("--dataset", train.dataset, "input dataset")->required();
  cmd_train->add_option("--model", train.model, "input model")->required();
  cmd_train->add_option("--out", train.out, "output model file")->required();
  cmd_train->add_option("--seed", train.config.seed, "seed");
  cmd_train->add_option("--epochs", train.config.epochs, "training epochs");
  cmd_train->add_option("--lambda-lm", train.config.lambda_lm, "large-margin loss weight");
  cmd_train->add_option("--lambda-ap", train.config.lambda_ap, "preservation loss weight");
  cmd_train->add_option("--lr", train.config.lr, "Adam learning rate");
  cmd_train->add_option("--batch", train.config.batch_size, "batch size");
  cmd_train->add_option("--beta1", train.config.beta1, "Adam beta1");
  cmd_train->add_option("--beta2", train.config.beta2, "Adam beta2");
  cmd_train->add_option("--edit-range", train.config.edit_step_range,
                        "training edit step range (0 = 3x batch median distance)");
  cmd_train->add_option("--loss-log", train.loss_log, "loss log path (default <out>.losslog)");

  SeparabilityArgs sep;
  auto* cmd_sep = app.add_subcommand("eval-separability", "per-attribute SVM accuracy report");
  cmd_sep->add_option("--dataset", sep.dataset, "input dataset")->required();
  cmd_sep->add_option("--model", sep.model, "input model")->required();
  cmd_sep->add_option("--space", sep.space, "orig or proxy");
  cmd_sep->add_option("--seed", sep.seed, "split and SVM seed");
  cmd_sep->add_option("--out", sep.out, "report file")->required();
  cmd_sep->add_option("--model-out", sep.model_out,
                      "also write a model with the trained hyperplanes");
  cmd_sep->add_option("--svm-lambda", sep.svm.lambda, "SVM regularization");
  cmd_sep->add_option("--svm-epochs", sep.svm.epochs, "SVM epochs");

  DciArgs dci_args;
  auto* cmd_dci = app.add_subcommand("eval-dci", "disentanglement report");
  cmd_dci->add_option("--dataset", dci_args.dataset, "input dataset")->required();
  cmd_dci->add_option("--model", dci_args.model, "input model")->required();
  cmd_dci->add_option("--space", dci_args.space, "orig or proxy");
  cmd_dci->add_option("--seed", dci_args.seed, "subset seed");
  cmd_dci->add_option("--out", dci_args.out, "report file")->required();
  cmd_dci->add_option("--samples", dci_args.samples, "lasso sample count");
  cmd_dci->add_option("--lasso-alpha", dci_args.lasso_alpha, "lasso L1 weight");
  cmd_dci->add_option("--lasso-iters", dci_args.lasso_iters, "lasso sweep cap");

  FlipsArgs flips;
  auto* cmd_flips = app.add_subcommand("eval-flips", "edit-preservation flip rates");
  cmd_flips->add_option("--dataset", flips.dataset, "input dataset")->required();
  cmd_flips->add_option("--model", flips.model, "input model with both hyperplane sets")->required();
  cmd_flips->add_option("--alpha", flips.alpha, "edit step in distance units");
  cmd_flips->add_option("--attr", flips.attr, "attribute index (-1 = all)");
  cmd_flips->add_option("--out", flips.out, "report file")->required();

  EditArgs edit;
  auto* cmd_edit = app.add_subcommand("edit", "move codes along a hyperplane normal");
  cmd_edit->add_option("--dataset", edit.dataset, "input dataset")->required();
  cmd_edit->add_option("--model", edit.model, "input model with hyperplanes")->required();
  cmd_edit->add_option("--out", edit.out, "output dataset file")->required();
  cmd_edit->add_option("--attr", edit.attr, "attribute index")->required();
  cmd_edit->add_option("--space", edit.space, "orig or proxy");
  auto* opt_alpha = cmd_edit->add_option("--alpha", edit.alpha, "fixed step");
  auto* opt_target = cmd_edit->add_option("--target-dist", edit.target_dist,
                                          "target signed distance");
  opt_alpha->excludes(opt_target);

  PlotArgs plot;
  auto* cmd_plot = app.add_subcommand("plot2d", "SVG scatter of codes on two hyperplane normals");
  cmd_plot->add_option("--dataset", plot.dataset, "input dataset")->required();
  cmd_plot->add_option("--model", plot.model, "input model with hyperplanes")->required();
  cmd_plot->add_option("--space", plot.space, "orig or proxy");
  cmd_plot->add_option("--attr", plot.attr, "attribute whose label colors the points");
  cmd_plot->add_option("--attr-x", plot.attr_x, "hyperplane for the x axis");
  cmd_plot->add_option("--attr-y", plot.attr_y, "hyperplane for the y axis");
  cmd_plot->add_option("--out", plot.out, "output SVG file")->required();

  try {
    app.parse(argc, argv);
    edit.has_alpha = opt_alpha->count() > 0;
    edit.has_target = opt_target->count() > 0;

    if (cmd_gen->parsed()) run_gen(gen);
    if (cmd_pre->parsed()) run_pretrain(pre);
    if (cmd_train->parsed()) run_train(train);
    if (cmd_sep->parsed()) run_separability(sep);
    if (cmd_dci->parsed()) run_dci(dci_args);
    if (cmd_flips->parsed()) run_flips(flips);
    if (cmd_edit->parsed()) run_edit(edit);
    if (cmd_plot->parsed()) run_plot(plot);
    return 0;
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
