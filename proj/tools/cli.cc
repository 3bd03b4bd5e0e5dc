// Copyright 2026 The ngrpo Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "ngrpo/embed_margin.h"
#include "ngrpo/errors.h"
#include "ngrpo/eval_report.h"
#include "ngrpo/experiment.h"
#include "ngrpo/graph.h"
#include "ngrpo/grpo.h"
#include "ngrpo/policy.h"
#include "ngrpo/rng.h"
#include "ngrpo/run_config.h"
#include "ngrpo/text_format.h"

namespace ngrpo::cli {

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw DataError("cannot create directory " + path.parent_path().string());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
  if (!out) throw DataError("failed writing " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Options every subcommand shares: a config file and one flag per key.
struct CommonOptions {
  std::string config_path;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;

  void attach(CLI::App* sub) {
    sub->add_option("--config", config_path, "key = value config file");
    for (const ConfigKey& key : config_keys()) {
      // Worker count also answers to the short --threads.
      const std::string names =
          key.name == "trainer.threads" ? "--trainer.threads,--threads" : "--" + key.name;
      options[key.name] = sub->add_option(names, values[key.name], key.help);
    }
  }

  // defaults < config file < NGRPO_SEED < flags
  RunConfig resolve() const {
    RunConfig cfg;
    if (!config_path.empty()) apply_config_file(cfg, config_path);
    apply_seed_env(cfg);
    for (const auto& [name, opt] : options) {
      if (opt->count() > 0) set_config_value(cfg, name, values.at(name));
    }
    return cfg;
  }
};

std::string network_summary(const TextRichNetwork& net) {
  std::ostringstream os;
  os << "nodes " << net.num_nodes() << "\nedges " << net.num_edges() << "\nclasses "
     << net.num_classes() << "\nhomophily " << format_double(net.edge_homophily()) << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------

int cmd_synth(const RunConfig& cfg, const std::string& out_path, std::ostream& out) {
  validate(cfg);
  const TextRichNetwork net = generate_synthetic(cfg.synth);
  const fs::path path = out_path.empty() ? cfg.output_dir / "dataset.jsonl" : fs::path(out_path);
  write_file(path, to_jsonl(net));
  out << network_summary(net) << "wrote " << path.string() << "\n";
  return kExitOk;
}

int cmd_ingest(const std::string& input, const std::string& out_path, std::ostream& out) {
  if (input.empty()) throw ConfigError("ingest needs --input");
  const TextRichNetwork net = load_jsonl(input);
  out << network_summary(net);
  if (!out_path.empty()) {
    write_file(out_path, to_jsonl(net));
    out << "wrote " << out_path << "\n";
  }
  return kExitOk;
}

int cmd_embed(const RunConfig& cfg, const std::string& out_path, const std::string& format,
              std::ostream& out) {
  validate(cfg);
  if (format != "text" && format != "binary") {
    throw ConfigError("--format must be 'text' or 'binary'");
  }
  const TextRichNetwork net = load_or_generate(cfg);
  const EmbeddingTable table = build_embeddings(cfg, net);
  const fs::path path = out_path.empty() ? cfg.output_dir / "embeddings.txt" : fs::path(out_path);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  save_embeddings(table, path, format == "binary" ? EmbeddingFormat::kBinary : EmbeddingFormat::kText);
  out << "rows " << table.node_vecs.rows() + table.label_vecs.rows() << "\ndim " << table.dim
      << "\nwrote " << path.string() << "\n";
  return kExitOk;
}

int cmd_analyze_margins(const RunConfig& cfg, std::ostream& out) {
  validate(cfg);
  const TextRichNetwork net = load_or_generate(cfg);
  const EmbeddingTable table = build_embeddings(cfg, net);
  const MarginReport report = margin_gain(net, table, cfg.shaping_k, cfg.shaping);
  const std::vector<MarginReport> reports{report};
  const MarginDistribution dist = margin_distribution_report(reports, cfg.histogram_bins);

  std::string nodes = "node,raw_margin,agg_margin,delta,reshape\n";
  for (std::size_t i = 0; i < report.nodes.size(); ++i) {
    const NodeMargin& m = report.nodes[i];
    nodes += std::to_string(i) + "," + format_double(m.raw_margin) + "," +
             format_double(m.agg_margin) + "," + format_double(m.delta) + "," +
             format_double(m.reshape) + "\n";
  }
  write_file(cfg.output_dir / "margin_histogram.csv", histogram_csv(dist));
  write_file(cfg.output_dir / "margin_summary.json", summary_json(dist));
  write_file(cfg.output_dir / "margins.csv", nodes);
  out << "nodes " << dist.n << "\nmean_delta " << format_double(dist.mean) << "\nfrac_positive "
      << format_double(dist.frac_positive) << "\nfrac_zero " << format_double(dist.frac_zero)
      << "\nfrac_negative " << format_double(dist.frac_negative) << "\nwrote "
      << (cfg.output_dir / "margin_histogram.csv").string() << "\n";
  return kExitOk;
}

std::string checkpoint_name(std::size_t step) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "step_%06zu.ckpt", step);
  return buf;
}

std::string evals_csv_header() { return "step,accuracy,macro_f1,resp_len,neighbour_freq"; }

std::string evals_csv_row(const EvalPoint& p) {
  return std::to_string(p.step) + "," + format_double(p.result.accuracy) + "," +
         format_double(p.result.macro_f1) + "," + format_double(p.result.mean_resp_len) + "," +
         format_double(p.result.neighbour_freq);
}

int cmd_train(const RunConfig& cfg, std::ostream& out) {
  const Experiment exp = prepare_experiment(cfg);
  const fs::path dir = cfg.output_dir;
  fs::create_directories(dir / "checkpoints");
  write_file(dir / "config.txt", dump_config(cfg));

  std::ofstream metrics(dir / "metrics.csv", std::ios::binary);
  if (!metrics) throw DataError("cannot write " + (dir / "metrics.csv").string());
  metrics << metrics_csv_header() << "\n";
  const auto observer = [&](const StepMetrics& m, const TrainerState& state) {
    metrics << metrics_csv_row(m) << "\n";
    metrics.flush();
    if (cfg.checkpoint_every > 0 && state.step % cfg.checkpoint_every == 0) {
      save_checkpoint(exp.policy, state.params, dir / "checkpoints" / checkpoint_name(state.step));
    }
  };
  const TrainingRun run = run_training(exp, cfg, observer);
  save_checkpoint(exp.policy, run.state.params, dir / "final.ckpt");

  std::string evals = evals_csv_header() + "\n";
  for (const EvalPoint& p : run.evals) evals += evals_csv_row(p) + "\n";
  write_file(dir / "evals.csv", evals);
  const EvalResult final_eval =
      run.evals.empty() ? evaluate_test(exp, cfg, run.state.params) : run.evals.back().result;
  write_file(dir / "eval.json", to_json(final_eval));

  out << "steps " << run.metrics.size() << "\nfinal_accuracy " << format_double(final_eval.accuracy)
      << "\nfinal_macro_f1 " << format_double(final_eval.macro_f1) << "\nwrote " << dir.string()
      << "\n";
  return kExitOk;
}

int cmd_eval(const RunConfig& cfg, const std::string& checkpoint, const std::string& task,
             const std::string& split_name, const std::string& out_path, std::ostream& out) {
  validate(cfg);
  const TextRichNetwork net = load_or_generate(cfg);
  Checkpoint ckpt = [&] {
    if (checkpoint.empty()) {
      Policy policy = Policy::for_classes(net.num_classes(), cfg.policy);
      PolicyParams params = PolicyParams::zeros(policy);
      return Checkpoint{std::move(policy), std::move(params)};
    }
    return load_checkpoint(checkpoint);
  }();
  EvalOptions opts;
  opts.max_len = cfg.trainer.max_len;
  opts.threads = cfg.trainer.threads;

  EvalResult result;
  if (task == "node") {
    if (ckpt.policy.vocab().num_classes() != net.num_classes()) {
      throw DataError("checkpoint has " + std::to_string(ckpt.policy.vocab().num_classes()) +
                      " identifier tokens but the dataset has " +
                      std::to_string(net.num_classes()) + " classes");
    }
    const SplitAssignment parts = split(net, cfg.split_ratios, cfg.split_seed);
    std::vector<NodeId> nodes;
    if (split_name == "test") {
      nodes = parts.test;
    } else if (split_name == "val") {
      nodes = parts.val;
    } else if (split_name == "train") {
      nodes = parts.train;
    } else if (split_name == "all") {
      for (NodeId i = 0; i < net.num_nodes(); ++i) nodes.push_back(i);
    } else {
      throw ConfigError("--split must be train, val, test or all");
    }
    result = evaluate_seeds(ckpt.policy, ckpt.params, net, nodes, cfg.sample,
                            eval_base_seed(cfg), cfg.eval_seeds, opts);
  } else if (task == "edge") {
    const std::vector<LinkPair> pairs = make_link_pairs(net, cfg.split_seed);
    std::vector<EvalResult> results;
    for (std::size_t k = 0; k < cfg.eval_seeds; ++k) {
      results.push_back(evaluate_edge(ckpt.policy, ckpt.params, net, pairs, cfg.sample,
                                      derive_seed(eval_base_seed(cfg), {k}), opts));
    }
    result = average_results(results);
  } else {
    throw ConfigError("--task must be 'node' or 'edge'");
  }
  const fs::path path = out_path.empty() ? cfg.output_dir / "eval.json" : fs::path(out_path);
  write_file(path, to_json(result));
  out << "accuracy " << format_double(result.accuracy) << "\nmacro_f1 "
      << format_double(result.macro_f1) << "\nevaluated " << result.n_evaluated << "\nwrote "
      << path.string() << "\n";
  return kExitOk;
}

int cmd_report(const RunConfig& cfg, const std::string& run_dir_flag, std::ostream& out) {
  const fs::path dir = run_dir_flag.empty() ? cfg.output_dir : fs::path(run_dir_flag);
  const std::vector<StepMetrics> rows = read_metrics_csv(dir / "metrics.csv");
  if (rows.empty()) throw DataError("metrics file has no rows: " + (dir / "metrics.csv").string());
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].step <= rows[i - 1].step) throw DataError("metrics steps are not increasing");
  }

  nlohmann::ordered_json report;
  report["run_dir"] = dir.string();
  report["steps"] = rows.size();
  auto summarise = [](const StepMetrics& m) {
    nlohmann::ordered_json j;
    j["step"] = m.step;
    j["mean_reward"] = m.mean_reward;
    j["objective"] = m.objective;
    j["kl"] = m.kl;
    j["entropy"] = m.entropy;
    j["resp_len"] = m.resp_len;
    j["neighbour_freq"] = m.neighbour_freq;
    j["format_rate"] = m.format_rate;
    j["acc_rate"] = m.acc_rate;
    return j;
  };
  report["first"] = summarise(rows.front());
  report["last"] = summarise(rows.back());
  if (fs::exists(dir / "eval.json")) {
    report["final_eval"] = nlohmann::ordered_json::parse(read_file(dir / "eval.json"));
  }
  std::string curves = metrics_csv_header() + "\n";
  for (const StepMetrics& m : rows) curves += metrics_csv_row(m) + "\n";
  write_file(dir / "report_curves.csv", curves);
  write_file(dir / "report.json", report.dump(2) + "\n");
  out << "steps " << rows.size() << "\nwrote " << (dir / "report.json").string() << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Neighbour-aware group-relative policy optimisation on text-rich networks", "ngrpo"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "generate a synthetic text-rich network");
  auto* ingest = app.add_subcommand("ingest", "validate and canonicalise a JSONL dataset");
  auto* embed = app.add_subcommand("embed", "write hashed text embeddings");
  auto* margins = app.add_subcommand("analyze-margins", "margin gains and their histogram");
  auto* train = app.add_subcommand("train", "train the policy");
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  auto* report = app.add_subcommand("report", "summarise a finished training run");

  std::map<CLI::App*, std::unique_ptr<CommonOptions>> common;
  for (CLI::App* sub : {synth, ingest, embed, margins, train, eval, report}) {
    common[sub] = std::make_unique<CommonOptions>();
    common[sub]->attach(sub);
  }
  std::string out_path, input, format = "text", checkpoint, task = "node", split_name = "test",
                        run_dir;
  synth->add_option("--out", out_path, "dataset path (default <output.dir>/dataset.jsonl)");
  ingest->add_option("--input", input, "JSONL dataset to validate")->required();
  ingest->add_option("--out", out_path, "write the canonical dataset here");
  embed->add_option("--out", out_path, "embedding path (default <output.dir>/embeddings.txt)");
  embed->add_option("--format", format, "text or binary");
  eval->add_option("--checkpoint", checkpoint, "policy checkpoint (default: untrained policy)");
  eval->add_option("--task", task, "node or edge");
  eval->add_option("--split", split_name, "train, val, test or all");
  eval->add_option("--out", out_path, "result path (default <output.dir>/eval.json)");
  report->add_option("--run-dir", run_dir, "training output directory (default output.dir)");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::ostringstream os;
    const int code = app.exit(e, out, os);
    err << os.str();
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    const RunConfig cfg = common.at(sub)->resolve();
    if (sub == synth) return cmd_synth(cfg, out_path, out);
    if (sub == ingest) return cmd_ingest(input, out_path, out);
    if (sub == embed) return cmd_embed(cfg, out_path, format, out);
    if (sub == margins) return cmd_analyze_margins(cfg, out);
    if (sub == train) return cmd_train(cfg, out);
    if (sub == eval) return cmd_eval(cfg, checkpoint, task, split_name, out_path, out);
    return cmd_report(cfg, run_dir, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace ngrpo::cli
