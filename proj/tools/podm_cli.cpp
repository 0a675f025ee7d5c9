#include <iostream>

#include <CLI11.hpp>

#include "podm.hpp"

int main(int argc, char** argv) {
  using namespace podm;
  CLI::App app{"Diversity-aware re-ranking: data generation, training, evaluation"};
  app.require_subcommand(1);

  cli::GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic catalog and train/test sessions");
  gen_cmd->add_option("--config", gen.config, "Run config JSON")->required();
  gen_cmd->add_option("--out-dir", gen.out_dir, "Output directory")->required();

  cli::TrainArgs tr;
  std::string mode = "podm";
  auto* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint");
  train_cmd->add_option("--config", tr.config, "Run config JSON")->required();
  train_cmd->add_option("--data-dir", tr.data_dir, "Directory holding train.jsonl")->required();
  train_cmd->add_option("--out", tr.out, "Checkpoint path")->required();
  train_cmd->add_option("--mode", mode, "podm or baseline")->check(CLI::IsMember({"podm", "baseline"}));

  cli::EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Compute the metric suite on labeled sessions");
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "Checkpoint JSON")->required();
  eval_cmd->add_option("--data", ev.data, "Sessions JSONL")->required();
  eval_cmd->add_option("--report", ev.report, "Metrics CSV path")->required();

  cli::RerankArgs rr;
  std::size_t top_k = 0;
  auto* rerank_cmd = app.add_subcommand("rerank", "Re-rank one session and print JSON");
  rerank_cmd->add_option("--checkpoint", rr.checkpoint, "Checkpoint JSON")->required();
  rerank_cmd->add_option("--session", rr.session, "Session JSON object")->required();
  auto* top_k_opt = rerank_cmd->add_option("--top-k", top_k, "Number of indices to return");

  cli::ReportArgs rep;
  auto* report_cmd = app.add_subcommand("report", "Write per-session plot data from an eval run");
  report_cmd->add_option("--eval-csv", rep.eval_csv, "CSV written by eval")->required();
  report_cmd->add_option("--plot-data", rep.plot_data, "Output TSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitUsage;
  }

  if (*gen_cmd) return cli::gen_data(gen, std::cout, std::cerr);
  if (*train_cmd) {
    tr.mode = *parse_mode(mode);
    return cli::train(tr, std::cout, std::cerr);
  }
  if (*eval_cmd) return cli::eval(ev, std::cout, std::cerr);
  if (*rerank_cmd) {
    if (*top_k_opt) rr.top_k = top_k;
    return cli::rerank(rr, std::cout, std::cerr);
  }
  if (*report_cmd) return cli::report(rep, std::cout, std::cerr);
  return cli::kExitUsage;
}
