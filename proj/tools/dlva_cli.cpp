// dlva — bytecode-only vulnerability analysis for Ethereum contracts.
//
// Exit codes: 0 success, 1 usage, 2 input error, 3 internal failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "dlva/analyze.hpp"
#include "dlva/cfg.hpp"
#include "dlva/dataset.hpp"
#include "dlva/disasm.hpp"
#include "dlva/error.hpp"
#include "dlva/grid.hpp"
#include "dlva/metrics.hpp"
#include "dlva/model.hpp"
#include "dlva/rpc.hpp"
#include "dlva/sibling.hpp"
#include "dlva/train.hpp"

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) dlva::raise(dlva::ErrorKind::IoError, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) dlva::raise(dlva::ErrorKind::IoError, "cannot open " + path + " for writing");
  out << content;
}

// `disasm`/`cfg` accept either a literal hex string or a path to a file
// holding one.
dlva::RawBytecode bytecode_from_arg(const std::string& arg) {
  if (fs::exists(arg) && fs::is_regular_file(arg)) {
    return dlva::parse_hex(read_file(arg));
  }
  return dlva::parse_hex(arg);
}

struct TrainFlags {
  std::string dataset;
  std::string vuln;
  std::string size = "large";
  uint64_t seed = 1;
  std::string out;
  std::string encoder_model;
  double learning_rate = 5e-4;
  size_t batch_size = 512;
  size_t max_epochs = 100;
  size_t patience = 20;
};

int run_train(const TrainFlags& flags) {
  auto records = dlva::ingest(flags.dataset);
  dlva::DatasetSplit split = dlva::split_dataset(records);
  dlva::SizeClass size_class = dlva::size_class_from_name(flags.size);

  dlva::TrainConfig config;
  config.learning_rate = flags.learning_rate;
  config.batch_size = flags.batch_size;
  config.max_epochs = flags.max_epochs;
  config.early_stop_patience = flags.patience;
  config.seed = flags.seed;

  dlva::VulnerabilityModel model = dlva::VulnerabilityModel::random_init(
      flags.vuln, size_class, dlva::GridConfig::shipped(), flags.seed);
  if (!flags.encoder_model.empty()) {
    dlva::VulnerabilityModel donor = dlva::load_model(flags.encoder_model);
    model.encoder = donor.encoder;
    model.vocab = donor.vocab;
    model.encoder_ref = donor.encoder_ref;
  }

  auto ptrain = dlva::prepare_contracts(split.train, flags.vuln, model.vocab, model.encoder);
  auto pvalid = dlva::prepare_contracts(split.valid, flags.vuln, model.vocab, model.encoder);
  dlva::TrainReport report;
  dlva::train_model_inplace(model, ptrain, pvalid, config, &report);

  const std::string out_path =
      flags.out.empty() ? flags.vuln + "." + flags.size + ".dlva" : flags.out;
  dlva::save_model(model, out_path);
  std::printf("trained %s (%s) on %zu contracts, validated on %zu\n", flags.vuln.c_str(),
              flags.size.c_str(), split.train.size(), split.valid.size());
  std::printf("epochs %zu, best epoch %zu, best validation loss %.6f\n", report.epochs_run,
              report.best_epoch + 1, report.best_valid_loss);
  std::printf("saved %s\n", out_path.c_str());
  return 0;
}

int run_embed(const std::string& dataset, const std::string& model_path, const std::string& out) {
  auto records = dlva::ingest(dataset);
  dlva::VulnerabilityModel model = dlva::load_model(model_path);
  std::ostringstream lines;
  for (const auto& rec : records) {
    dlva::DisassemblyListing listing = dlva::disassemble(rec.bytecode);
    dlva::ControlFlowGraph cfg = dlva::build_cfg(listing);
    dlva::Tensor nodes = dlva::encode_contract_nodes(cfg, listing, model.vocab, model.encoder);
    dlva::ContractEmbedding emb = dlva::embed_contract(cfg, nodes, model.sc2v, model.size_class);
    json j;
    j["address"] = rec.address;
    j["vulnerability"] = model.vulnerability;
    j["vector"] = emb.vector;
    lines << j.dump() << '\n';
  }
  if (out.empty()) {
    std::cout << lines.str();
  } else {
    write_file(out, lines.str());
    std::printf("wrote %zu embeddings to %s\n", records.size(), out.c_str());
  }
  return 0;
}

int run_index_build(const std::string& embeddings_path, const std::string& labels_path,
                    const std::string& out) {
  auto records = dlva::ingest(labels_path);
  std::map<std::string, const dlva::ContractRecord*> by_address;
  for (const auto& r : records) by_address[r.address] = &r;

  dlva::TrainingIndex index;
  std::ifstream in(embeddings_path);
  if (!in) dlva::raise(dlva::ErrorKind::IoError, "cannot open " + embeddings_path);
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      dlva::raise(dlva::ErrorKind::MalformedRecord,
                  embeddings_path + " line " + std::to_string(line_no) + ": " + e.what());
    }
    dlva::IndexEntry entry;
    entry.id = j.at("address").get<std::string>();
    entry.vector = j.at("vector").get<std::vector<float>>();
    const std::string vuln = j.at("vulnerability").get<std::string>();
    if (index.vulnerability.empty()) {
      index.vulnerability = vuln;
      index.dimension = entry.vector.size();
    }
    auto it = by_address.find(entry.id);
    if (it == by_address.end() || !it->second->labels.count(vuln)) {
      dlva::raise(dlva::ErrorKind::MissingLabels, entry.id + " lacks label " + vuln);
    }
    entry.label = it->second->labels.at(vuln);
    index.entries.push_back(std::move(entry));
  }
  dlva::write_index(index, out);
  std::printf("indexed %zu embeddings for %s (dimension %zu) into %s\n", index.entries.size(),
              index.vulnerability.c_str(), index.dimension, out.c_str());
  return 0;
}

int run_siblings(const std::string& query_path, const std::string& index_path) {
  dlva::TrainingIndex index = dlva::read_index(index_path);
  std::ifstream in(query_path);
  if (!in) dlva::raise(dlva::ErrorKind::IoError, "cannot open " + query_path);
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    json j = json::parse(line);
    if (!j.contains("vector")) continue;  // tolerate a header line
    const std::string id = j.contains("address") ? j["address"].get<std::string>()
                                                 : "query#" + std::to_string(line_no);
    std::vector<float> q = j.at("vector").get<std::vector<float>>();
    dlva::SiblingVerdict v = dlva::sibling_lookup(q, index);
    json out;
    out["id"] = id;
    out["outcome"] = dlva::sibling_outcome_name(v.outcome);
    if (v.band_threshold.has_value()) out["band_threshold"] = *v.band_threshold;
    out["voters"] = json::array();
    for (const auto& voter : v.voters) {
      out["voters"].push_back({{"id", voter.id}, {"distance", voter.distance}, {"label", voter.label}});
    }
    std::cout << out.dump() << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bytecode-only vulnerability analysis for Ethereum smart contracts"};
  app.set_config("--config");
  app.require_subcommand(1);

  // disasm
  auto* disasm_cmd = app.add_subcommand("disasm", "disassemble hex bytecode to an opcode listing");
  std::string disasm_input;
  bool disasm_strip = false;
  disasm_cmd->add_option("input", disasm_input, "hex string or file containing one")->required();
  disasm_cmd->add_flag("--strip-metadata", disasm_strip, "drop the compiler metadata trailer");

  // cfg
  auto* cfg_cmd = app.add_subcommand("cfg", "recover the control-flow graph");
  std::string cfg_input;
  bool cfg_dot = false, cfg_json = false, cfg_strip = false;
  cfg_cmd->add_option("input", cfg_input, "hex string or file containing one")->required();
  cfg_cmd->add_flag("--dot", cfg_dot, "emit Graphviz DOT");
  cfg_cmd->add_flag("--json", cfg_json, "emit JSON (default)");
  cfg_cmd->add_flag("--strip-metadata", cfg_strip, "drop the compiler metadata trailer first");

  // split
  auto* split_cmd = app.add_subcommand("split", "60/20/20 dataset split in given order");
  std::string split_dataset_path;
  split_cmd->add_option("dataset", split_dataset_path, "JSONL dataset")->required();

  // train
  TrainFlags train_flags;
  auto* train_cmd = app.add_subcommand("train", "train one vulnerability model");
  train_cmd->add_option("dataset", train_flags.dataset, "JSONL dataset")->required();
  train_cmd->add_option("--vuln", train_flags.vuln, "vulnerability name")->required();
  train_cmd->add_option("--size", train_flags.size, "large|small")
      ->check(CLI::IsMember({"large", "small"}));
  train_cmd->add_option("--seed", train_flags.seed, "training seed");
  train_cmd->add_option("--out", train_flags.out, "output model file");
  train_cmd->add_option("--encoder", train_flags.encoder_model,
                        "model file whose block encoder should be reused");
  train_cmd->add_option("--lr", train_flags.learning_rate, "learning rate");
  train_cmd->add_option("--batch", train_flags.batch_size, "batch size");
  train_cmd->add_option("--epochs", train_flags.max_epochs, "max epochs");
  train_cmd->add_option("--patience", train_flags.patience, "early-stop patience");

  // grid
  auto* grid_cmd = app.add_subcommand("grid", "hyperparameter grid");
  bool grid_list = false, grid_count = false;
  grid_cmd->add_flag("--list", grid_list, "print all configurations");
  grid_cmd->add_flag("--count", grid_count, "print the configuration count");

  // embed
  auto* embed_cmd = app.add_subcommand("embed", "contract embeddings as JSONL");
  std::string embed_dataset, embed_model, embed_out;
  embed_cmd->add_option("dataset", embed_dataset, "JSONL dataset")->required();
  embed_cmd->add_option("--model", embed_model, "model file")->required();
  embed_cmd->add_option("--out", embed_out, "output path (stdout by default)");

  // index build
  auto* index_cmd = app.add_subcommand("index", "sibling index operations");
  auto* index_build = index_cmd->add_subcommand("build", "build an index from embeddings + labels");
  std::string ib_embeddings, ib_labels, ib_out = "index.jsonl";
  index_build->add_option("embeddings", ib_embeddings, "embeddings JSONL")->required();
  index_build->add_option("labels", ib_labels, "labeled dataset JSONL")->required();
  index_build->add_option("--out", ib_out, "output index path");

  // siblings
  auto* siblings_cmd = app.add_subcommand("siblings", "nearest-sibling verdicts for queries");
  std::string sib_query, sib_index;
  siblings_cmd->add_option("query", sib_query, "embeddings JSONL of queries")->required();
  siblings_cmd->add_option("index", sib_index, "index JSONL")->required();

  // contradictions
  auto* contra_cmd = app.add_subcommand("contradictions", "mine label contradictions in an index");
  std::string contra_index;
  double contra_eps = 0.0;
  contra_cmd->add_option("index", contra_index, "index JSONL")->required();
  contra_cmd->add_option("--eps", contra_eps, "distance threshold")->required();

  // analyze
  auto* analyze_cmd = app.add_subcommand("analyze", "judge contracts with trained models");
  std::string an_input, an_rpc, an_models, an_indices, an_out;
  analyze_cmd->add_option("input", an_input, "JSONL dataset, or an address with --rpc")->required();
  analyze_cmd->add_option("--rpc", an_rpc, "JSON-RPC endpoint for eth_getCode");
  analyze_cmd->add_option("--models", an_models, "directory of .dlva models")->required();
  analyze_cmd->add_option("--indices", an_indices, "directory of sibling indices");
  analyze_cmd->add_option("--out", an_out, "write the JSON report here (stdout by default)");

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "score labeled contracts");
  std::string ev_dataset, ev_models, ev_indices, ev_mode = "cc-only";
  eval_cmd->add_option("dataset", ev_dataset, "labeled JSONL dataset")->required();
  eval_cmd->add_option("--models", ev_models, "directory of .dlva models")->required();
  eval_cmd->add_option("--indices", ev_indices, "directory of sibling indices");
  eval_cmd->add_option("--mode", ev_mode, "cc-only|sd-easy|cc-hard|sd+cc")
      ->check(CLI::IsMember({"cc-only", "sd-easy", "cc-hard", "sd+cc"}));

  // fetch
  auto* fetch_cmd = app.add_subcommand("fetch", "fetch deployed bytecode over JSON-RPC");
  std::string fetch_rpc, fetch_address;
  double fetch_timeout = 10.0;
  fetch_cmd->add_option("address", fetch_address, "contract address")->required();
  fetch_cmd->add_option("--rpc", fetch_rpc, "JSON-RPC endpoint")->required();
  fetch_cmd->add_option("--timeout", fetch_timeout, "seconds to wait");

  CLI11_PARSE(app, argc, argv);

  try {
    if (disasm_cmd->parsed()) {
      dlva::RawBytecode code = bytecode_from_arg(disasm_input);
      if (disasm_strip) code = dlva::strip_metadata(code).first;
      std::cout << dlva::format_listing(dlva::disassemble(code));
      return 0;
    }
    if (cfg_cmd->parsed()) {
      dlva::RawBytecode code = bytecode_from_arg(cfg_input);
      if (cfg_strip) code = dlva::strip_metadata(code).first;
      dlva::DisassemblyListing listing = dlva::disassemble(code);
      dlva::ControlFlowGraph cfg = dlva::build_cfg(listing);
      if (cfg_dot) {
        std::cout << dlva::cfg_to_dot(cfg, listing);
      } else {
        std::cout << dlva::cfg_to_json(cfg, listing) << '\n';
      }
      auto stats = dlva::cfg_stats(cfg);
      std::fprintf(stderr, "nodes %zu edges %zu\n", stats.node_count, stats.edge_count);
      return 0;
    }
    if (split_cmd->parsed()) {
      auto records = dlva::ingest(split_dataset_path);
      dlva::DatasetSplit split = dlva::split_dataset(records);
      auto dump = [&](const std::vector<dlva::ContractRecord>& recs, const std::string& suffix) {
        std::ostringstream ss;
        for (const auto& r : recs) ss << dlva::record_to_json(r) << '\n';
        write_file(split_dataset_path + "." + suffix + ".jsonl", ss.str());
      };
      dump(split.train, "train");
      dump(split.valid, "valid");
      dump(split.test, "test");
      std::printf("train %zu  valid %zu  test %zu\n", split.train.size(), split.valid.size(),
                  split.test.size());
      return 0;
    }
    if (train_cmd->parsed()) return run_train(train_flags);
    if (grid_cmd->parsed()) {
      auto grid = dlva::enumerate_grid();
      if (grid_list) {
        for (const auto& g : grid) std::cout << g.to_string() << '\n';
      }
      if (grid_count || !grid_list) std::printf("%zu configurations\n", grid.size());
      return 0;
    }
    if (embed_cmd->parsed()) return run_embed(embed_dataset, embed_model, embed_out);
    if (index_build->parsed()) return run_index_build(ib_embeddings, ib_labels, ib_out);
    if (siblings_cmd->parsed()) return run_siblings(sib_query, sib_index);
    if (contra_cmd->parsed()) {
      dlva::TrainingIndex index = dlva::read_index(contra_index);
      auto pairs = dlva::find_contradictions(index, contra_eps);
      for (const auto& p : pairs) {
        std::printf("%s %s %.8f\n", p.id_a.c_str(), p.id_b.c_str(), p.distance);
      }
      std::fprintf(stderr, "%zu contradiction pairs within %g\n", pairs.size(), contra_eps);
      return 0;
    }
    if (analyze_cmd->parsed()) {
      std::vector<dlva::ContractRecord> records;
      if (!an_rpc.empty()) {
        dlva::ContractRecord rec;
        rec.address = an_input;
        rec.bytecode = dlva::fetch_bytecode(an_rpc, an_input);
        records.push_back(std::move(rec));
      } else {
        records = dlva::ingest(an_input);
      }
      dlva::ModelSet models = dlva::ModelSet::load_dir(an_models);
      dlva::IndexSet indices;
      if (!an_indices.empty()) indices = dlva::IndexSet::load_dir(an_indices);
      auto rows = dlva::analyze_batch(records, models, an_indices.empty() ? nullptr : &indices);
      const std::string report = dlva::analysis_to_json(rows);
      if (an_out.empty()) {
        std::cout << report << '\n';
      } else {
        write_file(an_out, report);
      }
      double total_ms = 0.0;
      size_t nodes = 0, edges = 0, ok = 0;
      for (const auto& row : rows) {
        total_ms += row.total_millis;
        if (row.error.empty()) {
          nodes += row.cfg_nodes;
          edges += row.cfg_edges;
          ++ok;
        }
      }
      if (ok > 0) {
        std::fprintf(stderr, "%zu contracts, avg %.1f ms, avg %.1f blocks / %.1f edges\n", ok,
                     total_ms / static_cast<double>(rows.size()),
                     static_cast<double>(nodes) / static_cast<double>(ok),
                     static_cast<double>(edges) / static_cast<double>(ok));
      }
      return 0;
    }
    if (eval_cmd->parsed()) {
      auto records = dlva::ingest(ev_dataset);
      dlva::ModelSet models = dlva::ModelSet::load_dir(ev_models);
      dlva::IndexSet indices;
      if (!ev_indices.empty()) indices = dlva::IndexSet::load_dir(ev_indices);
      dlva::EvalMode mode = dlva::eval_mode_from_name(ev_mode);
      auto rows = dlva::evaluate(records, models, ev_indices.empty() ? nullptr : &indices, mode);
      const bool balanced = !models.vulnerabilities(dlva::SizeClass::Large).empty();
      std::cout << dlva::render_eval_table(rows, balanced);
      std::cout << dlva::eval_to_json(rows) << '\n';
      return 0;
    }
    if (fetch_cmd->parsed()) {
      dlva::RawBytecode code = dlva::fetch_bytecode(fetch_rpc, fetch_address, fetch_timeout);
      std::cout << dlva::to_hex(code.bytes) << '\n';
      return 0;
    }
  } catch (const dlva::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.is_input_error() ? 2 : 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 3;
  }
  return 1;
}
