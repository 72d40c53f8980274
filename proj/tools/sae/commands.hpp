// Copyright 2026 The saekit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "saekit/activation_buffer.hpp"
#include "saekit/checkpoint.hpp"
#include "saekit/embeddings.hpp"
#include "saekit/intervention.hpp"
#include "saekit/preprocess.hpp"
#include "saekit/report.hpp"
#include "saekit/run_config.hpp"
#include "saekit/shard.hpp"
#include "saekit/trainer.hpp"

namespace saekit::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;

inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return kExitValidation;
    case ErrorKind::kNumeric:
    case ErrorKind::kConsistency: return kExitNumeric;
    default: return kExitData;
  }
}

inline std::string version_string() {
  return "sae 1.0.0 (formats: SAEP1 v" + std::to_string(kCheckpointVersion) + ", SAEV1 v" +
         std::to_string(kShardVersion) + ", SEMB1, SAED1 v" + std::to_string(kDeltaVersion) + ")";
}

inline void require_exists(const std::optional<fs::path>& p, const std::string& key) {
  if (!p) fail(ErrorKind::kInvalidArgument, key + ": required for this command");
  if (!fs::exists(*p)) fail(ErrorKind::kInvalidArgument, key + ": path does not exist: " + p->string());
}

inline std::vector<fs::path> shard_list(const fs::path& p, const std::string& key) {
  auto files = list_shards(p);
  if (files.empty()) fail(ErrorKind::kInvalidArgument, key + ": no .saev shards in " + p.string());
  return files;
}

// Uniform sample of up to `limit` rows over all shards (reservoir sampling).
inline RowMatrix<float> sample_rows(const std::vector<fs::path>& files, std::uint32_t d,
                                    std::size_t limit, std::uint64_t seed) {
  RowMatrix<float> out(static_cast<Eigen::Index>(limit), d);
  std::mt19937_64 rng(seed);
  std::size_t seen = 0;
  ShardDocumentSource source(files, d);
  while (auto doc = source.next_document()) {
    for (Eigen::Index r = 0; r < doc->activations.rows(); ++r, ++seen) {
      if (seen < limit) {
        out.row(static_cast<Eigen::Index>(seen)) = doc->activations.row(r);
      } else {
        std::uniform_int_distribution<std::size_t> pick(0, seen);
        const auto j = pick(rng);
        if (j < limit) out.row(static_cast<Eigen::Index>(j)) = doc->activations.row(r);
      }
    }
  }
  require(seen > 0, ErrorKind::kFormat, "training shards contain no rows");
  out.conservativeResize(static_cast<Eigen::Index>(std::min(seen, limit)), d);
  return out;
}

// The first `limit` rows in file order.
inline RowMatrix<float> leading_rows(const std::vector<fs::path>& files, std::uint32_t d,
                                     std::size_t limit) {
  RowMatrix<float> out(static_cast<Eigen::Index>(limit), d);
  std::size_t got = 0;
  ShardDocumentSource source(files, d);
  while (got < limit) {
    auto doc = source.next_document();
    if (!doc) break;
    for (Eigen::Index r = 0; r < doc->activations.rows() && got < limit; ++r, ++got) {
      out.row(static_cast<Eigen::Index>(got)) = doc->activations.row(r);
    }
  }
  out.conservativeResize(static_cast<Eigen::Index>(got), d);
  return out;
}

struct TrainingInputs {
  std::vector<fs::path> files;
  SaeConfig sae;
  RowMatrix<float> init_sample;
  RowMatrix<float> validation;
};

inline TrainingInputs prepare_training(const RunConfig& cfg, bool need_validation) {
  require_exists(cfg.paths.shards, "paths.shards");
  if (need_validation) require_exists(cfg.paths.val_shards, "paths.val_shards");
  else if (cfg.paths.val_shards) require_exists(cfg.paths.val_shards, "paths.val_shards");
  TrainingInputs in;
  in.files = shard_list(*cfg.paths.shards, "paths.shards");
  in.sae = cfg.sae;
  const auto header_d = ShardReader(in.files.front()).d();
  if (in.sae.d == 0) in.sae.d = header_d;
  if (in.sae.d != header_d) {
    fail(ErrorKind::kDimensionMismatch, "sae.d=" + std::to_string(in.sae.d) +
                                            " does not match shard d=" + std::to_string(header_d));
  }
  in.sae.validate();
  const auto d = static_cast<std::uint32_t>(in.sae.d);
  in.init_sample = sample_rows(in.files, d, cfg.init_sample_rows, cfg.seed);
  if (cfg.paths.val_shards) {
    in.validation = leading_rows(shard_list(*cfg.paths.val_shards, "paths.val_shards"), d,
                                 cfg.validation_rows);
  }
  return in;
}

inline void emit_json(std::ostream& out, const nlohmann::ordered_json& j) { out << j.dump() << '\n'; }

inline int cmd_train(const fs::path& config_path, const std::optional<fs::path>& out_override,
                     std::ostream& out) {
  const auto cfg = load_run_config(config_path);
  auto ckpt_path = out_override ? out_override : cfg.paths.checkpoint;
  if (!ckpt_path) fail(ErrorKind::kInvalidArgument, "paths.checkpoint: required for train");
  auto in = prepare_training(cfg, false);

  ShardDocumentSource docs(in.files, static_cast<std::uint32_t>(in.sae.d), cfg.epochs);
  ActivationBuffer buffer(docs, in.sae.d, cfg.buffer);
  TrainOptions opts;
  opts.metrics_interval = cfg.metrics_interval;
  opts.dead_window = cfg.dead_window;
  if (in.validation.rows() > 0) opts.validation = &in.validation;
  auto result = train<float>(in.sae, buffer, in.init_sample, opts);

  save_checkpoint(*ckpt_path, result.params, static_cast<std::uint32_t>(in.sae.k));
  if (cfg.paths.metrics) {
    write_atomically(*cfg.paths.metrics,
                     [&](std::ostream& o) { write_metrics_jsonl(o, result.metrics); });
  }
  nlohmann::ordered_json summary{{"command", "train"},
                                 {"steps", result.steps_completed},
                                 {"checkpoint", ckpt_path->string()}};
  if (result.initial_validation_mse) summary["initial_validation_mse"] = *result.initial_validation_mse;
  if (result.final_validation_mse) summary["final_validation_mse"] = *result.final_validation_mse;
  emit_json(out, summary);
  return kExitOk;
}

inline int cmd_lr_search(const fs::path& config_path, std::ostream& out) {
  const auto cfg = load_run_config(config_path);
  auto in = prepare_training(cfg, true);
  require(in.validation.rows() > 0, ErrorKind::kFormat, "paths.val_shards: no rows");
  const auto d = static_cast<std::uint32_t>(in.sae.d);
  struct Owned : BatchSource {
    Owned(std::vector<fs::path> files, std::uint32_t d, std::size_t epochs, BufferOptions opts)
        : docs(std::move(files), d, epochs), buffer(docs, d, opts) {}
    std::optional<RowMatrix<float>> next_batch(std::size_t b) override { return buffer.next_batch(b); }
    ShardDocumentSource docs;
    ActivationBuffer buffer;
  };
  auto factory = [&]() -> std::unique_ptr<BatchSource> {
    return std::make_unique<Owned>(in.files, d, cfg.epochs, cfg.buffer);
  };
  TrainOptions opts;
  opts.metrics_interval = cfg.metrics_interval;
  opts.dead_window = cfg.dead_window;
  auto result = lr_grid_search<float>(in.sae, cfg.lr_candidates, factory, in.init_sample,
                                      in.validation, opts);
  nlohmann::ordered_json table{{"best_lr", result.best_lr}, {"losses", nlohmann::ordered_json::array()}};
  for (const auto& e : result.table) {
    table["losses"].push_back({{"lr", e.lr}, {"validation_mse", e.validation_mse}});
  }
  if (cfg.paths.lr_table) {
    write_atomically(*cfg.paths.lr_table, [&](std::ostream& o) { o << table.dump(2) << '\n'; });
  }
  if (cfg.paths.checkpoint) {
    save_checkpoint(*cfg.paths.checkpoint, result.best.params, static_cast<std::uint32_t>(in.sae.k));
  }
  emit_json(out, table);
  return kExitOk;
}

inline int cmd_pack(const fs::path& input, const fs::path& out_dir, std::ostream& out) {
  if (!fs::exists(input)) fail(ErrorKind::kInvalidArgument, "--in: path does not exist: " + input.string());
  const auto files = shard_list(input, "--in");
  std::size_t docs_in = 0, docs_out = 0, too_short = 0, zero_rows = 0;
  for (const auto& file : files) {
    ShardReader reader(file);
    ActivationShard packed;
    packed.d = reader.d();
    while (auto raw = reader.next()) {
      ++docs_in;
      try {
        auto res = preprocess_sequence(raw->activations, raw->token_ids);
        zero_rows += res.dropped_zero_rows;
        if (res.document.size() == 0) {
          ++too_short;
          continue;
        }
        res.document.language = raw->language;
        packed.docs.push_back(std::move(res.document));
        ++docs_out;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kDocumentTooShort) throw;
        ++too_short;
      }
    }
    write_shard(out_dir / file.filename(), packed);
  }
  emit_json(out, {{"command", "pack"},
                  {"files", files.size()},
                  {"documents_in", docs_in},
                  {"documents_out", docs_out},
                  {"skipped_too_short", too_short},
                  {"dropped_zero_norm_rows", zero_rows}});
  return kExitOk;
}

inline int cmd_inspect(const fs::path& path, std::ostream& out) {
  if (!fs::exists(path)) fail(ErrorKind::kInvalidArgument, "path does not exist: " + path.string());
  std::string magic(6, '\0');
  {
    auto in = binary::open_input(path);
    in.read(magic.data(), 6);
    magic.resize(static_cast<std::size_t>(in.gcount()));
  }
  nlohmann::ordered_json j;
  auto count_docs = [&](const std::vector<Document>& docs) {
    std::map<std::string, std::pair<std::size_t, std::size_t>> per_lang;
    for (const auto& doc : docs) {
      auto& [n_docs, n_tokens] = per_lang[to_string(doc.language)];
      ++n_docs;
      n_tokens += doc.size();
    }
    nlohmann::ordered_json langs = nlohmann::ordered_json::object();
    for (const char* lang : {"en", "ja", "other"}) {
      auto it = per_lang.find(lang);
      const auto v = it == per_lang.end() ? std::pair<std::size_t, std::size_t>{} : it->second;
      langs[lang] = {{"documents", v.first}, {"tokens", v.second}};
    }
    return langs;
  };
  if (magic.rfind("SAEV1", 0) == 0) {
    const auto shard = read_shard(path);
    j = {{"format", "SAEV1"}, {"version", shard.version}, {"d", shard.d},
         {"n_docs", shard.docs.size()}, {"languages", count_docs(shard.docs)}};
  } else if (magic.rfind("SAED1", 0) == 0) {
    const auto shard = read_delta_shard(path);
    j = {{"format", "SAED1"}, {"version", shard.version}, {"d", shard.d},
         {"n_docs", shard.docs.size()}, {"layer", shard.layer}, {"alpha", shard.alpha},
         {"languages", count_docs(shard.docs)}};
  } else if (magic.rfind("SAEP1", 0) == 0) {
    const auto ck = load_checkpoint(path);
    j = {{"format", "SAEP1"}, {"version", kCheckpointVersion}, {"d", ck.params.d()},
         {"n", ck.params.n()}, {"k", ck.k}};
  } else if (magic.rfind("SEMB1", 0) == 0) {
    const auto emb = read_embeddings(path);
    j = {{"format", "SEMB1"}, {"d_emb", emb.d_emb()}, {"vocab_size", emb.vocab_size()}};
  } else {
    fail(ErrorKind::kFormat, path.string() + ": unrecognized magic");
  }
  out << j.dump(2) << '\n';
  return kExitOk;
}

inline int cmd_analyze(const fs::path& sae_path, const fs::path& shards, const fs::path& emb_path,
                       const fs::path& out_path, const ReportOptions& opts, std::ostream& out) {
  for (const auto& [p, key] : {std::pair{sae_path, "--sae"}, {shards, "--shards"}, {emb_path, "--embeddings"}}) {
    if (!fs::exists(p)) fail(ErrorKind::kInvalidArgument, std::string(key) + ": path does not exist: " + p.string());
  }
  const auto sae = load_checkpoint(sae_path);
  const auto embeddings = read_embeddings(emb_path);
  ShardDocumentSource docs(shard_list(shards, "--shards"), static_cast<std::uint32_t>(sae.params.d()));
  const auto report = build_report(sae, docs, embeddings, opts);
  save_report(out_path, report, opts.top_tokens);
  nlohmann::ordered_json summary = aggregates_to_json(report.aggregates);
  summary["command"] = "analyze";
  emit_json(out, summary);
  return kExitOk;
}

inline int cmd_plan(const fs::path& report_path, const std::string& category, std::size_t m,
                    double alpha, std::uint32_t layer, const fs::path& out_path, std::ostream& out,
                    std::ostream& err) {
  if (!fs::exists(report_path)) fail(ErrorKind::kInvalidArgument, "--report: path does not exist");
  FeatureCategory cat;
  try {
    cat = category_from_string(category);
  } catch (const Error&) {
    fail(ErrorKind::kInvalidArgument, "--category: expected en, ja or bi");
  }
  if (alpha < 0.0) fail(ErrorKind::kInvalidArgument, "--alpha: must be non-negative");
  if (m == 0) fail(ErrorKind::kInvalidArgument, "--m: must be at least 1");
  const auto report = load_report(report_path);
  auto sel = select_features(report, cat, m);
  if (sel.warning) err << "warning: " << *sel.warning << '\n';
  InterventionPlan plan;
  plan.layer = layer;
  plan.alpha = alpha;
  plan.m = m;
  plan.category = cat;
  plan.mask = std::move(sel.mask);
  plan.source_report = report_path.filename().string();
  validate_plan(plan, report);
  save_plan(out_path, plan);
  emit_json(out, {{"command", "plan-intervention"}, {"category", plan_category_name(cat)},
                  {"selected", plan.mask.size()}, {"m", m}, {"alpha", alpha}});
  return kExitOk;
}

inline int cmd_delta(const fs::path& sae_path, const fs::path& plan_path, const fs::path& shards,
                     const fs::path& out_dir, bool include_bias, std::ostream& out) {
  for (const auto& [p, key] : {std::pair{sae_path, "--sae"}, {plan_path, "--plan"}, {shards, "--shards"}}) {
    if (!fs::exists(p)) fail(ErrorKind::kInvalidArgument, std::string(key) + ": path does not exist: " + p.string());
  }
  const auto sae = load_checkpoint(sae_path);
  const auto plan = load_plan(plan_path);
  std::size_t rows = 0;
  const auto files = shard_list(shards, "--shards");
  for (const auto& file : files) {
    auto target = out_dir / file.filename();
    target.replace_extension(".saed");
    const auto delta = emit_delta_shard(plan, sae, file, target, include_bias);
    for (const auto& doc : delta.docs) rows += doc.size();
  }
  emit_json(out, {{"command", "delta"}, {"files", files.size()}, {"rows", rows},
                  {"include_bias", include_bias}});
  return kExitOk;
}

// Entry point shared by the `sae` binary and the in-process tests.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"TopK sparse autoencoder toolkit for bilingual feature analysis", "sae"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);

  fs::path config;
  std::optional<fs::path> train_out;
  auto* train = app.add_subcommand("train", "train an SAE from a run configuration");
  train->add_option("--config", config, "run configuration (JSON)")->required();
  train->add_option("--out", train_out, "checkpoint path (overrides paths.checkpoint)");

  auto* lr = app.add_subcommand("lr-search", "grid-search the learning rate on validation loss");
  lr->add_option("--config", config, "run configuration (JSON)")->required();

  fs::path pack_in, pack_out;
  auto* pack = app.add_subcommand("pack", "truncate, drop BOS and L2-normalize raw exporter shards");
  pack->add_option("--in", pack_in, "raw shard file or directory")->required();
  pack->add_option("--out", pack_out, "output directory")->required();

  fs::path inspect_path;
  auto* inspect = app.add_subcommand("inspect", "print header and per-language counts");
  inspect->add_option("path", inspect_path, "shard, delta shard, checkpoint or embedding file")->required();

  fs::path sae_path, shards, emb_path, out_path;
  std::optional<fs::path> an_sae, an_shards, an_emb, an_out, an_config;
  ReportOptions ropts;
  auto* analyze = app.add_subcommand("analyze", "profile every feature on an evaluation set");
  analyze->add_option("--config", an_config, "run configuration supplying paths.* defaults");
  analyze->add_option("--sae", an_sae, "checkpoint (default paths.checkpoint)");
  analyze->add_option("--shards", an_shards, "evaluation shards (default paths.eval_shards)");
  analyze->add_option("--embeddings", an_emb, "embedding table (default paths.embeddings)");
  analyze->add_option("--out", an_out, "report path (default paths.report)");
  analyze->add_option("--layer", ropts.layer, "layer identifier recorded in the report");
  analyze->add_option("--checkpoint-id", ropts.checkpoint, "LM checkpoint identifier");
  analyze->add_option("--top-tokens", ropts.top_tokens, "tokens listed per feature");

  fs::path report_path;
  std::optional<fs::path> plan_config;
  std::optional<std::string> category;
  std::optional<std::size_t> m;
  std::optional<double> alpha;
  std::optional<std::uint32_t> layer;
  auto* plan = app.add_subcommand("plan-intervention", "select features and write a plan");
  plan->add_option("--config", plan_config, "run configuration supplying intervention.* defaults");
  plan->add_option("--report", report_path, "analysis report (JSONL)")->required();
  plan->add_option("--category", category, "en, ja or bi (default bi)");
  plan->add_option("--m", m, "features to select (default 5000)");
  plan->add_option("--alpha", alpha, "injection scale (default 0.1)");
  plan->add_option("--layer", layer, "target layer recorded in the plan");
  plan->add_option("--out", out_path, "plan path (JSON)")->required();

  fs::path plan_path;
  bool include_bias = false;
  auto* delta = app.add_subcommand("delta", "compute injection deltas for full-model shards");
  delta->add_option("--sae", sae_path, "SAE checkpoint")->required();
  delta->add_option("--plan", plan_path, "intervention plan")->required();
  delta->add_option("--shards", shards, "full-model activation shard or directory")->required();
  delta->add_option("--out", out_path, "output directory (one .saed per input shard)")->required();
  delta->add_flag("--include-bias", include_bias, "add alpha * b_pre to every delta");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitValidation;
  }

  try {
    if (*train) return cmd_train(config, train_out, out);
    if (*lr) return cmd_lr_search(config, out);
    if (*pack) return cmd_pack(pack_in, pack_out, out);
    if (*inspect) return cmd_inspect(inspect_path, out);
    if (*analyze) {
      RunPaths defaults;
      if (an_config) defaults = load_run_config(*an_config).paths;
      auto pick = [](const std::optional<fs::path>& flag, const std::optional<fs::path>& fallback,
                     const char* name) {
        if (flag) return *flag;
        if (fallback) return *fallback;
        fail(ErrorKind::kInvalidArgument, std::string(name) + ": required (flag or config)");
      };
      return cmd_analyze(pick(an_sae, defaults.checkpoint, "--sae / paths.checkpoint"),
                         pick(an_shards, defaults.eval_shards, "--shards / paths.eval_shards"),
                         pick(an_emb, defaults.embeddings, "--embeddings / paths.embeddings"),
                         pick(an_out, defaults.report, "--out / paths.report"), ropts, out);
    }
    if (*plan) {
      InterventionSettings iv;
      if (plan_config) iv = load_run_config(*plan_config).intervention;
      const std::string cat = category ? *category : plan_category_name(iv.category);
      return cmd_plan(report_path, cat, m.value_or(iv.m), alpha.value_or(iv.alpha),
                      layer.value_or(iv.layer), out_path, out, err);
    }
    if (*delta) return cmd_delta(sae_path, plan_path, shards, out_path, include_bias, out);
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error (i/o): " << e.what() << '\n';
    return kExitData;
  }
  return kExitValidation;
}

}  // namespace saekit::cli
