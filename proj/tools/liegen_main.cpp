// tools/liegen_main.cpp

// Copyright 2026 The LieGen Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/// \file
/// Command-line entry point.  Five subcommands — make-data, train, sample,
/// eval, nll — all driven by one JSON config file plus dotted-key overrides:
///
///   liegen <command> --config run.json [--set key=value ...] [--threads N]
///
/// Every command validates its configuration before any compute starts, is a
/// pure function of (config, seed, input files), and copies the effective
/// config into the output directory as config.<command>.json.  Exit codes:
/// 0 success, 2 configuration error, 3 numeric failure.  Artifacts
/// (checkpoints, datasets, samples, reports) are bit-identical across reruns;
/// the only exception is the wall_time_s column of loss.csv.

#include <CLI11.hpp>
#include <Eigen/Core>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "liegen/datasets.hpp"
#include "liegen/dynamics.hpp"
#include "liegen/errors.hpp"
#include "liegen/evalm.hpp"
#include "liegen/lie.hpp"
#include "liegen/likelihood.hpp"
#include "liegen/losses.hpp"
#include "liegen/rng.hpp"
#include "liegen/score_net.hpp"
#include "liegen/serialize.hpp"

namespace {

namespace fs = std::filesystem;
using liegen::ConfigError;
using liegen::IoError;
using liegen::NumericError;
using liegen::Rng;
using nlohmann::json;
namespace data = liegen::data;
namespace dyn = liegen::dyn;
namespace evl = liegen::eval;
namespace lie = liegen::lie;
namespace loss = liegen::loss;
namespace net = liegen::net;
namespace nll = liegen::nll;

constexpr std::uint64_t kSamplerStreamTag = 0xCA11;

// ---------------------------------------------------------------------------
// Config plumbing
// ---------------------------------------------------------------------------

json load_config_file(const std::string& path) {
  const std::string text = liegen::serialize::read_text_file(path);
  json cfg = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (cfg.is_discarded())
    throw ConfigError("config file " + path + " is not valid JSON");
  if (!cfg.is_object())
    throw ConfigError("config file " + path + " must hold a JSON object");
  return cfg;
}

/// Applies one `--set key=value` override; dotted keys descend into (and
/// create) nested objects.  The value is parsed as JSON when possible and
/// kept as a string otherwise, so `--set train.iters=200` yields a number
/// and `--set sample.method=ode` a string.
void apply_override(json& cfg, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("--set expects key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);

  json value = json::parse(raw, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded()) value = raw;

  json* node = &cfg;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = key.find('.', start);
    const std::string part = key.substr(start, dot - start);
    if (part.empty())
      throw ConfigError("--set key '" + key + "' has an empty segment");
    if (dot == std::string::npos) {
      (*node)[part] = std::move(value);
      return;
    }
    if (!node->contains(part)) (*node)[part] = json::object();
    node = &(*node)[part];
    if (!node->is_object())
      throw ConfigError("--set key '" + key + "' descends into a non-object");
    start = dot + 1;
  }
}

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (const auto& [key, unused] : obj.items()) {
    bool ok = false;
    for (const char* name : allowed) ok = ok || key == name;
    if (!ok) {
      std::string names;
      for (const char* name : allowed)
        names += (names.empty() ? "" : ", ") + std::string(name);
      throw ConfigError("unknown config key '" + where + "." + key +
                        "' (known keys: " + names + ")");
    }
  }
}

template <typename T>
T field(const json& obj, const std::string& where, const char* key, T dflt) {
  if (!obj.contains(key)) return dflt;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config field '" + where + "." + key +
                      "' has the wrong type");
  }
}

/// Parsed and validated run configuration (defaults filled in).
struct RunConfig {
  lie::GroupKind kind;
  std::uint64_t seed = 0;
  std::string out_dir;
  int threads = 0;  ///< 0 = library default / LIEGEN_THREADS

  std::string data_generator;
  json data_params = json::object();
  std::string data_path;
  double split_ratio = 0.0;  ///< 0 = no train/test split

  dyn::DiffusionConfig dynamics;

  int hidden_dim = 0;  ///< 0 = auto
  int depth = 3;

  long iters = 1000;
  int batch = 1024;
  double lr = 5e-4;
  double weight_decay = 0.0;
  std::string loss_name = "auto";
  int probes = 32;
  int exact_threshold = 16;
  double t_floor_frac = 1e-3;
  long checkpoint_every = 0;
  long log_every = 50;
  std::string resume;

  int sample_n = 1000;
  std::string sample_method = "sde";
  bool sample_early_stop = true;
  std::string sample_checkpoint;

  std::string eval_samples;
  std::string eval_reference;
  int permutations = 200;
  double bandwidth = 0.0;
  int bins = 24;

  std::string nll_test;
  std::string nll_checkpoint;
  int xi_samples = 16;
  int max_batch = 4096;
};

RunConfig parse_run_config(const json& cfg) {
  check_keys(cfg, "", {"kind", "seed", "out_dir", "threads", "data",
                       "dynamics", "model", "train", "sample", "eval", "nll"});
  RunConfig rc;
  if (!cfg.contains("kind") || !cfg.at("kind").is_string())
    throw ConfigError("config requires a string 'kind' tag");
  rc.kind = lie::GroupKind::parse(cfg.at("kind").get<std::string>());
  rc.seed = field<std::uint64_t>(cfg, "", "seed", 0);
  rc.out_dir = field<std::string>(cfg, "", "out_dir", "");
  if (rc.out_dir.empty())
    throw ConfigError("config requires a nonempty 'out_dir'");
  rc.threads = field<int>(cfg, "", "threads", 0);
  if (rc.threads < 0) throw ConfigError("threads must be nonnegative");

  if (cfg.contains("data")) {
    const json& d = cfg.at("data");
    check_keys(d, "data", {"generator", "params", "path", "split_ratio"});
    rc.data_generator = field<std::string>(d, "data", "generator", "");
    rc.data_path = field<std::string>(d, "data", "path", "");
    if (d.contains("params")) {
      if (!d.at("params").is_object())
        throw ConfigError("data.params must be a JSON object");
      rc.data_params = d.at("params");
    }
    rc.split_ratio = field<double>(d, "data", "split_ratio", 0.0);
    if (rc.split_ratio < 0.0 || rc.split_ratio >= 1.0)
      throw ConfigError("data.split_ratio must lie in [0, 1)");
  }

  rc.dynamics.kind = rc.kind;
  if (cfg.contains("dynamics")) {
    const json& d = cfg.at("dynamics");
    check_keys(d, "dynamics",
               {"gamma", "horizon_T", "steps_N", "eps_early_stop",
                "reorth_every"});
    rc.dynamics.gamma = field<double>(d, "dynamics", "gamma", 1.0);
    rc.dynamics.horizon_T = field<double>(d, "dynamics", "horizon_T", 10.0);
    rc.dynamics.steps_N = field<int>(d, "dynamics", "steps_N", 500);
    rc.dynamics.eps_early_stop =
        field<double>(d, "dynamics", "eps_early_stop", 0.01);
    rc.dynamics.reorth_every = field<int>(d, "dynamics", "reorth_every", 100);
  }
  rc.dynamics.validate();

  if (cfg.contains("model")) {
    const json& m = cfg.at("model");
    check_keys(m, "model", {"hidden_dim", "depth"});
    rc.hidden_dim = field<int>(m, "model", "hidden_dim", 0);
    rc.depth = field<int>(m, "model", "depth", 3);
    if (rc.hidden_dim < 0 || rc.hidden_dim % 2 != 0)
      throw ConfigError("model.hidden_dim must be 0 (auto) or a positive "
                        "even number");
    if (rc.depth < 1) throw ConfigError("model.depth must be >= 1");
  }

  if (cfg.contains("train")) {
    const json& t = cfg.at("train");
    check_keys(t, "train",
               {"iters", "batch", "lr", "weight_decay", "loss", "probes",
                "exact_threshold", "t_floor_frac", "checkpoint_every",
                "log_every", "resume"});
    rc.iters = field<long>(t, "train", "iters", 1000);
    rc.batch = field<int>(t, "train", "batch", 1024);
    rc.lr = field<double>(t, "train", "lr", 5e-4);
    rc.weight_decay = field<double>(t, "train", "weight_decay", 0.0);
    rc.loss_name = field<std::string>(t, "train", "loss", "auto");
    rc.probes = field<int>(t, "train", "probes", 32);
    rc.exact_threshold = field<int>(t, "train", "exact_threshold", 16);
    rc.t_floor_frac = field<double>(t, "train", "t_floor_frac", 1e-3);
    rc.checkpoint_every = field<long>(t, "train", "checkpoint_every", 0);
    rc.log_every = field<long>(t, "train", "log_every", 50);
    rc.resume = field<std::string>(t, "train", "resume", "");
    if (rc.iters < 0) throw ConfigError("train.iters must be nonnegative");
    if (rc.batch < 1) throw ConfigError("train.batch must be >= 1");
    if (!(rc.lr > 0.0)) throw ConfigError("train.lr must be positive");
    if (rc.weight_decay < 0.0)
      throw ConfigError("train.weight_decay must be nonnegative");
    if (rc.loss_name != "auto" && rc.loss_name != "dsm" &&
        rc.loss_name != "ism")
      throw ConfigError("train.loss must be one of auto, dsm, ism");
    if (rc.probes < 1) throw ConfigError("train.probes must be >= 1");
    if (rc.exact_threshold < 0)
      throw ConfigError("train.exact_threshold must be nonnegative");
    if (rc.t_floor_frac < 0.0 || rc.t_floor_frac >= 1.0)
      throw ConfigError("train.t_floor_frac must lie in [0, 1)");
    if (rc.checkpoint_every < 0 || rc.log_every < 1)
      throw ConfigError("train.checkpoint_every must be >= 0 and "
                        "train.log_every >= 1");
  }

  if (cfg.contains("sample")) {
    const json& s = cfg.at("sample");
    check_keys(s, "sample", {"n", "method", "early_stop", "checkpoint"});
    rc.sample_n = field<int>(s, "sample", "n", 1000);
    rc.sample_method = field<std::string>(s, "sample", "method", "sde");
    rc.sample_early_stop = field<bool>(s, "sample", "early_stop", true);
    rc.sample_checkpoint = field<std::string>(s, "sample", "checkpoint", "");
    if (rc.sample_n < 1) throw ConfigError("sample.n must be >= 1");
    if (rc.sample_method != "sde" && rc.sample_method != "ode")
      throw ConfigError("sample.method must be 'sde' or 'ode'");
  }

  if (cfg.contains("eval")) {
    const json& e = cfg.at("eval");
    check_keys(e, "eval",
               {"samples", "reference", "permutations", "bandwidth", "bins"});
    rc.eval_samples = field<std::string>(e, "eval", "samples", "");
    rc.eval_reference = field<std::string>(e, "eval", "reference", "");
    rc.permutations = field<int>(e, "eval", "permutations", 200);
    rc.bandwidth = field<double>(e, "eval", "bandwidth", 0.0);
    rc.bins = field<int>(e, "eval", "bins", 24);
    if (rc.permutations < 0)
      throw ConfigError("eval.permutations must be nonnegative");
    if (rc.bins < 1) throw ConfigError("eval.bins must be >= 1");
  }

  if (cfg.contains("nll")) {
    const json& n = cfg.at("nll");
    check_keys(n, "nll", {"test", "checkpoint", "xi_samples", "max_batch"});
    rc.nll_test = field<std::string>(n, "nll", "test", "");
    rc.nll_checkpoint = field<std::string>(n, "nll", "checkpoint", "");
    rc.xi_samples = field<int>(n, "nll", "xi_samples", 16);
    rc.max_batch = field<int>(n, "nll", "max_batch", 4096);
    if (rc.xi_samples < 1) throw ConfigError("nll.xi_samples must be >= 1");
    if (rc.max_batch < 1) throw ConfigError("nll.max_batch must be >= 1");
  }

  return rc;
}

void configure_threads(const RunConfig& rc, int flag_threads) {
  int n = 0;
  if (const char* env = std::getenv("LIEGEN_THREADS")) n = std::atoi(env);
  if (rc.threads > 0) n = rc.threads;
  if (flag_threads > 0) n = flag_threads;
  if (n > 0) Eigen::setNbThreads(n);
}

/// Copies the effective (override-applied) config next to the artifacts.
void record_config(const json& cfg, const std::string& out_dir,
                   const std::string& command) {
  fs::create_directories(out_dir);
  liegen::serialize::write_text_file(out_dir + "/config." + command + ".json",
                                     cfg.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Dataset files
// ---------------------------------------------------------------------------

std::string sidecar_path(const std::string& path) {
  const std::string suffix = ".jsonl";
  if (path.size() > suffix.size() &&
      path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0)
    return path.substr(0, path.size() - suffix.size()) + ".meta.json";
  return path + ".meta.json";
}

/// Writes one element per line (`count` lines exactly) plus a
/// <name>.meta.json sidecar holding {"kind", "count", "meta"}.
void write_dataset(const data::Dataset& ds, const std::string& path) {
  std::string body;
  for (const lie::GroupElement& g : ds.items)
    body += liegen::serialize::element_to_json(g).dump() + "\n";
  liegen::serialize::write_text_file(path, body);
  const json side = {
      {"kind", ds.kind.tag()}, {"count", ds.size()}, {"meta", ds.meta}};
  liegen::serialize::write_text_file(sidecar_path(path), side.dump(2) + "\n");
}

/// Reads either the plain one-element-per-line format written by
/// write_dataset (recognized by its sidecar) or the self-describing
/// header+elements format of data::load_jsonl.  Every element must sit on
/// its group within 1e-8.
data::Dataset read_dataset(const std::string& path) {
  if (!fs::exists(path))
    throw ConfigError("dataset file not found: " + path);
  const std::string side = sidecar_path(path);
  if (!fs::exists(side)) return data::load_jsonl(path);

  json header = json::parse(liegen::serialize::read_text_file(side), nullptr,
                            /*allow_exceptions=*/false);
  if (header.is_discarded() || !header.is_object() ||
      !header.contains("kind") || !header.contains("count"))
    throw ConfigError("dataset sidecar " + side +
                      " must hold {kind, count, meta}");
  data::Dataset ds;
  ds.kind = lie::GroupKind::parse(header.at("kind").get<std::string>());
  ds.meta = header.value("meta", json::object());

  const std::vector<std::string> lines = liegen::serialize::split_lines(
      liegen::serialize::read_text_file(path));
  const int count = header.at("count").get<int>();
  if (static_cast<int>(lines.size()) != count)
    throw ConfigError("dataset " + path + " holds " +
                      std::to_string(lines.size()) + " elements but the "
                      "sidecar promises " + std::to_string(count));
  ds.items.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const json entry =
        json::parse(lines[i], nullptr, /*allow_exceptions=*/false);
    if (entry.is_discarded())
      throw ConfigError("dataset " + path + " line " + std::to_string(i + 1) +
                        " is not valid JSON");
    lie::GroupElement g =
        liegen::serialize::element_from_json(ds.kind, entry);
    if (!lie::is_on_group(g))
      throw ConfigError("dataset " + path + " line " + std::to_string(i + 1) +
                        " is not on " + ds.kind.tag() + " within 1e-8");
    ds.items.push_back(std::move(g));
  }
  return ds;
}

/// Resolution order for command inputs: explicit config path, then the
/// held-out split, then the full dataset.
std::string resolve_input(const RunConfig& rc, const std::string& explicit_path,
                          const std::string& preferred,
                          const std::string& fallback) {
  if (!explicit_path.empty()) return explicit_path;
  const std::string pref = rc.out_dir + "/" + preferred;
  if (fs::exists(pref)) return pref;
  return rc.out_dir + "/" + fallback;
}

net::Checkpoint load_checkpoint_checked(const RunConfig& rc,
                                        const std::string& path) {
  if (!fs::exists(path))
    throw ConfigError("checkpoint not found: " + path);
  net::Checkpoint ck = net::load_checkpoint(path);
  if (ck.model.kind() != rc.kind)
    throw ConfigError("checkpoint " + path + " holds kind " +
                      ck.model.kind().tag() + " but the config says " +
                      rc.kind.tag());
  return ck;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

int cmd_make_data(const RunConfig& rc) {
  if (rc.data_generator.empty()) {
    std::string all;
    for (const std::string& g : data::generator_names())
      all += (all.empty() ? "" : ", ") + g;
    throw ConfigError("make-data requires data.generator (one of: " + all +
                      ")");
  }
  const json genspec = {{"generator", rc.data_generator},
                        {"params", rc.data_params},
                        {"seed", rc.seed}};
  const data::Dataset ds = data::generate(genspec);
  if (ds.kind != rc.kind)
    throw ConfigError("generator '" + rc.data_generator + "' produced kind " +
                      ds.kind.tag() + " but the config says " + rc.kind.tag());

  write_dataset(ds, rc.out_dir + "/dataset.jsonl");
  std::cout << "wrote " << ds.size() << " samples of " << ds.kind.tag()
            << " to " << rc.out_dir << "/dataset.jsonl\n";
  if (rc.split_ratio > 0.0) {
    const auto [train_part, test_part] =
        data::split(ds, rc.split_ratio, rc.seed);
    write_dataset(train_part, rc.out_dir + "/train.jsonl");
    write_dataset(test_part, rc.out_dir + "/test.jsonl");
    std::cout << "split " << train_part.size() << "/" << test_part.size()
              << " into train.jsonl and test.jsonl\n";
  }
  return 0;
}

int cmd_train(const RunConfig& rc) {
  const std::string path =
      resolve_input(rc, rc.data_path, "train.jsonl", "dataset.jsonl");
  const data::Dataset ds = read_dataset(path);
  if (ds.kind != rc.kind)
    throw ConfigError("dataset " + path + " holds kind " + ds.kind.tag() +
                      " but the config says " + rc.kind.tag());

  loss::TrainConfig tc{rc.kind};
  tc.hidden_dim = rc.hidden_dim;
  tc.depth = rc.depth;
  tc.iters = rc.iters;
  tc.batch = rc.batch;
  tc.base_lr = rc.lr;
  tc.weight_decay = rc.weight_decay;
  tc.gamma = rc.dynamics.gamma;
  tc.horizon_T = rc.dynamics.horizon_T;
  tc.steps_N = rc.dynamics.steps_N;
  tc.loss = rc.loss_name == "dsm"   ? loss::LossKind::kDsm
            : rc.loss_name == "ism" ? loss::LossKind::kIsm
                                    : loss::LossKind::kAuto;
  tc.dsm_t_floor_frac = rc.t_floor_frac;
  tc.ism.exact_threshold = rc.exact_threshold;
  tc.ism.probes = rc.probes;
  tc.seed = rc.seed;
  tc.out_dir = rc.out_dir;
  tc.checkpoint_every = rc.checkpoint_every;
  tc.log_every = rc.log_every;

  std::optional<net::Checkpoint> resume;
  const net::Checkpoint* resume_ptr = nullptr;
  if (!rc.resume.empty()) {
    resume.emplace(load_checkpoint_checked(rc, rc.resume));
    resume_ptr = &*resume;
  }

  const loss::TrainResult result = loss::train(tc, ds.items, resume_ptr);
  std::cout << "loss branch: "
            << (result.used_loss == loss::LossKind::kDsm ? "dsm" : "ism")
            << "\n"
            << "trained " << result.iterations_run << " iterations on "
            << ds.size() << " samples; final loss " << result.final_loss
            << "\n"
            << "checkpoint: " << rc.out_dir << "/checkpoint_final.bin\n";
  return 0;
}

int cmd_sample(const RunConfig& rc) {
  const std::string ck_path = rc.sample_checkpoint.empty()
                                  ? rc.out_dir + "/checkpoint_final.bin"
                                  : rc.sample_checkpoint;
  const net::Checkpoint ck = load_checkpoint_checked(rc, ck_path);
  const net::NetScoreField field(ck.model, rc.exact_threshold, rc.probes,
                                 rc.seed);

  Rng rng = liegen::make_stream(rc.seed, kSamplerStreamTag);
  const bool ode = rc.sample_method == "ode";
  const dyn::StateBatch end = dyn::sample_backward(
      field, rc.dynamics, rc.sample_n, rng, ode, rc.sample_early_stop);

  data::Dataset out;
  out.kind = rc.kind;
  out.items.reserve(static_cast<std::size_t>(end.size()));
  for (int i = 0; i < end.size(); ++i)
    out.items.push_back(
        lie::GroupElement{rc.kind, end.g[static_cast<std::size_t>(i)]});
  out.meta = {{"generator", "sampler"},
              {"params",
               {{"method", rc.sample_method},
                {"n", rc.sample_n},
                {"early_stop", rc.sample_early_stop},
                {"checkpoint_iteration", ck.iteration}}},
              {"seed", rc.seed}};
  write_dataset(out, rc.out_dir + "/samples.jsonl");

  const evl::EvalReport report = evl::evaluate(out, rc.bins);
  evl::save_report(report, rc.out_dir + "/sample_report.json");
  std::cout << "sampled " << out.size() << " elements of " << rc.kind.tag()
            << " (" << rc.sample_method << ")\n"
            << "manifold defect: max " << report.manifold.max_defect
            << ", mean " << report.manifold.mean_defect << "\n";
  return 0;
}

int cmd_eval(const RunConfig& rc) {
  const std::string gen_path =
      resolve_input(rc, rc.eval_samples, "samples.jsonl", "samples.jsonl");
  const std::string ref_path =
      resolve_input(rc, rc.eval_reference, "test.jsonl", "dataset.jsonl");
  const data::Dataset generated = read_dataset(gen_path);
  const data::Dataset reference = read_dataset(ref_path);

  evl::MmdConfig mc;
  mc.bandwidth = rc.bandwidth;
  mc.permutations = rc.permutations;
  mc.seed = rc.seed;
  const evl::EvalReport report =
      evl::evaluate(generated, reference, mc, rc.bins);
  evl::save_report(report, rc.out_dir + "/eval_report.json");
  std::cout << "mmd2 = " << report.mmd.statistic
            << ", p = " << report.mmd.p_value
            << " (bandwidth " << report.mmd.bandwidth << ", "
            << report.mmd.permutations << " permutations)\n"
            << "manifold defect: max " << report.manifold.max_defect << "\n";
  return 0;
}

int cmd_nll(const RunConfig& rc) {
  const std::string test_path =
      resolve_input(rc, rc.nll_test, "test.jsonl", "dataset.jsonl");
  const data::Dataset test = read_dataset(test_path);
  if (test.kind != rc.kind)
    throw ConfigError("test set " + test_path + " holds kind " +
                      test.kind.tag() + " but the config says " +
                      rc.kind.tag());
  const std::string ck_path = rc.nll_checkpoint.empty()
                                  ? rc.out_dir + "/checkpoint_final.bin"
                                  : rc.nll_checkpoint;
  const net::Checkpoint ck = load_checkpoint_checked(rc, ck_path);
  const net::NetScoreField field(ck.model, rc.exact_threshold, rc.probes,
                                 rc.seed);

  nll::NllConfig nc{rc.kind};
  nc.dynamics = rc.dynamics;
  nc.xi_samples = rc.xi_samples;
  nc.max_batch = rc.max_batch;
  nc.seed = rc.seed;
  const nll::NllEstimate est = nll::nll(field, test.items, nc);
  nll::save_nll_report(rc.out_dir + "/nll.json", est);
  std::cout << "nll = " << est.nll << " +- " << est.se << " (S="
            << est.xi_samples << ", N=" << test.size() << ", haar_normalized="
            << (est.haar_normalized ? "true" : "false") << ")\n";
  return 0;
}

int run(int argc, char** argv) {
  CLI::App app{"liegen: diffusion generative modeling on compact matrix "
               "groups"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  int flag_threads = 0;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration")
        ->required();
    sub->add_option("--set", overrides,
                    "dotted-key override, e.g. --set train.iters=2000");
    sub->add_option("--threads", flag_threads,
                    "internal parallelism cap (default: LIEGEN_THREADS)");
  };
  add_common(app.add_subcommand("make-data",
                                "generate a dataset from data.generator"));
  add_common(app.add_subcommand("train", "fit the score network"));
  add_common(app.add_subcommand(
      "sample", "integrate the reverse dynamics from the prior"));
  add_common(app.add_subcommand(
      "eval", "two-sample test and manifold report for a samples file"));
  add_common(app.add_subcommand("nll", "test-set negative log-likelihood"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  json cfg = load_config_file(config_path);
  for (const std::string& assignment : overrides)
    apply_override(cfg, assignment);

  const RunConfig rc = parse_run_config(cfg);
  configure_threads(rc, flag_threads);
  record_config(cfg, rc.out_dir, command);

  if (command == "make-data") return cmd_make_data(rc);
  if (command == "train") return cmd_train(rc);
  if (command == "sample") return cmd_sample(rc);
  if (command == "eval") return cmd_eval(rc);
  return cmd_nll(rc);
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const liegen::Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
