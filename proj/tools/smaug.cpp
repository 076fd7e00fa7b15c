#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "smaug/costmodel/cost.hpp"
#include "smaug/evaluator/retrieval.hpp"
#include "smaug/trainer/trainer.hpp"
#include "smaug/vidio/shard.hpp"

namespace fs = std::filesystem;
using namespace smaug;
using trainer::TrainConfig;

namespace {

// Raised for failures whose category the command already knows.
struct CliError : std::runtime_error {
  std::string category;
  CliError(std::string cat, const std::string& msg) : std::runtime_error(msg), category(std::move(cat)) {}
};

struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> overrides;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "key=value configuration file")->check(CLI::ExistingFile);
    for (const auto& key : trainer::config_keys()) {
      std::string names = "--" + key;
      std::string dashed = key;
      std::replace(dashed.begin(), dashed.end(), '_', '-');
      if (dashed != key) names += ",--" + dashed;
      cmd->add_option(names, overrides[key], "override config key " + key);
    }
  }

  bool any_override() const {
    for (const auto& [k, v] : overrides)
      if (!v.empty()) return true;
    return false;
  }

  TrainConfig resolve() const {
    try {
      TrainConfig cfg = config_path.empty() ? TrainConfig{} : trainer::load_config(config_path);
      for (const auto& key : trainer::config_keys()) {
        auto it = overrides.find(key);
        if (it != overrides.end() && !it->second.empty()) trainer::set_key(cfg, key, it->second);
      }
      cfg.validate();
      return cfg;
    } catch (const std::invalid_argument& e) {
      throw CliError("config", e.what());
    }
  }
};

std::string header(const TrainConfig& cfg) {
  std::istringstream in(trainer::to_text(cfg));
  std::string out, line;
  while (std::getline(in, line)) out += "# " + line + "\n";
  return out;
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(p);
  if (!f) throw CliError("io", "cannot write " + p.string());
  return f;
}

std::vector<vidio::VideoTextPair> load_pairs(const fs::path& path, const TrainConfig& cfg) {
  vidio::Shard s = vidio::read_shard(path);
  if (s.header.geometry != cfg.geometry()) {
    throw CliError("data", "shard " + path.string() + " geometry differs from the configured clip geometry");
  }
  return std::move(s.pairs);
}

void cmd_gen_data(const ConfigFlags& flags, const fs::path& out) {
  const TrainConfig cfg = flags.resolve();
  auto all = vidio::generate_corpus(cfg.corpus_options());
  std::vector<vidio::VideoTextPair> train(all.begin(), all.begin() + static_cast<long>(cfg.n_train));
  std::vector<vidio::VideoTextPair> test(all.begin() + static_cast<long>(cfg.n_train), all.end());
  fs::create_directories(out);
  vidio::write_shard(out / "train.smg", train);
  vidio::write_shard(out / "test.smg", test);
  auto manifest = open_out(out / "manifest.txt");
  manifest << header(cfg) << "train.smg pairs=" << train.size() << "\ntest.smg pairs=" << test.size() << "\n";
  std::printf("wrote %zu train and %zu test pairs to %s\n", train.size(), test.size(), out.c_str());
}

struct PretrainArgs {
  std::string data;
  std::string out;
  std::string init;
  std::string resume;
};

void cmd_pretrain(const ConfigFlags& flags, const PretrainArgs& a) {
  std::optional<trainer::Checkpoint> resume;
  TrainConfig cfg;
  if (!a.resume.empty()) {
    if (flags.any_override() || !flags.config_path.empty()) {
      throw CliError("config", "--resume uses the checkpoint's configuration; drop config flags");
    }
    resume = trainer::load_checkpoint(a.resume);
    try {
      cfg = trainer::parse_config(resume->config_text);
    } catch (const std::invalid_argument& e) {
      throw CliError("checkpoint", e.what());
    }
  } else {
    cfg = flags.resolve();
  }
  auto pairs = load_pairs(a.data, cfg);
  if (pairs.size() != cfg.n_train) {
    std::fprintf(stderr, "note: shard has %zu pairs, config n_train=%zu; training on the shard\n", pairs.size(),
                 cfg.n_train);
  }
  trainer::Trainer t = resume ? trainer::Trainer(*resume, std::move(pairs)) : trainer::Trainer(cfg, std::move(pairs));
  if (!a.init.empty()) {
    if (resume) throw CliError("config", "--init and --resume are exclusive");
    const auto src = trainer::load_checkpoint(a.init);
    const std::size_t n = t.warm_start(src.params);
    std::printf("warm start: %zu of %zu parameters copied from %s\n", n, t.params().all().size(), a.init.c_str());
  }
  const fs::path out = a.out;
  fs::create_directories(out);
  auto save = [&](const std::string& name) {
    trainer::save_checkpoint(out / name, t.checkpoint());
    std::printf("checkpoint %s (step %llu)\n", (out / name).c_str(), static_cast<unsigned long long>(t.step()));
  };
  if (cfg.epochs == 0) {
    save("epoch_0.smgc");
    return;
  }
  const bool append = resume.has_value() && fs::exists(out / "loss.csv");
  std::ofstream log(out / "loss.csv", append ? std::ios::app : std::ios::trunc);
  if (!log) throw CliError("io", "cannot write " + (out / "loss.csv").string());
  if (!append) log << header(cfg) << "step,lr,vtc,vtm,mlm,mvm,total\n";
  const auto spe = t.steps_per_epoch();
  while (t.step() < t.total_steps()) {
    const auto logs = t.run(spe - t.step() % spe, [&](const trainer::StepLog& s) {
      log << s.step << ',' << trainer::format_double(s.lr) << ',' << trainer::format_double(s.vtc) << ','
          << trainer::format_double(s.vtm) << ',' << trainer::format_double(s.mlm) << ','
          << trainer::format_double(s.mvm) << ',' << trainer::format_double(s.total) << '\n';
    });
    log.flush();
    double mean = 0.0;
    for (const auto& s : logs) mean += s.total / static_cast<double>(logs.size());
    const auto epoch = t.step() / spe;
    std::printf("epoch %llu mean loss %.4f\n", static_cast<unsigned long long>(epoch), mean);
    save("epoch_" + std::to_string(epoch) + ".smgc");
  }
}

struct EvaluateArgs {
  std::string checkpoint;
  std::string data;
  std::string out;
  std::optional<std::uint64_t> seed;
};

void cmd_evaluate(const EvaluateArgs& a) {
  const auto ckpt = trainer::load_checkpoint(a.checkpoint);
  TrainConfig cfg;
  try {
    cfg = trainer::parse_config(ckpt.config_text);
  } catch (const std::invalid_argument& e) {
    throw CliError("checkpoint", e.what());
  }
  const auto pairs = load_pairs(a.data, cfg);
  if (pairs.empty()) throw CliError("data", "shard " + a.data + " holds no pairs");
  trainer::SmaugModel model(cfg);
  const auto report = eval::evaluate_retrieval(model, ckpt.params, pairs, a.seed.value_or(cfg.seed));
  const fs::path out = a.out;
  fs::create_directories(out);
  std::string head = header(cfg) + "# checkpoint=" + a.checkpoint + "\n# step=" + std::to_string(ckpt.step) +
                     "\n# data=" + a.data + "\n";
  eval::write_report(out / "metrics.txt", out / "similarity.csv", report, head);
  std::printf("n=%zu r1=%.4f r5=%.4f r10=%.4f mc_accuracy=%.4f\n", report.n, report.r1, report.r5, report.r10,
              report.mc_accuracy);
}

struct BenchmarkArgs {
  std::string preset = "desk";
  std::vector<double> mask_grid{0.10, 0.25, 0.50, 0.65};
  std::string out;
  std::size_t text_len = 12;
  std::size_t batch = 2;
  bool instrumented = false;
  std::size_t time_reps = 0;
};

void cmd_benchmark(ConfigFlags flags, const BenchmarkArgs& a) {
  TrainConfig cfg;
  cost::Workload w;
  w.text_len = a.text_len;
  w.batch = a.batch;
  if (a.preset == "vit-b") {
    cfg = cost::vit_b_config();
    w = cost::vit_b_workload();
    if (flags.config_path.empty()) {
      // Apply overrides on top of the preset.
      try {
        for (const auto& key : trainer::config_keys()) {
          const auto& v = flags.overrides[key];
          if (!v.empty()) trainer::set_key(cfg, key, v);
        }
        cfg.validate();
      } catch (const std::invalid_argument& e) {
        throw CliError("config", e.what());
      }
    } else {
      throw CliError("config", "--preset vit-b does not combine with --config");
    }
  } else if (a.preset == "desk") {
    cfg = flags.resolve();
  } else {
    throw CliError("usage", "unknown preset '" + a.preset + "'");
  }
  if (a.instrumented && a.preset != "desk") throw CliError("usage", "--instrumented needs the desk preset");

  std::ofstream file;
  std::ostream* os = &std::cout;
  if (!a.out.empty()) {
    file = open_out(a.out);
    os = &file;
  }
  *os << header(cfg) << "# text_len=" << w.text_len << "\n# batch=" << w.batch << "\n";
  const std::vector<std::string> modules{"encoder", "temporal", "decoder", "text", "selector", "fusion", "heads"};
  *os << "mask_ratio,keeping_rate,frames_per_clip,kappa";
  for (const auto& m : modules) *os << ',' << m;
  *os << ",total,baseline_total,speedup";
  if (a.instrumented) *os << ",instrumented_total,max_module_rel_error";
  if (a.time_reps > 0) *os << ",forward_seconds";
  *os << '\n';

  const auto base = cost::baseline_of(cfg, w);
  const double base_total = static_cast<double>(cost::analytic_cost(base.cfg, base.workload).total());
  for (double m : a.mask_grid) {
    TrainConfig c = cfg;
    c.mask_ratio = m;
    try {
      c.validate();
    } catch (const std::invalid_argument& e) {
      throw CliError("config", e.what());
    }
    const auto r = cost::analytic_cost(c, w);
    *os << trainer::format_double(m) << ',' << trainer::format_double(c.keeping_rate) << ',' << c.frames_per_clip
        << ',' << c.kappa;
    for (const auto& mod : modules) *os << ',' << r.at(mod);
    *os << ',' << r.total() << ',' << static_cast<std::uint64_t>(base_total) << ','
        << trainer::format_double(base_total / static_cast<double>(r.total()));
    if (a.instrumented) {
      const auto ir = cost::instrumented_cost(c, w);
      double worst = 0.0;
      for (const auto& [tag, v] : ir.macs) {
        const double av = static_cast<double>(r.at(tag));
        worst = std::max(worst, std::abs(av - static_cast<double>(v)) / std::max(av, static_cast<double>(v)));
      }
      *os << ',' << ir.total() << ',' << trainer::format_double(worst);
    }
    if (a.time_reps > 0) {
      const auto t0 = std::chrono::steady_clock::now();
      for (std::size_t i = 0; i < a.time_reps; ++i) cost::instrumented_cost(c, w);
      const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      *os << ',' << trainer::format_double(s / static_cast<double>(a.time_reps));
    }
    *os << '\n';
  }
}

void cmd_inspect(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CliError("io", "cannot read " + path.string());
  char magic[4] = {};
  f.read(magic, 4);
  const std::string m(magic, static_cast<std::size_t>(f.gcount()));
  if (m == "SMG1") {
    const auto h = vidio::read_shard_header(path);
    const auto& g = h.geometry;
    std::printf("shard %s\nversion %u\npairs %u\nframes %zu\nheight %zu\nwidth %zu\nchannels %zu\npatch %zu\n",
                path.c_str(), h.version, h.pair_count, g.frames, g.height, g.width, g.channels, g.patch);
  } else if (m == "SMGC") {
    const auto c = trainer::load_checkpoint(path);
    std::size_t values = 0;
    for (const auto& p : c.params.all()) values += p.value.data().size();
    std::printf("checkpoint %s\nseed %llu\nstep %llu\nparameters %zu\nvalues %zu\nmoments %zu\nconfig:\n%s",
                path.c_str(), static_cast<unsigned long long>(c.seed), static_cast<unsigned long long>(c.step),
                c.params.all().size(), values, c.moments.size(), c.config_text.c_str());
  } else {
    throw CliError("data", path.string() + " is neither a shard nor a checkpoint");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse masked video-language pre-training at desk scale"};
  app.require_subcommand(1);

  ConfigFlags gen_flags, pre_flags, bench_flags;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen-data", "write train and test shards of the synthetic corpus");
  gen_flags.attach(gen);
  gen->add_option("--out", gen_out, "output directory")->required();

  PretrainArgs pa;
  auto* pre = app.add_subcommand("pretrain", "pre-train and write checkpoints plus a per-step loss CSV");
  pre_flags.attach(pre);
  pre->add_option("--data", pa.data, "training shard")->required()->check(CLI::ExistingFile);
  pre->add_option("--out", pa.out, "output directory")->required();
  pre->add_option("--init", pa.init, "warm-start parameters from this checkpoint")->check(CLI::ExistingFile);
  pre->add_option("--resume", pa.resume, "continue the run stored in this checkpoint")->check(CLI::ExistingFile);

  EvaluateArgs ea;
  auto* ev = app.add_subcommand("evaluate", "text-to-video retrieval and multiple-choice metrics");
  ev->add_option("--checkpoint", ea.checkpoint)->required()->check(CLI::ExistingFile);
  ev->add_option("--data", ea.data, "test shard")->required()->check(CLI::ExistingFile);
  ev->add_option("--out", ea.out, "output directory")->required();
  ev->add_option("--mc-seed", ea.seed, "seed for multiple-choice distractors (default: config seed)");

  BenchmarkArgs ba;
  auto* bench = app.add_subcommand("benchmark", "analytic multiply-accumulate counts over a masking grid");
  bench_flags.attach(bench);
  bench->add_option("--preset", ba.preset, "desk (config and flags) or vit-b")->capture_default_str();
  bench->add_option("--mask-grid", ba.mask_grid, "mask ratios")->delimiter(',')->capture_default_str();
  bench->add_option("--out", ba.out, "CSV path (default stdout)");
  bench->add_option("--text-len", ba.text_len, "caption length in tokens")->capture_default_str();
  bench->add_option("--batch", ba.batch, "pairs per forward pass")->capture_default_str();
  bench->add_flag("--instrumented", ba.instrumented, "also count MACs on a real forward pass");
  bench->add_option("--time", ba.time_reps, "time this many forward passes per row");

  std::string inspect_path;
  auto* ins = app.add_subcommand("inspect", "print the header of a shard or checkpoint");
  ins->add_option("file", inspect_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error[usage]: %s\n", e.what());
    return 2;
  }

  try {
    if (*gen) cmd_gen_data(gen_flags, gen_out);
    if (*pre) cmd_pretrain(pre_flags, pa);
    if (*ev) cmd_evaluate(ea);
    if (*bench) cmd_benchmark(bench_flags, ba);
    if (*ins) cmd_inspect(inspect_path);
  } catch (const CliError& e) {
    std::fprintf(stderr, "error[%s]: %s\n", e.category.c_str(), e.what());
    return 1;
  } catch (const vidio::ShardError& e) {
    std::fprintf(stderr, "error[data]: %s\n", e.what());
    return 1;
  } catch (const trainer::CheckpointError& e) {
    std::fprintf(stderr, "error[checkpoint]: %s\n", e.what());
    return 1;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "error[io]: %s\n", e.what());
    return 1;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error[invalid]: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error[runtime]: %s\n", e.what());
    return 1;
  }
  return 0;
}
