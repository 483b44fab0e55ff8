// somf: train and benchmark streaming matrix factorizations from the shell.
//
// Subcommands:
//   run      train one configuration, write a trace CSV
//   bench    run several variants on shared data, write a comparison report
//   extract  cut an image volume into normalized patch samples
//   synth    generate seeded synthetic data with controllable redundancy
//
// Exit codes: 0 success, 2 invalid configuration, 3 I/O failure.

#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "somf/data_io.hpp"
#include "somf/driver.hpp"
#include "somf/errors.hpp"

namespace {

using somf::Algorithm;
using somf::ConfigError;
using somf::FactorizationConfig;
using somf::IoError;

struct RunOptions {
  FactorizationConfig cfg;
  std::string algorithm = "omf";
  std::string data;
  std::string out = "trace.csv";
  std::string normalize = "none";
  std::string config_file;
  std::string save_checkpoint;
  std::string resume;
};

Algorithm parse_algorithm(const std::string& name) {
  if (name == "omf") return Algorithm::Omf;
  if (name == "somf") return Algorithm::Somf;
  throw ConfigError("algorithm must be omf or somf, got '" + name + "'");
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

somf::DenseMatrix load_data(const std::string& path) {
  if (path.empty()) throw ConfigError("data: no input file given (use --data)");
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv") {
    return somf::load_csv_matrix(path);
  }
  return somf::load_matrix(path);
}

// Config file keys mirror the long flag names. Flags given on the command
// line win over file values, which win over defaults.
void apply_config_file(const std::string& path, RunOptions& opt) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file " + path + ": " + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config file " + path + ": expected a JSON object");

  for (const auto& [key, value] : doc.items()) {
    try {
      if (key == "algorithm") {
        opt.algorithm = value.get<std::string>();
      } else if (key == "k") {
        opt.cfg.k = value.get<std::size_t>();
      } else if (key == "reduction") {
        opt.cfg.reduction = value.get<double>();
      } else if (key == "lambda") {
        opt.cfg.lambda = value.get<double>();
      } else if (key == "code_l1_ratio") {
        opt.cfg.code_l1_ratio = value.get<double>();
      } else if (key == "dict_l1_ratio") {
        opt.cfg.dict_l1_ratio = value.get<double>();
      } else if (key == "v_weight") {
        opt.cfg.v_weight = value.get<double>();
      } else if (key == "batch_size") {
        opt.cfg.batch_size = value.get<std::size_t>();
      } else if (key == "epochs") {
        opt.cfg.epochs = value.get<std::size_t>();
      } else if (key == "seed") {
        opt.cfg.seed = value.get<std::uint64_t>();
      } else if (key == "eval_subset") {
        opt.cfg.eval_subset = value.get<std::size_t>();
      } else if (key == "pipelined") {
        opt.cfg.pipelined = value.get<bool>();
      } else if (key == "no_averaging") {
        opt.cfg.no_averaging = value.get<bool>();
      } else if (key == "code_tol") {
        opt.cfg.code_tol = value.get<double>();
      } else if (key == "code_max_sweeps") {
        opt.cfg.code_max_sweeps = value.get<std::size_t>();
      } else if (key == "dict_passes") {
        opt.cfg.dict_passes = value.get<std::size_t>();
      } else if (key == "allow_invalid_schedule") {
        opt.cfg.allow_invalid_schedule = value.get<bool>();
      } else if (key == "mask_per_sample") {
        opt.cfg.mask_per_sample = value.get<bool>();
      } else if (key == "normalize") {
        opt.normalize = value.get<std::string>();
      } else if (key == "data") {
        opt.data = value.get<std::string>();
      } else if (key == "out") {
        opt.out = value.get<std::string>();
      } else {
        throw ConfigError("config file " + path + ": unknown key '" + key + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config file " + path + ": key '" + key + "': " + e.what());
    }
  }
}

// Effective settings echoed as comment lines so a trace is self-describing.
void write_config_echo(std::ostream& out, const RunOptions& opt) {
  const FactorizationConfig& c = opt.cfg;
  out << "# algorithm = " << opt.algorithm << "\n";
  out << "# data = " << opt.data << "\n";
  out << "# k = " << c.k << "\n";
  out << "# reduction = " << format_double(c.reduction) << "\n";
  out << "# lambda = " << format_double(c.lambda) << "\n";
  out << "# code_l1_ratio = " << format_double(c.code_l1_ratio) << "\n";
  out << "# dict_l1_ratio = " << format_double(c.dict_l1_ratio) << "\n";
  out << "# v_weight = " << format_double(c.v_weight) << "\n";
  out << "# batch_size = " << c.batch_size << "\n";
  out << "# epochs = " << c.epochs << "\n";
  out << "# seed = " << c.seed << "\n";
  out << "# eval_subset = " << c.eval_subset << "\n";
  out << "# pipelined = " << (c.pipelined ? "true" : "false") << "\n";
  out << "# no_averaging = " << (c.no_averaging ? "true" : "false") << "\n";
  out << "# code_tol = " << format_double(c.code_tol) << "\n";
  out << "# code_max_sweeps = " << c.code_max_sweeps << "\n";
  out << "# dict_passes = " << c.dict_passes << "\n";
  out << "# allow_invalid_schedule = " << (c.allow_invalid_schedule ? "true" : "false") << "\n";
  out << "# mask_per_sample = " << (c.mask_per_sample ? "true" : "false") << "\n";
  out << "# normalize = " << opt.normalize << "\n";
}

void write_trace(const std::string& path, const RunOptions& opt, const somf::RunTrace& trace) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open trace output " + path);
  write_config_echo(out, opt);
  out << "t,seconds,touched_coords,f_bar,g_bar\n";
  for (const somf::TraceRow& row : trace.rows) {
    out << row.t << ',' << format_double(row.seconds) << ',' << row.touched << ','
        << format_double(row.f_bar) << ',' << format_double(row.g_bar) << '\n';
  }
  if (!out) throw IoError("short write to trace output " + path);
}

void add_config_flags(CLI::App* cmd, RunOptions& opt) {
  cmd->add_option("--k", opt.cfg.k, "dictionary atoms");
  cmd->add_option("--reduction", opt.cfg.reduction, "coordinate reduction factor r >= 1");
  cmd->add_option("--lambda", opt.cfg.lambda, "code penalty strength");
  cmd->add_option("--code-l1-ratio", opt.cfg.code_l1_ratio, "l1 share of the code penalty");
  cmd->add_option("--dict-l1-ratio", opt.cfg.dict_l1_ratio, "l1 share of the column ball");
  cmd->add_option("--v-weight", opt.cfg.v_weight, "weight schedule exponent");
  cmd->add_option("--batch-size", opt.cfg.batch_size, "samples per iteration");
  cmd->add_option("--epochs", opt.cfg.epochs, "passes over the data");
  cmd->add_option("--seed", opt.cfg.seed, "run seed");
  cmd->add_option("--eval-subset", opt.cfg.eval_subset, "columns used for objective estimates");
  cmd->add_flag("--pipelined", opt.cfg.pipelined, "overlap bookkeeping with the dictionary update");
  cmd->add_flag("--no-averaging", opt.cfg.no_averaging, "ablation: keep only the latest masked estimate");
  cmd->add_option("--code-tol", opt.cfg.code_tol, "code solver KKT tolerance");
  cmd->add_option("--code-max-sweeps", opt.cfg.code_max_sweeps, "code solver sweep cap");
  cmd->add_option("--dict-passes", opt.cfg.dict_passes, "dictionary sweeps per iteration (exact algorithm)");
  cmd->add_flag("--allow-invalid-schedule", opt.cfg.allow_invalid_schedule,
                "accept schedule exponents outside the supported interval");
  cmd->add_flag("--mask-per-sample", opt.cfg.mask_per_sample, "draw one mask per sample instead of per batch");
  cmd->add_option("--normalize", opt.normalize, "sample normalization: none, l2, center_l2");
  cmd->add_option("--data", opt.data, "input matrix (.csv or binary container)");
}

int cmd_run(RunOptions& opt) {
  opt.cfg.algorithm = parse_algorithm(opt.algorithm);
  somf::DenseMatrix x = load_data(opt.data);
  somf::normalize_samples(x, somf::parse_normalize(opt.normalize));

  somf::RunHooks hooks;
  hooks.checkpoint_out = opt.save_checkpoint;

  somf::RunResult result;
  if (!opt.resume.empty()) {
    const somf::Checkpoint ckpt = somf::load_checkpoint(opt.resume);
    // The checkpoint defines the run; only the epoch target comes from the
    // command line. Adopt its config so the trace echo and summary describe
    // what actually executed.
    const std::size_t total_epochs = opt.cfg.epochs;
    opt.cfg = ckpt.cfg;
    opt.cfg.epochs = total_epochs;
    opt.algorithm = opt.cfg.algorithm == somf::Algorithm::Somf ? "somf" : "omf";
    result = somf::resume_run(x, ckpt, total_epochs, hooks);
  } else {
    result = somf::run(x, opt.cfg, hooks);
  }
  write_trace(opt.out, opt, result.trace);

  std::printf("%s: %" PRIu64 " iterations, %" PRIu64 " touched coordinates\n",
              opt.algorithm.c_str(), result.diag.iterations, result.touched);
  if (!result.trace.rows.empty()) {
    std::printf("final f_bar %.6g, final g_bar %.6g\n", result.trace.rows.back().f_bar,
                result.trace.rows.back().g_bar);
  }
  std::printf("trace written to %s\n", opt.out.c_str());
  return 0;
}

struct BenchVariant {
  std::string name;
  somf::RunResult result;
  double wall_seconds = 0.0;
};

int cmd_bench(RunOptions& opt, const std::string& variants_csv, const std::string& report_path) {
  std::vector<std::string> variants;
  for (std::size_t pos = 0; pos < variants_csv.size();) {
    const std::size_t comma = variants_csv.find(',', pos);
    const std::size_t end = comma == std::string::npos ? variants_csv.size() : comma;
    if (end > pos) variants.push_back(variants_csv.substr(pos, end - pos));
    pos = end + 1;
  }
  if (variants.size() < 2) {
    throw ConfigError("variants: need at least two of omf, somf, somf-no-averaging");
  }
  bool has_omf = false;
  for (const std::string& v : variants) {
    if (v == "omf") has_omf = true;
    else if (v != "somf" && v != "somf-no-averaging") {
      throw ConfigError("variants: unknown variant '" + v + "'");
    }
  }
  if (!has_omf) throw ConfigError("variants: omf must be included as the speed-up baseline");

  somf::DenseMatrix x = load_data(opt.data);
  somf::normalize_samples(x, somf::parse_normalize(opt.normalize));

  const std::filesystem::path report(report_path);
  const std::filesystem::path dir = report.has_parent_path() ? report.parent_path()
                                                             : std::filesystem::path(".");

  // One variant at a time so wall-clock numbers are not co-scheduled.
  std::vector<BenchVariant> runs;
  for (const std::string& name : variants) {
    RunOptions vopt = opt;
    vopt.algorithm = name == "omf" ? "omf" : "somf";
    vopt.cfg.algorithm = parse_algorithm(vopt.algorithm);
    vopt.cfg.no_averaging = (name == "somf-no-averaging");

    const auto start = std::chrono::steady_clock::now();
    BenchVariant v;
    v.name = name;
    v.result = somf::run(x, vopt.cfg);
    v.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_trace((dir / ("trace_" + name + ".csv")).string(), vopt, v.result.trace);
    runs.push_back(std::move(v));
    std::printf("%-18s touched %" PRIu64 "  wall %.3fs\n", name.c_str(),
                runs.back().result.touched, runs.back().wall_seconds);
  }

  const BenchVariant* baseline = nullptr;
  for (const BenchVariant& v : runs) {
    if (v.name == "omf") baseline = &v;
  }

  std::ofstream out(report_path);
  if (!out) throw IoError("cannot open report output " + report_path);
  out << "variant,final_f_bar,wall_seconds,touched_coords,coord_speedup_vs_omf,wall_speedup_vs_omf\n";
  for (const BenchVariant& v : runs) {
    const double f = v.result.trace.rows.empty() ? 0.0 : v.result.trace.rows.back().f_bar;
    const double coord_ratio = static_cast<double>(baseline->result.touched) /
                               static_cast<double>(v.result.touched);
    const double wall_ratio = baseline->wall_seconds / v.wall_seconds;
    out << v.name << ',' << format_double(f) << ',' << format_double(v.wall_seconds) << ','
        << v.result.touched << ',' << format_double(coord_ratio) << ','
        << format_double(wall_ratio) << '\n';
  }
  if (!out) throw IoError("short write to report output " + report_path);
  std::printf("report written to %s\n", report_path.c_str());
  return 0;
}

int cmd_extract(const std::string& volume_path, const std::string& out_path,
                somf::PatchSpec spec, const std::string& normalize) {
  const somf::Volume volume = somf::load_volume(volume_path);
  spec.channels = volume.channels;
  somf::DenseMatrix patches = somf::extract_patches(volume, spec);
  somf::normalize_samples(patches, somf::parse_normalize(normalize));
  somf::save_matrix(out_path, patches);
  std::printf("extracted %zu patches of dimension %zu to %s\n", patches.cols(), patches.rows(),
              out_path.c_str());
  return 0;
}

int cmd_synth(const somf::SyntheticSpec& spec, std::uint64_t seed, const std::string& out_path) {
  const somf::DenseMatrix x = somf::synthesize(spec, seed);
  somf::save_matrix(out_path, x);
  std::printf("synthesized %zux%zu matrix to %s\n", x.rows(), x.cols(), out_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"streaming matrix factorization trainer and benchmark"};
  app.require_subcommand(1);

  RunOptions run_opt;
  CLI::App* run_cmd = app.add_subcommand("run", "train one configuration and write a trace CSV");
  run_cmd->add_option("--algorithm", run_opt.algorithm, "omf or somf");
  add_config_flags(run_cmd, run_opt);
  run_cmd->add_option("--out", run_opt.out, "trace CSV path");
  run_cmd->add_option("--config", run_opt.config_file, "JSON config file (flags override it)");
  run_cmd->add_option("--save-checkpoint", run_opt.save_checkpoint, "write final state here");
  run_cmd->add_option("--resume", run_opt.resume, "continue from a checkpoint file");

  RunOptions bench_opt;
  std::string variants = "omf,somf";
  std::string report_path = "bench_report.csv";
  CLI::App* bench_cmd = app.add_subcommand("bench", "compare variants on shared data and seed");
  add_config_flags(bench_cmd, bench_opt);
  bench_cmd->add_option("--variants", variants, "comma list of omf, somf, somf-no-averaging");
  bench_cmd->add_option("--out", report_path, "report CSV path");
  bench_cmd->add_option("--config", bench_opt.config_file, "JSON config file (flags override it)");

  std::string volume_path, extract_out = "patches.somfmat", extract_norm = "center_l2";
  somf::PatchSpec patch_spec;
  CLI::App* extract_cmd = app.add_subcommand("extract", "cut a volume into patch samples");
  extract_cmd->add_option("--volume", volume_path, "raw volume file")->required();
  extract_cmd->add_option("--out", extract_out, "output matrix path");
  extract_cmd->add_option("--height", patch_spec.height, "patch height");
  extract_cmd->add_option("--width", patch_spec.width, "patch width");
  extract_cmd->add_option("--stride", patch_spec.stride, "extraction stride");
  extract_cmd->add_option("--normalize", extract_norm, "none, l2, center_l2");

  somf::SyntheticSpec synth_spec;
  std::uint64_t synth_seed = 0;
  std::string synth_out = "synthetic.somfmat";
  CLI::App* synth_cmd = app.add_subcommand("synth", "generate seeded synthetic data");
  synth_cmd->add_option("--p", synth_spec.p, "feature dimension");
  synth_cmd->add_option("--n", synth_spec.n, "sample count");
  synth_cmd->add_option("--k", synth_spec.k, "generating atoms");
  synth_cmd->add_option("--duplication", synth_spec.duplication, "feature row duplication factor");
  synth_cmd->add_option("--sparsity", synth_spec.sparsity, "expected active code fraction");
  synth_cmd->add_option("--noise", synth_spec.noise, "additive noise level");
  synth_cmd->add_option("--seed", synth_seed, "generator seed");
  synth_cmd->add_option("--out", synth_out, "output matrix path");

  // The config file must land before flag values and CLI11 parses flags in
  // one shot, so peel --config off argv first, then let parse() overwrite.
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") {
      try {
        if (argc > 1 && std::string(argv[1]) == "bench") {
          apply_config_file(argv[i + 1], bench_opt);
        } else {
          apply_config_file(argv[i + 1], run_opt);
        }
      } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
      } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
      }
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (run_cmd->parsed()) return cmd_run(run_opt);
    if (bench_cmd->parsed()) return cmd_bench(bench_opt, variants, report_path);
    if (extract_cmd->parsed()) return cmd_extract(volume_path, extract_out, patch_spec, extract_norm);
    if (synth_cmd->parsed()) return cmd_synth(synth_spec, synth_seed, synth_out);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const somf::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
