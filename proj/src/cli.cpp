#include "veriscribe/cli.hpp"

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "veriscribe/daam.hpp"
#include "veriscribe/data_io.hpp"
#include "veriscribe/errors.hpp"
#include "veriscribe/evaluation.hpp"
#include "veriscribe/explain.hpp"
#include "veriscribe/io_util.hpp"
#include "veriscribe/laam.hpp"
#include "veriscribe/partition.hpp"
#include "veriscribe/rng.hpp"
#include "veriscribe/schema.hpp"
#include "veriscribe/simd/kernels.hpp"
#include "veriscribe/synthetic.hpp"

namespace veriscribe::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kSeedEnv = "VERISCRIBE_SEED";

struct Common {
  std::string schema_path;
  std::uint64_t seed = 0;
};

FeatureSchema schema_for(const Common& c) {
  return c.schema_path.empty() ? builtin_schema() : load_schema(c.schema_path);
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_text_file_atomic(path, text);
  }
}

std::size_t find_record(const Dataset& d, const std::string& id) {
  const auto slash = id.find('/');
  if (slash == std::string::npos) throw ValidationError("record id '" + id + "' must look like WRITER/SAMPLE");
  const std::size_t pos = d.find(id.substr(0, slash), id.substr(slash + 1));
  if (pos == d.size()) throw ValidationError("record '" + id + "' not found in the input");
  return pos;
}

// Threshold config: `key=value` lines with keys method and threshold.
double read_threshold_config(const std::string& path) {
  std::optional<double> threshold;
  const std::string text = read_text_file(path);
  const auto lines = split(text, '\n');
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const auto line = trim(lines[n]);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key=value", n + 1);
    const auto key = trim(line.substr(0, eq));
    if (key == "threshold") {
      threshold = parse_double(line.substr(eq + 1), n + 1);
    } else if (key != "method") {
      throw ParseError("unknown key '" + std::string(key) + "'", n + 1);
    }
  }
  if (!threshold) throw ParseError("config " + path + " has no threshold");
  return *threshold;
}

void add_seed(CLI::App* app, Common& c) {
  app->add_option("--seed", c.seed, "Random seed (falls back to $VERISCRIBE_SEED, then 0)")->envname(kSeedEnv);
}

void add_schema(CLI::App* app, Common& c) {
  app->add_option("--schema", c.schema_path, "Schema document (default: built-in schema)")->check(CLI::ExistingFile);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Explainable handwriting verification over 15 expert features", "veriscribe"};
  app.set_help_flag();
  app.set_help_all_flag("-h,--help", "Print help for every subcommand and flag, then exit");
  app.require_subcommand(1);

  Common common;

  // schema
  auto* schema_cmd = app.add_subcommand("schema", "Print the built-in schema document or validate one");
  std::string schema_out, schema_check;
  schema_cmd->add_option("-o,--out", schema_out, "Write the schema document here (default: stdout)");
  schema_cmd->add_option("--check", schema_check, "Validate this schema document")->check(CLI::ExistingFile);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic labelled dataset");
  std::size_t writers = 0, samples = 0;
  double consistency = 0.9, sharpness = 0.9;
  std::string synth_out, soft_out;
  synth->add_option("--writers", writers, "Number of writers")->required()->check(CLI::PositiveNumber);
  synth->add_option("--samples", samples, "Samples per writer")->required()->check(CLI::PositiveNumber);
  synth->add_option("--consistency", consistency, "Intra-writer consistency c in [0,1]")->capture_default_str();
  synth->add_option("-o,--out", synth_out, "Labels CSV output")->required();
  synth->add_option("--soft-out", soft_out, "Also write soft records (softened labels) here");
  synth->add_option("--sharpness", sharpness, "Softening sharpness s in (0,1]")->capture_default_str();
  add_seed(synth, common);
  add_schema(synth, common);

  // partition
  auto* part = app.add_subcommand("partition", "Split a dataset into train/val/test parts");
  std::string part_input, part_mode = "unseen", part_ratios = "0.6,0.2,0.2", part_dir, part_pairs;
  part->add_option("--input", part_input, "Labels CSV or soft-record file")->required()->check(CLI::ExistingFile);
  part->add_option("--mode", part_mode, "unseen|shuffled|seen")->capture_default_str();
  part->add_option("--ratios", part_ratios, "train,val,test ratios")->capture_default_str();
  part->add_option("--out-dir", part_dir, "Directory for train/val/test files")->required();
  part->add_option("--pair-strategy", part_pairs, "Also write pair lists: all|balanced[:K]");
  add_seed(part, common);
  add_schema(part, common);

  // calibrate
  auto* calib = app.add_subcommand("calibrate", "Choose a decision threshold on validation pairs");
  std::string calib_method, calib_input, calib_model, calib_out, calib_threshold_out, calib_pairs = "balanced:1",
                                                                                      calib_ocs = "mean";
  calib->add_option("method", calib_method, "daam|laam")->required();
  calib->add_option("--input", calib_input, "Validation records")->required()->check(CLI::ExistingFile);
  calib->add_option("--model", calib_model, "Trained LAAM model (laam only)");
  calib->add_option("--pair-strategy", calib_pairs, "all|balanced[:K]")->capture_default_str();
  calib->add_option("--ocs", calib_ocs, "Overall-score aggregation: mean|sum")->capture_default_str();
  calib->add_option("-o,--out", calib_out, "Sweep table CSV (default: stdout)");
  calib->add_option("--threshold-out", calib_threshold_out, "Write the chosen threshold as a config file");
  add_seed(calib, common);
  add_schema(calib, common);

  // train-laam
  auto* train = app.add_subcommand("train-laam", "Fit the same-writer and different-writer networks");
  std::string train_input, train_out, train_pairs = "balanced:1";
  double alpha = 1.0;
  train->add_option("--input", train_input, "Training records")->required()->check(CLI::ExistingFile);
  train->add_option("--alpha", alpha, "Additive smoothing")->capture_default_str();
  train->add_option("--pair-strategy", train_pairs, "all|balanced[:K]")->capture_default_str();
  train->add_option("-o,--out", train_out, "Model document output")->required();
  add_seed(train, common);
  add_schema(train, common);

  // verify / explain share their inputs
  struct PairArgs {
    std::string method = "daam", input, questioned, known, model, config, ocs = "mean";
    std::optional<double> threshold;
  };
  auto add_pair_args = [&](CLI::App* cmd, PairArgs& a) {
    cmd->add_option("--method", a.method, "daam|laam")->capture_default_str();
    cmd->add_option("--input", a.input, "Records file holding both samples")->required()->check(CLI::ExistingFile);
    cmd->add_option("--questioned", a.questioned, "Questioned sample, WRITER/SAMPLE")->required();
    cmd->add_option("--known", a.known, "Known sample, WRITER/SAMPLE")->required();
    cmd->add_option("--model", a.model, "Trained LAAM model (laam only)");
    cmd->add_option("--threshold", a.threshold, "Decision threshold T (daam) or tau (laam)");
    cmd->add_option("--config", a.config, "Threshold config written by calibrate --threshold-out");
    cmd->add_option("--ocs", a.ocs, "Overall-score aggregation: mean|sum")->capture_default_str();
    add_schema(cmd, common);
  };
  auto* verify = app.add_subcommand("verify", "Decide whether two samples share a writer");
  PairArgs verify_args;
  add_pair_args(verify, verify_args);

  auto* explain = app.add_subcommand("explain", "Per-feature explanation of a verification");
  PairArgs explain_args;
  std::string explain_format = "text", explain_out;
  double salience = kDefaultSalience;
  std::size_t bottom = kDefaultLaamLowlights;
  add_pair_args(explain, explain_args);
  explain->add_option("--format", explain_format, "text|json|plotdata")->capture_default_str();
  explain->add_option("--salience", salience, "DAAM lowlight cutoff")->capture_default_str();
  explain->add_option("--bottom", bottom, "LAAM lowlight count")->capture_default_str();
  explain->add_option("-o,--out", explain_out, "Output file (default: stdout)");

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Split, calibrate, train and score each method per regime");
  std::string eval_input, eval_method = "both", eval_regime = "all", eval_ratios = "0.6,0.2,0.2",
                          eval_pairs = "balanced:1", eval_ocs = "mean", eval_out, eval_tau = "0";
  std::vector<std::uint64_t> eval_seeds;
  double eval_alpha = 1.0;
  eval->add_option("--input", eval_input, "Labels CSV or soft-record file")->required()->check(CLI::ExistingFile);
  eval->add_option("--method", eval_method, "daam|laam|both")->capture_default_str();
  eval->add_option("--regime", eval_regime, "seen|unseen|shuffled|all")->capture_default_str();
  eval->add_option("--ratios", eval_ratios, "train,val,test ratios")->capture_default_str();
  eval->add_option("--pair-strategy", eval_pairs, "all|balanced[:K]")->capture_default_str();
  eval->add_option("--alpha", eval_alpha, "LAAM additive smoothing")->capture_default_str();
  eval->add_option("--ocs", eval_ocs, "Overall-score aggregation: mean|sum")->capture_default_str();
  eval->add_option("--laam-threshold", eval_tau, "LAAM tau, or 'calibrate' for a validation sweep")
      ->capture_default_str();
  eval->add_option("--seeds", eval_seeds, "Comma-separated seeds to pool (default: --seed)")->delimiter(',');
  eval->add_option("-o,--out", eval_out, "Report CSV (default: stdout)");
  add_seed(eval, common);
  add_schema(eval, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (schema_cmd->parsed()) {
      if (!schema_check.empty()) {
        const FeatureSchema s = load_schema(schema_check);
        out << "ok: " << s.features().size() << " features, " << s.edges().size() << " edges\n";
        return 0;
      }
      emit(schema_out, serialize_schema(builtin_schema()), out);
      return 0;
    }

    const FeatureSchema schema = schema_for(common);

    if (synth->parsed()) {
      const auto profiles = generate_profiles(schema, writers, consistency, derive_seed(common.seed, 0));
      const Dataset data = sample_dataset(schema, profiles, samples, derive_seed(common.seed, 1));
      if (!soft_out.empty()) {
        const Dataset soft = soften(data, sharpness, derive_seed(common.seed, 2));
        write_soft_records(soft_out, soft);
      }
      write_labels_csv(synth_out, data);
      return 0;
    }

    if (part->parsed()) {
      const Dataset data = read_dataset(part_input, schema);
      const Split s = split(data, parse_partition_mode(part_mode), parse_ratios(part_ratios), common.seed);
      fs::create_directories(part_dir);
      const bool soft = !data.empty() && data.all_soft();
      std::optional<PairStrategy> strategy;
      if (!part_pairs.empty()) strategy = parse_pair_strategy(part_pairs);
      const std::pair<const char*, const std::vector<std::size_t>*> parts[] = {
          {"train", &s.train}, {"val", &s.val}, {"test", &s.test}};
      std::uint64_t stream = 0;
      for (const auto& [name, positions] : parts) {
        const Dataset subset = data.subset(*positions);
        const fs::path base = fs::path(part_dir) / name;
        if (soft) {
          write_text_file_atomic(base.string() + ".jsonl", format_soft_records(subset));
        } else {
          write_text_file_atomic(base.string() + ".csv", format_labels_csv(subset));
        }
        ++stream;
        if (strategy && subset.size() >= 2) {
          const PairSet pairs = generate_pairs(subset, *strategy, derive_seed(common.seed, stream));
          std::string text = "questioned,known,label\n";
          for (const RecordPair& p : pairs.pairs) {
            const auto& a = subset[p.first];
            const auto& b = subset[p.second];
            text += a.writer_id + "/" + a.sample_id + "," + b.writer_id + "/" + b.sample_id + "," +
                    (p.label == PairLabel::Same ? "same" : "different") + "\n";
          }
          write_text_file_atomic(base.string() + "_pairs.csv", text);
        }
      }
      out << "mode=" << to_string(s.mode) << " train=" << s.train.size() << " val=" << s.val.size()
          << " test=" << s.test.size() << " excluded_writers=" << s.excluded_writers << "\n";
      return 0;
    }

    if (calib->parsed()) {
      const Method method = parse_method(calib_method);
      const Dataset data = read_dataset(calib_input, schema);
      const PairSet pairs = generate_pairs(data, parse_pair_strategy(calib_pairs), common.seed);
      daam::CalibrationResult result;
      if (method == Method::Daam) {
        if (!data.all_soft()) throw MissingSoft("calibrate daam: input " + calib_input + " has no soft vectors");
        result = daam::calibrate(data, pairs, daam::parse_ocs_mode(calib_ocs));
      } else {
        if (calib_model.empty()) throw ValidationError("calibrate laam: --model is required");
        result = laam::calibrate_threshold(laam::load_model(calib_model, schema), data, pairs);
      }
      emit(calib_out, daam::format_sweep_csv(result), out);
      if (!calib_threshold_out.empty()) {
        write_text_file_atomic(calib_threshold_out, "method=" + calib_method +
                                                        "\nthreshold=" + format_shortest(result.chosen_threshold) +
                                                        "\n");
      }
      err << "chosen threshold: " << format_shortest(result.chosen_threshold) << "\n";
      return 0;
    }

    if (train->parsed()) {
      const Dataset data = read_dataset(train_input, schema);
      const PairSet pairs = generate_pairs(data, parse_pair_strategy(train_pairs), common.seed);
      const laam::LaamModel model = laam::train(data, pairs, alpha);
      laam::save_model(train_out, model);
      err << "fitted on " << model.same.training_pairs() << " same-writer and " << model.different.training_pairs()
          << " different-writer pairs\n";
      return 0;
    }

    if (verify->parsed() || explain->parsed()) {
      const PairArgs& a = verify->parsed() ? verify_args : explain_args;
      const Method method = parse_method(a.method);
      const Dataset data = read_dataset(a.input, schema);
      const SampleRecord& q = data[find_record(data, a.questioned)];
      const SampleRecord& k = data[find_record(data, a.known)];
      double threshold = 0.0;
      if (a.threshold) {
        threshold = *a.threshold;
      } else if (!a.config.empty()) {
        threshold = read_threshold_config(a.config);
      } else if (method == Method::Daam) {
        throw ValidationError("daam needs --threshold or --config");
      }

      VerificationReport report;
      if (method == Method::Daam) {
        if (!q.has_soft() || !k.has_soft()) throw MissingSoft("daam: input " + a.input + " has no soft vectors");
        report = explain_daam(q, k, schema, threshold, salience, daam::parse_ocs_mode(a.ocs));
      } else {
        if (a.model.empty()) throw ValidationError("laam needs --model");
        report = explain_laam(q, k, schema, laam::load_model(a.model, schema), threshold, bottom);
      }
      if (verify->parsed()) {
        out << "verdict=" << to_string(report.verdict) << " score=" << format_fixed(report.overall, 6)
            << " threshold=" << format_shortest(report.threshold) << "\n";
      } else {
        emit(explain_out, render(report, parse_report_format(explain_format)), out);
      }
      return 0;
    }

    if (eval->parsed()) {
      const Dataset data = read_dataset(eval_input, schema);
      ExperimentConfig cfg;
      if (eval_method == "both") {
        cfg.methods = {Method::Daam, Method::Laam};
      } else {
        cfg.methods = {parse_method(eval_method)};
      }
      if (eval_regime == "all") {
        cfg.regimes = {PartitionMode::Seen, PartitionMode::Unseen, PartitionMode::Shuffled};
      } else {
        cfg.regimes = {parse_partition_mode(eval_regime)};
      }
      cfg.seeds = eval_seeds.empty() ? std::vector<std::uint64_t>{common.seed} : eval_seeds;
      cfg.ratios = parse_ratios(eval_ratios);
      cfg.pair_strategy = parse_pair_strategy(eval_pairs);
      cfg.alpha = eval_alpha;
      cfg.ocs = daam::parse_ocs_mode(eval_ocs);
      if (eval_tau == "calibrate") {
        cfg.calibrate_laam = true;
      } else {
        cfg.tau = parse_double(eval_tau);
      }
      if (std::find(cfg.methods.begin(), cfg.methods.end(), Method::Daam) != cfg.methods.end() && !data.all_soft()) {
        throw MissingSoft("evaluate --method daam: input " + eval_input +
                          " has no soft vectors; pass a soft-record file (synth --soft-out)");
      }
      const auto reports = compare_methods(data, cfg);
      emit(eval_out, format_report_csv(reports), out);
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace veriscribe::cli
