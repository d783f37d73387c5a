#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "trajex/codec.hpp"
#include "trajex/config.hpp"
#include "trajex/error.hpp"
#include "trajex/io.hpp"
#include "trajex/metrics.hpp"
#include "trajex/pipeline.hpp"
#include "trajex/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace trajex;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kPipeline = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json log_entry(const ClipOutcome &o) {
  json j = {{"clip_id", o.clip_id}, {"status", std::string(to_string(o.status))}};
  j["reason"] = o.reason ? json(std::string(extraction::to_string(*o.reason))) : json(nullptr);
  j["detail"] = o.detail;
  return j;
}

std::optional<CameraIntrinsics> maybe_intrinsics(const std::string &path) {
  if (path.empty()) return std::nullopt;
  return io::intrinsics_from_json(io::read_json_file(path));
}

// --- extract ---------------------------------------------------------------

struct ExtractArgs {
  std::vector<std::string> manifests;
  std::string config, output, log;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
};

int run_extract(const ExtractArgs &a) {
  PipelineConfig config = a.config.empty() ? PipelineConfig{} : load_config(a.config);
  if (a.seed) config.seed = *a.seed;
  if (a.jobs) config.jobs = *a.jobs;
  config.validate();
  std::vector<fs::path> paths(a.manifests.begin(), a.manifests.end());
  const auto outcomes = extract_batch(paths, config);

  std::string records, log;
  std::size_t accepted = 0;
  for (const auto &o : outcomes) {
    if (o.record) {
      records += io::jsonl_line(io::record_to_json(*o.record));
      ++accepted;
    }
    log += io::jsonl_line(log_entry(o));
  }
  io::write_file(a.output, records);
  io::write_file(a.log.empty() ? fs::path(a.output).concat(".log.jsonl") : fs::path(a.log), log);
  std::fprintf(stderr, "extract: %zu clips, %zu accepted, %zu not accepted\n", outcomes.size(),
               accepted, outcomes.size() - accepted);
  return kOk;
}

// --- curate ----------------------------------------------------------------

int run_curate(const std::string &input, const std::string &output, const std::string &log_path,
               const std::string &intrinsics_path) {
  const auto fallback = maybe_intrinsics(intrinsics_path);
  std::string kept, log;
  for (const auto &r : io::read_records(input)) {
    const auto k = r.intrinsics ? r.intrinsics : fallback;
    if (!k) throw InputError("record " + r.clip_id + " has no intrinsics; pass --intrinsics");
    const auto verdict = extraction::curate(r.trajectory, *k);
    ClipOutcome o;
    o.clip_id = r.clip_id;
    if (verdict.accepted) {
      kept += io::jsonl_line(io::record_to_json(r));
    } else {
      o.status = ClipStatus::kRejected;
      o.reason = verdict.reason;
      o.detail = verdict.detail;
    }
    log += io::jsonl_line(log_entry(o));
  }
  io::write_file(output, kept);
  io::write_file(log_path.empty() ? fs::path(output).concat(".log.jsonl") : fs::path(log_path),
                 log);
  return kOk;
}

// --- tokenize / detokenize -------------------------------------------------

int run_tokenize(const std::string &input, const std::string &output, std::string bins_path,
                 bool fit, double margin, int base_id) {
  if (!fit && bins_path.empty()) throw UsageError("tokenize: pass --bins FILE or --fit");
  const auto records = io::read_records(input);
  codec::BinSpec bins;
  if (fit) {
    std::vector<ObjectTrajectory> corpus;
    for (const auto &r : records) corpus.push_back(r.trajectory);
    bins = codec::fit_bins(corpus, margin);
    if (bins_path.empty()) bins_path = fs::path(output).concat(".bins.json").string();
    io::write_file(bins_path, io::bins_to_json(bins).dump(2) + "\n");
  } else {
    bins = io::bins_from_json(io::read_json_file(bins_path));
  }
  const codec::TokenLayout layout{base_id};
  std::string out;
  for (const auto &r : records) {
    const auto t = codec::discretize(r.trajectory, bins, layout);
    json grid = json::array();
    for (const auto &row : t.grid) grid.push_back(row);
    out += io::jsonl_line({{"clip_id", r.clip_id},
                           {"action_description", r.trajectory.action},
                           {"object_name", r.trajectory.object_name},
                           {"grid", grid},
                           {"tokens", t.token_stream},
                           {"clamp_count", t.clamp_count},
                           {"base_id", base_id}});
  }
  io::write_file(output, out);
  return kOk;
}

int run_detokenize(const std::string &input, const std::string &output,
                   const std::string &bins_path) {
  const auto bins = io::bins_from_json(io::read_json_file(bins_path));
  std::string out;
  for (const auto &j : io::read_jsonl(input)) {
    if (!j.contains("tokens") || !j["tokens"].is_array())
      throw InputError("token dataset: entry without a 'tokens' array");
    const auto tokens = j["tokens"].get<std::vector<int>>();
    const codec::TokenLayout layout{j.value("base_id", 0)};
    const auto decoded = codec::decode_token_stream(tokens, bins, layout);
    if (decoded.poses.empty())
      throw InputError("token dataset: " + j.value("clip_id", std::string("?")) +
                       " decodes to no poses");
    TrajectoryRecord r;
    r.clip_id = j.value("clip_id", std::string());
    r.trajectory.action = j.value("action_description", std::string());
    r.trajectory.object_name = j.value("object_name", std::string());
    r.trajectory.poses = decoded.poses;
    r.provenance.clamp_count = j.value("clamp_count", std::size_t(0));
    out += io::jsonl_line(io::record_to_json(r));
  }
  io::write_file(output, out);
  return kOk;
}

// --- evaluate --------------------------------------------------------------

json metrics_json(const metrics::PairMetrics &m) {
  auto opt = [](const std::optional<double> &v) { return v ? json(*v) : json(nullptr); };
  return {{"ade3d", m.ade3d}, {"fde3d", m.fde3d}, {"ade2d", opt(m.ade2d)},
          {"fde2d", opt(m.fde2d)}, {"gd", m.gd}, {"chosen_sample", m.chosen_sample}};
}

int run_evaluate(const std::string &pred_path, const std::string &ref_path,
                 std::optional<int> best_of, const std::string &intrinsics_path,
                 const std::string &output) {
  if (best_of && *best_of < 1) throw UsageError("evaluate: --best-of must be >= 1");
  const auto fallback = maybe_intrinsics(intrinsics_path);
  const auto predicted = io::read_records(pred_path);
  const auto reference = io::read_records(ref_path);

  std::map<std::string, std::vector<const TrajectoryRecord *>> by_id;
  for (const auto &p : predicted) by_id[p.clip_id].push_back(&p);
  std::set<std::string> ref_ids;
  std::vector<std::string> unmatched;
  std::vector<metrics::SampledInstance> instances;
  for (const auto &r : reference) {
    if (!ref_ids.insert(r.clip_id).second)
      throw InputError("evaluate: duplicate reference clip_id " + r.clip_id);
    const auto it = by_id.find(r.clip_id);
    if (it == by_id.end()) {
      unmatched.push_back(r.clip_id);
      continue;
    }
    const std::size_t k = best_of ? std::size_t(*best_of) : 1;
    if (it->second.size() < k || (!best_of && it->second.size() != 1))
      throw InputError("evaluate: clip " + r.clip_id + " has " +
                       std::to_string(it->second.size()) + " predictions, expected " +
                       std::to_string(k));
    metrics::SampledInstance inst;
    inst.id = r.clip_id;
    inst.reference = r.trajectory.poses;
    inst.intrinsics = r.intrinsics ? r.intrinsics : fallback;
    for (std::size_t s = 0; s < k; ++s) inst.samples.push_back(it->second[s]->trajectory.poses);
    instances.push_back(std::move(inst));
  }
  for (const auto &[id, preds] : by_id)
    if (!ref_ids.count(id)) unmatched.push_back(id);
  if (!unmatched.empty()) {
    std::string ids;
    for (const auto &id : unmatched) ids += (ids.empty() ? "" : ", ") + id;
    throw InputError("evaluate: clip_ids without a counterpart: " + ids);
  }
  if (instances.empty()) throw InputError("evaluate: no trajectories to compare");

  const auto report = metrics::evaluate_best_of(instances);
  std::cout << metrics::format_table(report);
  if (!output.empty()) {
    json per = json::array();
    for (std::size_t i = 0; i < report.per_pair.size(); ++i) {
      json m = metrics_json(report.per_pair[i]);
      m["clip_id"] = report.ids[i];
      per.push_back(m);
    }
    json mean = metrics_json(report.mean);
    mean.erase("chosen_sample");
    io::write_file(output, json{{"per_clip", per}, {"mean", mean}, {"count_2d", report.count_2d}}
                                   .dump(2) + "\n");
  }
  return kOk;
}

// --- synth -----------------------------------------------------------------

int run_synth(const std::string &script_path, const std::string &output,
              std::optional<std::uint64_t> seed, const std::string &intrinsics_path) {
  auto script = synth::script_from_json(io::read_json_file(script_path));
  if (seed) script.seed = *seed;
  const auto k = maybe_intrinsics(intrinsics_path).value_or(synth::default_intrinsics());
  const auto clip = synth::generate(script, k);
  std::cout << synth::write_clip(clip, output).string() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Extract, curate, tokenize and evaluate 6-DoF object trajectories."};
  app.require_subcommand(1);

  ExtractArgs ex;
  auto *extract = app.add_subcommand("extract", "Extract trajectory records from clip manifests");
  extract->add_option("manifests", ex.manifests, "Clip manifest files");
  extract->add_option("--config", ex.config, "Pipeline config JSON")->check(CLI::ExistingFile);
  extract->add_option("--seed", ex.seed, "Base seed (overrides config)");
  extract->add_option("--jobs", ex.jobs, "Worker threads (overrides config)")
      ->check(CLI::PositiveNumber);
  extract->add_option("--output", ex.output, "Records JSONL")->required();
  extract->add_option("--log", ex.log, "Curation log JSONL (default OUTPUT.log.jsonl)");

  std::string cur_in, cur_out, cur_log, cur_k;
  auto *curate = app.add_subcommand("curate", "Re-apply curation rules to records");
  curate->add_option("records", cur_in, "Records JSONL")->required()->check(CLI::ExistingFile);
  curate->add_option("--output", cur_out, "Kept records JSONL")->required();
  curate->add_option("--log", cur_log, "Curation log JSONL (default OUTPUT.log.jsonl)");
  curate->add_option("--intrinsics", cur_k, "Intrinsics JSON for records without them");

  std::string tok_in, tok_out, tok_bins;
  bool tok_fit = false;
  double tok_margin = 0.05;
  int tok_base = 0;
  auto *tokenize = app.add_subcommand("tokenize", "Discretize records into token sequences");
  tokenize->add_option("records", tok_in, "Records JSONL")->required()->check(CLI::ExistingFile);
  tokenize->add_option("--output", tok_out, "Token dataset JSONL")->required();
  tokenize->add_option("--bins", tok_bins, "Bin spec JSON (read, or written with --fit)");
  tokenize->add_flag("--fit", tok_fit, "Fit bins to the records");
  tokenize->add_option("--margin", tok_margin, "Relative margin for --fit")
      ->check(CLI::NonNegativeNumber);
  tokenize->add_option("--base-id", tok_base, "First trajectory token id")
      ->check(CLI::NonNegativeNumber);

  std::string det_in, det_out, det_bins;
  auto *detokenize = app.add_subcommand("detokenize", "Decode token sequences into records");
  detokenize->add_option("tokens", det_in, "Token dataset JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  detokenize->add_option("--output", det_out, "Records JSONL")->required();
  detokenize->add_option("--bins", det_bins, "Bin spec JSON")->required();

  std::string ev_pred, ev_ref, ev_k, ev_out;
  std::optional<int> ev_best;
  auto *evaluate = app.add_subcommand("evaluate", "Compare predicted against reference records");
  evaluate->add_option("predicted", ev_pred, "Predicted records JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("reference", ev_ref, "Reference records JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--best-of", ev_best, "Samples per clip; the lowest ADE(3D) is kept");
  evaluate->add_option("--intrinsics", ev_k, "Intrinsics JSON for records without them");
  evaluate->add_option("--output", ev_out, "Report JSON");

  std::string syn_script, syn_out, syn_k;
  std::optional<std::uint64_t> syn_seed;
  auto *synth_cmd = app.add_subcommand("synth", "Render a synthetic clip from a scene script");
  synth_cmd->add_option("script", syn_script, "Scene script JSON")
      ->required()
      ->check(CLI::ExistingFile);
  synth_cmd->add_option("--output", syn_out, "Output directory")->required();
  synth_cmd->add_option("--seed", syn_seed, "Seed (overrides the script)");
  synth_cmd->add_option("--intrinsics", syn_k, "Intrinsics JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*extract) return run_extract(ex);
    if (*curate) return run_curate(cur_in, cur_out, cur_log, cur_k);
    if (*tokenize) return run_tokenize(tok_in, tok_out, tok_bins, tok_fit, tok_margin, tok_base);
    if (*detokenize) return run_detokenize(det_in, det_out, det_bins);
    if (*evaluate) return run_evaluate(ev_pred, ev_ref, ev_best, ev_k, ev_out);
    if (*synth_cmd) return run_synth(syn_script, syn_out, syn_seed, syn_k);
  } catch (const UsageError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const nlohmann::json::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception &e) {
    std::cerr << "pipeline failure: " << e.what() << "\n";
    return kPipeline;
  }
  return kUsage;
}
