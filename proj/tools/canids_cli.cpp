// Copyright 2026 The canids Authors. All Rights Reserved.
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

// canids: CAN-bus intrusion detection toolkit.
//
//   canids gen       synthesize a labeled CAN trace (DoS/fuzzy/spoof)
//   canids train     train the window classifier on a trace (80:15:5 split)
//   canids quantize  fold batchnorm, calibrate and convert to int8
//   canids eval      confusion matrix + metric rows for model(s) on a trace
//   canids bench     per-message / batch inference latency
//   canids stream    receive-path emulation with per-message verdicts

#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "canids/canids.hpp"

namespace {

using namespace canids;

std::uint32_t parse_hex_flag(const std::string& s, const char* what) {
  try {
    std::size_t used = 0;
    const unsigned long v = std::stoul(s, &used, 16);
    if (used != s.size() || v > kMaxExtendedId) throw std::out_of_range(s);
    return static_cast<std::uint32_t>(v);
  } catch (const std::exception&) {
    throw ConfigError(std::string("bad ") + what + " '" + s + "'");
  }
}

std::vector<std::uint8_t> parse_payload(const std::string& s) {
  std::vector<std::uint8_t> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t pos = s.find(',', start);
    const std::string tok =
        s.substr(start, pos == std::string::npos ? pos : pos - start);
    if (!tok.empty()) {
      out.push_back(static_cast<std::uint8_t>(
          parse_hex_flag(tok, "payload byte") & 0xff));
    }
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  if (out.empty() || out.size() > kMaxDlc) {
    throw ConfigError("payload must be 1..8 hex bytes");
  }
  return out;
}

/// Missing/contradictory flags: reported like a parse error (exit 2).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat key=value file for `gen`. A key only applies when the matching flag
/// was not given on the command line: flags > config file > defaults.
std::map<std::string, std::string> parse_flat_config(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("config " + path.string() + " row " +
                       std::to_string(row) + ": expected key=value");
    }
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

void atomic_write_text(const std::filesystem::path& path,
                       const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << content;
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("rename to " + path.string() + ": " + ec.message());
}

Trace load_split(const std::string& trace_path, const std::string& split) {
  Trace t = parse_trace_auto(trace_path);
  if (split == "all") return t;
  TraceSplit s = split_trace(t);
  if (split == "train") return std::move(s.train);
  if (split == "val") return std::move(s.val);
  if (split == "test") return std::move(s.test);
  throw ConfigError("unknown split: " + split);
}

// ---------------------------------------------------------------------------
// gen
// ---------------------------------------------------------------------------

struct GenArgs {
  std::string config;
  std::string attack;
  double duration = 60.0;
  std::uint64_t seed = 1;
  std::string out;
  std::vector<std::string> pool;
  double inject_period = -1;
  std::string flood_id = "000";
  std::string fuzzy_id_min = "000", fuzzy_id_max = "7ff";
  std::string target_id;
  std::string payload;
};

int run_gen(GenArgs a, const CLI::App* cmd) {
  if (!a.config.empty()) {
    const auto kv = parse_flat_config(a.config);
    const auto apply = [&](const char* key, const char* flag, auto setter) {
      const auto it = kv.find(key);
      if (it != kv.end() && cmd->count(flag) == 0) setter(it->second);
    };
    apply("attack", "--attack", [&](const std::string& v) { a.attack = v; });
    apply("duration", "--duration",
          [&](const std::string& v) { a.duration = std::stod(v); });
    apply("seed", "--seed",
          [&](const std::string& v) { a.seed = std::stoull(v); });
    apply("inject-period", "--inject-period",
          [&](const std::string& v) { a.inject_period = std::stod(v); });
    apply("flood-id", "--flood-id",
          [&](const std::string& v) { a.flood_id = v; });
    apply("fuzzy-id-min", "--fuzzy-id-min",
          [&](const std::string& v) { a.fuzzy_id_min = v; });
    apply("fuzzy-id-max", "--fuzzy-id-max",
          [&](const std::string& v) { a.fuzzy_id_max = v; });
    apply("target-id", "--target-id",
          [&](const std::string& v) { a.target_id = v; });
    apply("payload", "--payload",
          [&](const std::string& v) { a.payload = v; });
    apply("out", "--out", [&](const std::string& v) { a.out = v; });
    apply("pool", "--pool", [&](const std::string& v) {
      a.pool.clear();
      std::size_t start = 0;
      while (start <= v.size()) {
        const std::size_t pos = v.find(',', start);
        const std::string tok = v.substr(
            start, pos == std::string::npos ? pos : pos - start);
        if (!tok.empty()) a.pool.push_back(tok);
        if (pos == std::string::npos) break;
        start = pos + 1;
      }
    });
    for (const auto& [key, value] : kv) {
      static const std::set<std::string> known = {
          "attack", "duration", "seed", "inject-period", "flood-id",
          "fuzzy-id-min", "fuzzy-id-max", "target-id", "payload", "out",
          "pool"};
      if (!known.count(key)) {
        throw ConfigError("unknown config key '" + key + "'");
      }
    }
  }
  if (a.attack.empty()) throw UsageError("gen: --attack is required");
  if (a.out.empty()) throw UsageError("gen: --out is required");

  const AttackKind kind = attack_kind_from_string(a.attack);
  GeneratorConfig cfg = GeneratorConfig::defaults(kind);
  cfg.duration_s = a.duration;
  cfg.rng_seed = a.seed;

  if (!a.pool.empty()) {
    cfg.normal_id_pool.clear();
    for (const auto& entry : a.pool) {
      // id:period[:jitter], id in hex
      NormalIdSpec spec;
      const std::size_t c1 = entry.find(':');
      if (c1 == std::string::npos) throw ConfigError("pool entry needs id:period");
      spec.id = parse_hex_flag(entry.substr(0, c1), "pool id");
      const std::size_t c2 = entry.find(':', c1 + 1);
      spec.period_s = std::stod(entry.substr(c1 + 1, c2 - c1 - 1));
      spec.jitter = c2 == std::string::npos
                        ? 0.1
                        : std::stod(entry.substr(c2 + 1));
      cfg.normal_id_pool.push_back(spec);
    }
  }
  if (a.inject_period > 0) {
    cfg.dos.period_s = a.inject_period;
    cfg.fuzzy.period_s = a.inject_period;
    cfg.spoof.period_s = a.inject_period;
  }
  cfg.dos.flood_id = parse_hex_flag(a.flood_id, "flood id");
  cfg.fuzzy.id_min = parse_hex_flag(a.fuzzy_id_min, "fuzzy id");
  cfg.fuzzy.id_max = parse_hex_flag(a.fuzzy_id_max, "fuzzy id");
  if (!a.target_id.empty()) {
    cfg.spoof.target_id = parse_hex_flag(a.target_id, "target id");
  }
  if (!a.payload.empty()) cfg.spoof.payload = parse_payload(a.payload);

  const Trace t = generate_trace(cfg);
  write_trace(t, a.out);
  std::size_t attacks = 0;
  for (const auto& f : t.frames) {
    if (f.label == FrameLabel::Attack) ++attacks;
  }
  std::printf("wrote %s: %zu frames (%zu attack, %zu normal), attack=%s\n",
              a.out.c_str(), t.frames.size(), attacks,
              t.frames.size() - attacks, to_string(kind).c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string trace;
  std::string attack;
  std::size_t n = 0;  // 0: derive from attack kind
  unsigned width = 16;
  std::string profile = "tiny";
  std::size_t epochs = 20;
  std::size_t batch = 64;
  double lr = 1e-4;
  std::uint64_t seed = 1;
  std::string out;
  std::string history;
};

int run_train(const TrainArgs& a) {
  const AttackKind kind = attack_kind_from_string(a.attack);
  const std::size_t n = a.n ? a.n : default_window_for(kind);

  const Trace full = parse_trace_auto(a.trace);
  const TraceSplit split = split_trace(full);
  const auto train_w = windows_from_trace(split.train, n, a.width);
  const auto val_w = windows_from_trace(split.val, n, a.width);
  std::printf("trace %s: %zu frames -> %zu train / %zu val windows (n=%zu)\n",
              a.trace.c_str(), full.frames.size(), train_w.size(),
              val_w.size(), n);

  Model model =
      build_model<float>(ModelSpec::profile_by_name(a.profile, n, a.width),
                         a.seed);
  model.attack = kind;
  Hyperparams hp;
  hp.epochs = a.epochs;
  hp.batch_size = a.batch;
  hp.lr = a.lr;

  const History hist = train(model, train_w, val_w, hp, a.seed);
  save_model(model, a.out);

  std::string csv = "epoch,train_loss,train_acc,val_loss,val_acc\n";
  char line[160];
  for (std::size_t e = 0; e < hist.epochs.size(); ++e) {
    const auto& s = hist.epochs[e];
    std::snprintf(line, sizeof(line), "%zu,%.6f,%.6f,%.6f,%.6f\n", e + 1,
                  s.train_loss, s.train_acc, s.val_loss, s.val_acc);
    csv += line;
  }
  const std::string hist_path =
      a.history.empty() ? a.out + ".history.csv" : a.history;
  atomic_write_text(hist_path, csv);

  if (!hist.epochs.empty()) {
    const auto& last = hist.epochs.back();
    std::printf("trained %zu epochs: train acc %.4f, val acc %.4f\n",
                hist.epochs.size(), last.train_acc, last.val_acc);
  }
  std::printf("wrote %s (%zu parameters) and %s\n", a.out.c_str(),
              param_count(model), hist_path.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// quantize
// ---------------------------------------------------------------------------

struct QuantizeArgs {
  std::string model;
  std::string trace;
  std::string split = "train";
  std::string out;
};

int run_quantize(const QuantizeArgs& a) {
  const Model model = load_model(a.model);
  const Trace calib_trace = load_split(a.trace, a.split);
  const auto calib_w = windows_from_trace(calib_trace, model.spec.window,
                                          model.spec.id_width);
  const Model folded = fold_batchnorm(model);
  const Calibration cal = calibrate(folded, calib_w);
  const QuantizedModel qm = quantize_model(folded, cal);
  save_qmodel(qm, a.out);
  std::printf("calibrated on %zu windows (%s split)\n", calib_w.size(),
              a.split.c_str());
  std::printf("input scale %.6g  logits scale %.6g  zero_point %d\n",
              qm.input_q.scale, qm.head.out_q.scale,
              qm.head.out_q.zero_point);
  std::printf("wrote %s (%zu int8 conv layers + dense head)\n", a.out.c_str(),
              qm.convs.size());
  return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalArgs {
  std::vector<std::string> models;
  std::vector<std::string> qmodels;
  std::vector<std::string> traces;
  std::string split = "all";
  std::string attack;  // optional cross-check
  std::size_t n = 0;   // optional cross-check
};

struct EvalRow {
  std::string attack;
  ConfusionMatrix float_cm, quant_cm;
  bool have_float = false, have_quant = false;
  double agreement = -1;
};

/// Metric rows and confusion tables in the published layout, with an
/// average-accuracy summary once several attacks are reported.
std::string report_tables(const std::vector<EvalRow>& rows) {
  std::vector<MetricsRow> mrows;
  std::string confusion, kv;
  std::vector<Metrics> quant_metrics;
  std::vector<Metrics> float_metrics;
  for (const auto& r : rows) {
    if (r.have_float) {
      const Metrics m = compute(r.float_cm);
      mrows.push_back({r.attack, "float32", m});
      float_metrics.push_back(m);
      confusion += render_confusion_table(r.attack + " (float32)",
                                          r.float_cm) + "\n";
      kv += render_kv(r.attack + ".float32", r.float_cm, m);
    }
    if (r.have_quant) {
      const Metrics m = compute(r.quant_cm);
      mrows.push_back({r.attack, "int8", m});
      quant_metrics.push_back(m);
      confusion += render_confusion_table(r.attack + " (int8)", r.quant_cm) +
                   "\n";
      kv += render_kv(r.attack + ".int8", r.quant_cm, m);
    }
    if (r.agreement >= 0) {
      char buf[96];
      std::snprintf(buf, sizeof(buf), "%s.agreement=%.6f\n",
                    r.attack.c_str(), r.agreement);
      kv += buf;
    }
  }
  std::string out = render_metrics_table(mrows) + "\n" + confusion + kv;
  if (rows.size() > 1) {
    char buf[96];
    const auto& set = quant_metrics.size() == rows.size() ? quant_metrics
                                                          : float_metrics;
    if (set.size() == rows.size()) {
      std::snprintf(buf, sizeof(buf), "average accuracy: %.4f\n",
                    average_accuracy(set));
      out += buf;
    }
  }
  return out;
}

int run_eval(const EvalArgs& a) {
  const std::size_t count = a.traces.size();
  if (count == 0) throw ConfigError("eval needs at least one --trace");
  if (!a.models.empty() && a.models.size() != count) {
    throw ConfigError("--model count must match --trace count");
  }
  if (!a.qmodels.empty() && a.qmodels.size() != count) {
    throw ConfigError("--qmodel count must match --trace count");
  }
  if (a.models.empty() && a.qmodels.empty()) {
    throw ConfigError("eval needs --model and/or --qmodel");
  }

  std::vector<EvalRow> rows;
  for (std::size_t i = 0; i < count; ++i) {
    EvalRow row;
    std::optional<Model> model;
    std::optional<QuantizedModel> qmodel;
    if (!a.models.empty()) model = load_model(a.models[i]);
    if (!a.qmodels.empty()) qmodel = load_qmodel(a.qmodels[i]);

    const AttackKind kind = model ? model->attack : qmodel->attack;
    const std::size_t n = model ? model->spec.window : qmodel->spec.window;
    const unsigned width =
        model ? model->spec.id_width : qmodel->spec.id_width;
    if (model && qmodel &&
        (qmodel->attack != kind || qmodel->spec.window != n)) {
      throw ConfigError("float and int8 models disagree on attack kind or n");
    }
    if (!a.attack.empty() && attack_kind_from_string(a.attack) != kind) {
      throw ConfigError("model " + (a.models.empty() ? a.qmodels[i]
                                                     : a.models[i]) +
                        " was trained for attack '" + to_string(kind) + "'");
    }
    if (a.n != 0 && a.n != n) {
      throw ConfigError("model expects n=" + std::to_string(n));
    }
    row.attack = to_string(kind);

    const Trace t = load_split(a.traces[i], a.split);
    const auto windows = windows_from_trace(t, n, width);
    if (windows.empty()) throw ConfigError("no windows in the chosen split");

    if (model && qmodel) {
      const ModelComparison cmp = compare_models(*model, *qmodel, windows);
      row.float_cm = cmp.float_cm;
      row.quant_cm = cmp.quant_cm;
      row.have_float = row.have_quant = true;
      row.agreement = cmp.label_agreement;
    } else if (model) {
      std::vector<std::size_t> idx(windows.size());
      std::iota(idx.begin(), idx.end(), 0);
      const auto probs = forward_infer(*model,
                                       stack_windows<float>(windows, idx));
      for (std::size_t j = 0; j < windows.size(); ++j) {
        const FrameLabel pred = probs(j, 0, 0, 1) > probs(j, 0, 0, 0)
                                    ? FrameLabel::Attack
                                    : FrameLabel::Normal;
        accumulate(row.float_cm, pred, windows[j].label);
      }
      row.have_float = true;
    } else {
      std::vector<std::size_t> idx(windows.size());
      std::iota(idx.begin(), idx.end(), 0);
      const auto probs = quantized_forward(
          *qmodel, stack_windows<float>(windows, idx));
      for (std::size_t j = 0; j < windows.size(); ++j) {
        const FrameLabel pred = probs(j, 0, 0, 1) > probs(j, 0, 0, 0)
                                    ? FrameLabel::Attack
                                    : FrameLabel::Normal;
        accumulate(row.quant_cm, pred, windows[j].label);
      }
      row.have_quant = true;
    }
    rows.push_back(std::move(row));
  }
  std::fputs(report_tables(rows).c_str(), stdout);
  return 0;
}

// ---------------------------------------------------------------------------
// bench / stream
// ---------------------------------------------------------------------------

struct BenchArgs {
  std::string model, qmodel;
  std::string trace;
  std::string mode = "per_message";
  std::size_t repeats = 1;
  std::size_t batch_size = 256;
  std::size_t limit = 0;
};

int run_bench(const BenchArgs& a) {
  if (a.model.empty() == a.qmodel.empty()) {
    throw ConfigError("bench needs exactly one of --model / --qmodel");
  }
  Trace t = parse_trace_auto(a.trace);
  if (a.limit > 0 && t.frames.size() > a.limit) t.frames.resize(a.limit);

  BenchOptions opt;
  opt.repeats = a.repeats;
  opt.batch_size = a.batch_size;
  if (a.mode == "batch") {
    opt.mode = BenchMode::Batch;
  } else if (a.mode != "per_message") {
    throw ConfigError("mode must be per_message or batch");
  }

  LatencyReport rep;
  std::string platform;
  if (!a.model.empty()) {
    const Model m = load_model(a.model);
    rep = bench(t, FloatPredictor{&m}, m.spec.window, m.spec.id_width, opt);
    platform = "this host (float32)";
  } else {
    const QuantizedModel qm = load_qmodel(a.qmodel);
    rep = bench(t, QuantPredictor{&qm}, qm.spec.window, qm.spec.id_width,
                opt);
    platform = "this host (int8)";
  }
  std::fputs(render_latency_report(rep, platform).c_str(), stdout);
  std::fputs(render_latency_kv(rep).c_str(), stdout);
  return 0;
}

struct StreamArgs {
  std::string model, qmodel;
  std::string trace;
  std::size_t queue_depth = 1;
  std::string out;
};

int run_stream(const StreamArgs& a) {
  if (a.model.empty() == a.qmodel.empty()) {
    throw ConfigError("stream needs exactly one of --model / --qmodel");
  }
  const Trace t = parse_trace_auto(a.trace);
  StreamOptions opt;
  opt.queue_depth = a.queue_depth;

  std::vector<StreamVerdict> verdicts;
  if (!a.model.empty()) {
    const Model m = load_model(a.model);
    verdicts = stream(t, FloatPredictor{&m}, m.spec.window, m.spec.id_width,
                      opt);
  } else {
    const QuantizedModel qm = load_qmodel(a.qmodel);
    verdicts = stream(t, QuantPredictor{&qm}, qm.spec.window,
                      qm.spec.id_width, opt);
  }

  std::size_t flagged = 0;
  double total_ms = 0, max_ms = 0;
  for (const auto& v : verdicts) {
    if (v.predicted == FrameLabel::Attack) ++flagged;
    const double ms = static_cast<double>(v.latency_ns) / 1e6;
    total_ms += ms;
    max_ms = std::max(max_ms, ms);
  }
  std::printf("%zu frames -> %zu verdicts (%zu flagged as attack)\n",
              t.frames.size(), verdicts.size(), flagged);
  if (!verdicts.empty()) {
    std::printf("enqueue-to-verdict latency: mean %.4f ms, max %.4f ms\n",
                total_ms / static_cast<double>(verdicts.size()), max_ms);
  }
  if (!a.out.empty()) {
    std::string csv = "frame_index,predicted,p_attack,latency_ns\n";
    char line[96];
    for (const auto& v : verdicts) {
      std::snprintf(line, sizeof(line), "%zu,%s,%.6f,%lld\n", v.frame_index,
                    v.predicted == FrameLabel::Attack ? "T" : "R",
                    static_cast<double>(v.p_attack),
                    static_cast<long long>(v.latency_ns));
      csv += line;
    }
    atomic_write_text(a.out, csv);
    std::printf("wrote %s\n", a.out.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CAN-bus intrusion detection toolkit"};
  app.require_subcommand(1);

  const std::vector<std::string> kinds = {"dos", "fuzzy", "rpm", "gear",
                                          "none"};

  GenArgs gen;
  auto* cgen = app.add_subcommand("gen", "Synthesize a labeled CAN trace");
  cgen->add_option("--config", gen.config,
                   "Flat key=value config file (flags take precedence)");
  cgen->add_option("--attack", gen.attack, "Attack kind")
      ->check(CLI::IsMember(kinds));
  cgen->add_option("--duration", gen.duration, "Trace length in seconds")
      ->capture_default_str();
  cgen->add_option("--seed", gen.seed, "RNG seed")->capture_default_str();
  cgen->add_option("--pool", gen.pool,
                   "Normal id pool entry id_hex:period_s[:jitter]; "
                   "repeatable, replaces the default pool");
  cgen->add_option("--inject-period", gen.inject_period,
                   "Attack injection period in seconds");
  cgen->add_option("--flood-id", gen.flood_id, "DoS flood id (hex)")
      ->capture_default_str();
  cgen->add_option("--fuzzy-id-min", gen.fuzzy_id_min, "Fuzzy id range (hex)")
      ->capture_default_str();
  cgen->add_option("--fuzzy-id-max", gen.fuzzy_id_max, "Fuzzy id range (hex)")
      ->capture_default_str();
  cgen->add_option("--target-id", gen.target_id, "Spoof target id (hex)");
  cgen->add_option("--payload", gen.payload,
                   "Spoof forged payload, comma-separated hex bytes");
  cgen->add_option("-o,--out", gen.out, "Output trace path");

  TrainArgs tr;
  auto* ctrain = app.add_subcommand("train", "Train a window classifier");
  ctrain->add_option("--trace", tr.trace, "Input trace")->required();
  ctrain->add_option("--attack", tr.attack, "Attack kind")
      ->required()
      ->check(CLI::IsMember({"dos", "fuzzy", "rpm", "gear"}));
  ctrain->add_option("--n", tr.n, "Window length (default 4, spoof 8)");
  ctrain->add_option("--width", tr.width, "Id bit width (16 or 32)")
      ->capture_default_str();
  ctrain->add_option("--profile", tr.profile, "Architecture profile")
      ->check(CLI::IsMember({"paper", "tiny"}))
      ->capture_default_str();
  ctrain->add_option("--epochs", tr.epochs, "Training epochs")
      ->capture_default_str();
  ctrain->add_option("--batch", tr.batch, "Batch size")
      ->capture_default_str();
  ctrain->add_option("--lr", tr.lr, "Adam learning rate")
      ->capture_default_str();
  ctrain->add_option("--seed", tr.seed, "RNG seed")->capture_default_str();
  ctrain->add_option("-o,--out", tr.out, "Output model path")->required();
  ctrain->add_option("--history", tr.history,
                     "History CSV path (default <out>.history.csv)");

  QuantizeArgs qa;
  auto* cquant = app.add_subcommand("quantize", "Convert a model to int8");
  cquant->add_option("--model", qa.model, "Trained float model")->required();
  cquant->add_option("--trace", qa.trace, "Calibration trace")->required();
  cquant->add_option("--split", qa.split, "Calibration split")
      ->check(CLI::IsMember({"all", "train", "val", "test"}))
      ->capture_default_str();
  cquant->add_option("-o,--out", qa.out, "Output quantized model path")
      ->required();

  EvalArgs ev;
  auto* ceval = app.add_subcommand("eval", "Evaluate model(s) on trace(s)");
  ceval->add_option("--model", ev.models, "Float model (repeatable)");
  ceval->add_option("--qmodel", ev.qmodels, "Quantized model (repeatable)");
  ceval->add_option("--trace", ev.traces, "Labeled trace (repeatable)")
      ->required();
  ceval->add_option("--split", ev.split, "Evaluation split")
      ->check(CLI::IsMember({"all", "train", "val", "test"}))
      ->capture_default_str();
  ceval->add_option("--attack", ev.attack,
                    "Refuse models trained for a different attack")
      ->check(CLI::IsMember(kinds));
  ceval->add_option("--n", ev.n, "Refuse models with a different n");

  BenchArgs ba;
  auto* cbench = app.add_subcommand("bench", "Measure inference latency");
  cbench->add_option("--model", ba.model, "Float model");
  cbench->add_option("--qmodel", ba.qmodel, "Quantized model");
  cbench->add_option("--trace", ba.trace, "Input trace")->required();
  cbench->add_option("--mode", ba.mode, "per_message or batch")
      ->check(CLI::IsMember({"per_message", "batch"}))
      ->capture_default_str();
  cbench->add_option("--repeats", ba.repeats, "Measurement passes")
      ->capture_default_str();
  cbench->add_option("--batch-size", ba.batch_size, "Batch-mode group size")
      ->capture_default_str();
  cbench->add_option("--limit", ba.limit, "Use only the first N frames");

  StreamArgs sa;
  auto* cstream = app.add_subcommand("stream", "Per-message streaming IDS");
  cstream->add_option("--model", sa.model, "Float model");
  cstream->add_option("--qmodel", sa.qmodel, "Quantized model");
  cstream->add_option("--trace", sa.trace, "Input trace")->required();
  cstream->add_option("--queue-depth", sa.queue_depth,
                      "In-flight inference slots")
      ->capture_default_str();
  cstream->add_option("-o,--out", sa.out, "Verdict CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (cgen->parsed()) return run_gen(gen, cgen);
    if (ctrain->parsed()) return run_train(tr);
    if (cquant->parsed()) return run_quantize(qa);
    if (ceval->parsed()) return run_eval(ev);
    if (cbench->parsed()) return run_bench(ba);
    if (cstream->parsed()) return run_stream(sa);
  } catch (const UsageError& e) {
    std::cerr << "canids: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "canids: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
