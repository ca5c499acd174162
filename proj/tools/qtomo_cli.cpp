// Command-line front end: dataset generation, model training, evaluation
// sweeps and reports. Exit codes: 0 success, 1 usage error, 2 runtime error.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qtomo/eval/sweep.hpp"
#include "qtomo/io/checkpoint.hpp"
#include "qtomo/io/config.hpp"
#include "qtomo/io/crc32.hpp"
#include "qtomo/io/csv.hpp"
#include "qtomo/io/dataset.hpp"
#include "qtomo/io/svg.hpp"
#include "qtomo/reconstruct.hpp"

namespace {

using namespace qtomo;

// ---------------------------------------------------------------------------
// Value conversions shared by flags and config files.

std::vector<std::size_t> parse_size_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    std::string tok = text.substr(pos, comma == std::string::npos ? comma : comma - pos);
    pos = comma == std::string::npos ? text.size() + 1 : comma + 1;
    if (tok.empty()) throw InvalidSpec("empty entry in list '" + text + "'");
    std::size_t dots = tok.find("..");
    try {
      if (dots == std::string::npos) {
        out.push_back(std::stoull(tok));
      } else {
        std::size_t lo = std::stoull(tok.substr(0, dots));
        std::size_t hi = std::stoull(tok.substr(dots + 2));
        if (hi < lo) throw InvalidSpec("empty range '" + tok + "'");
        for (std::size_t v = lo; v <= hi; ++v) out.push_back(v);
      }
    } catch (const std::logic_error&) {
      throw InvalidSpec("expected a number or lo..hi range, got '" + tok + "'");
    }
  }
  return out;
}

void set_from_string(const std::string& s, std::string& out) { out = s; }

void set_from_string(const std::string& s, bool& out) {
  if (s == "true" || s == "1") out = true;
  else if (s == "false" || s == "0") out = false;
  else throw IoError("expected a boolean, got '" + s + "'");
}

void set_from_string(const std::string& s, std::uint64_t& out) {
  try {
    std::size_t used = 0;
    out = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
  } catch (const std::logic_error&) {
    throw IoError("expected an integer, got '" + s + "'");
  }
}

void set_from_string(const std::string& s, double& out) {
  try {
    std::size_t used = 0;
    out = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
  } catch (const std::logic_error&) {
    throw IoError("expected a number, got '" + s + "'");
  }
}

std::string value_to_string(const std::string& s) { return s; }
std::string value_to_string(bool b) { return b ? "true" : "false"; }
std::string value_to_string(std::uint64_t v) { return std::to_string(v); }
std::string value_to_string(double v) { return io::format_double(v); }

// ---------------------------------------------------------------------------
// Config-file binding: every option is also a config key (the long flag name
// without dashes). The command line wins over the file.

class Binder {
 public:
  explicit Binder(CLI::App* cmd) : cmd_(cmd) {
    cmd->add_option("--config", config_path_,
                    "key=value config file; explicit flags override its values");
  }

  template <typename T>
  CLI::Option* add(const std::string& flag, T& var, const std::string& help) {
    CLI::Option* opt = cmd_->add_option(flag, var, help)->capture_default_str();
    entries_.push_back({key_of(flag), opt,
                        [&var](const std::string& s) { set_from_string(s, var); },
                        [&var] { return value_to_string(var); }});
    return opt;
  }

  CLI::Option* add_flag(const std::string& flag, bool& var, const std::string& help) {
    CLI::Option* opt = cmd_->add_flag(flag, var, help);
    entries_.push_back({key_of(flag), opt,
                        [&var](const std::string& s) { set_from_string(s, var); },
                        [&var] { return value_to_string(var); }});
    return opt;
  }

  // Called first inside the subcommand callback.
  void apply_config() {
    if (config_path_.empty()) return;
    std::vector<std::string> keys;
    keys.reserve(entries_.size());
    for (const auto& e : entries_) keys.push_back(e.key);
    auto values = io::read_config(config_path_, keys);
    for (const auto& e : entries_) {
      auto it = values.find(e.key);
      if (it != values.end() && e.opt->count() == 0) e.set(it->second);
    }
  }

  // Effective post-override configuration as sorted key=value lines, plus a
  // short hash of them for report headers.
  std::vector<std::string> effective() const {
    std::vector<std::string> lines;
    lines.reserve(entries_.size());
    for (const auto& e : entries_) lines.push_back(e.key + "=" + e.get());
    std::sort(lines.begin(), lines.end());
    return lines;
  }

  std::string config_hash() const {
    std::string all;
    for (const auto& line : effective()) {
      all += line;
      all += '\n';
    }
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%08x", io::crc32(all.data(), all.size()));
    return buf;
  }

 private:
  static std::string key_of(const std::string& flag) {
    std::size_t i = flag.find_first_not_of('-');
    return i == std::string::npos ? flag : flag.substr(i);
  }
  struct Entry {
    std::string key;
    CLI::Option* opt;
    std::function<void(const std::string&)> set;
    std::function<std::string()> get;
  };
  CLI::App* cmd_;
  std::string config_path_;
  std::vector<Entry> entries_;
};

std::vector<std::string> run_metadata(const std::string& command, const Binder& b) {
  std::vector<std::string> c;
  c.push_back("command=" + command);
  c.push_back("config_hash=" + b.config_hash());
  for (const auto& line : b.effective()) c.push_back(line);
  return c;
}

// ---------------------------------------------------------------------------
// Model/method name tables.

bool is_corrector_kind(const std::string& s) { return s.rfind("corr_", 0) == 0; }
bool is_selector_kind(const std::string& s) { return s.rfind("lstm_", 0) == 0; }

models::CorrectorVariant corrector_variant(const std::string& s) {
  if (s == "corr_m") return models::CorrectorVariant::FullM;
  if (s == "corr_pi") return models::CorrectorVariant::PiOnly;
  if (s == "corr_q") return models::CorrectorVariant::Quadratic;
  throw InvalidSpec("unknown corrector kind '" + s + "'");
}

models::SelectionMode selection_mode(const std::string& s) {
  if (s == "lstm_rnd") return models::SelectionMode::RandomBasis;
  if (s == "lstm_pre") return models::SelectionMode::PredefinedBasis;
  if (s == "lstm_cus") return models::SelectionMode::CustomOperator;
  throw InvalidSpec("unknown selector kind '" + s + "'");
}

eval::Method method_from_name(const std::string& s) {
  static const eval::Method all[] = {
      eval::Method::Pseudoinverse,   eval::Method::Mle,
      eval::Method::Analytic1q,      eval::Method::CorrectorFullM,
      eval::Method::CorrectorPiOnly, eval::Method::CorrectorQuadratic,
      eval::Method::LstmRandom,      eval::Method::LstmPredefined,
      eval::Method::LstmCustom};
  for (eval::Method m : all)
    if (s == eval::method_name(m)) return m;
  throw InvalidSpec("unknown method '" + s + "'");
}

std::string checkpoint_for_m(const std::string& pattern, std::size_t m) {
  std::string out = pattern;
  const std::string ph = "{M}";
  std::size_t pos;
  while ((pos = out.find(ph)) != std::string::npos)
    out.replace(pos, ph.size(), std::to_string(m));
  return out;
}

// ---------------------------------------------------------------------------
// gen

struct GenParams {
  std::uint64_t n = 1, count = 1000, seed = 0;
  std::string out;
  bool xstate = false;
};

void run_gen(const GenParams& p) {
  std::vector<DensityMatrix> states;
  if (p.xstate) {
    if (p.n != 2) throw InvalidSpec("--xstate datasets are 2-qubit; pass --n 2");
    states = generate_x_dataset(p.count, p.seed);
  } else {
    states = generate_dataset(p.n, p.count, p.seed);
  }
  io::write_dataset(p.out, p.n, states);
  std::cout << "wrote " << states.size() << " " << p.n << "-qubit states to "
            << p.out << '\n';
}

// ---------------------------------------------------------------------------
// train

struct TrainParams {
  std::string model, data, out, log, subset, resume;
  std::uint64_t n = 0;  // 0 = take from the dataset
  std::uint64_t epochs = 10, batch = 64;
  double lr = 1e-3, ortho_weight = 0.1;
  std::uint64_t seed = 0;
  std::uint64_t m = 0;       // corrector collection size
  std::uint64_t steps = 0;   // LSTM episode length; 0 = 4^N
  std::uint64_t hidden = 0;  // 0 = model default
  std::uint64_t layers = 0;  // 0 = auto
};

void run_train(const TrainParams& p, const Binder& binder) {
  io::Dataset ds = io::read_dataset(p.data);
  std::size_t n = p.n == 0 ? ds.n_qubits : p.n;
  if (n != ds.n_qubits)
    throw ShapeMismatch("dataset " + p.data + " holds " +
                        std::to_string(ds.n_qubits) + "-qubit states, not " +
                        std::to_string(n));

  nn::TrainConfig cfg;
  cfg.batch_size = p.batch;
  cfg.learning_rate = p.lr;
  cfg.epochs = p.epochs;
  cfg.seed = p.seed;
  cfg.ortho_weight = p.ortho_weight;

  std::vector<models::TrainLogRow> logrows;

  if (is_corrector_kind(p.model)) {
    models::CorrectorVariant variant = corrector_variant(p.model);
    std::optional<std::vector<std::size_t>> subset;
    if (!p.subset.empty()) subset = parse_size_list(p.subset);
    std::size_t m_size = subset ? subset->size() : p.m;
    if (m_size == 0)
      throw InvalidSpec("corrector training needs --m or --subset");
    if (subset && p.m != 0 && p.m != m_size)
      throw InvalidSpec("--m contradicts the --subset length");

    nn::AdamMoments moments;
    std::uint64_t step = 0;
    std::vector<double> init_weights;
    if (!p.resume.empty()) {
      io::LoadedCorrector lc = io::load_corrector(p.resume);
      if (lc.model.variant != variant)
        throw ShapeMismatch("resume checkpoint holds a different model kind");
      if (lc.model.n_qubits != n)
        throw ShapeMismatch("resume checkpoint is for a different qubit count");
      if (lc.model.m_size != m_size)
        throw ShapeMismatch("resume checkpoint is for a different M");
      init_weights = lc.model.mlp.weights().flat();
      moments = std::move(lc.moments);
      step = lc.step;
    }
    models::CorrectorModel model = models::train_corrector(
        ds.states, subset, variant, cfg, n, m_size, &logrows, &moments, &step,
        init_weights.empty() ? nullptr : &init_weights);

    std::map<std::string, std::string> extra;
    if (subset) {
      std::string s;
      for (std::size_t i = 0; i < subset->size(); ++i)
        s += (i ? "," : "") + std::to_string((*subset)[i]);
      extra["subset"] = s;
    }
    io::save_corrector(p.out, model, step, &moments, extra);
  } else if (is_selector_kind(p.model)) {
    models::SelectionMode mode = selection_mode(p.model);
    std::size_t total = std::size_t{1} << (2 * n);
    std::size_t steps = p.steps == 0 ? total : p.steps;
    std::size_t hidden = p.hidden == 0 ? 256 : p.hidden;
    std::size_t layers = p.layers;

    models::SelectorResume sr;
    if (!p.resume.empty()) {
      io::LoadedSelector ls = io::load_selector(p.resume);
      if (ls.model.mode != mode)
        throw ShapeMismatch("resume checkpoint holds a different model kind");
      if (ls.model.n_qubits != n)
        throw ShapeMismatch("resume checkpoint is for a different qubit count");
      hidden = ls.model.lstm_r.hidden_size();
      layers = ls.model.lstm_r.layers();
      sr.weights_r = ls.model.lstm_r.weights().flat();
      if (ls.model.lstm_s) sr.weights_s = ls.model.lstm_s->weights().flat();
      sr.moments_r = std::move(ls.moments_r);
      sr.moments_s = std::move(ls.moments_s);
      sr.step = ls.step;
    }
    models::SelectorReconstructor model = models::train_selector_reconstructor(
        ds.states, mode, cfg, n, steps, hidden, layers, &logrows, &sr);

    std::map<std::string, std::string> extra;
    extra["steps"] = std::to_string(steps);
    io::save_selector(p.out, model, sr.step, &sr.moments_r,
                      model.lstm_s ? &sr.moments_s : nullptr, extra);
  } else {
    throw InvalidSpec("unknown model kind '" + p.model +
                      "' (corr_m, corr_pi, corr_q, lstm_rnd, lstm_pre, lstm_cus)");
  }

  if (!p.log.empty()) {
    io::CsvTable t;
    t.comments = run_metadata("train", binder);
    t.header = {"epoch", "step", "loss", "ortho_residual"};
    for (const auto& r : logrows)
      t.rows.push_back({std::to_string(r.epoch), std::to_string(r.step),
                        io::format_double(r.loss), io::format_double(r.ortho)});
    io::write_csv(p.log, t);
  }
  double final_loss = logrows.empty() ? 0.0 : logrows.back().loss;
  std::cout << "trained " << p.model << " on " << ds.states.size()
            << " states; final batch loss " << final_loss << "; checkpoint "
            << p.out << '\n';
}

// ---------------------------------------------------------------------------
// sweep / psdstats share their setup.

struct SweepParams {
  std::string method, data, out, svg, checkpoint, m_list;
  std::uint64_t collections = 100, seed = 0, jobs = 1;
  std::uint64_t mle_iters = 2000;
  double mle_tol = 1e-10, mle_dilution = 0.5;
};

struct SweepSetup {
  io::Dataset ds;
  eval::SweepSpec spec;
  std::map<std::size_t, io::LoadedCorrector> cache;
  eval::CorrectorProvider provider;
  std::optional<io::LoadedSelector> loaded_selector;
  const models::SelectorReconstructor* selector = nullptr;
};

// Fills a caller-owned setup: the provider lambda and the selector pointer
// refer back into `s`, so it must not move afterwards.
void sweep_setup(const SweepParams& p, SweepSetup& s) {
  s.ds = io::read_dataset(p.data);
  s.spec.method = method_from_name(p.method);
  s.spec.n_qubits = s.ds.n_qubits;
  s.spec.m_values = parse_size_list(p.m_list);
  s.spec.collections_per_m = p.collections;
  s.spec.seed = p.seed;
  s.spec.jobs = p.jobs == 0 ? 1 : p.jobs;
  s.spec.mle.max_iters = p.mle_iters;
  s.spec.mle.tol = p.mle_tol;
  s.spec.mle.dilution = p.mle_dilution;

  if (is_corrector_kind(p.method)) {
    if (p.checkpoint.empty())
      throw UnsupportedCombination("method '" + p.method +
                                   "' needs --checkpoint (use {M} for per-M files)");
    s.provider = [&s, pattern = p.checkpoint](
                     std::size_t m) -> const models::CorrectorModel* {
      auto it = s.cache.find(m);
      if (it == s.cache.end())
        it = s.cache.emplace(m, io::load_corrector(checkpoint_for_m(pattern, m)))
                 .first;
      return &it->second.model;
    };
  } else if (is_selector_kind(p.method)) {
    if (p.checkpoint.empty())
      throw UnsupportedCombination("method '" + p.method + "' needs --checkpoint");
    s.loaded_selector = io::load_selector(p.checkpoint);
    s.selector = &s.loaded_selector->model;
  }
}

void run_sweep(const SweepParams& p, const Binder& binder) {
  SweepSetup s;
  sweep_setup(p, s);
  eval::SweepResult res = eval::bures_sweep(s.ds.states, s.spec, s.provider,
                                            s.selector);

  io::CsvTable t;
  t.comments = run_metadata("sweep", binder);
  t.header = {"method", "n_qubits", "M", "mean_bures", "std_bures",
              "n_samples", "seed"};
  for (const auto& row : res.rows)
    t.rows.push_back({eval::method_name(res.method), std::to_string(res.n_qubits),
                      std::to_string(row.m), io::format_double(row.mean_bures),
                      io::format_double(row.std_bures),
                      std::to_string(row.n_samples), std::to_string(res.seed)});
  io::write_csv(p.out, t);

  if (!p.svg.empty()) {
    io::SvgSeries series;
    series.label = eval::method_name(res.method);
    for (const auto& row : res.rows) {
      series.x.push_back(static_cast<double>(row.m));
      series.y.push_back(row.mean_bures);
    }
    io::write_svg_chart(p.svg, "mean Bures distance vs M", {series});
  }
  std::cout << "wrote " << res.rows.size() << " sweep rows to " << p.out << '\n';
}

void run_psdstats(const SweepParams& p, const Binder& binder) {
  SweepSetup s;
  sweep_setup(p, s);
  std::vector<eval::PsdSweepRow> rows =
      eval::psd_sweep(s.ds.states, s.spec, s.provider, s.selector);

  io::CsvTable t;
  t.comments = run_metadata("psdstats", binder);
  t.header = {"method", "n_qubits", "M", "mean_lowest", "std_lowest",
              "mean_second", "std_second", "n_samples", "seed"};
  for (const auto& row : rows)
    t.rows.push_back({eval::method_name(s.spec.method),
                      std::to_string(s.spec.n_qubits), std::to_string(row.m),
                      io::format_double(row.stats.mean_lowest),
                      io::format_double(row.stats.std_lowest),
                      io::format_double(row.stats.mean_second),
                      io::format_double(row.stats.std_second),
                      std::to_string(row.stats.n), std::to_string(s.spec.seed)});
  io::write_csv(p.out, t);
  std::cout << "wrote " << rows.size() << " eigenvalue rows to " << p.out << '\n';
}

// ---------------------------------------------------------------------------
// errormap

struct ErrormapParams {
  std::string method = "pinv", data, out, checkpoint, pair;
  std::uint64_t mle_iters = 2000;
  double mle_tol = 1e-10, mle_dilution = 0.5;
};

void run_errormap(const ErrormapParams& p, const Binder& binder) {
  io::Dataset ds = io::read_dataset(p.data);
  std::size_t n = ds.n_qubits;
  std::vector<std::size_t> pr = parse_size_list(p.pair);
  if (pr.size() != 2)
    throw InvalidPair("--pair needs exactly two indices, e.g. 1,3");
  std::pair<std::size_t, std::size_t> pair{pr[0], pr[1]};

  eval::Reconstructor recon;
  std::optional<io::LoadedCorrector> lc;
  if (p.method == "pinv") {
    recon = [n](const MeasurementRecord& r) { return pinv_reconstruct(r, n); };
  } else if (p.method == "mle") {
    MleConfig mle{p.mle_iters, p.mle_tol, p.mle_dilution};
    recon = [n, mle](const MeasurementRecord& r) {
      return mle_reconstruct(r, n, mle).mat();
    };
  } else if (p.method == "analytic") {
    recon = [pair](const MeasurementRecord& r) {
      return analytic_1q(pair, r.outcomes(0), r.outcomes(1));
    };
  } else if (is_corrector_kind(p.method)) {
    if (p.checkpoint.empty())
      throw UnsupportedCombination("method '" + p.method + "' needs --checkpoint");
    lc = io::load_corrector(p.checkpoint);
    if (lc->model.variant != corrector_variant(p.method))
      throw UnsupportedCombination("checkpoint holds a different corrector kind");
    if (lc->model.n_qubits != n || lc->model.m_size != 2)
      throw UnsupportedCombination("checkpoint does not fit a 2-measurement map");
    recon = [&lc, n](const MeasurementRecord& r) {
      return apply_corrector(r, models::corrector_predict(lc->model, r), n);
    };
  } else {
    throw InvalidSpec("errormap supports pinv, mle, analytic and corr_* methods");
  }

  eval::ErrorMap em = eval::error_map(ds.states, recon, pair, n);

  io::CsvTable t;
  t.comments = run_metadata("errormap", binder);
  t.header = {"alpha", "beta", "value"};
  for (Eigen::Index a = 0; a < em.values.rows(); ++a)
    for (Eigen::Index b = 0; b < em.values.cols(); ++b)
      t.rows.push_back({std::to_string(a), std::to_string(b),
                        io::format_double(em.values(a, b))});
  io::write_csv(p.out, t);
  std::cout << "wrote the error map for pair (" << pair.first << ","
            << pair.second << ") to " << p.out << '\n';
}

// ---------------------------------------------------------------------------
// inspect

void run_inspect(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() != 4) throw IoError("file too short: " + path);
  std::string tag(magic, 4);
  in.close();

  if (tag == "QTDS") {
    io::DatasetHeader h = io::read_dataset_header(path);
    std::cout << "dataset " << path << '\n'
              << "  version   " << h.version << '\n'
              << "  n_qubits  " << h.n_qubits << '\n'
              << "  states    " << h.count << '\n';
  } else if (tag == "QTNN") {
    io::Checkpoint cp = io::read_checkpoint(path);
    std::cout << "checkpoint " << path << '\n'
              << "  kind      " << cp.kind << '\n';
    for (const auto& [k, v] : cp.meta)
      std::cout << "  meta      " << k << "=" << v << '\n';
    std::cout << "  tensors   " << cp.shapes.size() << " (" << cp.flat.size()
              << " parameters)\n";
    for (const auto& s : cp.shapes) {
      std::cout << "    " << s.name << "  [";
      for (std::size_t i = 0; i < s.shape.size(); ++i)
        std::cout << (i ? "x" : "") << s.shape[i];
      std::cout << "]\n";
    }
    if (cp.step) std::cout << "  step      " << *cp.step << '\n';
    std::cout << "  optimizer " << (cp.moments ? "yes" : "no") << '\n';
  } else {
    throw IoError("unrecognized file format: " + path);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quantum state tomography workbench"};
  app.require_subcommand(1);

  // gen
  GenParams gen;
  CLI::App* cmd_gen = app.add_subcommand("gen", "generate a dataset of random states");
  Binder bind_gen(cmd_gen);
  bind_gen.add("--n", gen.n, "qubit count");
  bind_gen.add("--count", gen.count, "number of states");
  bind_gen.add("--seed", gen.seed, "RNG seed");
  bind_gen.add("--out", gen.out, "output dataset path")->required();
  bind_gen.add_flag("--xstate", gen.xstate, "draw 2-qubit X states instead of the mixture");
  cmd_gen->callback([&] {
    bind_gen.apply_config();
    run_gen(gen);
  });

  // train
  TrainParams tr;
  CLI::App* cmd_train = app.add_subcommand("train", "train a model and write a checkpoint");
  Binder bind_train(cmd_train);
  bind_train.add("--model", tr.model,
                 "corr_m | corr_pi | corr_q | lstm_rnd | lstm_pre | lstm_cus")->required();
  bind_train.add("--data", tr.data, "training dataset")->required();
  bind_train.add("--out", tr.out, "checkpoint path")->required();
  bind_train.add("--log", tr.log, "training-log CSV path");
  bind_train.add("--n", tr.n, "expected qubit count (0 = take from the dataset)");
  bind_train.add("--epochs", tr.epochs, "training epochs");
  bind_train.add("--batch", tr.batch, "batch size");
  bind_train.add("--lr", tr.lr, "Adam learning rate");
  bind_train.add("--seed", tr.seed, "RNG seed");
  bind_train.add("--ortho-weight", tr.ortho_weight,
                 "weight of the orthogonality penalty (correctors)");
  bind_train.add("--m", tr.m, "corrector collection size M");
  bind_train.add("--subset", tr.subset, "fixed 1-based measurement subset, e.g. 1,3");
  bind_train.add("--steps", tr.steps, "LSTM episode length (0 = 4^N)");
  bind_train.add("--hidden", tr.hidden, "LSTM hidden size (0 = 256)");
  bind_train.add("--layers", tr.layers, "LSTM layers (0 = auto: 2 for N >= 3)");
  bind_train.add("--resume", tr.resume, "checkpoint to continue from");
  cmd_train->callback([&] {
    bind_train.apply_config();
    run_train(tr, bind_train);
  });

  // sweep
  SweepParams sw;
  CLI::App* cmd_sweep = app.add_subcommand("sweep", "mean Bures distance vs measurement budget");
  Binder bind_sweep(cmd_sweep);
  bind_sweep.add("--method", sw.method,
                 "pinv | mle | analytic | corr_m | corr_pi | corr_q | "
                 "lstm_rnd | lstm_pre | lstm_cus")->required();
  bind_sweep.add("--data", sw.data, "test dataset")->required();
  bind_sweep.add("--m-list", sw.m_list, "budgets, e.g. 0,1..8,16 (0 = I/d anchor)")->required();
  bind_sweep.add("--out", sw.out, "output CSV path")->required();
  bind_sweep.add("--svg", sw.svg, "optional SVG chart path");
  bind_sweep.add("--checkpoint", sw.checkpoint,
                 "model checkpoint for learned methods ({M} expands per budget)");
  bind_sweep.add("--collections", sw.collections, "measurement collections per M");
  bind_sweep.add("--seed", sw.seed, "RNG seed for collection draws");
  bind_sweep.add("--jobs", sw.jobs, "worker threads over collections (output is identical for any value)");
  bind_sweep.add("--mle-iters", sw.mle_iters, "MLE iteration cap");
  bind_sweep.add("--mle-tol", sw.mle_tol, "MLE log-likelihood tolerance");
  bind_sweep.add("--mle-dilution", sw.mle_dilution, "MLE dilution epsilon");
  cmd_sweep->callback([&] {
    bind_sweep.apply_config();
    run_sweep(sw, bind_sweep);
  });

  // psdstats
  SweepParams ps;
  CLI::App* cmd_psd = app.add_subcommand("psdstats", "raw-reconstruction eigenvalue statistics vs budget");
  Binder bind_psd(cmd_psd);
  bind_psd.add("--method", ps.method, "reconstruction method (as in sweep)")->required();
  bind_psd.add("--data", ps.data, "test dataset")->required();
  bind_psd.add("--m-list", ps.m_list, "budgets, e.g. 1..16")->required();
  bind_psd.add("--out", ps.out, "output CSV path")->required();
  bind_psd.add("--checkpoint", ps.checkpoint,
               "model checkpoint for learned methods ({M} expands per budget)");
  bind_psd.add("--collections", ps.collections, "measurement collections per M");
  bind_psd.add("--seed", ps.seed, "RNG seed for collection draws");
  bind_psd.add("--jobs", ps.jobs, "worker threads over collections");
  bind_psd.add("--mle-iters", ps.mle_iters, "MLE iteration cap");
  bind_psd.add("--mle-tol", ps.mle_tol, "MLE log-likelihood tolerance");
  bind_psd.add("--mle-dilution", ps.mle_dilution, "MLE dilution epsilon");
  cmd_psd->callback([&] {
    bind_psd.apply_config();
    run_psdstats(ps, bind_psd);
  });

  // errormap
  ErrormapParams em;
  CLI::App* cmd_em = app.add_subcommand("errormap", "element-wise mean reconstruction error for one pair");
  Binder bind_em(cmd_em);
  bind_em.add("--method", em.method, "pinv | mle | analytic | corr_m | corr_pi | corr_q");
  bind_em.add("--data", em.data, "test dataset")->required();
  bind_em.add("--pair", em.pair, "1-based measurement pair, e.g. 1,3")->required();
  bind_em.add("--out", em.out, "output CSV path")->required();
  bind_em.add("--checkpoint", em.checkpoint, "corrector checkpoint (corr_* methods)");
  bind_em.add("--mle-iters", em.mle_iters, "MLE iteration cap");
  bind_em.add("--mle-tol", em.mle_tol, "MLE log-likelihood tolerance");
  bind_em.add("--mle-dilution", em.mle_dilution, "MLE dilution epsilon");
  cmd_em->callback([&] {
    bind_em.apply_config();
    run_errormap(em, bind_em);
  });

  // inspect
  std::string inspect_path;
  CLI::App* cmd_inspect = app.add_subcommand("inspect", "pretty-print a dataset or checkpoint header");
  cmd_inspect->add_option("path", inspect_path, "file to inspect")->required();
  cmd_inspect->callback([&] { run_inspect(inspect_path); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
