#include "qtomo/io/checkpoint.hpp"

#include <algorithm>
#include <fstream>

#include "qtomo/io/binary.hpp"

namespace qtomo::io {

namespace {

constexpr char kMagic[4] = {'Q', 'T', 'N', 'N'};

std::size_t spec_size(const nn::TensorSpec& s) {
  std::size_t n = 1;
  for (std::size_t d : s.shape) n *= d;
  return n;
}

void put_f64_block(std::ostream& out, const std::vector<double>& v) {
  put_u64(out, v.size());
  for (double x : v) put_f64(out, x);
}

std::vector<double> get_f64_block(std::istream& in) {
  std::uint64_t n = get_u64(in);
  if (n > (std::uint64_t{1} << 32)) throw IoError("buffer length out of range");
  std::vector<double> v(static_cast<std::size_t>(n));
  for (double& x : v) x = get_f64(in);
  return v;
}

std::string require_meta(const Checkpoint& cp, const std::string& key) {
  auto it = cp.meta.find(key);
  if (it == cp.meta.end())
    throw IoError("checkpoint missing metadata key '" + key + "'");
  return it->second;
}

std::size_t meta_size_t(const Checkpoint& cp, const std::string& key) {
  try {
    return static_cast<std::size_t>(std::stoull(require_meta(cp, key)));
  } catch (const std::logic_error&) {
    throw IoError("checkpoint metadata key '" + key + "' is not a number");
  }
}

// Weight copy guarded by a full name+shape comparison, so a checkpoint never
// silently loads into a model with a different architecture.
void check_shapes(const std::vector<nn::TensorSpec>& expected,
                  const std::vector<nn::TensorSpec>& got) {
  if (expected.size() != got.size())
    throw IoError("checkpoint tensor count does not match the model");
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (expected[i].name != got[i].name || expected[i].shape != got[i].shape)
      throw IoError("checkpoint tensor '" + got[i].name +
                    "' does not match the model architecture");
  }
}

std::vector<nn::TensorSpec> prefixed(const std::string& prefix,
                                     const std::vector<nn::TensorSpec>& specs) {
  std::vector<nn::TensorSpec> out = specs;
  for (auto& s : out) s.name = prefix + s.name;
  return out;
}

models::CorrectorVariant variant_from_kind(const std::string& kind) {
  if (kind == "CORR_M") return models::CorrectorVariant::FullM;
  if (kind == "CORR_PI") return models::CorrectorVariant::PiOnly;
  if (kind == "CORR_Q") return models::CorrectorVariant::Quadratic;
  throw IoError("checkpoint kind '" + kind + "' is not a corrector");
}

models::SelectionMode mode_from_kind(const std::string& kind) {
  if (kind == "LSTM_RND") return models::SelectionMode::RandomBasis;
  if (kind == "LSTM_PRE") return models::SelectionMode::PredefinedBasis;
  if (kind == "LSTM_CUS") return models::SelectionMode::CustomOperator;
  throw IoError("checkpoint kind '" + kind + "' is not a selector-reconstructor");
}

}  // namespace

void write_checkpoint(const std::string& path, const Checkpoint& cp) {
  std::size_t expect = 0;
  for (const auto& s : cp.shapes) expect += spec_size(s);
  if (expect != cp.flat.size())
    throw IoError("checkpoint shape table does not cover the weight buffer");
  if (cp.moments &&
      (cp.moments->m.size() != cp.flat.size() || cp.moments->v.size() != cp.flat.size()))
    throw IoError("checkpoint optimizer moments do not match the weight buffer");

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  put_bytes(out, kMagic, 4);
  put_u32(out, kCheckpointVersion);
  put_string(out, cp.kind);
  put_u64(out, cp.meta.size());
  for (const auto& [k, v] : cp.meta) {
    put_string(out, k);
    put_string(out, v);
  }
  put_u64(out, cp.shapes.size());
  for (const auto& s : cp.shapes) {
    put_string(out, s.name);
    put_u32(out, static_cast<std::uint32_t>(s.shape.size()));
    for (std::size_t d : s.shape) put_u64(out, d);
  }
  put_f64_block(out, cp.flat);
  unsigned char has_opt = cp.step || cp.moments ? 1 : 0;
  put_bytes(out, &has_opt, 1);
  if (has_opt) {
    put_u64(out, cp.step.value_or(0));
    const nn::AdamMoments empty;
    const nn::AdamMoments& mo = cp.moments ? *cp.moments : empty;
    put_f64_block(out, mo.m);
    put_f64_block(out, mo.v);
  }
  out.flush();
  if (!out) throw IoError("write failed for " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[4];
  get_bytes(in, magic, 4);
  for (int i = 0; i < 4; ++i)
    if (magic[i] != kMagic[i]) throw IoError("not a checkpoint file");
  std::uint32_t version = get_u32(in);
  if (version != kCheckpointVersion)
    throw IoError("unsupported checkpoint version " + std::to_string(version));

  Checkpoint cp;
  cp.kind = get_string(in);
  std::uint64_t n_meta = get_u64(in);
  for (std::uint64_t i = 0; i < n_meta; ++i) {
    std::string k = get_string(in);
    cp.meta[k] = get_string(in);
  }
  std::uint64_t n_tensors = get_u64(in);
  std::size_t offset = 0;
  for (std::uint64_t i = 0; i < n_tensors; ++i) {
    nn::TensorSpec s;
    s.name = get_string(in);
    std::uint32_t ndim = get_u32(in);
    if (ndim > 2) throw IoError("checkpoint tensor rank out of range");
    s.shape.resize(ndim);
    for (auto& d : s.shape) d = static_cast<std::size_t>(get_u64(in));
    s.offset = offset;
    s.size = spec_size(s);
    offset += s.size;
    cp.shapes.push_back(std::move(s));
  }
  cp.flat = get_f64_block(in);
  if (cp.flat.size() != offset)
    throw IoError("checkpoint shape table does not cover the weight buffer");
  unsigned char has_opt = 0;
  get_bytes(in, &has_opt, 1);
  if (has_opt) {
    cp.step = get_u64(in);
    nn::AdamMoments mo;
    mo.m = get_f64_block(in);
    mo.v = get_f64_block(in);
    if (mo.m.size() != mo.v.size())
      throw IoError("checkpoint optimizer moments are inconsistent");
    if (!mo.m.empty()) {
      if (mo.m.size() != cp.flat.size())
        throw IoError("checkpoint optimizer moments do not match the weight buffer");
      cp.moments = std::move(mo);
    }
  }
  return cp;
}

const char* kind_of(models::CorrectorVariant variant) {
  switch (variant) {
    case models::CorrectorVariant::FullM: return "CORR_M";
    case models::CorrectorVariant::PiOnly: return "CORR_PI";
    case models::CorrectorVariant::Quadratic: return "CORR_Q";
  }
  throw InvalidSpec("unknown corrector variant");
}

const char* kind_of(models::SelectionMode mode) {
  switch (mode) {
    case models::SelectionMode::RandomBasis: return "LSTM_RND";
    case models::SelectionMode::PredefinedBasis: return "LSTM_PRE";
    case models::SelectionMode::CustomOperator: return "LSTM_CUS";
  }
  throw InvalidSpec("unknown selection mode");
}

void save_corrector(const std::string& path, const models::CorrectorModel& model,
                    std::optional<std::uint64_t> step,
                    const nn::AdamMoments* moments,
                    const std::map<std::string, std::string>& extra_meta) {
  const nn::ModelWeights& w = model.mlp.weights();
  Checkpoint cp;
  cp.kind = kind_of(model.variant);
  cp.meta = extra_meta;
  cp.meta["n_qubits"] = std::to_string(model.n_qubits);
  cp.meta["m"] = std::to_string(model.m_size);
  std::size_t depth = model.mlp.num_layers() - 1;
  std::size_t hidden =
      depth > 0 ? w.specs()[w.index_of("l0.w")].shape[0] : 0;
  cp.meta["hidden"] = std::to_string(hidden);
  cp.meta["depth"] = std::to_string(depth);
  cp.shapes = w.specs();
  cp.flat = w.flat();
  cp.step = step;
  if (moments && !moments->m.empty()) cp.moments = *moments;
  write_checkpoint(path, cp);
}

LoadedCorrector load_corrector(const std::string& path) {
  Checkpoint cp = read_checkpoint(path);
  models::CorrectorVariant variant = variant_from_kind(cp.kind);
  std::size_t n_qubits = meta_size_t(cp, "n_qubits");
  std::size_t m_size = meta_size_t(cp, "m");
  std::size_t hidden = meta_size_t(cp, "hidden");
  std::size_t depth = meta_size_t(cp, "depth");

  models::CorrectorModel model =
      models::CorrectorModel::make(variant, n_qubits, m_size, 0, hidden, depth);
  check_shapes(model.mlp.weights().specs(), cp.shapes);
  model.mlp.weights().flat() = cp.flat;

  LoadedCorrector out{std::move(model), std::move(cp.meta), cp.step.value_or(0), {}};
  if (cp.moments) out.moments = std::move(*cp.moments);
  return out;
}

void save_selector(const std::string& path,
                   const models::SelectorReconstructor& model,
                   std::optional<std::uint64_t> step,
                   const nn::AdamMoments* moments_r,
                   const nn::AdamMoments* moments_s,
                   const std::map<std::string, std::string>& extra_meta) {
  const nn::ModelWeights& wr = model.lstm_r.weights();
  Checkpoint cp;
  cp.kind = kind_of(model.mode);
  cp.meta = extra_meta;
  cp.meta["n_qubits"] = std::to_string(model.n_qubits);
  cp.meta["hidden"] = std::to_string(model.lstm_r.hidden_size());
  cp.meta["layers"] = std::to_string(model.lstm_r.layers());
  cp.shapes = prefixed("r.", wr.specs());
  cp.flat = wr.flat();
  if (model.lstm_s) {
    const nn::ModelWeights& ws = model.lstm_s->weights();
    std::vector<nn::TensorSpec> s_specs = prefixed("s.", ws.specs());
    for (auto& s : s_specs) s.offset += cp.flat.size();
    cp.shapes.insert(cp.shapes.end(), s_specs.begin(), s_specs.end());
    cp.flat.insert(cp.flat.end(), ws.flat().begin(), ws.flat().end());
  }
  cp.step = step;
  bool have_r = moments_r && !moments_r->m.empty();
  bool have_s = moments_s && !moments_s->m.empty();
  if (have_r || have_s) {
    nn::AdamMoments mo;
    mo.m.resize(cp.flat.size(), 0.0);
    mo.v.resize(cp.flat.size(), 0.0);
    std::size_t r_len = wr.total_size();
    if (have_r) {
      if (moments_r->m.size() != r_len)
        throw IoError("reconstructor moments do not match its weights");
      std::copy(moments_r->m.begin(), moments_r->m.end(), mo.m.begin());
      std::copy(moments_r->v.begin(), moments_r->v.end(), mo.v.begin());
    }
    if (have_s) {
      if (!model.lstm_s || moments_s->m.size() != cp.flat.size() - r_len)
        throw IoError("selector moments do not match its weights");
      std::copy(moments_s->m.begin(), moments_s->m.end(), mo.m.begin() + r_len);
      std::copy(moments_s->v.begin(), moments_s->v.end(), mo.v.begin() + r_len);
    }
    cp.moments = std::move(mo);
  }
  write_checkpoint(path, cp);
}

LoadedSelector load_selector(const std::string& path) {
  Checkpoint cp = read_checkpoint(path);
  models::SelectionMode mode = mode_from_kind(cp.kind);
  std::size_t n_qubits = meta_size_t(cp, "n_qubits");
  std::size_t hidden = meta_size_t(cp, "hidden");
  std::size_t layers = meta_size_t(cp, "layers");

  models::SelectorReconstructor model =
      models::SelectorReconstructor::make(mode, n_qubits, 0, hidden, layers);
  std::vector<nn::TensorSpec> expected = prefixed("r.", model.lstm_r.weights().specs());
  if (model.lstm_s) {
    std::vector<nn::TensorSpec> s_specs = prefixed("s.", model.lstm_s->weights().specs());
    expected.insert(expected.end(), s_specs.begin(), s_specs.end());
  }
  check_shapes(expected, cp.shapes);

  std::size_t r_len = model.lstm_r.weights().total_size();
  std::size_t s_len = model.lstm_s ? model.lstm_s->weights().total_size() : 0;
  if (cp.flat.size() != r_len + s_len)
    throw IoError("checkpoint weight buffer does not match the model");
  std::copy(cp.flat.begin(), cp.flat.begin() + static_cast<std::ptrdiff_t>(r_len),
            model.lstm_r.weights().flat().begin());
  if (model.lstm_s)
    std::copy(cp.flat.begin() + static_cast<std::ptrdiff_t>(r_len), cp.flat.end(),
              model.lstm_s->weights().flat().begin());

  LoadedSelector out{std::move(model), std::move(cp.meta), cp.step.value_or(0), {}, {}};
  if (cp.moments) {
    out.moments_r.m.assign(cp.moments->m.begin(),
                           cp.moments->m.begin() + static_cast<std::ptrdiff_t>(r_len));
    out.moments_r.v.assign(cp.moments->v.begin(),
                           cp.moments->v.begin() + static_cast<std::ptrdiff_t>(r_len));
    if (s_len > 0) {
      out.moments_s.m.assign(cp.moments->m.begin() + static_cast<std::ptrdiff_t>(r_len),
                             cp.moments->m.end());
      out.moments_s.v.assign(cp.moments->v.begin() + static_cast<std::ptrdiff_t>(r_len),
                             cp.moments->v.end());
    }
  }
  return out;
}

}  // namespace qtomo::io
