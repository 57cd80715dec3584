// Copyright the sgrec authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
#include "sgrec/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "sgrec/errors.hpp"

namespace sgrec {

using nlohmann::json;

namespace {

constexpr char kMagic[] = "SGRECKPT";

// All tensors are written as little-endian float64. The build targets
// little-endian hosts; a byte-order check at load keeps a big-endian port
// from silently reading garbage.
bool host_is_little_endian() {
  const std::uint16_t probe = 1;
  unsigned char bytes[2];
  std::memcpy(bytes, &probe, 2);
  return bytes[0] == 1;
}

void write_f64_section(std::ostream& out, const std::string& name, const Vec& v,
                       const std::vector<std::size_t>& dims) {
  out << "TENSOR " << name << ' ' << dims.size();
  std::size_t count = 1;
  for (const auto d : dims) {
    out << ' ' << d;
    count *= d;
  }
  out << '\n';
  if (count != v.size()) throw ShapeError("checkpoint section " + name + ": dims do not match");
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void write_i64_section(std::ostream& out, const std::string& name,
                       const std::vector<std::int64_t>& v,
                       const std::vector<std::size_t>& dims) {
  out << "ITENSOR " << name << ' ' << dims.size();
  for (const auto d : dims) out << ' ' << d;
  out << '\n';
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(std::int64_t)));
}

struct SectionReader {
  std::ifstream in;
  std::string path;

  struct Header {
    std::string kind;  // TENSOR | ITENSOR | END
    std::string name;
    std::vector<std::size_t> dims;
    std::size_t count = 1;
  };

  Header next() {
    std::string line;
    if (!std::getline(in, line)) throw LoadError(path + ": truncated before END marker");
    std::istringstream ss(line);
    Header h;
    ss >> h.kind;
    if (h.kind == "END") {
      // A complete file ends with "END\n"; hitting EOF on this line means the
      // trailing bytes were cut.
      if (in.eof()) throw LoadError(path + ": truncated END marker");
      return h;
    }
    if (h.kind != "TENSOR" && h.kind != "ITENSOR") {
      throw LoadError(path + ": unexpected section line '" + line + "'");
    }
    std::size_t ndim = 0;
    if (!(ss >> h.name >> ndim)) throw LoadError(path + ": malformed header for a section");
    for (std::size_t i = 0; i < ndim; ++i) {
      std::size_t d = 0;
      if (!(ss >> d)) throw LoadError(path + ": malformed dims in section " + h.name);
      h.dims.push_back(d);
      h.count *= d;
    }
    return h;
  }

  Vec read_f64(const Header& h) {
    Vec v(h.count);
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(h.count * sizeof(double)));
    if (!in) throw LoadError(path + ": truncated payload in section " + h.name);
    return v;
  }

  std::vector<std::int64_t> read_i64(const Header& h) {
    std::vector<std::int64_t> v(h.count);
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(h.count * sizeof(std::int64_t)));
    if (!in) throw LoadError(path + ": truncated payload in section " + h.name);
    return v;
  }
};

json config_to_json(const RunConfig& cfg) {
  json j = json::object();
  std::istringstream echo(cfg.echo());
  std::string line;
  while (std::getline(echo, line)) {
    const auto eq = line.find('=');
    j[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return j;
}

RunConfig config_from_json(const json& j) {
  RunConfig cfg;
  for (const auto& [key, value] : j.items()) cfg.set(key, value.get<std::string>());
  cfg.validate();
  return cfg;
}

}  // namespace

void Checkpoint::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path);

  json meta;
  meta["format"] = kMagic;
  meta["version"] = kFormatVersion;
  meta["epoch"] = epoch;
  meta["adam_step"] = adam_step;
  meta["best_metric"] = best_metric;
  meta["seed"] = seed;
  meta["config"] = config_to_json(config);
  meta["shape"] = {{"orders", dec.orders()},       {"items", dec.items()},
                   {"latent", dec.item.latent},    {"dims", dec.item.dims},
                   {"item_layers", dec.item.layers}, {"prox_layers", dec.prox.layers},
                   {"enc_input", enc.input},       {"enc_hidden", enc.hidden},
                   {"enc_layers", enc.layers},     {"enc_latent", enc.latent},
                   {"dropout", enc.dropout},       {"mask_nnz", dec.item.mask.nnz()}};
  const std::string meta_str = meta.dump();
  out << kMagic << ' ' << kFormatVersion << '\n';
  out << "META " << meta_str.size() << '\n' << meta_str << '\n';

  // Shared mask support in coordinate-list form.
  {
    std::vector<std::int64_t> coords;
    coords.reserve(static_cast<std::size_t>(dec.item.mask.nnz()) * 2);
    for (int v = 0; v < dec.item.mask.size; ++v) {
      for (std::int64_t e = dec.item.mask.row_ptr[v]; e < dec.item.mask.row_ptr[v + 1]; ++e) {
        coords.push_back(v);
        coords.push_back(dec.item.mask.col[e]);
      }
    }
    write_i64_section(out, "item.mask", coords,
                      {static_cast<std::size_t>(dec.item.mask.nnz()), 2});
  }

  auto write_all = [&](const auto& params, const std::string& prefix) {
    auto writer = [&](const std::string& name, const Vec& v) {
      write_f64_section(out, prefix + name, v, {v.size()});
    };
    if constexpr (std::is_same_v<std::decay_t<decltype(params)>, DecoderParams>) {
      visit_decoder_tensors(params, writer);
    } else {
      visit_encoder_tensors(params, writer);
    }
  };
  // Flat values-only sections; shapes are reconstructed from the meta block.
  write_all(dec, "");
  write_all(enc, "");
  write_all(adam_m_dec, "adam.m.");
  write_all(adam_m_enc, "adam.m.");
  write_all(adam_v_dec, "adam.v.");
  write_all(adam_v_enc, "adam.v.");
  out << "END\n";
  if (!out) throw IoError("write failed for checkpoint: " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  if (!host_is_little_endian()) {
    throw LoadError("checkpoint format requires a little-endian host");
  }
  SectionReader reader;
  reader.path = path;
  reader.in.open(path, std::ios::binary);
  if (!reader.in) throw IoError("cannot open checkpoint: " + path);

  std::string magic_line;
  if (!std::getline(reader.in, magic_line)) throw LoadError(path + ": empty file");
  {
    std::istringstream ss(magic_line);
    std::string magic;
    int version = -1;
    ss >> magic >> version;
    if (magic != kMagic) throw LoadError(path + ": not a checkpoint file");
    if (version != kFormatVersion) {
      throw LoadError(path + ": unsupported format version " + std::to_string(version) +
                      " (expected " + std::to_string(kFormatVersion) + ")");
    }
  }

  std::string meta_header;
  if (!std::getline(reader.in, meta_header)) throw LoadError(path + ": missing META block");
  std::size_t meta_size = 0;
  {
    std::istringstream ss(meta_header);
    std::string tag;
    ss >> tag >> meta_size;
    if (tag != "META") throw LoadError(path + ": missing META block");
  }
  std::string meta_str(meta_size, '\0');
  reader.in.read(meta_str.data(), static_cast<std::streamsize>(meta_size));
  if (!reader.in) throw LoadError(path + ": truncated META block");
  reader.in.get();  // trailing newline

  Checkpoint ckpt;
  json meta;
  try {
    meta = json::parse(meta_str);
    ckpt.epoch = meta.at("epoch").get<int>();
    ckpt.adam_step = meta.at("adam_step").get<int>();
    ckpt.best_metric = meta.at("best_metric").get<double>();
    ckpt.seed = meta.at("seed").get<std::uint64_t>();
    ckpt.config = config_from_json(meta.at("config"));
  } catch (const json::exception& e) {
    throw LoadError(path + ": bad META block: " + e.what());
  }

  const json& shape = meta.at("shape");
  const int orders = shape.at("orders").get<int>();
  const int items = shape.at("items").get<int>();
  const int latent = shape.at("latent").get<int>();
  const int dims = shape.at("dims").get<int>();
  const int item_layers = shape.at("item_layers").get<int>();
  const int prox_layers = shape.at("prox_layers").get<int>();
  const std::int64_t mask_nnz = shape.at("mask_nnz").get<std::int64_t>();

  // Mask section comes first.
  auto mask_header = reader.next();
  if (mask_header.kind != "ITENSOR" || mask_header.name != "item.mask") {
    throw LoadError(path + ": expected section item.mask");
  }
  if (mask_header.dims != std::vector<std::size_t>{static_cast<std::size_t>(mask_nnz), 2}) {
    throw LoadError(path + ": item.mask: unexpected shape");
  }
  const auto coords = reader.read_i64(mask_header);
  MaskSupport mask;
  mask.size = items;
  mask.row_ptr.assign(static_cast<std::size_t>(items) + 1, 0);
  for (std::int64_t i = 0; i < mask_nnz; ++i) {
    const std::int64_t row = coords[2 * i];
    if (row < 0 || row >= items) throw LoadError(path + ": item.mask: row out of range");
    ++mask.row_ptr[row + 1];
  }
  for (int v = 0; v < items; ++v) mask.row_ptr[v + 1] += mask.row_ptr[v];
  mask.col.resize(static_cast<std::size_t>(mask_nnz));
  {
    std::vector<std::int64_t> cursor(mask.row_ptr.begin(), mask.row_ptr.end() - 1);
    for (std::int64_t i = 0; i < mask_nnz; ++i) {
      mask.col[cursor[coords[2 * i]]++] = static_cast<std::int32_t>(coords[2 * i + 1]);
    }
  }

  // Skeletons with the right shapes; tensor payloads overwrite the values.
  auto make_dec = [&]() {
    DecoderParams d;
    d.gamma = Mat(static_cast<std::size_t>(orders), static_cast<std::size_t>(items));
    d.item.items = items;
    d.item.latent = latent;
    d.item.dims = dims;
    d.item.layers = item_layers;
    d.item.mask = mask;
    d.item.w1.assign(static_cast<std::size_t>(dims),
                     Mat(static_cast<std::size_t>(items), static_cast<std::size_t>(latent)));
    d.item.b1.assign(static_cast<std::size_t>(items), 0.0);
    for (int m = 2; m <= item_layers; ++m) {
      d.item.wm.emplace_back(static_cast<std::size_t>(dims),
                             Vec(static_cast<std::size_t>(mask_nnz), 0.0));
      d.item.bm.emplace_back(static_cast<std::size_t>(items), 0.0);
    }
    d.prox.orders = orders;
    d.prox.latent = latent;
    d.prox.dims = dims;
    d.prox.layers = prox_layers;
    d.prox.w1.assign(static_cast<std::size_t>(dims),
                     Mat(static_cast<std::size_t>(orders), static_cast<std::size_t>(latent)));
    d.prox.b1.assign(static_cast<std::size_t>(orders), 0.0);
    for (int r = 2; r <= prox_layers; ++r) {
      d.prox.wr.emplace_back(static_cast<std::size_t>(dims),
                             Mat(static_cast<std::size_t>(orders), static_cast<std::size_t>(orders)));
      d.prox.br.emplace_back(static_cast<std::size_t>(orders), 0.0);
    }
    return d;
  };
  auto make_enc = [&]() {
    EncoderParams e;
    e.input = shape.at("enc_input").get<int>();
    e.hidden = shape.at("enc_hidden").get<int>();
    e.layers = shape.at("enc_layers").get<int>();
    e.latent = shape.at("enc_latent").get<int>();
    e.dropout = shape.at("dropout").get<double>();
    e.w.resize(static_cast<std::size_t>(e.layers));
    e.b.resize(static_cast<std::size_t>(e.layers));
    e.w[0] = Mat(static_cast<std::size_t>(e.input), static_cast<std::size_t>(e.hidden));
    e.b[0].assign(static_cast<std::size_t>(e.hidden), 0.0);
    for (int l = 1; l < e.layers; ++l) {
      e.w[l] = Mat(static_cast<std::size_t>(e.hidden), static_cast<std::size_t>(e.hidden));
      e.b[l].assign(static_cast<std::size_t>(e.hidden), 0.0);
    }
    e.w_mu = Mat(static_cast<std::size_t>(e.latent), static_cast<std::size_t>(e.hidden));
    e.b_mu.assign(static_cast<std::size_t>(e.latent), 0.0);
    e.w_logvar = Mat(static_cast<std::size_t>(e.latent), static_cast<std::size_t>(e.hidden));
    e.b_logvar.assign(static_cast<std::size_t>(e.latent), 0.0);
    return e;
  };

  ckpt.dec = make_dec();
  ckpt.enc = make_enc();
  ckpt.adam_m_dec = make_dec();
  ckpt.adam_v_dec = make_dec();
  ckpt.adam_m_enc = make_enc();
  ckpt.adam_v_enc = make_enc();

  // Address book for section payloads.
  std::map<std::string, Vec*> slots;
  auto register_all = [&](auto& params, const std::string& prefix) {
    auto reg = [&](const std::string& name, Vec& v) { slots[prefix + name] = &v; };
    if constexpr (std::is_same_v<std::decay_t<decltype(params)>, DecoderParams>) {
      visit_decoder_tensors(params, reg);
    } else {
      visit_encoder_tensors(params, reg);
    }
  };
  register_all(ckpt.dec, "");
  register_all(ckpt.enc, "");
  register_all(ckpt.adam_m_dec, "adam.m.");
  register_all(ckpt.adam_m_enc, "adam.m.");
  register_all(ckpt.adam_v_dec, "adam.v.");
  register_all(ckpt.adam_v_enc, "adam.v.");

  std::size_t filled = 0;
  for (;;) {
    const auto header = reader.next();
    if (header.kind == "END") break;
    if (header.kind == "ITENSOR") {
      reader.read_i64(header);
      continue;
    }
    const auto it = slots.find(header.name);
    if (it == slots.end()) throw LoadError(path + ": unknown section " + header.name);
    if (header.count != it->second->size()) {
      throw LoadError(path + ": section " + header.name + " has " +
                      std::to_string(header.count) + " values, expected " +
                      std::to_string(it->second->size()));
    }
    *it->second = reader.read_f64(header);
    ++filled;
  }
  if (filled != slots.size()) {
    throw LoadError(path + ": missing tensor sections (" + std::to_string(filled) + " of " +
                    std::to_string(slots.size()) + ")");
  }
  return ckpt;
}

void Checkpoint::ensure_matches(int orders, int items) const {
  if (dec.orders() != orders || dec.items() != items) {
    throw LoadError("gamma: checkpoint shape (" + std::to_string(dec.orders()) + " x " +
                    std::to_string(dec.items()) + ") does not match the data (" +
                    std::to_string(orders) + " x " + std::to_string(items) + ")");
  }
}

}  // namespace sgrec
