#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "ldgl/domain.hpp"
#include "ldgl/fields.hpp"

namespace ldgl {

inline constexpr int kSchemaVersion = 1;

static_assert(std::endian::native == std::endian::little, "field dumps assume a little-endian host");

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace fs = std::filesystem;

/// Write to a sibling temporary and rename over the target.
inline void write_atomic(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ostringstream tag;
  tag << ".tmp." << std::this_thread::get_id();
  fs::path tmp = path;
  tmp += tag.str();
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + tmp.string());
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline void write_json(const fs::path& path, const nlohmann::json& j) { write_atomic(path, j.dump(2) + "\n"); }

inline std::string read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline nlohmann::json read_json(const fs::path& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------- params

inline nlohmann::json params_to_json(const ModelParams& p) {
  return {{"epsilon", p.epsilon}, {"s", p.s},       {"n_layers", p.n_layers}, {"height", p.height},
          {"lambda", p.lambda},   {"h_ex", p.h_ex}, {"wx", p.wx},             {"wy", p.wy},
          {"pad", p.pad},         {"mesh", {{"nx", p.mesh.nx}, {"ny", p.mesh.ny}, {"dz", p.mesh.dz}}}};
}

inline ModelParams params_from_json(const nlohmann::json& j) {
  ModelParams p;
  p.epsilon = j.at("epsilon");
  p.s = j.at("s");
  p.n_layers = j.at("n_layers");
  p.height = j.at("height");
  p.lambda = j.at("lambda");
  p.h_ex = j.at("h_ex");
  p.wx = j.at("wx");
  p.wy = j.at("wy");
  p.pad = j.at("pad");
  p.mesh.nx = j.at("mesh").at("nx");
  p.mesh.ny = j.at("mesh").at("ny");
  p.mesh.dz = j.at("mesh").at("dz");
  return p;
}

// ---------------------------------------------------------------- binary field files
//
// "LDGLFLD1", uint64 header length, JSON header, then the arrays' raw
// little-endian data back to back in header order. Each header entry gives
// name, dtype ("f64" or "c128") and dims (slowest first).

struct NamedArray {
  std::string name;
  std::string dtype;            // f64 | c128
  std::vector<std::uint64_t> dims;
  std::vector<double> data;     // c128 stored as (re, im) pairs

  std::uint64_t count() const {
    std::uint64_t c = 1;
    for (auto d : dims) c *= d;
    return c;
  }
};

struct FieldFile {
  nlohmann::json meta = nlohmann::json::object();
  std::vector<NamedArray> arrays;

  const NamedArray& get(const std::string& name) const {
    for (const auto& a : arrays)
      if (a.name == name) return a;
    throw IoError("field file has no array '" + name + "'");
  }
  bool has(const std::string& name) const {
    for (const auto& a : arrays)
      if (a.name == name) return true;
    return false;
  }
};

inline constexpr char kFieldMagic[8] = {'L', 'D', 'G', 'L', 'F', 'L', 'D', '1'};

inline std::string encode_fields(const FieldFile& f) {
  nlohmann::json h = nlohmann::json::object();
  h["schema_version"] = kSchemaVersion;
  h["meta"] = f.meta;
  h["arrays"] = nlohmann::json::array();
  for (const auto& a : f.arrays) {
    const std::uint64_t want = a.count() * (a.dtype == "c128" ? 2 : 1);
    if (a.dtype != "f64" && a.dtype != "c128") throw IoError("unknown dtype " + a.dtype);
    if (want != a.data.size()) throw IoError("array '" + a.name + "' size does not match dims");
    h["arrays"].push_back({{"name", a.name}, {"dtype", a.dtype}, {"dims", a.dims}});
  }
  const std::string hs = h.dump();
  std::string out(kFieldMagic, 8);
  const std::uint64_t n = hs.size();
  out.append(reinterpret_cast<const char*>(&n), 8);
  out += hs;
  for (const auto& a : f.arrays) out.append(reinterpret_cast<const char*>(a.data.data()), a.data.size() * sizeof(double));
  return out;
}

inline FieldFile decode_fields(const std::string& bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kFieldMagic, 8) != 0) throw IoError("not an LDGLFLD1 file");
  std::uint64_t n;
  std::memcpy(&n, bytes.data() + 8, 8);
  if (16 + n > bytes.size()) throw IoError("truncated field header");
  const auto h = nlohmann::json::parse(bytes.substr(16, n));
  FieldFile f;
  f.meta = h.at("meta");
  std::size_t pos = 16 + n;
  for (const auto& e : h.at("arrays")) {
    NamedArray a;
    a.name = e.at("name");
    a.dtype = e.at("dtype");
    a.dims = e.at("dims").get<std::vector<std::uint64_t>>();
    const std::size_t cnt = a.count() * (a.dtype == "c128" ? 2 : 1);
    if (pos + cnt * sizeof(double) > bytes.size()) throw IoError("truncated array '" + a.name + "'");
    a.data.resize(cnt);
    std::memcpy(a.data.data(), bytes.data() + pos, cnt * sizeof(double));
    pos += cnt * sizeof(double);
    f.arrays.push_back(std::move(a));
  }
  if (pos != bytes.size()) throw IoError("trailing bytes in field file");
  return f;
}

inline void save_fields(const fs::path& p, const FieldFile& f) { write_atomic(p, encode_fields(f)); }
inline FieldFile load_fields(const fs::path& p) { return decode_fields(read_file(p)); }

inline NamedArray named(const std::string& name, const Array2<double>& a) {
  return {name, "f64", {static_cast<std::uint64_t>(a.ny()), static_cast<std::uint64_t>(a.nx())}, a.data()};
}
inline NamedArray named(const std::string& name, const Array3<double>& a) {
  return {name, "f64",
          {static_cast<std::uint64_t>(a.nz()), static_cast<std::uint64_t>(a.ny()), static_cast<std::uint64_t>(a.nx())},
          a.data()};
}
inline NamedArray named(const std::string& name, const Array3<cplx>& a) {
  NamedArray r{name, "c128",
               {static_cast<std::uint64_t>(a.nz()), static_cast<std::uint64_t>(a.ny()), static_cast<std::uint64_t>(a.nx())},
               {}};
  r.data.reserve(2 * a.size());
  for (cplx v : a.data()) {
    r.data.push_back(v.real());
    r.data.push_back(v.imag());
  }
  return r;
}
inline NamedArray named(const std::string& name, const LayerStack& u) {
  const int L = static_cast<int>(u.size());
  NamedArray r{name, "c128", {static_cast<std::uint64_t>(L), 0, 0}, {}};
  if (L) r.dims = {static_cast<std::uint64_t>(L), static_cast<std::uint64_t>(u[0].ny()), static_cast<std::uint64_t>(u[0].nx())};
  for (const auto& l : u)
    for (cplx v : l.data()) {
      r.data.push_back(v.real());
      r.data.push_back(v.imag());
    }
  return r;
}

namespace detail {

inline void expect_dims(const NamedArray& a, const std::string& dtype, std::vector<std::uint64_t> dims) {
  if (a.dtype != dtype || a.dims != dims) throw IoError("array '" + a.name + "' has unexpected dtype or dims");
}

inline void fill(Array3<double>& out, const NamedArray& a) {
  expect_dims(a, "f64", {static_cast<std::uint64_t>(out.nz()), static_cast<std::uint64_t>(out.ny()),
                         static_cast<std::uint64_t>(out.nx())});
  out.data() = a.data;
}

inline void put_potential(FieldFile& f, const Potential3D& A) {
  f.meta["potential_h_ex"] = A.h_ex;
  f.arrays.push_back(named("a1", A.a1));
  f.arrays.push_back(named("a2", A.a2));
  f.arrays.push_back(named("a3", A.a3));
}

inline void get_potential(const FieldFile& f, Potential3D& A) {
  fill(A.a1, f.get("a1"));
  fill(A.a2, f.get("a2"));
  fill(A.a3, f.get("a3"));
  if (f.meta.contains("potential_h_ex")) A.h_ex = f.meta.at("potential_h_ex");
}

}  // namespace detail

inline FieldFile to_field_file(const LayeredConfiguration& st) {
  st.check();
  FieldFile f;
  f.meta["kind"] = "layered";
  f.meta["params"] = params_to_json(st.dom->params());
  f.arrays.push_back(named("u", st.u));
  detail::put_potential(f, st.A);
  return f;
}

inline FieldFile to_field_file(const ContinuumConfiguration& st) {
  st.check();
  FieldFile f;
  f.meta["kind"] = "continuum";
  f.meta["params"] = params_to_json(st.dom->params());
  f.arrays.push_back(named("psi", st.psi));
  detail::put_potential(f, st.A);
  return f;
}

inline std::string field_kind(const FieldFile& f) { return f.meta.value("kind", std::string()); }

inline LayeredConfiguration layered_from(const FieldFile& f) {
  if (field_kind(f) != "layered") throw IoError("field file does not hold a layered configuration");
  LayeredConfiguration st(build_domain(params_from_json(f.meta.at("params"))));
  const auto& a = f.get("u");
  const auto& d = *st.dom;
  detail::expect_dims(a, "c128", {static_cast<std::uint64_t>(st.layers()), static_cast<std::uint64_t>(d.ny()),
                                  static_cast<std::uint64_t>(d.nx())});
  std::size_t q = 0;
  for (auto& l : st.u)
    for (cplx& v : l.data()) {
      v = cplx(a.data[q], a.data[q + 1]);
      q += 2;
    }
  detail::get_potential(f, st.A);
  return st;
}

inline ContinuumConfiguration continuum_from(const FieldFile& f) {
  if (field_kind(f) != "continuum") throw IoError("field file does not hold a continuum configuration");
  ContinuumConfiguration st(build_domain(params_from_json(f.meta.at("params"))));
  const auto& a = f.get("psi");
  detail::expect_dims(a, "c128", {static_cast<std::uint64_t>(st.psi.nz()), static_cast<std::uint64_t>(st.psi.ny()),
                                  static_cast<std::uint64_t>(st.psi.nx())});
  for (std::size_t q = 0; q < st.psi.size(); ++q) st.psi.data()[q] = cplx(a.data[2 * q], a.data[2 * q + 1]);
  detail::get_potential(f, st.A);
  return st;
}

// ---------------------------------------------------------------- CSV exports

/// One row per Omega node and layer: layer, x, y, re, im, abs.
inline std::string layers_csv(const LayeredConfiguration& st) {
  const auto& d = *st.dom;
  std::string s = "layer,x,y,re,im,abs\n";
  for (int n = 0; n < st.layers(); ++n)
    for (int j = 0; j < d.ny(); ++j)
      for (int i = 0; i < d.nx(); ++i) {
        const cplx v = st.u[n](i, j);
        s += std::to_string(n) + "," + fmt17(i * d.hx()) + "," + fmt17(j * d.hy()) + "," + fmt17(v.real()) + "," +
             fmt17(v.imag()) + "," + fmt17(std::abs(v)) + "\n";
      }
  return s;
}

/// One row per node of D: x, y, z, re, im, abs.
inline std::string continuum_csv(const ContinuumConfiguration& st) {
  const auto& d = *st.dom;
  std::string s = "x,y,z,re,im,abs\n";
  for (int k = 0; k < st.nz(); ++k)
    for (int j = 0; j < d.ny(); ++j)
      for (int i = 0; i < d.nx(); ++i) {
        const cplx v = st.psi(i, j, k);
        s += fmt17(i * d.hx()) + "," + fmt17(j * d.hy()) + "," + fmt17(k * d.dz()) + "," + fmt17(v.real()) + "," +
             fmt17(v.imag()) + "," + fmt17(std::abs(v)) + "\n";
      }
  return s;
}

/// One row per grid point of a planar scalar: x, y, value; point (i, j) at (x0 + i hx, y0 + j hy).
inline std::string scalar_csv(const Array2<double>& a, double x0, double y0, double hx, double hy,
                              const std::string& name = "value") {
  std::string s = "x,y," + name + "\n";
  for (int j = 0; j < a.ny(); ++j)
    for (int i = 0; i < a.nx(); ++i) s += fmt17(x0 + i * hx) + "," + fmt17(y0 + j * hy) + "," + fmt17(a(i, j)) + "\n";
  return s;
}

}  // namespace ldgl
