#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "calamp/config_json.hpp"
#include "calamp/synthgen.hpp"

namespace calamp {

// Instance dump format, version 1:
//   bytes 0..7   magic "CALAMPIN"
//   u32 LE       format version (1)
//   u32 LE       header length H
//   H bytes      JSON header: field, n, m, p, seed, prior, channel and the
//                array directory (name, rows, cols) in payload order
//   payload      arrays as row-major 8-byte little-endian doubles, complex
//                entries interleaved re, im
inline constexpr char kInstanceMagic[8] = {'C', 'A', 'L', 'A', 'M', 'P', 'I', 'N'};
inline constexpr std::uint32_t kInstanceFormatVersion = 1;

namespace detail {

inline void append_u32(std::string* out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out->push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw std::runtime_error("instance file truncated");
  return b[0] | (b[1] << 8) | (b[2] << 16) | (std::uint32_t(b[3]) << 24);
}

template <class T>
void write_array(std::ostream& out, const MatX<T>& a) {
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      if constexpr (FieldTraits<T>::is_complex) {
        const double re = a(r, c).real();
        const double im = a(r, c).imag();
        out.write(reinterpret_cast<const char*>(&re), 8);
        out.write(reinterpret_cast<const char*>(&im), 8);
      } else {
        const double v = a(r, c);
        out.write(reinterpret_cast<const char*>(&v), 8);
      }
    }
  }
}

template <class T>
MatX<T> read_array(std::istream& in, Eigen::Index rows, Eigen::Index cols) {
  MatX<T> a(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      if constexpr (FieldTraits<T>::is_complex) {
        double re, im;
        in.read(reinterpret_cast<char*>(&re), 8);
        in.read(reinterpret_cast<char*>(&im), 8);
        a(r, c) = {re, im};
      } else {
        double v;
        in.read(reinterpret_cast<char*>(&v), 8);
        a(r, c) = v;
      }
    }
  }
  if (!in) throw std::runtime_error("instance file truncated");
  return a;
}

}  // namespace detail

template <class T>
void save_instance(const std::string& path, const ProblemInstance<T>& inst) {
  json header;
  header["field"] = FieldTraits<T>::is_complex ? "complex" : "real";
  header["n"] = inst.params.n;
  header["m"] = inst.params.m;
  header["p"] = inst.params.p;
  header["seed"] = inst.params.seed;
  header["signal_prior"] = to_json(inst.params.prior,
                                   FieldTraits<T>::is_complex ? FieldType::kComplex
                                                              : FieldType::kReal);
  header["channel"] = to_json(inst.params.channel);
  header["arrays"] = json::array({
      json{{"name", "mixing"}, {"rows", inst.params.m}, {"cols", inst.params.n}},
      json{{"name", "signal"}, {"rows", inst.params.n}, {"cols", inst.params.p}},
      json{{"name", "gains"}, {"rows", inst.params.m}, {"cols", 1}},
      json{{"name", "observations"}, {"rows", inst.params.m}, {"cols", inst.params.p}},
  });
  const std::string header_str = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.write(kInstanceMagic, 8);
  std::string meta;
  detail::append_u32(&meta, kInstanceFormatVersion);
  detail::append_u32(&meta, static_cast<std::uint32_t>(header_str.size()));
  out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
  out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  detail::write_array(out, inst.mixing);
  detail::write_array(out, inst.signal);
  detail::write_array(out, MatX<T>(inst.gains));
  detail::write_array(out, inst.observations);
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline json read_instance_header(std::istream& in) {
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kInstanceMagic, 8) != 0)
    throw std::runtime_error("not a calamp instance file");
  const std::uint32_t version = detail::read_u32(in);
  if (version != kInstanceFormatVersion)
    throw std::runtime_error("unsupported instance format version");
  const std::uint32_t len = detail::read_u32(in);
  std::string header_str(len, '\0');
  in.read(header_str.data(), len);
  if (!in) throw std::runtime_error("instance file truncated");
  return json::parse(header_str);
}

template <class T>
ProblemInstance<T> load_instance(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  const json header = read_instance_header(in);
  const bool want_complex = FieldTraits<T>::is_complex;
  if ((header.at("field").get<std::string>() == "complex") != want_complex)
    throw std::runtime_error("instance field type mismatch");
  ProblemInstance<T> inst;
  inst.params.n = header.at("n").get<int>();
  inst.params.m = header.at("m").get<int>();
  inst.params.p = header.at("p").get<int>();
  inst.params.seed = header.at("seed").get<std::uint64_t>();
  FieldType field = FieldType::kReal;
  inst.params.prior = signal_prior_from_json(header.at("signal_prior"), &field);
  inst.params.channel = channel_from_json(header.at("channel"));
  inst.mixing = detail::read_array<T>(in, inst.params.m, inst.params.n);
  inst.signal = detail::read_array<T>(in, inst.params.n, inst.params.p);
  inst.gains = detail::read_array<T>(in, inst.params.m, 1);
  inst.observations = detail::read_array<T>(in, inst.params.m, inst.params.p);
  return inst;
}

}  // namespace calamp
