#include <openssl/evp.h>

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include "snse/harness.hpp"

namespace snse::harness {
namespace {

constexpr char kMagic[8] = {'S', 'N', 'S', 'E', 'T', 'R', 'J', '1'};

static_assert(std::endian::native == std::endian::little, "trajectory files are written little-endian");

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) throw IoError("sha256 init failed");
  }
  void update(const void* data, std::size_t n) {
    if (EVP_DigestUpdate(ctx_.get(), data, n) != 1) throw IoError("sha256 update failed");
  }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_.get(), md.data(), &len) != 1) throw IoError("sha256 final failed");
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
      out += digits[md[i] >> 4];
      out += digits[md[i] & 15];
    }
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

Json series(const std::vector<double>& v) { return Json(v); }

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  Sha256 h;
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw IoError(path.string() + " is not valid JSON: " + e.what());
  }
}

void write_json(const fs::path& path, const Json& doc) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

void write_trajectory(const fs::path& path, const Trajectory& traj) {
  Json header{{"format", "snse-trajectory"},
              {"version", 1},
              {"K", traj.grid.max_wavenumber()},
              {"N", traj.grid.resolution()},
              {"dt", traj.dt},
              {"stride", traj.stride},
              {"records", traj.size()},
              {"layout", "per record: c1 then c2 over the (2K+1)^2 box, k1-major, complex128 (re, im)"},
              {"kind", traj.provenance.kind},
              {"seed", traj.provenance.seed},
              {"config_hash", traj.provenance.config_hash},
              {"times", series(traj.times)},
              {"running_sup_h_sq", series(traj.running_sup_h_sq)},
              {"running_int_v_sq", series(traj.running_int_v_sq)}};
  const std::string text = header.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(kMagic, sizeof kMagic);
  const std::uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& f : traj.frames) {
    out.write(reinterpret_cast<const char*>(f.c1().data()), static_cast<std::streamsize>(f.size() * sizeof(Complex)));
    out.write(reinterpret_cast<const char*>(f.c2().data()), static_cast<std::streamsize>(f.size() * sizeof(Complex)));
  }
  if (!out) throw IoError("write failed: " + path.string());
}

Trajectory read_trajectory(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  char magic[8];
  std::uint64_t len = 0;
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(&len), sizeof len);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) throw IoError(path.string() + ": not a trajectory file");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw IoError(path.string() + ": truncated header");
  Json h;
  try {
    h = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw IoError(path.string() + ": bad header: " + e.what());
  }
  const SpectralGrid grid(h.at("K").get<int>(), h.at("N").get<int>());
  Trajectory t(grid);
  t.dt = h.at("dt");
  t.stride = h.at("stride");
  t.times = h.at("times").get<std::vector<double>>();
  t.running_sup_h_sq = h.at("running_sup_h_sq").get<std::vector<double>>();
  t.running_int_v_sq = h.at("running_int_v_sq").get<std::vector<double>>();
  t.provenance.kind = h.at("kind");
  t.provenance.seed = h.at("seed");
  t.provenance.config_hash = h.at("config_hash");
  const std::size_t records = h.at("records");
  if (t.times.size() != records) throw IoError(path.string() + ": header lists inconsistent record counts");
  for (std::size_t r = 0; r < records; ++r) {
    ModeCoefficients c(grid.size());
    in.read(reinterpret_cast<char*>(c.c1.data()), static_cast<std::streamsize>(grid.size() * sizeof(Complex)));
    in.read(reinterpret_cast<char*>(c.c2.data()), static_cast<std::streamsize>(grid.size() * sizeof(Complex)));
    if (!in) throw IoError(path.string() + ": truncated at record " + std::to_string(r));
    t.frames.push_back(SpectralField::unchecked(grid, std::move(c)));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw IoError(path.string() + ": trailing bytes");
  return t;
}

std::string csv_field(const std::string& value) {
  if (value.find_first_of(",\"\r\n") == std::string::npos) return value;
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string csv_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

}  // namespace snse::harness
