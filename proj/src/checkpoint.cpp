#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "gcm/config.hpp"
#include "gcm/error.hpp"
#include "json.hpp"

namespace gcm {

namespace {
constexpr const char* kMagic = "gcm-checkpoint";
constexpr int kVersion = 1;

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}
}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelConfig& cfg,
                     const TagScheme& scheme, const TaggerModel& model) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  os << kMagic << ' ' << kVersion << '\n';
  os << "config " << serialize_config(cfg) << '\n';
  os << "scheme " << to_string(scheme.kind()) << ' ' << nlohmann::json(scheme.labels()).dump()
     << '\n';
  os << "input_dim " << model.arch().input_dim << '\n';
  const auto params = model.parameters();
  os << "params " << params.size() << '\n';
  for (const auto& p : params) {
    os << p.name << ' ' << p.tensor.rank();
    for (auto d : p.tensor.shape()) os << ' ' << d;
    os << '\n';
    const auto data = p.tensor.data();
    for (std::size_t i = 0; i < data.size(); ++i) os << (i ? " " : "") << hex(data[i]);
    os << '\n';
  }
  if (!os) throw IoError("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  auto fail = [&](const std::string& what) {
    return DataError(path.string() + ": malformed checkpoint (" + what + ")");
  };
  std::string line, word;
  int version = 0;
  if (!std::getline(in, line)) throw fail("empty file");
  {
    std::istringstream is(line);
    if (!(is >> word >> version) || word != kMagic) throw fail("bad header");
    if (version != kVersion) throw fail("unsupported version " + std::to_string(version));
  }
  if (!std::getline(in, line) || line.rfind("config ", 0) != 0) throw fail("missing config");
  ModelConfig cfg = parse_config(line.substr(7));
  if (!std::getline(in, line) || line.rfind("scheme ", 0) != 0) throw fail("missing scheme");
  TagScheme scheme;
  {
    std::istringstream is(line.substr(7));
    std::string kind;
    is >> kind;
    std::string rest;
    std::getline(is, rest);
    scheme = TagScheme(parse_scheme_kind(kind), nlohmann::json::parse(rest).get<std::vector<std::string>>());
  }
  std::size_t input_dim = 0, count = 0;
  if (!(in >> word >> input_dim) || word != "input_dim") throw fail("missing input_dim");
  if (!(in >> word >> count) || word != "params") throw fail("missing params");

  TaggerModel model(cfg.arch(input_dim, scheme.size()), cfg.seed);
  auto params = model.parameters();
  if (params.size() != count) throw fail("parameter count mismatch");
  for (std::size_t k = 0; k < count; ++k) {
    std::string name;
    std::size_t rank = 0;
    if (!(in >> name >> rank)) throw fail("truncated parameter header");
    Shape shape(rank);
    for (auto& d : shape)
      if (!(in >> d)) throw fail("truncated shape");
    auto it = std::find_if(params.begin(), params.end(),
                           [&](const NamedParam& p) { return p.name == name; });
    if (it == params.end()) throw fail("unexpected parameter " + name);
    if (it->tensor.shape() != shape) throw fail("shape mismatch for " + name);
    auto data = it->tensor.mutable_data();
    for (auto& v : data) {
      if (!(in >> word)) throw fail("truncated values for " + name);
      char* end = nullptr;
      v = std::strtod(word.c_str(), &end);
      if (end != word.c_str() + word.size()) throw fail("bad value in " + name);
    }
  }
  return {std::move(cfg), std::move(scheme), std::move(model)};
}

}  // namespace gcm
